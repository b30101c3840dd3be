fn main() {
    std::process::exit(vortexnoise::cli::main_with(std::env::args_os()));
}
