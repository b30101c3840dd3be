//! The Ito-Stratonovich corrector approaches (3/5)ν Δ as the noise shell grows.
//!
//! ```bash
//! cargo run --release --example corrector_convergence
//! ```

use vortexnoise::corrector::angular_integral_check;
use vortexnoise::experiments::corrector_study::default_test_field;
use vortexnoise::experiments::run_corrector_study;

pub fn run_example() -> vortexnoise::Result<()> {
    let v = default_test_field()?;
    let study = run_corrector_study(1.0, 1.0, &[2, 4, 8], &v)?;
    println!("{:>3} {:>8} {:>12} {:>10} {:>10}", "N", "support", "rel_error", "RQ(S)", "RQ(Sperp)");
    for r in &study.rows {
        println!(
            "{:>3} {:>8} {:>12.4e} {:>10.4} {:>10.4}",
            r.shell, r.support, r.rel_error, r.rayleigh_s, r.rayleigh_perp
        );
    }
    println!("limits: 0.6 and 0.4; angular integral = {:.12} (8/15 = {:.12})", angular_integral_check(), 8.0 / 15.0);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
