//! The limit equation decays below 2^{1/4} K exp(-(4π²-1)ν₁t/2); ν₁ is the
//! smallest value that works for a library of initial data.
//!
//! ```bash
//! cargo run --release --example decay_bound
//! ```

use vortexnoise::experiments::{calibrate_nu1, run_decay_check};
use vortexnoise::integrator::{InitialData, RunConfig};

pub fn run_example() -> vortexnoise::Result<()> {
    let cfg = RunConfig {
        galerkin_radius: 6,
        dt: 2e-3,
        t_end: 0.3,
        ..Default::default()
    };
    let k = 1.0;
    let cal = calibrate_nu1(&cfg, &InitialData::library(), k, 1.0)?;
    println!("calibrated nu1 = {:.3}, C1 = {:.3} after {} runs", cal.nu1, cal.c1, cal.runs);

    let r = run_decay_check(&cfg, &InitialData::TaylorGreen, k, cal.nu1)?;
    for i in (0..r.times.len()).step_by(30) {
        println!("t = {:.3}  |phi| = {:.4e}  bound = {:.4e}", r.times[i], r.norms[i], r.bounds[i]);
    }
    println!("bound holds: {}", r.holds());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
