//! Monte Carlo estimate of P(|Φ^N - Φ|_X > ε) for growing noise shells, and a
//! comparison with noise concentrated on the six unit modes.
//!
//! ```bash
//! VORTEXNOISE_THREADS=4 cargo run --release --example scaling_limit
//! ```

use std::sync::Arc;

use vortexnoise::experiments::run_scaling_limit;
use vortexnoise::experiments::scaling::{compare_noise, unit_shell_theta};
use vortexnoise::integrator::{InitialData, RunConfig};
use vortexnoise::noise::ThetaSequence;
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    let k = 1.0;
    let cfg = RunConfig {
        galerkin_radius: 4,
        nu: 1.0,
        dt: 2e-3,
        t_end: 0.04,
        cutoff_radius: 2f64.powf(0.25) * k + 1.0,
        ..Default::default()
    };
    let lattice = Arc::new(Lattice::new(cfg.galerkin_radius)?);
    let phi0 = InitialData::TaylorGreen.build(&lattice, k)?;
    let r = run_scaling_limit(&cfg, &phi0, &[1, 2, 4], 12, None, 0.9)?;
    println!("epsilon = {:.4e}", r.epsilon);
    for row in &r.rows {
        println!(
            "N = {}  p_hat = {:.2}  90% CI [{:.2}, {:.2}]  median distance {:.3e}",
            row.shell, row.p_hat, row.ci_low, row.ci_high, row.median_distance
        );
    }
    println!("non-increasing within bands: {}", r.non_increasing_within_bands());

    let c = compare_noise(&cfg, &phi0, &unit_shell_theta()?, &ThetaSequence::shell(4, 1.0)?, 4)?;
    println!("mean distance: unit shell {:.3e} vs N = 4 {:.3e}", c.narrow_mean, c.wide_mean);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
