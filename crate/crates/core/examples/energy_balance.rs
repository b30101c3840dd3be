//! Splits the change of |Φ|² per step into martingale, quadratic-variation,
//! linear and nonlinear parts and checks the remainder under refinement.
//!
//! ```bash
//! cargo run --release --example energy_balance
//! ```

use std::sync::Arc;

use vortexnoise::experiments::energy::run_noise_neutrality;
use vortexnoise::experiments::run_energy_identity_check;
use vortexnoise::integrator::{InitialData, RunConfig};
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    let cfg = RunConfig {
        galerkin_radius: 4,
        dt: 1e-4,
        t_end: 5e-3,
        ..Default::default()
    };
    let lattice = Arc::new(Lattice::new(cfg.galerkin_radius)?);
    let phi0 = InitialData::Random { seed: 9, radius: 4, decay: 1.0 }.build(&lattice, 1.0)?;
    let r = run_energy_identity_check(&cfg, &phi0, 0)?;
    println!(
        "sum |residual|: {:.3e} at dt = {}, {:.3e} at dt = {}  (ratio {:.2})",
        r.cumulative_residual[0], r.dt[0], r.cumulative_residual[1], r.dt[1], r.refinement_ratio
    );
    println!("linear residual {:.1e}, transport cancellation {:.1e}", r.linear_residual, r.transport_cancellation);

    let n = run_noise_neutrality(&cfg, &phi0, 16, 0.9)?;
    println!("net noise energy {:.3e} +- {:.1e}", n.net_mean, n.net_half_width);
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
