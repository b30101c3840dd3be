//! Without the cut-off, how many paths live to the end and reach the small ball?
//! Large data blows up at small ν and survives once the noise is strong enough.
//!
//! ```bash
//! cargo run --release --example existence_frequency
//! ```

use std::sync::Arc;

use vortexnoise::experiments::{estimate_r0, run_global_existence_frequency};
use vortexnoise::integrator::{InitialData, RunConfig};
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    let base = RunConfig {
        galerkin_radius: 4,
        dt: 2e-3,
        t_end: 0.1,
        ..Default::default()
    };
    let r0 = estimate_r0(&base, &[InitialData::TaylorGreen])?;
    println!("r0 = {r0:.3}");
    let lattice = Arc::new(Lattice::new(base.galerkin_radius)?);
    for nu in [0.0, 1.0, 4.0, 16.0] {
        let cfg = RunConfig { nu, ..base.clone() };
        let phi0 = InitialData::TaylorGreen.build(&lattice, 3000.0)?;
        let r = run_global_existence_frequency(&cfg, &phi0, 6, r0, 0.9)?;
        println!("nu = {nu}: survived {}/{}, entered ball {}", r.survived, r.paths, r.entered_ball);
    }
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
