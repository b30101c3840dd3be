//! One stochastic trajectory with its diagnostics and energy budget, written
//! as CSV into a temporary directory.
//!
//! ```bash
//! cargo run --release --example single_path
//! ```

use std::sync::Arc;

use vortexnoise::integrator::{InitialData, PathRunner, RunConfig};
use vortexnoise::io::{diagnostics_table, energy_table};
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    let cfg = RunConfig {
        galerkin_radius: 6,
        shell: 2,
        nu: 1.0,
        dt: 1e-3,
        t_end: 0.05,
        seed: 3,
        ..Default::default()
    };
    let lattice = Arc::new(Lattice::new(cfg.galerkin_radius)?);
    let phi0 = InitialData::TaylorGreen.build(&lattice, 2.0)?;
    let runner = PathRunner::new(&cfg, &cfg.theta()?, lattice)?;
    let traj = runner.run(&phi0, 0, 1, |_, _, _| {})?;

    let l2 = traj.l2_series();
    println!("{} steps, status {:?}: L2 {:.4} -> {:.4}", traj.steps, traj.status, l2[0], l2[l2.len() - 1]);
    let worst = traj.energy.iter().map(|e| e.residual.abs()).fold(0.0, f64::max);
    println!("largest per-step energy residual {worst:.2e}");

    let dir = std::env::temp_dir().join("vortexnoise-single-path");
    diagnostics_table(&traj).write_csv(&dir.join("diagnostics.csv"))?;
    energy_table(&traj).write_csv(&dir.join("energy.csv"))?;
    println!("tables written to {}", dir.display());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
