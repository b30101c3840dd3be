//! Reads a TOML configuration, runs the limit equation it describes and
//! records the run in a manifest next to a snapshot of the final state.
//!
//! ```bash
//! cargo run --release --example config_and_manifest
//! ```

use std::sync::Arc;

use vortexnoise::config::Config;
use vortexnoise::integrator::simulate_deterministic;
use vortexnoise::io::{read_snapshot, write_snapshot, Manifest, SeedSchedule};
use vortexnoise::Lattice;

const CONFIG: &str = r#"
[model]
galerkin_radius = 4
norm = 3.0
initial = { kind = "random", seed = 11, radius = 3, decay = 1.0 }

[noise]
nu = 2.0

[time]
dt = 1e-3
t_end = 0.02
"#;

pub fn run_example() -> vortexnoise::Result<()> {
    let cfg = Config::parse(CONFIG)?;
    let rc = cfg.run_config();
    println!("enhanced viscosity nu1 = {}", rc.enhanced_viscosity());

    let lattice = Arc::new(Lattice::new(rc.galerkin_radius)?);
    let phi0 = cfg.model.initial.build(&lattice, cfg.model.norm)?;
    let traj = simulate_deterministic(&rc, &phi0, None, |_, _, _| {})?;

    let dir = std::env::temp_dir().join("vortexnoise-config-example");
    let snap = dir.join("final.vnsf");
    write_snapshot(&snap, &traj.final_state)?;
    assert_eq!(read_snapshot(&snap)?.max_diff(&traj.final_state), 0.0);

    let mut m = Manifest::new(
        "example",
        serde_json::to_value(&cfg).unwrap_or_default(),
        SeedSchedule::new(rc.seed, 1),
    );
    m.steps = traj.steps;
    m.constant("final_l2", traj.final_state.l2_norm());
    m.outputs.push("final.vnsf".into());
    m.write(&dir.join("manifest.json"))?;
    println!("final L2 = {:.4e}; wrote {}", traj.final_state.l2_norm(), dir.display());
    println!("config written back:\n{}", cfg.to_toml());
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
