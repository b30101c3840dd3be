//! Shell noise coefficients and reproducible Brownian increments.
//!
//! ```bash
//! cargo run --release --example noise_sampling
//! ```

use std::sync::Arc;

use vortexnoise::integrator::InitialData;
use vortexnoise::noise::{noise_intensity, BrownianDriver, NoiseOperator, ThetaSequence};
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    for n in [2u32, 4, 8] {
        let theta = ThetaSequence::shell(n, 1.0)?;
        println!(
            "N = {n}: {} modes, sup/l2 = {:.4}",
            theta.support().len(),
            theta.linf_norm() / theta.l2_norm()
        );
    }

    let theta = ThetaSequence::shell(2, 1.0)?;
    let dt = 1e-3;
    let driver = BrownianDriver::new(&theta, 42, 0, dt)?;
    let draws = 2000;
    let i = theta.support()[0];
    let mean_sq: f64 = (0..draws).map(|s| driver.sample(s).values[i][0].norm_sqr()).sum::<f64>() / draws as f64;
    println!("E|dW|^2/dt at one mode over {draws} draws = {:.3} (expect 2)", mean_sq / dt);

    // Same (seed, path, step) always gives the same increment.
    assert_eq!(driver.sample(17).values, BrownianDriver::new(&theta, 42, 0, dt)?.sample(17).values);

    let lattice = Arc::new(Lattice::new(6)?);
    let phi = InitialData::TaylorGreen.build(&lattice, 1.0)?;
    let op = NoiseOperator::new(&theta, 1.0, &lattice)?;
    let dm = op.apply(&phi, &driver.sample(0))?;
    println!(
        "noise intensity {:.4}; one increment: L2 = {:.3e}, energy exchange <phi, dM> = {:.1e}",
        noise_intensity(1.0),
        dm.l2_norm(),
        phi.inner(&dm)
    );
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
