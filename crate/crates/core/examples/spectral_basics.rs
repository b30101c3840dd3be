//! Truncated Fourier fields on the torus: Leray projection, curl and its
//! inverse, and the round trip through physical space.
//!
//! ```bash
//! cargo run --release --example spectral_basics
//! ```

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use vortexnoise::field::random_solenoidal;
use vortexnoise::transform::{smooth_size, GridTransform};
use vortexnoise::Lattice;

pub fn run_example() -> vortexnoise::Result<()> {
    let lattice = Arc::new(Lattice::new(6)?);
    println!("lattice of radius {} holds {} modes", lattice.radius(), lattice.len());

    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let v = random_solenoidal(lattice.clone(), &mut rng, 2.0);
    println!("random field: L2 = {:.4}, H1 = {:.4}, div defect = {:.1e}", v.l2_norm(), v.sobolev_norm(1.0), v.divergence_defect());

    let p = v.leray_project();
    println!("projection moves it by {:.1e}", p.max_diff(&v));

    let w = v.curl();
    let back = w.biot_savart()?;
    println!("Biot-Savart(curl v) - v = {:.1e}", back.max_diff(&v));

    let n = smooth_size(2 * lattice.radius() as usize + 1);
    let t = GridTransform::new(n)?;
    let g = t.to_grid(&v)?;
    let v2 = t.to_spectrum(&g, &lattice)?;
    println!("grid {n}^3 round trip error = {:.1e}, u(0) = {:?}", v2.max_diff(&v), g.point([0, 0, 0]));
    Ok(())
}

fn main() {
    if let Err(e) = run_example() {
        eprintln!("{e}");
        std::process::exit(1);
    }
}
