//! How fast the Itô–Stratonovich corrector approaches `(3/5)νΔ` as the noise
//! moves to higher shells.

use std::f64::consts::PI;
use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::corrector::{frame_sum_field, limit_error, rayleigh_quotient, shell_sin4_average, Corrector};
use crate::error::{invalid, Result};
use crate::field::{random_solenoidal, SpectralField};
use crate::io::Table;
use crate::lattice::Lattice;
use crate::noise::ThetaSequence;

/// Budget for `|supp θ| · |Z₊ ∩ lattice|`, the number of kernel evaluations.
pub const COST_LIMIT: f64 = 5e8;

#[derive(Clone, Debug, Serialize)]
pub struct CorrectorRow {
    pub shell: u32,
    pub support: usize,
    pub rel_error: f64,
    pub rayleigh_s: f64,
    pub rayleigh_perp: f64,
    pub rayleigh_single_mode: f64,
    pub sin4_average: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct CorrectorStudy {
    pub nu: f64,
    pub kappa: f64,
    pub rows: Vec<CorrectorRow>,
}

impl CorrectorStudy {
    pub fn errors_decrease(&self) -> bool {
        self.rows.windows(2).all(|w| w[1].rel_error < w[0].rel_error)
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "N",
            "support",
            "rel_error",
            "rayleigh_S",
            "rayleigh_Sperp",
            "rayleigh_single_mode",
            "sin4_average",
            "limit_S",
            "limit_Sperp",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.shell.into(),
                r.support.into(),
                r.rel_error.into(),
                r.rayleigh_s.into(),
                r.rayleigh_perp.into(),
                r.rayleigh_single_mode.into(),
                r.sin4_average.into(),
                (0.6 * self.nu).into(),
                (0.4 * self.nu).into(),
            ]);
        }
        t
    }
}

/// The fixed smooth test field: random solenoidal, `|k| ≤ 4`, coefficients `∝ |k|^{-3}`.
pub fn default_test_field() -> Result<SpectralField> {
    let lat = Arc::new(Lattice::new(4)?);
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    Ok(random_solenoidal(lat, &mut rng, 3.0))
}

fn estimated_cost(n: u32, lattice: &Lattice) -> f64 {
    // The shell N ≤ |k| ≤ 2N holds about (28π/3)N³ modes.
    28.0 * PI / 3.0 * f64::from(n).powi(3) * lattice.len() as f64 / 2.0
}

pub fn max_feasible_shell(lattice: &Lattice) -> u32 {
    let mut n = 1;
    while n < 128 && estimated_cost(n + 1, lattice) <= COST_LIMIT {
        n += 1;
    }
    n
}

pub fn run_corrector_study(nu: f64, kappa: f64, shells: &[u32], v: &SpectralField) -> Result<CorrectorStudy> {
    if !(nu >= 0.0 && nu.is_finite()) {
        return Err(invalid(format!("nu must be finite and >= 0, got {nu}")));
    }
    if shells.is_empty() {
        return Err(invalid("no shells requested"));
    }
    let lattice = v.lattice();
    let max = max_feasible_shell(lattice);
    if let Some(&n) = shells.iter().find(|&&n| n > max) {
        return Err(invalid(format!(
            "shell N = {n} is beyond the cost limit for a radius-{} field; the largest feasible N is {max}",
            lattice.radius()
        )));
    }
    let single = frame_sum_field(lattice, [1, 0, 0])?;
    let mut rows = Vec::with_capacity(shells.len());
    for &n in shells {
        let theta = ThetaSequence::shell(n, kappa)?;
        let s = Corrector::new(&theta, nu, lattice)?;
        let sv = s.apply(v)?;
        let perp = v.laplacian(nu).sub(&sv);
        rows.push(CorrectorRow {
            shell: n,
            support: theta.support().len(),
            rel_error: limit_error(&sv, nu, v),
            rayleigh_s: rayleigh_quotient(&sv, v),
            rayleigh_perp: rayleigh_quotient(&perp, v),
            rayleigh_single_mode: rayleigh_quotient(&s.apply(&single)?, &single),
            sin4_average: shell_sin4_average(&theta, [1.0, 0.0, 0.0]),
        });
    }
    Ok(CorrectorStudy { nu, kappa, rows })
}
