//! Exponential decay of the limit equation for data of norm `K`:
//! `‖Φ(t)‖ ≤ 2^{1/4} K e^{-λt}` with `λ = (4π² − 1)ν₁/2`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::integrator::{simulate_deterministic, InitialData, RunConfig};
use crate::io::Table;
use crate::lattice::Lattice;

pub fn decay_rate(nu1: f64) -> f64 {
    (4.0 * PI * PI - 1.0) * nu1 / 2.0
}

pub fn decay_bound(k: f64, nu1: f64, t: f64) -> f64 {
    2f64.powf(0.25) * k * (-decay_rate(nu1) * t).exp()
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayReport {
    pub norm: f64,
    pub nu1: f64,
    pub rate: f64,
    pub times: Vec<f64>,
    pub norms: Vec<f64>,
    pub bounds: Vec<f64>,
    pub first_violation: Option<f64>,
    pub blown_up: bool,
}

impl DecayReport {
    pub fn holds(&self) -> bool {
        !self.blown_up && self.first_violation.is_none()
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["t", "l2", "bound", "ok"]);
        for ((&ti, &n), &b) in self.times.iter().zip(&self.norms).zip(&self.bounds) {
            t.push(vec![ti.into(), n.into(), b.into(), (n <= b).into()]);
        }
        t
    }
}

/// Runs the limit equation with both viscosities set to `nu1` from data built
/// by `data` with `‖Φ₀‖ = K` and compares against the bound at every step.
pub fn run_decay_check(cfg: &RunConfig, data: &InitialData, k: f64, nu1: f64) -> Result<DecayReport> {
    if !(k >= 0.0 && nu1 > 0.0) {
        return Err(invalid(format!("need K >= 0 and nu1 > 0, got K = {k}, nu1 = {nu1}")));
    }
    let lat = Arc::new(Lattice::new(cfg.galerkin_radius)?);
    let phi0 = data.build(&lat, k)?;
    let mut times = Vec::new();
    let mut norms = Vec::new();
    let tr = simulate_deterministic(cfg, &phi0, Some((nu1, nu1)), |_, t, s| {
        times.push(t);
        norms.push(s.l2_norm());
    })?;
    let bounds: Vec<f64> = times.iter().map(|&t| decay_bound(k, nu1, t)).collect();
    let first_violation = times
        .iter()
        .zip(norms.iter().zip(&bounds))
        .find(|(_, (n, b))| n > b)
        .map(|(&t, _)| t);
    Ok(DecayReport {
        norm: k,
        nu1,
        rate: decay_rate(nu1),
        times,
        norms,
        bounds,
        first_violation,
        blown_up: tr.blown_up(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DecayCalibration {
    pub norm: f64,
    pub nu1: f64,
    /// `C₁ = ν₁√π / K`, so that `ν₁ ≥ C₁K/√π` holds with equality.
    pub c1: f64,
    pub runs: usize,
}

/// Smallest `ν₁ ≥ lower` (to relative tolerance `1e-2`) for which the bound
/// holds for every entry of `library`.
pub fn calibrate_nu1(cfg: &RunConfig, library: &[InitialData], k: f64, lower: f64) -> Result<DecayCalibration> {
    if library.is_empty() {
        return Err(invalid("calibration library is empty"));
    }
    if !(k > 0.0) {
        return Err(invalid(format!("calibration needs K > 0, got {k}")));
    }
    let mut runs = 0;
    let mut all_hold = |nu1: f64| -> Result<bool> {
        for d in library {
            runs += 1;
            if !run_decay_check(cfg, d, k, nu1)?.holds() {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let nu1 = if all_hold(lower)? {
        lower
    } else {
        let mut lo = lower;
        let mut hi = 2.0 * lower;
        while !all_hold(hi)? {
            lo = hi;
            hi *= 2.0;
            if hi > 1e3 * lower {
                return Err(invalid(format!("no nu1 up to {hi} satisfies the decay bound at K = {k}")));
            }
        }
        while (hi - lo) > 1e-2 * hi {
            let mid = 0.5 * (lo + hi);
            if all_hold(mid)? {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        hi
    };
    Ok(DecayCalibration {
        norm: k,
        nu1,
        c1: nu1 * PI.sqrt() / k,
        runs,
    })
}
