//! Discrete energy balance of the stochastic scheme.
//!
//! Per step, `ΔE = m + q + L + nonlinear + residual` where `m` is the martingale
//! term, `q` the quadratic variation, `L` the exact linear-flow change and the
//! residual the splitting error, `O(dt²)` per step on a fixed Brownian path.

use serde::Serialize;

use super::{for_each_path, mean_interval};
use crate::error::{invalid, Result};
use crate::field::State;
use crate::integrator::{PathRunner, RunConfig};
use crate::io::Table;
use crate::lattice::Half;
use crate::noise::transport_mode;

#[derive(Clone, Debug, Serialize)]
pub struct EnergyReport {
    pub dt: [f64; 2],
    /// `Σ_n |residual_n|` at each step size on one Brownian path.
    pub cumulative_residual: [f64; 2],
    pub refinement_ratio: f64,
    /// Largest `|residual_n| / ‖Φ_n‖²` with the nonlinearity switched off.
    pub linear_residual: f64,
    /// Largest `|⟨Φ, Π_M(σ_{k,α}·∇Φ)⟩| / (‖Φ‖_{L²}‖Φ‖_{H¹})` over the noise modes.
    pub transport_cancellation: f64,
    pub steps: [u64; 2],
}

impl EnergyReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&["quantity", "value"]);
        let rows: [(&str, f64); 8] = [
            ("dt_coarse", self.dt[0]),
            ("dt_fine", self.dt[1]),
            ("cumulative_residual_coarse", self.cumulative_residual[0]),
            ("cumulative_residual_fine", self.cumulative_residual[1]),
            ("refinement_ratio", self.refinement_ratio),
            ("linear_residual", self.linear_residual),
            ("transport_cancellation", self.transport_cancellation),
            ("steps_fine", self.steps[1] as f64),
        ];
        for (k, v) in rows {
            t.push(vec![k.into(), v.into()]);
        }
        t
    }
}

fn cumulative_abs_residual(cfg: &RunConfig, phi0: &State, path: u64, fine: u64) -> Result<(f64, u64)> {
    let runner = PathRunner::new(cfg, &cfg.theta()?, phi0.lattice().clone())?;
    let tr = runner.run(phi0, path, fine, |_, _, _| {})?;
    if tr.blown_up() {
        return Err(invalid("trajectory blew up during the energy check"));
    }
    Ok((tr.energy.iter().map(|e| e.residual.abs()).sum(), tr.steps))
}

/// Worst relative energy exchange of a single transport mode with `phi`.
pub fn transport_cancellation(cfg: &RunConfig, phi: &State) -> Result<f64> {
    let theta = cfg.theta()?;
    let tl = theta.lattice();
    let scale = phi.l2_norm() * phi.sobolev_norm(1.0);
    if scale == 0.0 {
        return Ok(0.0);
    }
    let mut worst = 0.0f64;
    for &i in theta.support() {
        if tl.half(i) != Half::Plus {
            continue;
        }
        let k = tl.mode(i);
        for alpha in 0..2 {
            for v in [&phi.xi, &phi.eta] {
                let x = transport_mode(k, alpha, v)?;
                worst = worst.max(x.inner(v).norm() / scale);
            }
        }
    }
    Ok(worst)
}

/// Runs at `cfg.dt` and `cfg.dt / 2` on the same Brownian path, plus a
/// linear run and the per-mode cancellation test on `phi0`.
pub fn run_energy_identity_check(cfg: &RunConfig, phi0: &State, path: u64) -> Result<EnergyReport> {
    cfg.validate()?;
    let fine_cfg = RunConfig { dt: cfg.dt / 2.0, ..cfg.clone() };
    let (coarse, n0) = cumulative_abs_residual(cfg, phi0, path, 2)?;
    let (fine, n1) = cumulative_abs_residual(&fine_cfg, phi0, path, 1)?;

    let linear_cfg = RunConfig { suppress_nonlinearity: true, ..cfg.clone() };
    let runner = PathRunner::new(&linear_cfg, &linear_cfg.theta()?, phi0.lattice().clone())?;
    let mut energies = Vec::new();
    let tr = runner.run(phi0, path, 1, |_, _, s| energies.push(s.l2_norm().powi(2)))?;
    let linear_residual = tr
        .energy
        .iter()
        .zip(&energies)
        .map(|(e, &en)| if en > 0.0 { e.residual.abs() / en } else { e.residual.abs() })
        .fold(0.0, f64::max);

    Ok(EnergyReport {
        dt: [cfg.dt, fine_cfg.dt],
        cumulative_residual: [coarse, fine],
        refinement_ratio: coarse / fine,
        linear_residual,
        transport_cancellation: transport_cancellation(cfg, phi0)?,
        steps: [n0, n1],
    })
}

/// Path averages of the noise contribution to `‖Φ_T‖² − ‖Φ_0‖²`.
#[derive(Clone, Debug, Serialize)]
pub struct NeutralityReport {
    pub paths: u64,
    pub confidence: f64,
    /// `Σ_n (q_n + m_n + 2dt⟨Φ_n, S Φ_n⟩)`.
    pub net_mean: f64,
    pub net_half_width: f64,
    /// The same without the martingale increments, whose conditional mean is zero.
    pub drift_mean: f64,
    pub drift_half_width: f64,
}

impl NeutralityReport {
    /// The net contribution is not significantly positive.
    pub fn is_dissipative(&self) -> bool {
        self.net_mean <= self.net_half_width
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&["paths", "net_mean", "net_half_width", "drift_mean", "drift_half_width"]);
        t.push(vec![
            self.paths.into(),
            self.net_mean.into(),
            self.net_half_width.into(),
            self.drift_mean.into(),
            self.drift_half_width.into(),
        ]);
        t
    }
}

pub fn run_noise_neutrality(cfg: &RunConfig, phi0: &State, paths: u64, confidence: f64) -> Result<NeutralityReport> {
    if paths < 2 {
        return Err(invalid("need at least two paths"));
    }
    cfg.validate()?;
    let runner = PathRunner::new(cfg, &cfg.theta()?, phi0.lattice().clone())?;
    let sums = for_each_path(paths, |p| {
        let tr = runner.run(phi0, p, 1, |_, _, _| {})?;
        let net: f64 = tr.energy.iter().map(|e| e.net_noise()).sum();
        let drift: f64 = tr.energy.iter().map(|e| e.quadratic + e.corrector).sum();
        Ok((net, drift))
    })?;
    let net: Vec<f64> = sums.iter().map(|s| s.0).collect();
    let drift: Vec<f64> = sums.iter().map(|s| s.1).collect();
    let (net_mean, net_half_width) = mean_interval(&net, confidence)?;
    let (drift_mean, drift_half_width) = mean_interval(&drift, confidence)?;
    Ok(NeutralityReport {
        paths,
        confidence,
        net_mean,
        net_half_width,
        drift_mean,
        drift_half_width,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::integrator::InitialData;
    use crate::lattice::Lattice;

    fn setup() -> (RunConfig, State) {
        let cfg = RunConfig {
            galerkin_radius: 4,
            dt: 2e-4,
            t_end: 2e-3,
            ..Default::default()
        };
        let lat = Arc::new(Lattice::new(4).unwrap());
        (cfg, InitialData::TaylorGreen.build(&lat, 1.0).unwrap())
    }

    #[test]
    fn linear_part_balances_exactly() {
        let (cfg, phi0) = setup();
        let r = run_energy_identity_check(&cfg, &phi0, 0).unwrap();
        assert!(r.linear_residual < 1e-12, "{}", r.linear_residual);
        assert!(r.transport_cancellation < 1e-12, "{}", r.transport_cancellation);
        assert_eq!(r.steps, [10, 20]);
        assert!(r.refinement_ratio > 1.0);
    }

    #[test]
    fn neutrality_report_shape() {
        let (cfg, phi0) = setup();
        let r = run_noise_neutrality(&cfg, &phi0, 4, 0.9).unwrap();
        assert!(r.net_half_width > 0.0);
        assert!(r.drift_mean.is_finite());
        assert!(run_noise_neutrality(&cfg, &phi0, 1, 0.9).is_err());
    }
}
