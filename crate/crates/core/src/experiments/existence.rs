//! Global existence without the cut-off: how often a path survives to time
//! `T` and enters the small ball where deterministic decay takes over.

use serde::Serialize;

use super::{for_each_path, wilson_interval};
use crate::error::{invalid, Result};
use crate::field::State;
use crate::integrator::{simulate_deterministic, InitialData, PathRunner, RunConfig};
use crate::io::Table;
use crate::lattice::Lattice;

#[derive(Clone, Debug, Serialize)]
pub struct ExistenceReport {
    pub norm: f64,
    pub nu: f64,
    pub r0: f64,
    pub t_end: f64,
    /// Paths must reach `‖Φ_t‖ ≤ r₀` at some `t ≤ ball_deadline`.
    pub ball_deadline: f64,
    pub paths: u64,
    pub survived: u64,
    pub entered_ball: u64,
    pub fraction_global: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub fraction_ball: f64,
    /// Blow-up time per path, `None` for survivors.
    pub blowup_times: Vec<Option<f64>>,
}

impl ExistenceReport {
    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "K",
            "nu",
            "r0",
            "T",
            "paths",
            "survived",
            "entered_ball",
            "fraction_global",
            "ci_low",
            "ci_high",
            "fraction_ball",
        ]);
        t.push(vec![
            self.norm.into(),
            self.nu.into(),
            self.r0.into(),
            self.t_end.into(),
            self.paths.into(),
            self.survived.into(),
            self.entered_ball.into(),
            self.fraction_global.into(),
            self.ci_low.into(),
            self.ci_high.into(),
            self.fraction_ball.into(),
        ]);
        t
    }

    pub fn path_table(&self) -> Table {
        let mut t = Table::new(&["path", "blown_up", "blowup_time"]);
        for (p, b) in self.blowup_times.iter().enumerate() {
            t.push(vec![p.into(), b.is_some().into(), b.unwrap_or(f64::NAN).into()]);
        }
        t
    }
}

/// Runs `paths` uncut trajectories from `phi0`. The cut-off flag of `cfg` is ignored.
pub fn run_global_existence_frequency(
    cfg: &RunConfig,
    phi0: &State,
    paths: u64,
    r0: f64,
    confidence: f64,
) -> Result<ExistenceReport> {
    if paths == 0 {
        return Err(invalid("need at least one path"));
    }
    if !(r0 > 0.0) {
        return Err(invalid(format!("r0 must be positive, got {r0}")));
    }
    let cfg = RunConfig { use_cutoff: false, ..cfg.clone() };
    cfg.validate()?;
    let t_end = cfg.steps() as f64 * cfg.dt;
    let deadline = if t_end > 1.0 { t_end - 1.0 } else { t_end };
    let runner = PathRunner::new(&cfg, &cfg.theta()?, phi0.lattice().clone())?;
    let outcomes = for_each_path(paths, |p| {
        let mut entered = false;
        let tr = runner.run(phi0, p, 1, |_, t, s| {
            if t <= deadline + 1e-12 && s.l2_norm() <= r0 {
                entered = true;
            }
        })?;
        let blowup = match tr.status {
            crate::integrator::Status::BlownUp { t } => Some(t),
            crate::integrator::Status::Completed => None,
        };
        Ok((blowup, entered && blowup.is_none()))
    })?;
    let survived = outcomes.iter().filter(|o| o.0.is_none()).count() as u64;
    let entered = outcomes.iter().filter(|o| o.1).count() as u64;
    let (lo, hi) = wilson_interval(survived, paths, confidence)?;
    Ok(ExistenceReport {
        norm: phi0.l2_norm(),
        nu: cfg.nu,
        r0,
        t_end,
        ball_deadline: deadline,
        paths,
        survived,
        entered_ball: entered,
        fraction_global: survived as f64 / paths as f64,
        ci_low: lo,
        ci_high: hi,
        fraction_ball: entered as f64 / paths as f64,
        blowup_times: outcomes.into_iter().map(|o| o.0).collect(),
    })
}

fn decays_monotonically(cfg: &RunConfig, data: &InitialData, k: f64) -> Result<bool> {
    let lat = std::sync::Arc::new(Lattice::new(cfg.galerkin_radius)?);
    let phi0 = data.build(&lat, k)?;
    let mut prev = f64::INFINITY;
    let mut monotone = true;
    let tr = simulate_deterministic(cfg, &phi0, None, |_, _, s| {
        let n = s.l2_norm();
        if n > prev * (1.0 + 1e-12) {
            monotone = false;
        }
        prev = n;
    })?;
    Ok(monotone && !tr.blown_up())
}

/// Half the largest norm (to relative tolerance `1e-2`) for which every
/// library datum decays monotonically in the noise-free, uncut system.
pub fn estimate_r0(cfg: &RunConfig, library: &[InitialData]) -> Result<f64> {
    if library.is_empty() {
        return Err(invalid("r0 library is empty"));
    }
    let cfg = RunConfig {
        nu: 0.0,
        use_cutoff: false,
        ..cfg.clone()
    };
    cfg.validate()?;
    let ok = |k: f64| -> Result<bool> {
        for d in library {
            if !decays_monotonically(&cfg, d, k)? {
                return Ok(false);
            }
        }
        Ok(true)
    };
    let (mut lo, mut hi) = (0.0, 1.0);
    while ok(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > cfg.blowup_threshold {
            return Ok(0.5 * lo);
        }
    }
    while hi - lo > 1e-2 * hi {
        let mid = 0.5 * (lo + hi);
        if ok(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * lo)
}
