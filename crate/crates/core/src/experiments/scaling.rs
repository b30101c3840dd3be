//! Convergence in probability of the noisy system to the deterministic limit
//! as the noise spreads over higher shells.

use serde::Serialize;

use super::{for_each_path, median, wilson_interval, PathDistance};
use crate::error::{invalid, Result};
use crate::field::State;
use crate::integrator::{simulate_deterministic, PathRunner, RunConfig, Trajectory};
use crate::io::Table;
use crate::noise::ThetaSequence;

#[derive(Clone, Debug, Serialize)]
pub struct ScalingRow {
    pub shell: u32,
    pub theta_linf: f64,
    pub paths: u64,
    pub blowups: u64,
    pub exceedances: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub median_distance: f64,
    pub mean_distance: f64,
}

impl ScalingRow {
    pub fn half_width(&self) -> f64 {
        0.5 * (self.ci_high - self.ci_low)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct ScalingLimitResult {
    pub epsilon: f64,
    pub epsilon_auto: bool,
    pub confidence: f64,
    pub rows: Vec<ScalingRow>,
    /// `distances[i][p]`: path `p` at `shells[i]`; blown-up paths are `+∞`.
    pub distances: Vec<Vec<f64>>,
    pub steps: u64,
}

impl ScalingLimitResult {
    /// `p̂` may not increase along the shells by more than the sum of the
    /// adjacent interval half-widths.
    pub fn non_increasing_within_bands(&self) -> bool {
        self.rows
            .windows(2)
            .all(|w| w[1].p_hat - w[0].p_hat <= w[0].half_width() + w[1].half_width())
    }

    pub fn table(&self) -> Table {
        let mut t = Table::new(&[
            "N",
            "theta_linf",
            "paths",
            "blowups",
            "exceedances",
            "epsilon",
            "p_hat",
            "ci_low",
            "ci_high",
            "median_distance",
            "mean_distance",
        ]);
        for r in &self.rows {
            t.push(vec![
                r.shell.into(),
                r.theta_linf.into(),
                r.paths.into(),
                r.blowups.into(),
                r.exceedances.into(),
                self.epsilon.into(),
                r.p_hat.into(),
                r.ci_low.into(),
                r.ci_high.into(),
                r.median_distance.into(),
                r.mean_distance.into(),
            ]);
        }
        t
    }

    pub fn distance_table(&self, shells: &[u32]) -> Table {
        let mut t = Table::new(&["N", "path", "distance"]);
        for (n, ds) in shells.iter().zip(&self.distances) {
            for (p, d) in ds.iter().enumerate() {
                t.push(vec![(*n).into(), p.into(), (*d).into()]);
            }
        }
        t
    }
}

/// States of the limit equation at every step of `cfg`'s time grid.
pub fn reference_states(cfg: &RunConfig, phi0: &State) -> Result<Vec<State>> {
    let mut states = Vec::with_capacity(cfg.steps() as usize + 1);
    let traj = simulate_deterministic(cfg, phi0, None, |_, _, s| states.push(s.clone()))?;
    if traj.blown_up() {
        return Err(invalid("the deterministic reference blew up; lower the data norm or dt"));
    }
    Ok(states)
}

/// `‖Φ_θ − Φ‖_X` for each path, `+∞` when the path blew up.
pub fn path_distances(
    cfg: &RunConfig,
    theta: &ThetaSequence,
    phi0: &State,
    reference: &[State],
    paths: u64,
) -> Result<Vec<f64>> {
    let runner = PathRunner::new(cfg, theta, phi0.lattice().clone())?;
    for_each_path(paths, |p| {
        let mut dist = PathDistance::new(cfg.delta, cfg.dt);
        let traj: Trajectory = runner.run(phi0, p, 1, |n, _, s| dist.push(&s.sub(&reference[n as usize])))?;
        Ok(if traj.blown_up() { f64::INFINITY } else { dist.value() })
    })
}

/// Estimates `p̂_N = P(‖Φ^N − Φ‖_X > ε)` for each shell in `shells`.
/// With `epsilon = None`, `ε` is the median distance at the first shell.
pub fn run_scaling_limit(
    cfg: &RunConfig,
    phi0: &State,
    shells: &[u32],
    paths: u64,
    epsilon: Option<f64>,
    confidence: f64,
) -> Result<ScalingLimitResult> {
    if shells.is_empty() || shells.windows(2).any(|w| w[0] >= w[1]) {
        return Err(invalid("shells must be a non-empty increasing list"));
    }
    if paths == 0 {
        return Err(invalid("need at least one path"));
    }
    if let Some(e) = epsilon {
        if !(e > 0.0) {
            return Err(invalid(format!("epsilon must be positive, got {e}")));
        }
    }
    cfg.validate()?;
    let reference = reference_states(cfg, phi0)?;
    let mut distances = Vec::with_capacity(shells.len());
    let mut thetas = Vec::with_capacity(shells.len());
    for &n in shells {
        let theta = ThetaSequence::shell(n, cfg.kappa)?;
        let c = RunConfig { shell: n, ..cfg.clone() };
        distances.push(path_distances(&c, &theta, phi0, &reference, paths)?);
        thetas.push(theta);
    }
    let eps = match epsilon {
        Some(e) => e,
        None => median(&distances[0]),
    };
    let mut rows = Vec::with_capacity(shells.len());
    for ((&n, ds), theta) in shells.iter().zip(&distances).zip(&thetas) {
        let exceed = ds.iter().filter(|&&d| d > eps).count() as u64;
        let (lo, hi) = wilson_interval(exceed, paths, confidence)?;
        let finite: Vec<f64> = ds.iter().copied().filter(|d| d.is_finite()).collect();
        rows.push(ScalingRow {
            shell: n,
            theta_linf: theta.linf_norm() / theta.l2_norm(),
            paths,
            blowups: ds.iter().filter(|d| !d.is_finite()).count() as u64,
            exceedances: exceed,
            p_hat: exceed as f64 / paths as f64,
            ci_low: lo,
            ci_high: hi,
            median_distance: median(ds),
            mean_distance: if finite.is_empty() {
                f64::INFINITY
            } else {
                finite.iter().sum::<f64>() / finite.len() as f64
            },
        });
    }
    Ok(ScalingLimitResult {
        epsilon: eps,
        epsilon_auto: epsilon.is_none(),
        confidence,
        rows,
        distances,
        steps: cfg.steps(),
    })
}

/// Mean distance to the limit for a narrow `θ` and for a spread-out one,
/// driven by the same path indices.
#[derive(Clone, Debug, Serialize)]
pub struct Comparison {
    pub narrow_support: usize,
    pub wide_support: usize,
    pub narrow_mean: f64,
    pub wide_mean: f64,
}

/// `θ` supported on the six modes with `|k| = 1`.
pub fn unit_shell_theta() -> Result<ThetaSequence> {
    ThetaSequence::radial(1, |k2| if k2 == 1 { 1.0 } else { 0.0 })
}

pub fn compare_noise(
    cfg: &RunConfig,
    phi0: &State,
    narrow: &ThetaSequence,
    wide: &ThetaSequence,
    paths: u64,
) -> Result<Comparison> {
    let reference = reference_states(cfg, phi0)?;
    let mean = |th: &ThetaSequence| -> Result<f64> {
        let d = path_distances(cfg, th, phi0, &reference, paths)?;
        Ok(d.iter().sum::<f64>() / d.len() as f64)
    };
    Ok(Comparison {
        narrow_support: narrow.support().len(),
        wide_support: wide.support().len(),
        narrow_mean: mean(narrow)?,
        wide_mean: mean(wide)?,
    })
}
