//! Monte Carlo studies built on the integrator. Each study returns a result
//! struct with a `table()` for CSV export; none of them touch the filesystem.

pub mod corrector_study;
pub mod decay;
pub mod energy;
pub mod existence;
pub mod scaling;

use rayon::prelude::*;
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{invalid, Result};
use crate::field::State;

pub use corrector_study::{run_corrector_study, CorrectorStudy, CorrectorRow};
pub use decay::{calibrate_nu1, run_decay_check, DecayCalibration, DecayReport};
pub use energy::{run_energy_identity_check, EnergyReport, NeutralityReport};
pub use existence::{estimate_r0, run_global_existence_frequency, ExistenceReport};
pub use scaling::{run_scaling_limit, ScalingLimitResult, ScalingRow};

/// Worker count override for path-parallel loops.
pub const THREADS_ENV: &str = "VORTEXNOISE_THREADS";

fn pool() -> Result<rayon::ThreadPool> {
    let mut b = rayon::ThreadPoolBuilder::new();
    if let Ok(s) = std::env::var(THREADS_ENV) {
        let n: usize = s
            .trim()
            .parse()
            .map_err(|_| invalid(format!("{THREADS_ENV} must be a positive integer, got {s:?}")))?;
        if n == 0 {
            return Err(invalid(format!("{THREADS_ENV} must be >= 1")));
        }
        b = b.num_threads(n);
    }
    b.build().map_err(|e| invalid(e.to_string()))
}

/// Runs `f(0..paths)` in parallel and returns results in path order, so output
/// does not depend on the worker count.
pub fn for_each_path<T: Send>(paths: u64, f: impl Fn(u64) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
    pool()?.install(|| (0..paths).into_par_iter().map(&f).collect())
}

/// Two-sided normal quantile for a central interval of mass `confidence`.
pub fn normal_quantile(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(invalid(format!("confidence must lie in (0,1), got {confidence}")));
    }
    let n = Normal::new(0.0, 1.0).expect("standard normal");
    Ok(n.inverse_cdf(0.5 + confidence / 2.0))
}

/// Wilson score interval for `k` successes in `n` trials.
pub fn wilson_interval(k: u64, n: u64, confidence: f64) -> Result<(f64, f64)> {
    if n == 0 || k > n {
        return Err(invalid(format!("need 0 <= k <= n and n >= 1, got k = {k}, n = {n}")));
    }
    let z = normal_quantile(confidence)?;
    let n_f = n as f64;
    let p = k as f64 / n_f;
    let z2 = z * z;
    let centre = (p + z2 / (2.0 * n_f)) / (1.0 + z2 / n_f);
    let half = z / (1.0 + z2 / n_f) * (p * (1.0 - p) / n_f + z2 / (4.0 * n_f * n_f)).sqrt();
    Ok(((centre - half).max(0.0), (centre + half).min(1.0)))
}

/// Sample mean and the half-width of its normal-approximation interval.
pub fn mean_interval(xs: &[f64], confidence: f64) -> Result<(f64, f64)> {
    if xs.len() < 2 {
        return Err(invalid("need at least two samples"));
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok((mean, normal_quantile(confidence)? * (var / n).sqrt()))
}

pub(crate) fn median(xs: &[f64]) -> f64 {
    let mut v: Vec<f64> = xs.to_vec();
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    }
}

/// Accumulates `max(sup_t ‖e(t)‖_{H^{-δ}}, (∫₀ᵀ ‖e(t)‖²_{L²} dt)^{1/2})` from
/// samples of the error `e` on a uniform grid (trapezoid rule in time).
#[derive(Clone, Debug)]
pub struct PathDistance {
    delta: f64,
    dt: f64,
    sup: f64,
    integral: f64,
    last: Option<f64>,
}

impl PathDistance {
    pub fn new(delta: f64, dt: f64) -> Self {
        Self {
            delta,
            dt,
            sup: 0.0,
            integral: 0.0,
            last: None,
        }
    }

    pub fn push(&mut self, err: &State) {
        self.sup = self.sup.max(err.sobolev_norm(-self.delta));
        let l2 = err.l2_norm().powi(2);
        if let Some(prev) = self.last {
            self.integral += 0.5 * self.dt * (prev + l2);
        }
        self.last = Some(l2);
    }

    pub fn value(&self) -> f64 {
        self.sup.max(self.integral.sqrt())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wilson_contains_estimate() {
        let (lo, hi) = wilson_interval(30, 100, 0.9).unwrap();
        assert!(lo < 0.3 && 0.3 < hi);
        assert!((hi - lo) < 0.2);
        let (lo, hi) = wilson_interval(0, 50, 0.9).unwrap();
        assert!(lo < 1e-12);
        assert!(hi > 0.0 && hi < 0.1);
        assert!(wilson_interval(3, 2, 0.9).is_err());
    }

    #[test]
    fn quantile_matches_table() {
        assert!((normal_quantile(0.9).unwrap() - 1.6448536269514722).abs() < 1e-9);
        assert!((normal_quantile(0.95).unwrap() - 1.959963984540054).abs() < 1e-9);
        assert!(normal_quantile(1.0).is_err());
    }

    #[test]
    fn path_order_is_preserved() {
        let v = for_each_path(37, |p| Ok(p * p)).unwrap();
        assert_eq!(v, (0..37).map(|p| p * p).collect::<Vec<_>>());
    }

    #[test]
    fn median_even_and_odd() {
        assert_eq!(median(&[3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&[4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
