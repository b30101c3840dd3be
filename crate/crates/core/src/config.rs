//! TOML run configuration. Every key has a default, so an empty file is valid.
//!
//! ```toml
//! [model]
//! galerkin_radius = 8
//! reynolds = 1.0
//! magnetic_reynolds = 1.0
//! coupling = 1.0
//! norm = 1.0
//! initial = { kind = "taylor-green" }
//!
//! [noise]
//! nu = 1.0
//! kappa = 1.0
//! shell = 2
//! shells = [2, 4, 8]
//! seed = 0
//!
//! [cutoff]
//! enabled = true
//! radius = 10.0
//! delta = 0.25
//!
//! [time]
//! dt = 1e-3
//! t_end = 1.0
//! scheme = "exp-euler"
//! snapshot_every = 0
//!
//! [run]
//! paths = 100
//! confidence = 0.9
//! blowup_threshold = 1e6
//! suppress_nonlinearity = false
//!
//! [experiment]
//! energy_paths = 200
//! calibrate = true
//! # epsilon = 0.05   # omitted: median distance at the first shell
//! # r0 = 0.5         # omitted: estimated by bisection
//! ```

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::integrator::{InitialData, RunConfig, Scheme};
use crate::operators::{check_delta, PhysicsParams};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSection {
    pub galerkin_radius: u32,
    pub reynolds: f64,
    pub magnetic_reynolds: f64,
    pub coupling: f64,
    /// `‖Φ₀‖_{L²}`, the `K` of the experiments.
    pub norm: f64,
    pub initial: InitialData,
}

impl Default for ModelSection {
    fn default() -> Self {
        Self {
            galerkin_radius: 8,
            reynolds: 1.0,
            magnetic_reynolds: 1.0,
            coupling: 1.0,
            norm: 1.0,
            initial: InitialData::TaylorGreen,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseSection {
    pub nu: f64,
    pub kappa: f64,
    /// Shell used by single-trajectory commands.
    pub shell: u32,
    /// Shells swept by the scaling and corrector studies.
    pub shells: Vec<u32>,
    pub seed: u64,
}

impl Default for NoiseSection {
    fn default() -> Self {
        Self {
            nu: 1.0,
            kappa: 1.0,
            shell: 2,
            shells: vec![2, 4, 8],
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CutoffSection {
    pub enabled: bool,
    pub radius: f64,
    pub delta: f64,
}

impl Default for CutoffSection {
    fn default() -> Self {
        Self {
            enabled: true,
            radius: 10.0,
            delta: 0.25,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TimeSection {
    pub dt: f64,
    pub t_end: f64,
    pub scheme: Scheme,
    pub snapshot_every: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        Self {
            dt: 1e-3,
            t_end: 1.0,
            scheme: Scheme::ExpEuler,
            snapshot_every: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunSection {
    pub paths: u64,
    pub confidence: f64,
    pub blowup_threshold: f64,
    pub suppress_nonlinearity: bool,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            paths: 100,
            confidence: 0.9,
            blowup_threshold: 1e6,
            suppress_nonlinearity: false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r0: Option<f64>,
    pub energy_paths: u64,
    /// Calibrate `ν₁` for the decay check; otherwise use `1/Re + 3ν/5`.
    pub calibrate: bool,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        Self {
            epsilon: None,
            r0: None,
            energy_paths: 200,
            calibrate: true,
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub model: ModelSection,
    pub noise: NoiseSection,
    pub cutoff: CutoffSection,
    pub time: TimeSection,
    pub run: RunSection,
    pub experiment: ExperimentSection,
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

/// 1-based line of `key` inside `[section]`, or 0 when absent.
fn key_line(text: &str, section: &str, key: &str) -> usize {
    let mut current = String::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(rest) = line.strip_prefix('[') {
            current = rest.trim_end_matches(']').trim().to_string();
            continue;
        }
        if current == section {
            if let Some(rest) = line.strip_prefix(key) {
                if rest.trim_start().starts_with('=') {
                    return i + 1;
                }
            }
        }
    }
    0
}

impl Config {
    /// Parses and validates. Errors carry the line of the offending key.
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Config = toml::from_str(text).map_err(|e| Error::Config {
            line: e.span().map(|s| line_of_offset(text, s.start)).unwrap_or(0),
            message: e.message().to_string(),
        })?;
        cfg.check().map_err(|(section, key, message)| Error::Config {
            line: key_line(text, section, key),
            message: format!("[{section}] {key}: {message}"),
        })?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config is always representable as TOML")
    }

    pub fn validate(&self) -> Result<()> {
        self.check().map_err(|(section, key, message)| Error::Config {
            line: 0,
            message: format!("[{section}] {key}: {message}"),
        })
    }

    fn check(&self) -> std::result::Result<(), (&'static str, &'static str, String)> {
        let positive = |v: f64| v > 0.0 && v.is_finite();
        let m = &self.model;
        if m.galerkin_radius < 1 || m.galerkin_radius > 64 {
            return Err(("model", "galerkin_radius", format!("must lie in 1..=64, got {}", m.galerkin_radius)));
        }
        for (key, v) in [
            ("reynolds", m.reynolds),
            ("magnetic_reynolds", m.magnetic_reynolds),
            ("coupling", m.coupling),
            ("norm", m.norm),
        ] {
            if !positive(v) {
                return Err(("model", key, format!("must be positive, got {v}")));
            }
        }
        let n = &self.noise;
        if !(n.nu >= 0.0 && n.nu.is_finite()) {
            return Err(("noise", "nu", format!("must be >= 0, got {}", n.nu)));
        }
        if !(n.kappa >= 0.0 && n.kappa.is_finite()) {
            return Err(("noise", "kappa", format!("must be >= 0, got {}", n.kappa)));
        }
        if n.shell < 1 {
            return Err(("noise", "shell", "must be >= 1".into()));
        }
        if n.shells.is_empty() || n.shells[0] < 1 || n.shells.windows(2).any(|w| w[0] >= w[1]) {
            return Err(("noise", "shells", "must be a non-empty increasing list of shells >= 1".into()));
        }
        let c = &self.cutoff;
        if let Err(e) = check_delta(c.delta) {
            return Err(("cutoff", "delta", e.to_string()));
        }
        if !(c.radius >= 0.0 && c.radius.is_finite()) {
            return Err(("cutoff", "radius", format!("must be >= 0, got {}", c.radius)));
        }
        let t = &self.time;
        if !positive(t.dt) {
            return Err(("time", "dt", format!("must be positive, got {}", t.dt)));
        }
        if !(t.t_end >= 0.0 && t.t_end.is_finite()) {
            return Err(("time", "t_end", format!("must be >= 0, got {}", t.t_end)));
        }
        let r = &self.run;
        if r.paths < 1 {
            return Err(("run", "paths", "must be >= 1".into()));
        }
        if !(r.confidence > 0.0 && r.confidence < 1.0) {
            return Err(("run", "confidence", format!("must lie in (0,1), got {}", r.confidence)));
        }
        if !(r.blowup_threshold > c.radius + 1.0) {
            return Err((
                "run",
                "blowup_threshold",
                format!("must exceed cutoff radius + 1 = {}", c.radius + 1.0),
            ));
        }
        let e = &self.experiment;
        if let Some(eps) = e.epsilon {
            if !positive(eps) {
                return Err(("experiment", "epsilon", format!("must be positive, got {eps}")));
            }
        }
        if let Some(r0) = e.r0 {
            if !positive(r0) {
                return Err(("experiment", "r0", format!("must be positive, got {r0}")));
            }
        }
        if e.energy_paths < 2 {
            return Err(("experiment", "energy_paths", "must be >= 2".into()));
        }
        Ok(())
    }

    pub fn run_config(&self) -> RunConfig {
        RunConfig {
            galerkin_radius: self.model.galerkin_radius,
            shell: self.noise.shell,
            kappa: self.noise.kappa,
            nu: self.noise.nu,
            delta: self.cutoff.delta,
            cutoff_radius: self.cutoff.radius,
            physics: PhysicsParams {
                reynolds: self.model.reynolds,
                magnetic_reynolds: self.model.magnetic_reynolds,
                coupling: self.model.coupling,
            },
            dt: self.time.dt,
            t_end: self.time.t_end,
            seed: self.noise.seed,
            blowup_threshold: self.run.blowup_threshold,
            scheme: self.time.scheme,
            snapshot_every: self.time.snapshot_every,
            use_cutoff: self.cutoff.enabled,
            suppress_nonlinearity: self.run.suppress_nonlinearity,
        }
    }
}
