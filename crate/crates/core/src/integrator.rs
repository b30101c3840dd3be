//! Exponential Euler–Maruyama stepping of the Galerkin-truncated Itô system
//!
//! ```text
//! dΦ + f_R(Φ) b(Φ,Φ) dt = [ΔΦ + S_θ Φ] dt + (C_ν/‖θ‖) Σ θ_k Π(σ_{k,α}·∇Φ) dW^{k,α}
//! ```
//!
//! and of the deterministic limit `∂_t Φ + b(Φ,Φ) = ν₁ ΔΦ`.
//!
//! The linear part is diagonal per mode, so `exp(dt(ν_c Δ + S_θ))` is applied
//! exactly as a 2×2 matrix exponential on each `k⊥`. One step reads
//! `Φ' = E (Φ - dt f_R b(Φ) + ΔM)`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corrector::Corrector;
use crate::error::{invalid, Result};
use crate::field::{random_solenoidal, SpectralField, State};
use crate::lattice::{Lattice, Wavevector};
use crate::noise::{BrownianDriver, Increments, NoiseOperator, ThetaSequence};
use crate::operators::{check_delta, CutoffFn, Nonlinearity, PhysicsParams};
use crate::transform::GridTransform;
use crate::vec3::{mat_apply, Mat3, CZERO3};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Exact exponential of `ν_c Δ + S_θ` per mode.
    ExpEuler,
    /// Exponential of `(ν_c + 3ν/5) Δ`; the remainder `S_θ - (3/5)νΔ` is explicit.
    ExpEulerProxy,
}

impl Scheme {
    pub fn name(&self) -> &'static str {
        match self {
            Scheme::ExpEuler => "exp-euler",
            Scheme::ExpEulerProxy => "exp-euler-proxy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    Stochastic,
    Deterministic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub galerkin_radius: u32,
    pub shell: u32,
    pub kappa: f64,
    pub nu: f64,
    pub delta: f64,
    pub cutoff_radius: f64,
    pub physics: PhysicsParams,
    pub dt: f64,
    pub t_end: f64,
    pub seed: u64,
    pub blowup_threshold: f64,
    pub scheme: Scheme,
    /// Record a snapshot every this many steps; 0 keeps none.
    pub snapshot_every: usize,
    /// Apply `f_R` to the stochastic drift; off gives the uncut system.
    pub use_cutoff: bool,
    pub suppress_nonlinearity: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            galerkin_radius: 8,
            shell: 2,
            kappa: 1.0,
            nu: 1.0,
            delta: 0.25,
            cutoff_radius: 10.0,
            physics: PhysicsParams::default(),
            dt: 1e-3,
            t_end: 1.0,
            seed: 0,
            blowup_threshold: 1e6,
            scheme: Scheme::ExpEuler,
            snapshot_every: 0,
            use_cutoff: true,
            suppress_nonlinearity: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        if self.galerkin_radius < 1 {
            return Err(invalid("galerkin_radius must be >= 1"));
        }
        if self.shell < 1 {
            return Err(invalid("shell must be >= 1"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid(format!("dt must be > 0, got {}", self.dt)));
        }
        if !(self.t_end >= 0.0) || !self.t_end.is_finite() {
            return Err(invalid(format!("t_end must be >= 0, got {}", self.t_end)));
        }
        check_delta(self.delta)?;
        if !(self.kappa >= 0.0) || !(self.nu >= 0.0) {
            return Err(invalid("kappa and nu must be >= 0"));
        }
        if !(self.cutoff_radius >= 0.0) {
            return Err(invalid("cutoff radius must be >= 0"));
        }
        if !(self.blowup_threshold > self.cutoff_radius + 1.0) {
            return Err(invalid(format!(
                "blowup_threshold must exceed R+1 = {}",
                self.cutoff_radius + 1.0
            )));
        }
        self.physics.validate()
    }

    pub fn steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    /// `ν₁ = 1/Re + (3/5)ν`, the fluid viscosity of the limit equation.
    pub fn enhanced_viscosity(&self) -> f64 {
        1.0 / self.physics.reynolds + 0.6 * self.nu
    }

    pub fn theta(&self) -> Result<ThetaSequence> {
        ThetaSequence::shell(self.shell, self.kappa)
    }
}

/// `exp(t A)` for a symmetric 2×2 matrix.
pub fn expm_sym2(a: [[f64; 2]; 2], t: f64) -> [[f64; 2]; 2] {
    let m = 0.5 * (a[0][0] + a[1][1]);
    let h = 0.5 * (a[0][0] - a[1][1]);
    let b = 0.5 * (a[0][1] + a[1][0]);
    let q = (h * h + b * b).sqrt();
    let e = (t * m).exp();
    let (ch, sh) = if q * t.abs() < 1e-8 {
        (1.0, t)
    } else {
        ((t * q).cosh(), (t * q).sinh() / q)
    };
    [
        [e * (ch + sh * h), e * sh * b],
        [e * sh * b, e * (ch - sh * h)],
    ]
}

fn lift(lattice: &Lattice, i: usize, e: [[f64; 2]; 2]) -> Mat3 {
    let [a1, a2] = lattice.frame(i);
    let f = [a1, a2];
    std::array::from_fn(|r| {
        std::array::from_fn(|c| {
            let mut s = 0.0;
            for p in 0..2 {
                for q in 0..2 {
                    s += f[p][r] * e[p][q] * f[q][c];
                }
            }
            s
        })
    })
}

/// Scalar observables at the start of a step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub l2: f64,
    pub h1: f64,
    pub hminus_delta: f64,
    pub cutoff: f64,
    pub flux_b: f64,
    pub dissip: f64,
    pub flux_s: f64,
}

impl DiagnosticsRecord {
    pub const HEADER: [&'static str; 8] =
        ["t", "l2", "h1", "hminus_delta", "cutoff", "flux_b", "dissip", "flux_S"];

    pub fn values(&self) -> [f64; 8] {
        [
            self.t,
            self.l2,
            self.h1,
            self.hminus_delta,
            self.cutoff,
            self.flux_b,
            self.dissip,
            self.flux_s,
        ]
    }
}

/// Exact pieces of `‖Φ'‖² - ‖Φ‖²` for one step `Φ' = E(a + ΔM)`, `a = Φ - dt f b`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize)]
pub struct EnergyTerms {
    pub delta_energy: f64,
    /// `2⟨E a, E ΔM⟩`.
    pub martingale: f64,
    /// `‖E ΔM‖²`.
    pub quadratic: f64,
    /// `‖E Φ‖² - ‖Φ‖²`.
    pub linear: f64,
    /// `-2 dt f ⟨Φ, b⟩`.
    pub nonlinear: f64,
    /// `2 dt ⟨Φ, S_θ Φ⟩`.
    pub corrector: f64,
    pub residual: f64,
}

impl EnergyTerms {
    pub const HEADER: [&'static str; 8] = [
        "t",
        "delta_energy",
        "martingale",
        "quadratic",
        "linear",
        "nonlinear",
        "corrector",
        "residual",
    ];

    /// Net noise contribution `q + m + 2dt⟨Φ,S_θΦ⟩`.
    pub fn net_noise(&self) -> f64 {
        self.quadratic + self.martingale + self.corrector
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum Status {
    Completed,
    BlownUp { t: f64 },
}

#[derive(Clone, Debug)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub diagnostics: Vec<DiagnosticsRecord>,
    pub energy: Vec<EnergyTerms>,
    pub snapshots: Vec<(f64, State)>,
    pub status: Status,
    pub final_state: State,
    pub steps: u64,
}

impl Trajectory {
    pub fn blown_up(&self) -> bool {
        matches!(self.status, Status::BlownUp { .. })
    }

    /// `L²` norms at every stored time, including the final one.
    pub fn l2_series(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.diagnostics.iter().map(|d| d.l2).collect();
        v.push(self.final_state.l2_norm());
        v
    }
}

/// Pieces of the linear propagator for one component.
#[derive(Clone, Debug)]
enum Propagator {
    Matrix(Vec<Mat3>),
    Scalar(Vec<f64>),
}

impl Propagator {
    fn apply(&self, v: &SpectralField) -> SpectralField {
        let coeffs = match self {
            Propagator::Matrix(ms) => v.coeffs().iter().zip(ms).map(|(c, m)| mat_apply(m, c)).collect(),
            Propagator::Scalar(s) => v.coeffs().iter().zip(s).map(|(c, &e)| c.map(|z| z * e)).collect(),
        };
        SpectralField::from_coeffs(v.lattice().clone(), coeffs).expect("same lattice")
    }
}

fn scalar_decay(lattice: &Lattice, visc: f64, dt: f64) -> Vec<f64> {
    (0..lattice.len())
        .map(|i| (-visc * 4.0 * PI * PI * lattice.norm2(i) * dt).exp())
        .collect()
}

/// The stochastic, cut-off exponential Euler–Maruyama step.
#[derive(Debug, Clone)]
pub struct Stepper {
    lattice: Arc<Lattice>,
    dt: f64,
    nu: f64,
    delta: f64,
    cutoff: CutoffFn,
    use_cutoff: bool,
    suppress_b: bool,
    scheme: Scheme,
    nonlin: Nonlinearity,
    noise: NoiseOperator,
    corrector: Corrector,
    prop: [Propagator; 2],
    physics: PhysicsParams,
}

pub struct StepOutput {
    pub state: State,
    pub diagnostics: DiagnosticsRecord,
    pub energy: EnergyTerms,
}

impl Stepper {
    pub fn new(cfg: &RunConfig, theta: &ThetaSequence, lattice: Arc<Lattice>, dt: f64) -> Result<Self> {
        cfg.validate()?;
        if !(dt > 0.0) {
            return Err(invalid("dt must be > 0"));
        }
        let corrector = Corrector::new(theta, cfg.nu, &lattice)?;
        let viscs = [1.0 / cfg.physics.reynolds, 1.0 / cfg.physics.magnetic_reynolds];
        let prop = viscs.map(|visc| match cfg.scheme {
            Scheme::ExpEuler => Propagator::Matrix(
                (0..lattice.len())
                    .map(|i| {
                        let mut blk = corrector.frame_block(i);
                        let d = -visc * 4.0 * PI * PI * lattice.norm2(i);
                        blk[0][0] += d;
                        blk[1][1] += d;
                        lift(&lattice, i, expm_sym2(blk, dt))
                    })
                    .collect(),
            ),
            Scheme::ExpEulerProxy => Propagator::Scalar(scalar_decay(&lattice, visc + 0.6 * cfg.nu, dt)),
        });
        Ok(Self {
            nonlin: Nonlinearity::new(&lattice, cfg.physics)?,
            noise: NoiseOperator::new(theta, cfg.nu, &lattice)?,
            cutoff: CutoffFn::new(cfg.cutoff_radius)?,
            lattice,
            dt,
            nu: cfg.nu,
            delta: cfg.delta,
            use_cutoff: cfg.use_cutoff,
            suppress_b: cfg.suppress_nonlinearity,
            scheme: cfg.scheme,
            corrector,
            prop,
            physics: cfg.physics,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    fn propagate(&self, s: &State) -> State {
        State::new_unchecked(self.prop[0].apply(&s.xi), self.prop[1].apply(&s.eta))
    }

    fn dissipation(&self, phi: &State) -> f64 {
        phi.xi.sobolev_norm2(1.0) / self.physics.reynolds + phi.eta.sobolev_norm2(1.0) / self.physics.magnetic_reynolds
    }

    /// One step at time `t` with the given increments.
    pub fn step_stochastic(&self, phi: &State, incs: &Increments, t: f64) -> Result<StepOutput> {
        let dt = self.dt;
        let hm = phi.sobolev_norm(-self.delta);
        let f = if self.use_cutoff { self.cutoff.eval(hm) } else { 1.0 };
        let b = if self.suppress_b {
            State::zeros(self.lattice.clone())
        } else {
            self.nonlin.apply(phi)?
        };
        let s_phi = State::new_unchecked(self.corrector.apply(&phi.xi)?, self.corrector.apply(&phi.eta)?);
        let flux_b = phi.inner(&b);
        let flux_s = phi.inner(&s_phi);
        let mut a = phi.axpy(-dt * f, &b);
        if self.scheme == Scheme::ExpEulerProxy {
            let proxy = State::new_unchecked(phi.xi.laplacian(0.6 * self.nu), phi.eta.laplacian(0.6 * self.nu));
            a = a.axpy(dt, &s_phi.sub(&proxy));
        }
        let dm = self.noise.apply(phi, incs)?;
        let (ea, edm) = (self.propagate(&a), self.propagate(&dm));
        let next = ea.axpy(1.0, &edm);
        let e0 = phi.l2_norm().powi(2);
        let e1 = next.l2_norm().powi(2);
        let linear = self.propagate(phi).l2_norm().powi(2) - e0;
        let martingale = 2.0 * ea.inner(&edm);
        let quadratic = edm.l2_norm().powi(2);
        let nonlinear = -2.0 * dt * f * flux_b;
        let energy = EnergyTerms {
            delta_energy: e1 - e0,
            martingale,
            quadratic,
            linear,
            nonlinear,
            corrector: 2.0 * dt * flux_s,
            residual: (e1 - e0) - martingale - quadratic - linear - nonlinear,
        };
        let diagnostics = DiagnosticsRecord {
            t,
            l2: e0.sqrt(),
            h1: phi.sobolev_norm(1.0),
            hminus_delta: hm,
            cutoff: f,
            flux_b,
            dissip: self.dissipation(phi),
            flux_s,
        };
        Ok(StepOutput {
            state: next,
            diagnostics,
            energy,
        })
    }
}

/// The deterministic limit-equation step `Φ' = E₁(Φ - dt b(Φ))` with
/// `E₁ = exp(dt ν₁ Δ)`; no cutoff.
#[derive(Debug, Clone)]
pub struct DeterministicStepper {
    lattice: Arc<Lattice>,
    dt: f64,
    nonlin: Nonlinearity,
    decay: [Vec<f64>; 2],
    viscosity: [f64; 2],
    suppress_b: bool,
}

impl DeterministicStepper {
    pub fn new(cfg: &RunConfig, lattice: Arc<Lattice>, dt: f64) -> Result<Self> {
        cfg.validate()?;
        let viscosity = [
            1.0 / cfg.physics.reynolds + 0.6 * cfg.nu,
            1.0 / cfg.physics.magnetic_reynolds + 0.6 * cfg.nu,
        ];
        Ok(Self {
            nonlin: Nonlinearity::new(&lattice, cfg.physics)?,
            decay: viscosity.map(|v| scalar_decay(&lattice, v, dt)),
            lattice,
            dt,
            viscosity,
            suppress_b: cfg.suppress_nonlinearity,
        })
    }

    /// Uses an explicit viscosity pair in place of `1/Re + 3ν/5`, `1/Rm + 3ν/5`.
    pub fn with_viscosity(mut self, fluid: f64, magnetic: f64) -> Self {
        self.viscosity = [fluid, magnetic];
        self.decay = self.viscosity.map(|v| scalar_decay(&self.lattice, v, self.dt));
        self
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn step_deterministic(&self, phi: &State, t: f64) -> Result<StepOutput> {
        let b = if self.suppress_b {
            State::zeros(self.lattice.clone())
        } else {
            self.nonlin.apply(phi)?
        };
        let flux_b = phi.inner(&b);
        let a = phi.axpy(-self.dt, &b);
        let apply = |v: &SpectralField, e: &[f64]| {
            let coeffs = v.coeffs().iter().zip(e).map(|(c, &s)| c.map(|z| z * s)).collect();
            SpectralField::from_coeffs(v.lattice().clone(), coeffs).expect("same lattice")
        };
        let next = State::new_unchecked(apply(&a.xi, &self.decay[0]), apply(&a.eta, &self.decay[1]));
        let e0 = phi.l2_norm().powi(2);
        let e1 = next.l2_norm().powi(2);
        let dissip = self.viscosity[0] * phi.xi.sobolev_norm2(1.0) + self.viscosity[1] * phi.eta.sobolev_norm2(1.0);
        let energy = EnergyTerms {
            delta_energy: e1 - e0,
            nonlinear: -2.0 * self.dt * flux_b,
            linear: -2.0 * self.dt * dissip,
            residual: (e1 - e0) + 2.0 * self.dt * flux_b + 2.0 * self.dt * dissip,
            ..Default::default()
        };
        let diagnostics = DiagnosticsRecord {
            t,
            l2: e0.sqrt(),
            h1: phi.sobolev_norm(1.0),
            hminus_delta: f64::NAN,
            cutoff: 1.0,
            flux_b,
            dissip,
            flux_s: 0.0,
        };
        Ok(StepOutput {
            state: next,
            diagnostics,
            energy,
        })
    }
}

fn check_blowup(state: &State, threshold: f64, t: f64) -> Option<Status> {
    if !state.is_finite() || state.l2_norm() > threshold {
        Some(Status::BlownUp { t })
    } else {
        None
    }
}

fn check_initial(cfg: &RunConfig, phi0: &State) -> Result<()> {
    if phi0.lattice().radius() != cfg.galerkin_radius {
        return Err(invalid(format!(
            "initial state has radius {}, config expects {}",
            phi0.lattice().radius(),
            cfg.galerkin_radius
        )));
    }
    if !phi0.is_finite() {
        return Err(invalid("initial state is not finite"));
    }
    State::new(phi0.xi.clone(), phi0.eta.clone()).map(|_| ())
}

/// A stepper built once and reused across Monte Carlo paths.
#[derive(Debug, Clone)]
pub struct PathRunner {
    cfg: RunConfig,
    theta: ThetaSequence,
    stepper: Stepper,
}

impl PathRunner {
    pub fn new(cfg: &RunConfig, theta: &ThetaSequence, lattice: Arc<Lattice>) -> Result<Self> {
        Ok(Self {
            stepper: Stepper::new(cfg, theta, lattice, cfg.dt)?,
            cfg: cfg.clone(),
            theta: theta.clone(),
        })
    }

    pub fn config(&self) -> &RunConfig {
        &self.cfg
    }

    /// Runs one trajectory. `path` selects the noise stream; `fine` increments
    /// of length `dt / fine` are summed per step, so runs that differ only in
    /// `dt · fine`-consistent refinement share one Brownian path. `observe`
    /// sees every state including the initial and final ones.
    pub fn run(
        &self,
        phi0: &State,
        path: u64,
        fine: u64,
        observe: impl FnMut(u64, f64, &State),
    ) -> Result<Trajectory> {
        check_initial(&self.cfg, phi0)?;
        let fine = fine.max(1);
        let driver = BrownianDriver::new(&self.theta, self.cfg.seed, path, self.cfg.dt / fine as f64)?;
        run_loop(
            &self.cfg,
            phi0,
            |phi, n, t| {
                let incs = driver.sample_coarse(n * fine, fine);
                self.stepper.step_stochastic(phi, &incs, t)
            },
            observe,
        )
    }
}

pub fn simulate_path(cfg: &RunConfig, theta: &ThetaSequence, phi0: &State, path: u64, fine: u64) -> Result<Trajectory> {
    PathRunner::new(cfg, theta, phi0.lattice().clone())?.run(phi0, path, fine, |_, _, _| {})
}

fn run_loop(
    cfg: &RunConfig,
    phi0: &State,
    mut step: impl FnMut(&State, u64, f64) -> Result<StepOutput>,
    mut observe: impl FnMut(u64, f64, &State),
) -> Result<Trajectory> {
    let steps = cfg.steps();
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps as usize + 1),
        diagnostics: Vec::with_capacity(steps as usize),
        energy: Vec::with_capacity(steps as usize),
        snapshots: Vec::new(),
        status: Status::Completed,
        final_state: phi0.clone(),
        steps: 0,
    };
    let mut phi = phi0.clone();
    for n in 0..steps {
        let t = n as f64 * cfg.dt;
        traj.times.push(t);
        observe(n, t, &phi);
        if cfg.snapshot_every > 0 && n % cfg.snapshot_every as u64 == 0 {
            traj.snapshots.push((t, phi.clone()));
        }
        let out = step(&phi, n, t)?;
        traj.diagnostics.push(out.diagnostics);
        traj.energy.push(out.energy);
        traj.steps = n + 1;
        let t_next = (n + 1) as f64 * cfg.dt;
        if let Some(status) = check_blowup(&out.state, cfg.blowup_threshold, t_next) {
            traj.status = status;
            traj.final_state = out.state;
            return Ok(traj);
        }
        phi = out.state;
    }
    let t_end = steps as f64 * cfg.dt;
    traj.times.push(t_end);
    observe(steps, t_end, &phi);
    traj.final_state = phi;
    Ok(traj)
}

pub fn simulate(cfg: &RunConfig, phi0: &State, mode: Mode) -> Result<Trajectory> {
    match mode {
        Mode::Stochastic => simulate_path(cfg, &cfg.theta()?, phi0, 0, 1),
        Mode::Deterministic => simulate_deterministic(cfg, phi0, None, |_, _, _| {}),
    }
}

/// Limit-equation trajectory; `viscosity` overrides `(1/Re + 3ν/5, 1/Rm + 3ν/5)`.
pub fn simulate_deterministic(
    cfg: &RunConfig,
    phi0: &State,
    viscosity: Option<(f64, f64)>,
    observe: impl FnMut(u64, f64, &State),
) -> Result<Trajectory> {
    check_initial(cfg, phi0)?;
    let mut stepper = DeterministicStepper::new(cfg, phi0.lattice().clone(), cfg.dt)?;
    if let Some((a, b)) = viscosity {
        stepper = stepper.with_viscosity(a, b);
    }
    run_loop(cfg, phi0, |phi, _, t| stepper.step_deterministic(phi, t), observe)
}

/// `Π_{M'}`: zero every mode with `|k| > M'`.
pub fn galerkin_project(phi: &State, radius: u32) -> Result<State> {
    if radius < 1 {
        return Err(invalid("Galerkin radius must be >= 1"));
    }
    if radius > phi.lattice().radius() {
        return Err(invalid(format!(
            "Galerkin radius {radius} exceeds the lattice radius {}",
            phi.lattice().radius()
        )));
    }
    Ok(State::new_unchecked(phi.xi.truncate(radius), phi.eta.truncate(radius)))
}

/// Largest `dt` with `dt · max|u| · M ≤ 0.25`, `u` the fluid velocity.
pub fn advective_dt(phi: &State) -> Result<f64> {
    let lattice = phi.lattice();
    let u = phi.xi.biot_savart()?;
    let b = phi.eta.biot_savart()?;
    let t = GridTransform::shared(crate::transform::smooth_size(2 * lattice.radius() as usize + 1))?;
    let mut vmax: f64 = 0.0;
    for f in [&u, &b] {
        let g = t.to_grid(f)?;
        for p in 0..g.comps[0].len() {
            let s = (g.comps[0][p].powi(2) + g.comps[1][p].powi(2) + g.comps[2][p].powi(2)).sqrt();
            vmax = vmax.max(s);
        }
    }
    if vmax == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(0.25 / (vmax * f64::from(lattice.radius())))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum InitialData {
    TaylorGreen,
    SingleMode { k: Wavevector },
    Random { seed: u64, radius: u32, decay: f64 },
}

impl Default for InitialData {
    fn default() -> Self {
        InitialData::TaylorGreen
    }
}

fn real_mode(lattice: &Arc<Lattice>, k: Wavevector, dir: [f64; 3], amp: Complex64) -> Result<SpectralField> {
    let i = lattice
        .index_of(k)
        .ok_or_else(|| invalid(format!("mode {k:?} is not on the lattice")))?;
    let mut c = vec![CZERO3; lattice.len()];
    let v: [Complex64; 3] = std::array::from_fn(|d| amp * dir[d]);
    c[i] = v;
    c[lattice.neg(i)] = v.map(|z| z.conj());
    Ok(SpectralField::from_coeffs(lattice.clone(), c)?.leray_project())
}

/// Vorticity of the Taylor–Green velocity `(sin x cos y cos z, -cos x sin y cos z, 0)`
/// with `x = 2πx₁` etc.; the magnetic part uses the cyclically permuted field.
fn taylor_green(lattice: &Arc<Lattice>, shift: usize) -> Result<SpectralField> {
    if lattice.radius() < 2 {
        return Err(invalid("Taylor-Green data needs a lattice of radius >= 2"));
    }
    let mut c = vec![CZERO3; lattice.len()];
    // u₁ = sin x cos y cos z: coefficient s₁/(8i) at (s₁,s₂,s₃) ∈ {±1}³; u₂ analogous.
    for s1 in [-1i32, 1] {
        for s2 in [-1i32, 1] {
            for s3 in [-1i32, 1] {
                let mut k = [s1, s2, s3];
                k.rotate_right(shift);
                let i = lattice.index_of(k).expect("|k|² = 3 is on the lattice");
                let u1 = Complex64::new(0.0, -f64::from(s1) / 8.0);
                let u2 = Complex64::new(0.0, f64::from(s2) / 8.0);
                let mut u = [u1, u2, Complex64::new(0.0, 0.0)];
                u.rotate_right(shift);
                c[i] = u;
            }
        }
    }
    Ok(SpectralField::from_coeffs(lattice.clone(), c)?.curl())
}

impl InitialData {
    /// Builds `Φ₀` on `lattice` with `‖Φ₀‖_{L²} = norm`.
    pub fn build(&self, lattice: &Arc<Lattice>, norm: f64) -> Result<State> {
        let phi = match self {
            InitialData::TaylorGreen => State::new(taylor_green(lattice, 0)?, taylor_green(lattice, 1)?)?,
            InitialData::SingleMode { k } => {
                let (a1, a2) = crate::lattice::frame_vectors(*k)?;
                let one = Complex64::new(1.0, 0.0);
                State::new(real_mode(lattice, *k, a1, one)?, real_mode(lattice, *k, a2, one)?)?
            }
            InitialData::Random { seed, radius, decay } => {
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let r = (*radius).min(lattice.radius()).max(1);
                let xi = random_solenoidal(lattice.clone(), &mut rng, *decay).truncate(r);
                let eta = random_solenoidal(lattice.clone(), &mut rng, *decay).truncate(r);
                State::new(xi, eta)?
            }
        };
        Ok(phi.normalized_to(norm))
    }

    /// A small fixed library used for calibration sweeps.
    pub fn library() -> Vec<InitialData> {
        vec![
            InitialData::TaylorGreen,
            InitialData::SingleMode { k: [1, 0, 0] },
            InitialData::SingleMode { k: [1, 1, 0] },
            InitialData::Random {
                seed: 1,
                radius: 3,
                decay: 1.0,
            },
            InitialData::Random {
                seed: 2,
                radius: 4,
                decay: 2.0,
            },
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lat(m: u32) -> Arc<Lattice> {
        Arc::new(Lattice::new(m).unwrap())
    }

    fn cfg(m: u32) -> RunConfig {
        RunConfig {
            galerkin_radius: m,
            shell: 1,
            t_end: 0.02,
            dt: 1e-3,
            ..Default::default()
        }
    }

    #[test]
    fn matrix_exponential_against_series() {
        let a = [[-3.0, 0.7], [0.7, -1.2]];
        let t = 0.3;
        let e = expm_sym2(a, t);
        // Taylor series oracle
        let mut term = [[1.0, 0.0], [0.0, 1.0]];
        let mut sum = term;
        for n in 1..40 {
            let mut next = [[0.0; 2]; 2];
            for i in 0..2 {
                for j in 0..2 {
                    next[i][j] = (0..2).map(|p| term[i][p] * a[p][j]).sum::<f64>() * t / n as f64;
                }
            }
            term = next;
            for i in 0..2 {
                for j in 0..2 {
                    sum[i][j] += term[i][j];
                }
            }
        }
        for i in 0..2 {
            for j in 0..2 {
                assert_abs_diff_eq!(e[i][j], sum[i][j], epsilon = 1e-14);
            }
        }
        let d = expm_sym2([[-2.0, 0.0], [0.0, -2.0]], 0.5);
        assert_abs_diff_eq!(d[0][0], (-1.0f64).exp(), epsilon = 1e-15);
    }

    #[test]
    fn heat_decay_without_noise_or_nonlinearity() {
        let mut c = cfg(3);
        c.nu = 0.0;
        c.suppress_nonlinearity = true;
        let l = lat(3);
        let phi0 = InitialData::Random {
            seed: 3,
            radius: 3,
            decay: 0.0,
        }
        .build(&l, 1.0)
        .unwrap();
        let tr = simulate(&c, &phi0, Mode::Stochastic).unwrap();
        let steps = c.steps() as f64;
        for i in 0..l.len() {
            let f = (-4.0 * PI * PI * l.norm2(i) * c.dt * steps).exp();
            for d in 0..3 {
                let expect = phi0.xi.coeffs()[i][d] * f;
                assert!((tr.final_state.xi.coeffs()[i][d] - expect).norm() < 1e-14);
            }
        }
        let r = tr.energy.iter().map(|e| e.residual.abs()).fold(0.0, f64::max);
        assert!(r < 1e-14, "{r}");
    }

    #[test]
    fn zero_state_stays_zero() {
        let c = cfg(3);
        let phi0 = State::zeros(lat(3));
        let tr = simulate(&c, &phi0, Mode::Stochastic).unwrap();
        assert_eq!(tr.final_state.l2_norm(), 0.0);
        let tr = simulate(&c, &phi0, Mode::Deterministic).unwrap();
        assert_eq!(tr.final_state.l2_norm(), 0.0);
    }

    #[test]
    fn deterministic_linear_decay_rate() {
        let mut c = cfg(2);
        c.nu = 2.0;
        c.suppress_nonlinearity = true;
        let l = lat(2);
        let phi0 = InitialData::SingleMode { k: [1, 1, 0] }.build(&l, 1.0).unwrap();
        let tr = simulate(&c, &phi0, Mode::Deterministic).unwrap();
        let nu1 = c.enhanced_viscosity();
        let expect = (-nu1 * 4.0 * PI * PI * 2.0 * c.t_end).exp();
        assert_abs_diff_eq!(tr.final_state.l2_norm(), expect, epsilon = 1e-12);
    }

    #[test]
    fn small_data_decays_monotonically() {
        let mut c = cfg(4);
        c.nu = 0.0;
        c.t_end = 0.05;
        let l = lat(4);
        let phi0 = InitialData::TaylorGreen.build(&l, 1e-3).unwrap();
        let tr = simulate(&c, &phi0, Mode::Deterministic).unwrap();
        let s = tr.l2_series();
        assert!(s.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn deterministic_energy_law_first_order() {
        let l = lat(4);
        let phi0 = InitialData::TaylorGreen.build(&l, 5.0).unwrap();
        let mut res = Vec::new();
        for dt in [2e-4, 1e-4] {
            let mut c = cfg(4);
            c.dt = dt;
            c.t_end = dt;
            let tr = simulate(&c, &phi0, Mode::Deterministic).unwrap();
            res.push(tr.energy[0].residual.abs());
        }
        // per-step residual is O(dt²)
        let ratio = res[0] / res[1];
        assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
    }

    #[test]
    fn stochastic_run_is_reproducible_and_stays_valid() {
        let c = cfg(4);
        let l = lat(4);
        let phi0 = InitialData::TaylorGreen.build(&l, 1.0).unwrap();
        let a = simulate(&c, &phi0, Mode::Stochastic).unwrap();
        let b = simulate(&c, &phi0, Mode::Stochastic).unwrap();
        assert_eq!(a.diagnostics, b.diagnostics);
        let mut xi = a.final_state.xi.clone();
        xi.refresh_flags();
        assert!(xi.is_real() && xi.is_solenoidal());
        assert!(a.final_state.xi.divergence_defect() < 1e-13);
        assert_eq!(a.status, Status::Completed);
    }

    #[test]
    fn galerkin_projection() {
        let l = lat(4);
        let phi = InitialData::Random {
            seed: 1,
            radius: 4,
            decay: 0.0,
        }
        .build(&l, 1.0)
        .unwrap();
        assert!(galerkin_project(&phi, 0).is_err());
        assert!(galerkin_project(&phi, 5).is_err());
        assert_eq!(galerkin_project(&phi, 4).unwrap().max_diff(&phi), 0.0);
        assert!(galerkin_project(&phi, 2).unwrap().l2_norm() < phi.l2_norm());
    }

    #[test]
    fn initial_data_is_normalized_and_valid() {
        let l = lat(4);
        for d in InitialData::library() {
            let phi = d.build(&l, 2.5).unwrap();
            assert_abs_diff_eq!(phi.l2_norm(), 2.5, epsilon = 1e-12);
            assert!(State::new(phi.xi.clone(), phi.eta.clone()).is_ok());
        }
        assert!(advective_dt(&InitialData::TaylorGreen.build(&l, 1.0).unwrap()).unwrap() > 0.0);
    }

    #[test]
    fn blowup_is_detected() {
        let mut c = cfg(4);
        c.nu = 0.0;
        c.blowup_threshold = 20.0;
        c.cutoff_radius = 1.0;
        c.use_cutoff = false;
        c.dt = 5e-3;
        c.t_end = 1.0;
        let l = lat(4);
        let phi0 = InitialData::TaylorGreen.build(&l, 1e3).unwrap();
        let tr = simulate(&c, &phi0, Mode::Stochastic).unwrap();
        assert!(tr.blown_up());
    }

    #[test]
    fn invalid_configs_rejected() {
        let mut c = RunConfig::default();
        c.dt = 0.0;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.delta = 0.7;
        assert!(c.validate().is_err());
        let mut c = RunConfig::default();
        c.blowup_threshold = c.cutoff_radius;
        assert!(c.validate().is_err());
    }
}
