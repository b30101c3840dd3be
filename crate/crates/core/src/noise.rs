//! Radial noise weights `θ`, complex Brownian increments and the Itô
//! martingale term `(C_ν/‖θ‖) Σ θ_k Π(σ_{k,α}·∇Φ) ΔW^{k,α}`.
//!
//! `θ` lives on its own lattice (radius = outer support radius), so a shell
//! may reach past the Galerkin radius of the state it acts on.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{contract, invalid, Result};
use crate::field::{SpectralField, State};
use crate::lattice::{Half, Lattice, Wavevector};
use crate::transform::{product_grid_size, GridTransform};
use crate::vec3::{CVec3, CZERO3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Noise intensity `C_ν = √(3ν/2)`.
pub fn noise_intensity(nu: f64) -> f64 {
    (1.5 * nu).sqrt()
}

#[derive(Clone, Debug)]
pub struct ThetaSequence {
    lattice: Arc<Lattice>,
    weights: Vec<f64>,
    support: Vec<usize>,
    l2: f64,
    linf: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct ThetaEntry {
    pub k: Wavevector,
    pub weight: f64,
}

impl ThetaSequence {
    /// Weights given as a function of `|k|²`, which makes them radial by construction.
    pub fn radial(radius: u32, profile: impl Fn(i64) -> f64) -> Result<Self> {
        let lattice = Arc::new(Lattice::new(radius)?);
        let weights: Vec<f64> = lattice
            .modes()
            .iter()
            .map(|k| profile(i64::from(k[0]).pow(2) + i64::from(k[1]).pow(2) + i64::from(k[2]).pow(2)))
            .collect();
        Self::from_weights(lattice, weights)
    }

    /// Arbitrary lattice-ordered weights; radial symmetry is checked.
    pub fn from_weights(lattice: Arc<Lattice>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != lattice.len() {
            return Err(invalid("one weight per lattice mode is required"));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(invalid("theta weights must be finite and nonnegative"));
        }
        let mut by_shell = std::collections::HashMap::new();
        for (i, &w) in weights.iter().enumerate() {
            let r2 = lattice.norm2(i) as i64;
            let first = *by_shell.entry(r2).or_insert(w);
            if first != w {
                return Err(invalid(format!(
                    "theta is not radially symmetric on the shell |k|² = {r2}"
                )));
            }
        }
        let support: Vec<usize> = (0..weights.len()).filter(|&i| weights[i] > 0.0).collect();
        let l2 = support.iter().map(|&i| weights[i] * weights[i]).sum::<f64>().sqrt();
        if l2 == 0.0 {
            return Err(invalid("theta must have a nonzero weight"));
        }
        let linf = support.iter().map(|&i| weights[i]).fold(0.0, f64::max);
        Ok(Self {
            lattice,
            weights,
            support,
            l2,
            linf,
        })
    }

    /// `θ^N_k = 1_{N ≤ |k| ≤ 2N} |k|^{-κ}` on a lattice of radius `2N`.
    pub fn shell(n: u32, kappa: f64) -> Result<Self> {
        if n < 1 {
            return Err(invalid("shell index N must be >= 1"));
        }
        if !(kappa >= 0.0) || !kappa.is_finite() {
            return Err(invalid(format!("kappa must be finite and >= 0, got {kappa}")));
        }
        let (lo, hi) = (i64::from(n).pow(2), 4 * i64::from(n).pow(2));
        Self::radial(2 * n, |r2| {
            if (lo..=hi).contains(&r2) {
                (r2 as f64).powf(-kappa / 2.0)
            } else {
                0.0
            }
        })
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn weight(&self, i: usize) -> f64 {
        self.weights[i]
    }

    pub fn weight_of(&self, k: Wavevector) -> f64 {
        self.lattice.index_of(k).map_or(0.0, |i| self.weights[i])
    }

    /// Indices into [`Self::lattice`] with nonzero weight.
    pub fn support(&self) -> &[usize] {
        &self.support
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2
    }

    pub fn linf_norm(&self) -> f64 {
        self.linf
    }

    /// Largest `|k|` in the support.
    pub fn support_radius(&self) -> f64 {
        self.support
            .iter()
            .map(|&i| self.lattice.norm2(i).sqrt())
            .fold(0.0, f64::max)
    }

    pub fn entries(&self) -> Vec<ThetaEntry> {
        self.support
            .iter()
            .map(|&i| ThetaEntry {
                k: self.lattice.mode(i),
                weight: self.weights[i],
            })
            .collect()
    }
}

/// `θ^N` that must fit inside `lattice`, for runs that keep the noise within the Galerkin space.
pub fn make_theta_n(n: u32, kappa: f64, lattice: &Lattice) -> Result<ThetaSequence> {
    if lattice.radius() < 2 * n {
        return Err(invalid(format!(
            "lattice radius {} is below 2N = {}",
            lattice.radius(),
            2 * n
        )));
    }
    ThetaSequence::shell(n, kappa)
}

/// One step of complex Brownian increments, dense over the θ-lattice.
#[derive(Clone, Debug, PartialEq)]
pub struct Increments {
    pub dt: f64,
    pub values: Vec<[Complex64; 2]>,
}

impl Increments {
    pub fn zeros(len: usize, dt: f64) -> Self {
        Self {
            dt,
            values: vec![[Complex64::new(0.0, 0.0); 2]; len],
        }
    }

    /// Largest violation of `ΔW^{-k,α} = conj(ΔW^{k,α})`.
    pub fn symmetry_defect(&self, lattice: &Lattice) -> f64 {
        (0..lattice.len())
            .flat_map(|i| {
                let j = lattice.neg(i);
                (0..2).map(move |a| (i, j, a))
            })
            .map(|(i, j, a)| (self.values[i][a] - self.values[j][a].conj()).norm())
            .fold(0.0, f64::max)
    }

    pub fn accumulate(&mut self, other: &Increments) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a[0] += b[0];
            a[1] += b[1];
        }
        self.dt += other.dt;
    }
}

/// Counter-based source of increments: the ChaCha key is `(seed, path)` and
/// the stream is the step index, so any step of any path can be drawn
/// independently of every other.
#[derive(Clone, Debug)]
pub struct BrownianDriver {
    seed: u64,
    path: u64,
    dt: f64,
    len: usize,
    /// `(mode index, α)` for `k ∈ Z³₊ ∩ supp θ`, with the index of `-k`.
    support: Vec<(usize, usize, usize)>,
}

impl BrownianDriver {
    pub fn new(theta: &ThetaSequence, seed: u64, path: u64, dt: f64) -> Result<Self> {
        if !(dt > 0.0) || !dt.is_finite() {
            return Err(invalid(format!("dt must be positive, got {dt}")));
        }
        let lat = theta.lattice();
        let support = theta
            .support()
            .iter()
            .filter(|&&i| lat.half(i) == Half::Plus)
            .flat_map(|&i| (0..2).map(move |a| (i, lat.neg(i), a)))
            .collect();
        Ok(Self {
            seed,
            path,
            dt,
            len: lat.len(),
            support,
        })
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn path(&self) -> u64 {
        self.path
    }

    /// `(k, α)` pairs driven by independent complex motions.
    pub fn support_len(&self) -> usize {
        self.support.len()
    }

    fn rng(&self, step: u64) -> ChaCha8Rng {
        let mut key = [0u8; 32];
        key[..8].copy_from_slice(&self.seed.to_le_bytes());
        key[8..16].copy_from_slice(&self.path.to_le_bytes());
        let mut rng = ChaCha8Rng::from_seed(key);
        rng.set_stream(step);
        rng
    }

    /// Increments for step `step`: re and im parts `N(0, dt)` on `Z³₊`, conjugated onto `Z³₋`.
    pub fn sample(&self, step: u64) -> Increments {
        let mut rng = self.rng(step);
        let s = self.dt.sqrt();
        let mut inc = Increments::zeros(self.len, self.dt);
        for &(i, j, a) in &self.support {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            let w = Complex64::new(re * s, im * s);
            inc.values[i][a] = w;
            inc.values[j][a] = w.conj();
        }
        inc
    }

    /// Sum of the fine increments `first .. first + count`, i.e. one coarse step
    /// of length `count · dt` along the same path.
    pub fn sample_coarse(&self, first: u64, count: u64) -> Increments {
        let mut acc = Increments::zeros(self.len, 0.0);
        for s in first..first + count {
            acc.accumulate(&self.sample(s));
        }
        acc
    }
}

pub fn sample_increments(driver: &BrownianDriver, step: u64) -> Increments {
    driver.sample(step)
}

/// Evaluates the martingale increment for a fixed Galerkin lattice.
#[derive(Debug, Clone)]
pub struct NoiseOperator {
    theta: ThetaSequence,
    scale: f64,
    transform: Arc<GridTransform>,
}

impl NoiseOperator {
    pub fn new(theta: &ThetaSequence, nu: f64, lattice: &Lattice) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(invalid(format!("nu must be finite and >= 0, got {nu}")));
        }
        let m = lattice.radius();
        let n = product_grid_size(theta.lattice().radius(), m, m);
        Ok(Self {
            theta: theta.clone(),
            scale: noise_intensity(nu) / theta.l2_norm(),
            transform: GridTransform::shared(n)?,
        })
    }

    pub fn theta(&self) -> &ThetaSequence {
        &self.theta
    }

    /// Spectral coefficients of the transporting field `(C_ν/‖θ‖) Σ θ_k a_{k,α} ΔW^{k,α} e_k`.
    pub fn velocity(&self, incs: &Increments) -> Result<SpectralField> {
        let lat = self.theta.lattice();
        if incs.values.len() != lat.len() {
            return Err(invalid("increments do not match the theta lattice"));
        }
        let defect = incs.symmetry_defect(lat);
        if defect > 1e-14 * incs.dt.max(f64::MIN_POSITIVE).sqrt() {
            return Err(contract(format!(
                "increments are not conjugate-symmetric (defect {defect:.3e})"
            )));
        }
        let mut coeffs = vec![CZERO3; lat.len()];
        for &i in self.theta.support() {
            let [a1, a2] = lat.frame(i);
            let [w1, w2] = incs.values[i];
            let c = self.scale * self.theta.weight(i);
            coeffs[i] = std::array::from_fn(|d| (w1 * a1[d] + w2 * a2[d]) * c);
        }
        Ok(SpectralField::with_flags(lat.clone(), coeffs, true, true))
    }

    /// `Π_M Π(W·∇ξ), Π_M Π(W·∇η)` for the increment-weighted field `W`.
    pub fn apply(&self, phi: &State, incs: &Increments) -> Result<State> {
        let w = self.velocity(incs)?;
        let lattice = phi.lattice();
        let mut ch = Vec::with_capacity(18);
        for f in [&phi.xi, &phi.eta] {
            for i in 0..3 {
                for j in 0..3 {
                    ch.push(f.partial(i, j));
                }
            }
        }
        let wch: Vec<Vec<Complex64>> = (0..3).map(|c| w.component(c)).collect();
        let wg = self.transform.synthesize_real(w.lattice(), &wch)?;
        let g = self.transform.synthesize_real(lattice, &ch)?;
        let len = wg[0].len();
        let mut out: Vec<Vec<f64>> = (0..6).map(|_| vec![0.0; len]).collect();
        for (f, o) in out.chunks_mut(3).enumerate() {
            for (i, oi) in o.iter_mut().enumerate() {
                let base = 9 * f + 3 * i;
                for p in 0..len {
                    oi[p] = wg[0][p] * g[base][p] + wg[1][p] * g[base + 1][p] + wg[2][p] * g[base + 2][p];
                }
            }
        }
        let spec = self.transform.analyze_real(&out, lattice)?;
        let make = |off: usize| {
            let coeffs = (0..lattice.len())
                .map(|i| [spec[off][i], spec[off + 1][i], spec[off + 2][i]])
                .collect();
            SpectralField::with_flags(lattice.clone(), coeffs, true, false).leray_project()
        };
        Ok(State::new_unchecked(make(0), make(3)))
    }
}

/// One-call form of [`NoiseOperator::apply`].
pub fn noise_term(phi: &State, incs: &Increments, theta: &ThetaSequence, nu: f64) -> Result<State> {
    NoiseOperator::new(theta, nu, phi.lattice())?.apply(phi, incs)
}

/// `Π_M Π(σ_{k,α}·∇v)` by the shift identity `σ_{k,α}·∇(c e_l) = 2πi (a_{k,α}·l) c e_{k+l}`.
pub fn transport_mode(k: Wavevector, alpha: usize, v: &SpectralField) -> Result<SpectralField> {
    if alpha > 1 {
        return Err(invalid("alpha must be 0 or 1"));
    }
    let (a1, a2) = crate::lattice::frame_vectors(k)?;
    let a = if alpha == 0 { a1 } else { a2 };
    let lat = v.lattice();
    let mut coeffs: Vec<CVec3> = vec![CZERO3; lat.len()];
    for (i, l) in lat.modes().iter().enumerate() {
        let target = [k[0] + l[0], k[1] + l[1], k[2] + l[2]];
        if let Some(o) = lat.index_of(target) {
            let al = a[0] * l[0] as f64 + a[1] * l[1] as f64 + a[2] * l[2] as f64;
            let f = I * (2.0 * PI * al);
            for d in 0..3 {
                coeffs[o][d] += v.coeffs()[i][d] * f;
            }
        }
    }
    Ok(SpectralField::from_coeffs(lat.clone(), coeffs)?.leray_project())
}
