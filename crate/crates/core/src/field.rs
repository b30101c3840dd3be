//! Spectral vector fields on the unit torus and the per-mode linear maps
//! (Leray projection, curl, Biot–Savart, Laplacian, Sobolev norms).
//!
//! Fourier convention: `v(x) = Σ_k c_k e^{2πi k·x}` on `T³ = R³/Z³`, so
//! `‖v‖²_{L²} = Σ_k |c_k|²` and `Δ e_k = -4π²|k|² e_k`.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{contract, invalid, Result};
use crate::lattice::{Lattice, Wavevector};
use crate::vec3::{cdot_conj, cnorm2, cconj, rcross, rdot, to_f64, CVec3, CZERO3};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Relative tolerance used when inferring the reality/solenoidality flags.
pub const FLAG_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
pub struct SpectralField {
    lattice: Arc<Lattice>,
    coeffs: Vec<CVec3>,
    real: bool,
    solenoidal: bool,
}

impl SpectralField {
    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        let n = lattice.len();
        Self {
            lattice,
            coeffs: vec![CZERO3; n],
            real: true,
            solenoidal: true,
        }
    }

    /// Wraps coefficients in lattice order; flags are inferred.
    pub fn from_coeffs(lattice: Arc<Lattice>, coeffs: Vec<CVec3>) -> Result<Self> {
        if coeffs.len() != lattice.len() {
            return Err(invalid(format!(
                "{} coefficients for a lattice of {} modes",
                coeffs.len(),
                lattice.len()
            )));
        }
        let mut f = Self {
            lattice,
            coeffs,
            real: false,
            solenoidal: false,
        };
        f.refresh_flags();
        Ok(f)
    }

    pub fn from_fn(lattice: Arc<Lattice>, f: impl Fn(Wavevector) -> CVec3) -> Self {
        let coeffs = lattice.modes().iter().map(|&k| f(k)).collect();
        Self::from_coeffs(lattice, coeffs).expect("length matches")
    }

    /// Recomputes both flags from the coefficients.
    pub fn refresh_flags(&mut self) {
        let scale = self.max_abs().max(f64::MIN_POSITIVE);
        self.real = self.reality_defect() <= FLAG_TOL * scale;
        self.solenoidal = self.divergence_defect() <= FLAG_TOL * scale;
    }

    pub(crate) fn with_flags(
        lattice: Arc<Lattice>,
        coeffs: Vec<CVec3>,
        real: bool,
        solenoidal: bool,
    ) -> Self {
        debug_assert_eq!(coeffs.len(), lattice.len());
        Self {
            lattice,
            coeffs,
            real,
            solenoidal,
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    pub fn coeffs(&self) -> &[CVec3] {
        &self.coeffs
    }

    /// Mutable access clears both flags; call [`Self::refresh_flags`] afterwards.
    pub fn coeffs_mut(&mut self) -> &mut [CVec3] {
        self.real = false;
        self.solenoidal = false;
        &mut self.coeffs
    }

    pub fn coeff(&self, k: Wavevector) -> Option<CVec3> {
        self.lattice.index_of(k).map(|i| self.coeffs[i])
    }

    pub fn is_real(&self) -> bool {
        self.real
    }

    pub fn is_solenoidal(&self) -> bool {
        self.solenoidal
    }

    pub fn same_lattice(&self, other: &SpectralField) -> bool {
        Arc::ptr_eq(&self.lattice, &other.lattice) || self.lattice.radius() == other.lattice.radius()
    }

    pub(crate) fn check_same_lattice(&self, other: &SpectralField) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(invalid(format!(
                "lattice mismatch: radius {} vs {}",
                self.lattice.radius(),
                other.lattice.radius()
            )))
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| cnorm2(c).sqrt()).fold(0.0, f64::max)
    }

    /// `max_k |c(-k) - conj(c(k))|`.
    pub fn reality_defect(&self) -> f64 {
        (0..self.coeffs.len())
            .map(|i| {
                let a = self.coeffs[i];
                let b = cconj(&self.coeffs[self.lattice.neg(i)]);
                ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr() + (a[2] - b[2]).norm_sqr()).sqrt()
            })
            .fold(0.0, f64::max)
    }

    /// `max_k |k·c(k)| / |k|`.
    pub fn divergence_defect(&self) -> f64 {
        self.lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| {
                let kf = to_f64(k);
                rdot(&kf, c).norm() / crate::vec3::norm(&kf)
            })
            .fold(0.0, f64::max)
    }

    fn map_modes(&self, f: impl Fn(usize, &CVec3) -> CVec3) -> Vec<CVec3> {
        self.coeffs.iter().enumerate().map(|(i, c)| f(i, c)).collect()
    }

    /// Leray projection `c ↦ c - (k·c) k/|k|²`.
    pub fn leray_project(&self) -> SpectralField {
        let coeffs = self.map_modes(|i, c| {
            let k = to_f64(&self.lattice.mode(i));
            let s = rdot(&k, c) / self.lattice.norm2(i);
            [c[0] - s * k[0], c[1] - s * k[1], c[2] - s * k[2]]
        });
        Self::with_flags(self.lattice.clone(), coeffs, self.real, true)
    }

    /// Gradient part `c ↦ (k·c) k/|k|²`.
    pub fn leray_perp(&self) -> SpectralField {
        let coeffs = self.map_modes(|i, c| {
            let k = to_f64(&self.lattice.mode(i));
            let s = rdot(&k, c) / self.lattice.norm2(i);
            [s * k[0], s * k[1], s * k[2]]
        });
        let mut f = Self::with_flags(self.lattice.clone(), coeffs, self.real, false);
        f.solenoidal = f.divergence_defect() <= FLAG_TOL * f.max_abs().max(f64::MIN_POSITIVE);
        f
    }

    /// Curl in Fourier space: `2πi k × c`.
    pub fn curl(&self) -> SpectralField {
        let coeffs = self.map_modes(|i, c| {
            let k = to_f64(&self.lattice.mode(i));
            rcross(&k, c).map(|z| z * (2.0 * PI) * I)
        });
        Self::with_flags(self.lattice.clone(), coeffs, self.real, true)
    }

    /// Velocity from vorticity: `u(k) = i (k × w(k)) / (2π|k|²)`.
    pub fn biot_savart(&self) -> Result<SpectralField> {
        if !self.solenoidal {
            return Err(contract(format!(
                "Biot-Savart needs a solenoidal field (divergence defect {:.3e})",
                self.divergence_defect()
            )));
        }
        let coeffs = self.map_modes(|i, c| {
            let k = to_f64(&self.lattice.mode(i));
            let s = I / (2.0 * PI * self.lattice.norm2(i));
            rcross(&k, c).map(|z| z * s)
        });
        Ok(Self::with_flags(self.lattice.clone(), coeffs, self.real, true))
    }

    /// `coeff · Δv`.
    pub fn laplacian(&self, coeff: f64) -> SpectralField {
        let coeffs = self.map_modes(|i, c| {
            let w = -coeff * 4.0 * PI * PI * self.lattice.norm2(i);
            c.map(|z| z * w)
        });
        Self::with_flags(self.lattice.clone(), coeffs, self.real, self.solenoidal)
    }

    /// Scalar partial derivative `∂_j` of component `i`, as lattice-ordered coefficients.
    pub fn partial(&self, comp: usize, dir: usize) -> Vec<Complex64> {
        self.lattice
            .modes()
            .iter()
            .zip(&self.coeffs)
            .map(|(k, c)| c[comp] * I * (2.0 * PI * k[dir] as f64))
            .collect()
    }

    pub fn component(&self, comp: usize) -> Vec<Complex64> {
        self.coeffs.iter().map(|c| c[comp]).collect()
    }

    /// `(Σ_k (4π²|k|²)^s |c_k|²)^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.sobolev_norm2(s).sqrt()
    }

    pub fn sobolev_norm2(&self, s: f64) -> f64 {
        if s == 0.0 {
            return self.coeffs.iter().map(cnorm2).sum();
        }
        self.coeffs
            .iter()
            .enumerate()
            .map(|(i, c)| (4.0 * PI * PI * self.lattice.norm2(i)).powf(s) * cnorm2(c))
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    /// `⟨f, g⟩ = ∫ f · conj(g)` on the unit torus.
    pub fn inner(&self, other: &SpectralField) -> Complex64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| cdot_conj(a, b))
            .sum()
    }

    /// Pointwise complex conjugate: `c'(k) = conj(c(-k))`.
    pub fn conj(&self) -> SpectralField {
        let coeffs = (0..self.coeffs.len())
            .map(|i| cconj(&self.coeffs[self.lattice.neg(i)]))
            .collect();
        Self::with_flags(self.lattice.clone(), coeffs, self.real, self.solenoidal)
    }

    pub fn scaled(&self, s: f64) -> SpectralField {
        let coeffs = self.coeffs.iter().map(|c| c.map(|z| z * s)).collect();
        Self::with_flags(self.lattice.clone(), coeffs, self.real, self.solenoidal)
    }

    /// `self + s·other`; flags are the conjunction.
    pub fn axpy(&self, s: f64, other: &SpectralField) -> SpectralField {
        debug_assert!(self.same_lattice(other));
        let coeffs = self
            .coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| [a[0] + b[0] * s, a[1] + b[1] * s, a[2] + b[2] * s])
            .collect();
        Self::with_flags(
            self.lattice.clone(),
            coeffs,
            self.real && other.real,
            self.solenoidal && other.solenoidal,
        )
    }

    pub fn add(&self, other: &SpectralField) -> SpectralField {
        self.axpy(1.0, other)
    }

    pub fn sub(&self, other: &SpectralField) -> SpectralField {
        self.axpy(-1.0, other)
    }

    /// Keeps modes with `|k| ≤ radius`; output lives on the target lattice.
    pub fn restrict_to(&self, target: &Arc<Lattice>) -> SpectralField {
        let coeffs = target
            .modes()
            .iter()
            .map(|&k| self.coeff(k).unwrap_or(CZERO3))
            .collect();
        Self::with_flags(target.clone(), coeffs, self.real, self.solenoidal)
    }

    /// Zeroes every mode with `|k| > radius`, keeping the lattice.
    pub fn truncate(&self, radius: u32) -> SpectralField {
        let r2 = f64::from(radius) * f64::from(radius);
        let coeffs = self
            .map_modes(|i, c| if self.lattice.norm2(i) <= r2 { *c } else { CZERO3 });
        Self::with_flags(self.lattice.clone(), coeffs, self.real, self.solenoidal)
    }

    /// Largest `|k|` carrying a nonzero coefficient.
    pub fn support_radius(&self) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, c)| cnorm2(c) > 0.0)
            .map(|(i, _)| self.lattice.norm2(i).sqrt())
            .fold(0.0, f64::max)
    }

    /// Largest per-mode difference `|c_k - d_k|`.
    pub fn max_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| {
                ((a[0] - b[0]).norm_sqr() + (a[1] - b[1]).norm_sqr() + (a[2] - b[2]).norm_sqr()).sqrt()
            })
            .fold(0.0, f64::max)
    }
}

/// Random real solenoidal field with independent Gaussian coefficients of
/// standard deviation `|k|^{-decay}` on `Z³₊`, mirrored to `Z³₋`.
pub fn random_solenoidal<R: Rng + ?Sized>(lattice: Arc<Lattice>, rng: &mut R, decay: f64) -> SpectralField {
    let mut coeffs = vec![CZERO3; lattice.len()];
    for i in lattice.positive_half().collect::<Vec<_>>() {
        let amp = lattice.norm2(i).sqrt().powf(-decay);
        let [a1, a2] = *lattice.frame(i);
        let p = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
        let q = Complex64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal));
        let c: CVec3 = std::array::from_fn(|d| (p * a1[d] + q * a2[d]) * amp);
        coeffs[i] = c;
        coeffs[lattice.neg(i)] = cconj(&c);
    }
    SpectralField::with_flags(lattice, coeffs, true, true)
}

/// The vorticity pair `Φ = (ξ, η)` of the fluid and the magnetic field.
#[derive(Clone, Debug)]
pub struct State {
    pub xi: SpectralField,
    pub eta: SpectralField,
}

impl State {
    pub fn new(xi: SpectralField, eta: SpectralField) -> Result<Self> {
        xi.check_same_lattice(&eta)?;
        if !(xi.is_real() && eta.is_real()) {
            return Err(contract("state components must be real fields"));
        }
        if !(xi.is_solenoidal() && eta.is_solenoidal()) {
            return Err(contract("state components must be solenoidal"));
        }
        Ok(Self { xi, eta })
    }

    pub(crate) fn new_unchecked(xi: SpectralField, eta: SpectralField) -> Self {
        Self { xi, eta }
    }

    pub fn zeros(lattice: Arc<Lattice>) -> Self {
        Self {
            xi: SpectralField::zeros(lattice.clone()),
            eta: SpectralField::zeros(lattice),
        }
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        self.xi.lattice()
    }

    /// Norm of the stacked pair: `(‖ξ‖²_{H^s} + ‖η‖²_{H^s})^{1/2}`.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        (self.xi.sobolev_norm2(s) + self.eta.sobolev_norm2(s)).sqrt()
    }

    pub fn l2_norm(&self) -> f64 {
        self.sobolev_norm(0.0)
    }

    pub fn inner(&self, other: &State) -> f64 {
        (self.xi.inner(&other.xi) + self.eta.inner(&other.eta)).re
    }

    pub fn axpy(&self, s: f64, other: &State) -> State {
        State::new_unchecked(self.xi.axpy(s, &other.xi), self.eta.axpy(s, &other.eta))
    }

    pub fn sub(&self, other: &State) -> State {
        self.axpy(-1.0, other)
    }

    pub fn scaled(&self, s: f64) -> State {
        State::new_unchecked(self.xi.scaled(s), self.eta.scaled(s))
    }

    pub fn leray_project(&self) -> State {
        State::new_unchecked(self.xi.leray_project(), self.eta.leray_project())
    }

    pub fn is_finite(&self) -> bool {
        [&self.xi, &self.eta]
            .iter()
            .all(|f| f.coeffs().iter().all(|c| c.iter().all(|z| z.re.is_finite() && z.im.is_finite())))
    }

    pub fn max_diff(&self, other: &State) -> f64 {
        self.xi.max_diff(&other.xi).max(self.eta.max_diff(&other.eta))
    }

    /// Rescales so that `‖Φ‖_{L²} = target`; the zero state is returned as is.
    pub fn normalized_to(&self, target: f64) -> State {
        let n = self.l2_norm();
        if n == 0.0 {
            self.clone()
        } else {
            self.scaled(target / n)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn lat(m: u32) -> Arc<Lattice> {
        Arc::new(Lattice::new(m).unwrap())
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode(l: &Arc<Lattice>, k: Wavevector, v: CVec3) -> SpectralField {
        let mut f = SpectralField::zeros(l.clone());
        let i = l.index_of(k).unwrap();
        let j = l.neg(i);
        let cm = f.coeffs_mut();
        cm[i] = v;
        cm[j] = cconj(&v);
        f.refresh_flags();
        f
    }

    #[test]
    fn projection_subtracts_component_along_k() {
        let l = lat(2);
        let f = single_mode(&l, [1, 0, 0], [c(1.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert!(!f.is_solenoidal());
        let p = f.leray_project().coeff([1, 0, 0]).unwrap();
        let q = f.leray_perp().coeff([1, 0, 0]).unwrap();
        assert_abs_diff_eq!(p[0].norm(), 0.0);
        assert_abs_diff_eq!(p[1].re, 1.0);
        assert_abs_diff_eq!(q[0].re, 1.0);
        assert_abs_diff_eq!(q[1].norm(), 0.0);
    }

    #[test]
    fn gradient_fields_are_annihilated() {
        let l = lat(3);
        let f = SpectralField::from_fn(l.clone(), |k| {
            let s = c(0.3 * k[0] as f64, -0.1 * k[1] as f64 + 0.2);
            [s * k[0] as f64, s * k[1] as f64, s * k[2] as f64]
        });
        assert!(f.leray_project().max_abs() < 1e-14);
        assert!(f.leray_perp().max_diff(&f) < 1e-14);
    }

    #[test]
    fn biot_savart_single_mode() {
        let l = lat(2);
        let cval = 0.7;
        let w = single_mode(&l, [1, 0, 0], [c(0.0, 0.0), c(0.0, 0.0), c(cval, 0.0)]);
        let u = w.biot_savart().unwrap();
        let uk = u.coeff([1, 0, 0]).unwrap();
        // k × (0,0,c) = (0,-c,0) for k = e1; u = i(0,-c,0)/(2π)
        assert_abs_diff_eq!(uk[0].norm(), 0.0);
        assert_abs_diff_eq!(uk[1].im, -cval / (2.0 * PI), epsilon = 1e-15);
        assert_abs_diff_eq!(uk[1].re, 0.0);
        assert!(u.curl().max_diff(&w) < 1e-15);
        assert!(SpectralField::zeros(l).biot_savart().unwrap().max_abs() == 0.0);
    }

    #[test]
    fn biot_savart_rejects_divergent_input() {
        let l = lat(2);
        let f = single_mode(&l, [1, 0, 0], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(matches!(
            f.biot_savart(),
            Err(crate::error::Error::ContractViolation(_))
        ));
    }

    #[test]
    fn sobolev_weights() {
        let l = lat(2);
        let amp = c(0.6, -0.8);
        let f = single_mode(&l, [1, 0, 0], [c(0.0, 0.0), amp, c(0.0, 0.0)]);
        assert_abs_diff_eq!(f.l2_norm(), 2f64.sqrt() * amp.norm(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            f.sobolev_norm2(1.0),
            4.0 * PI * PI * 2.0 * amp.norm_sqr(),
            epsilon = 1e-12
        );
    }

    #[test]
    fn state_requires_flags() {
        let l = lat(2);
        let good = single_mode(&l, [1, 0, 0], [c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        let bad = single_mode(&l, [1, 0, 0], [c(1.0, 0.0), c(0.0, 0.0), c(0.0, 0.0)]);
        assert!(State::new(good.clone(), good.clone()).is_ok());
        assert!(State::new(good.clone(), bad).is_err());
        let other = SpectralField::zeros(lat(3));
        assert!(State::new(good, other).is_err());
    }
}
