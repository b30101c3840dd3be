//! The Stratonovich–Itô corrector `S_θ` and its scaling limit `(3/5)νΔ`.
//!
//! `S_θ` acts diagonally in Fourier space. For `v = c e_l`,
//!
//! ```text
//! S_θ v = -4π² (C_ν²/‖θ‖²) Σ_k θ_k² (|l|² - (k·l)²/|k|²) P_l P_{l-k} P_l c e_l
//! ```
//!
//! where `P_m` is the projection onto `m⊥`. The intermediate mode `l - k` is
//! never truncated, so the result is exact for every `l` on the lattice.

use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{contract, invalid, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;
use crate::noise::{noise_intensity, ThetaSequence};
use crate::vec3::{mat_apply, to_f64, Mat3, Vec3};

fn projector(m: &Vec3) -> Mat3 {
    let n2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
    std::array::from_fn(|i| {
        std::array::from_fn(|j| f64::from(u8::from(i == j)) - m[i] * m[j] / n2)
    })
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    std::array::from_fn(|i| std::array::from_fn(|j| (0..3).map(|t| a[i][t] * b[t][j]).sum()))
}

/// Per-mode matrices of `S_θ` on a fixed lattice.
#[derive(Clone, Debug)]
pub struct Corrector {
    lattice: Arc<Lattice>,
    nu: f64,
    matrices: Vec<Mat3>,
}

impl Corrector {
    pub fn new(theta: &ThetaSequence, nu: f64, lattice: &Arc<Lattice>) -> Result<Self> {
        if !(nu >= 0.0) || !nu.is_finite() {
            return Err(invalid(format!("nu must be finite and >= 0, got {nu}")));
        }
        let tl = theta.lattice();
        let shell: Vec<(Vec3, f64, f64)> = theta
            .support()
            .iter()
            .map(|&i| (to_f64(&tl.mode(i)), theta.weight(i).powi(2), tl.norm2(i)))
            .collect();
        let c = -4.0 * PI * PI * noise_intensity(nu).powi(2) / theta.l2_norm().powi(2);
        let plus: Vec<usize> = lattice.positive_half().collect();
        let computed: Vec<Mat3> = plus
            .par_iter()
            .map(|&i| {
                let l = to_f64(&lattice.mode(i));
                let l2 = lattice.norm2(i);
                let mut acc = [[0.0; 3]; 3];
                for (k, w2, k2) in &shell {
                    let kl = k[0] * l[0] + k[1] * l[1] + k[2] * l[2];
                    let weight = w2 * (l2 - kl * kl / k2);
                    let m = [l[0] - k[0], l[1] - k[1], l[2] - k[2]];
                    if weight == 0.0 || m == [0.0; 3] {
                        continue;
                    }
                    let mn2 = m[0] * m[0] + m[1] * m[1] + m[2] * m[2];
                    for a in 0..3 {
                        for b in 0..3 {
                            let delta = if a == b { 1.0 } else { 0.0 };
                            acc[a][b] += weight * (delta - m[a] * m[b] / mn2);
                        }
                    }
                }
                let p = projector(&l);
                let s = matmul(&p, &matmul(&acc, &p));
                s.map(|row| row.map(|x| x * c))
            })
            .collect();
        let mut matrices = vec![[[0.0; 3]; 3]; lattice.len()];
        for (&i, m) in plus.iter().zip(computed) {
            matrices[i] = m;
            matrices[lattice.neg(i)] = m;
        }
        Ok(Self {
            lattice: lattice.clone(),
            nu,
            matrices,
        })
    }

    pub fn nu(&self) -> f64 {
        self.nu
    }

    pub fn lattice(&self) -> &Arc<Lattice> {
        &self.lattice
    }

    /// The symmetric matrix `S_l` at lattice index `i`.
    pub fn matrix(&self, i: usize) -> &Mat3 {
        &self.matrices[i]
    }

    /// `S_l` restricted to `l⊥` in the lattice frame: `F^T S_l F` with `F = [a₁ a₂]`.
    pub fn frame_block(&self, i: usize) -> [[f64; 2]; 2] {
        let [a1, a2] = self.lattice.frame(i);
        let m = &self.matrices[i];
        let q = |x: &Vec3, y: &Vec3| -> f64 {
            (0..3).map(|r| (0..3).map(|s| x[r] * m[r][s] * y[s]).sum::<f64>()).sum()
        };
        [[q(a1, a1), q(a1, a2)], [q(a2, a1), q(a2, a2)]]
    }

    pub fn apply(&self, v: &SpectralField) -> Result<SpectralField> {
        if v.lattice().radius() != self.lattice.radius() {
            return Err(invalid("field lattice differs from the corrector lattice"));
        }
        if !v.is_solenoidal() {
            return Err(contract("the corrector acts on solenoidal fields"));
        }
        let coeffs = v
            .coeffs()
            .iter()
            .zip(&self.matrices)
            .map(|(c, m)| mat_apply(m, c))
            .collect();
        SpectralField::from_coeffs(v.lattice().clone(), coeffs)
    }
}

pub fn corrector_s_theta(theta: &ThetaSequence, nu: f64, v: &SpectralField) -> Result<SpectralField> {
    Corrector::new(theta, nu, v.lattice())?.apply(v)
}

/// `(3/5)νΔv`.
pub fn corrector_limit(nu: f64, v: &SpectralField) -> SpectralField {
    v.laplacian(0.6 * nu)
}

/// `S⊥_θ v = νΔv - S_θ v`.
pub fn corrector_perp(theta: &ThetaSequence, nu: f64, v: &SpectralField) -> Result<SpectralField> {
    Ok(v.laplacian(nu).sub(&corrector_s_theta(theta, nu, v)?))
}

/// `(1/2)∫₀^π sin⁵ψ dψ` by composite Simpson quadrature.
pub fn angular_integral_check() -> f64 {
    0.5 * simpson(|x| x.sin().powi(5), 0.0, PI, 2000)
}

pub(crate) fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let inner: f64 = (1..n)
        .map(|i| {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            w * f(a + i as f64 * h)
        })
        .sum();
    (f(a) + f(b) + inner) * h / 3.0
}

/// `(1/‖θ‖²) Σ_k θ_k² sin⁴∠(k, l)`.
pub fn shell_sin4_average(theta: &ThetaSequence, l: Vec3) -> f64 {
    let ln = (l[0] * l[0] + l[1] * l[1] + l[2] * l[2]).sqrt();
    let tl = theta.lattice();
    let sum: f64 = theta
        .support()
        .iter()
        .map(|&i| {
            let k = to_f64(&tl.mode(i));
            let cos = (k[0] * l[0] + k[1] * l[1] + k[2] * l[2]) / (ln * tl.norm2(i).sqrt());
            let sin2 = 1.0 - cos * cos;
            theta.weight(i).powi(2) * sin2 * sin2
        })
        .sum();
    sum / theta.l2_norm().powi(2)
}

/// The complex single-mode field `σ_{l,1} + σ_{l,2} = (a_{l,1} + a_{l,2}) e_l`.
pub fn frame_sum_field(lattice: &Arc<Lattice>, l: [i32; 3]) -> Result<SpectralField> {
    let i = lattice
        .index_of(l)
        .ok_or_else(|| invalid(format!("mode {l:?} is not on the lattice")))?;
    let [a1, a2] = lattice.frame(i);
    let mut coeffs = vec![[Complex64::new(0.0, 0.0); 3]; lattice.len()];
    coeffs[i] = std::array::from_fn(|d| Complex64::new(a1[d] + a2[d], 0.0));
    SpectralField::from_coeffs(lattice.clone(), coeffs)
}

/// `⟨A v, v̄⟩ / ⟨Δv, v̄⟩` with the bilinear pairing `⟨f, ḡ⟩ = ∫ f·ḡ`.
pub fn rayleigh_quotient(av: &SpectralField, v: &SpectralField) -> f64 {
    let num = av.inner(v);
    let den = v.laplacian(1.0).inner(v);
    (num / den).re
}

/// `‖S_θ v - (3/5)νΔv‖ / ‖Δv‖`.
pub fn limit_error(s_v: &SpectralField, nu: f64, v: &SpectralField) -> f64 {
    let lim = corrector_limit(nu, v);
    s_v.sub(&lim).l2_norm() / v.laplacian(1.0).l2_norm()
}
