//! Quadratic MHD operators evaluated pseudo-spectrally, and the cutoff `f_R`.
//!
//! Products are formed on a grid large enough that no product of two
//! radius-`M` fields aliases back into a radius-`M` mode (`n ≥ 3M+1`),
//! so every coefficient returned on the input lattice is exact.

use std::sync::Arc;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{contract, invalid, Result};
use crate::field::{SpectralField, State};
use crate::lattice::Lattice;
use crate::transform::{product_grid_size, GridTransform};

/// Reynolds number, magnetic Reynolds number and coupling constant.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PhysicsParams {
    pub reynolds: f64,
    pub magnetic_reynolds: f64,
    pub coupling: f64,
}

impl Default for PhysicsParams {
    fn default() -> Self {
        Self {
            reynolds: 1.0,
            magnetic_reynolds: 1.0,
            coupling: 1.0,
        }
    }
}

impl PhysicsParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("reynolds", self.reynolds),
            ("magnetic_reynolds", self.magnetic_reynolds),
            ("coupling", self.coupling),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(invalid(format!("{name} must be a positive finite number, got {v}")));
            }
        }
        Ok(())
    }
}

/// C¹ cutoff: 1 on `[0, R]`, `1 - 3s² + 2s³` with `s = r - R` on `(R, R+1)`, 0 beyond.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CutoffFn {
    radius: f64,
}

impl CutoffFn {
    pub fn new(radius: f64) -> Result<Self> {
        if !(radius >= 0.0) || !radius.is_finite() {
            return Err(invalid(format!("cutoff radius must be finite and >= 0, got {radius}")));
        }
        Ok(Self { radius })
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn eval(&self, r: f64) -> f64 {
        let s = r - self.radius;
        if s <= 0.0 {
            1.0
        } else if s >= 1.0 {
            0.0
        } else {
            1.0 - 3.0 * s * s + 2.0 * s * s * s
        }
    }

    pub fn derivative(&self, r: f64) -> f64 {
        let s = r - self.radius;
        if s <= 0.0 || s >= 1.0 {
            0.0
        } else {
            -6.0 * s + 6.0 * s * s
        }
    }
}

pub fn check_delta(delta: f64) -> Result<()> {
    if delta > 0.0 && delta < 0.5 {
        Ok(())
    } else {
        Err(invalid(format!("delta must satisfy δ ∈ (0,1/2), got {delta}")))
    }
}

/// `f_R(‖Φ‖_{H^{-δ}})`.
pub fn cutoff_value(f: &CutoffFn, phi: &State, delta: f64) -> Result<f64> {
    check_delta(delta)?;
    Ok(f.eval(phi.sobolev_norm(-delta)))
}

fn product_transform(lattice: &Lattice) -> Result<Arc<GridTransform>> {
    let m = lattice.radius();
    GridTransform::shared(product_grid_size(m, m, m))
}

fn require_real(fields: &[&SpectralField]) -> Result<()> {
    if fields.iter().all(|f| f.is_real()) {
        Ok(())
    } else {
        Err(invalid("pseudo-spectral products need real fields"))
    }
}

type Grid3 = [Vec<f64>; 3];
type Grad = [[Vec<f64>; 3]; 3];

fn to_array3(v: Vec<Vec<f64>>) -> Grid3 {
    let mut it = v.into_iter();
    std::array::from_fn(|_| it.next().expect("three channels"))
}

fn values(t: &GridTransform, f: &SpectralField) -> Result<Grid3> {
    let ch: Vec<Vec<Complex64>> = (0..3).map(|c| f.component(c)).collect();
    Ok(to_array3(t.synthesize_real(f.lattice(), &ch)?))
}

/// `grad[i][j] = ∂_j f_i` on the grid.
fn gradient(t: &GridTransform, f: &SpectralField) -> Result<Grad> {
    let mut ch = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            ch.push(f.partial(i, j));
        }
    }
    let mut it = t.synthesize_real(f.lattice(), &ch)?.into_iter();
    Ok(std::array::from_fn(|_| std::array::from_fn(|_| it.next().unwrap())))
}

fn back(t: &GridTransform, g: Grid3, lattice: &Arc<Lattice>) -> Result<SpectralField> {
    let ch = t.analyze_real(&g, lattice)?;
    let coeffs = (0..lattice.len()).map(|i| [ch[0][i], ch[1][i], ch[2][i]]).collect();
    let mut f = SpectralField::with_flags(lattice.clone(), coeffs, true, false);
    f.refresh_flags();
    Ok(f)
}

/// `(A·∇)B` from grid values of `A` and the gradient of `B`.
fn advect(a: &Grid3, grad_b: &Grad, out: &mut Grid3, sign: f64) {
    let len = a[0].len();
    for i in 0..3 {
        for p in 0..len {
            out[i][p] += sign
                * (a[0][p] * grad_b[i][0][p] + a[1][p] * grad_b[i][1][p] + a[2][p] * grad_b[i][2][p]);
        }
    }
}

fn zeros3(len: usize) -> Grid3 {
    std::array::from_fn(|_| vec![0.0; len])
}

/// Lie derivative `L_X Y = X·∇Y - Y·∇X`.
pub fn lie_derivative(x: &SpectralField, y: &SpectralField) -> Result<SpectralField> {
    x.check_same_lattice(y)?;
    require_real(&[x, y])?;
    let t = product_transform(x.lattice())?;
    let (xv, yv) = (values(&t, x)?, values(&t, y)?);
    let (gx, gy) = (gradient(&t, x)?, gradient(&t, y)?);
    let mut out = zeros3(xv[0].len());
    advect(&xv, &gy, &mut out, 1.0);
    advect(&yv, &gx, &mut out, -1.0);
    back(&t, out, x.lattice())
}

/// Adjoint `L*_X Y = X·∇Y + (∇X)* Y` with `((∇X)* Y)_i = Y·∂_i X`, valid for solenoidal `X`.
pub fn lie_adjoint(x: &SpectralField, y: &SpectralField) -> Result<SpectralField> {
    x.check_same_lattice(y)?;
    require_real(&[x, y])?;
    if !x.is_solenoidal() {
        return Err(contract("lie_adjoint needs a solenoidal X"));
    }
    let t = product_transform(x.lattice())?;
    let (xv, yv) = (values(&t, x)?, values(&t, y)?);
    let (gx, gy) = (gradient(&t, x)?, gradient(&t, y)?);
    let mut out = zeros3(xv[0].len());
    advect(&xv, &gy, &mut out, 1.0);
    for i in 0..3 {
        for p in 0..out[i].len() {
            out[i][p] += yv[0][p] * gx[0][i][p] + yv[1][p] * gx[1][i][p] + yv[2][p] * gx[2][i][p];
        }
    }
    back(&t, out, x.lattice())
}

/// The stretching term `T(B, u)`, component `i` being `∂_j B · ∂_k u - ∂_k B · ∂_j u`
/// for the cyclic triple `(i, j, k)`.
pub fn stretching_t(b: &SpectralField, u: &SpectralField) -> Result<SpectralField> {
    b.check_same_lattice(u)?;
    require_real(&[b, u])?;
    let t = product_transform(b.lattice())?;
    let (gb, gu) = (gradient(&t, b)?, gradient(&t, u)?);
    Ok(back(&t, stretching_grid(&gb, &gu), b.lattice())?)
}

fn stretching_grid(gb: &Grad, gu: &Grad) -> Grid3 {
    let len = gb[0][0].len();
    let mut out = zeros3(len);
    // ∂_j B · ∂_k u = Σ_m ∂_j B_m ∂_k u_m
    let pd = |j: usize, k: usize, p: usize| -> f64 {
        (0..3).map(|m| gb[m][j][p] * gu[m][k][p]).sum()
    };
    for i in 0..3 {
        let (j, k) = ((i + 1) % 3, (i + 2) % 3);
        for p in 0..len {
            out[i][p] = pd(j, k, p) - pd(k, j, p);
        }
    }
    out
}

/// `b(Φ,Φ) = (L_u ξ - S L_B η, L_u η - L_B ξ - 2T(B,u))`, assembled from the
/// individual operators and Leray-projected.
pub fn nonlinearity_b(phi: &State, params: &PhysicsParams) -> Result<State> {
    let u = phi.xi.biot_savart()?;
    let b = phi.eta.biot_savart()?;
    let b1 = lie_derivative(&u, &phi.xi)?.axpy(-params.coupling, &lie_derivative(&b, &phi.eta)?);
    let b2 = lie_derivative(&u, &phi.eta)?
        .sub(&lie_derivative(&b, &phi.xi)?)
        .axpy(-2.0, &stretching_t(&b, &u)?);
    Ok(State::new_unchecked(b1.leray_project(), b2.leray_project()))
}

/// Fast evaluator of `b(Φ,Φ)` used by the time steppers.
///
/// For solenoidal fields `L_u ξ = ∇×(ξ×u)` and the magnetic equation's
/// quadratic part equals `-∇×∇×(u×B)`, so only the four fields themselves
/// are sampled on the grid (twelve channels instead of forty-eight).
#[derive(Debug, Clone)]
pub struct Nonlinearity {
    transform: Arc<GridTransform>,
    params: PhysicsParams,
}

impl Nonlinearity {
    pub fn new(lattice: &Lattice, params: PhysicsParams) -> Result<Self> {
        params.validate()?;
        Ok(Self {
            transform: product_transform(lattice)?,
            params,
        })
    }

    pub fn apply(&self, phi: &State) -> Result<State> {
        let lattice = phi.lattice();
        let u = phi.xi.biot_savart()?;
        let b = phi.eta.biot_savart()?;
        let mut ch = Vec::with_capacity(12);
        for f in [&phi.xi, &phi.eta, &u, &b] {
            for c in 0..3 {
                ch.push(f.component(c));
            }
        }
        let g = self.transform.synthesize_real(lattice, &ch)?;
        let len = g[0].len();
        let s = self.params.coupling;
        let mut prods: Vec<Vec<f64>> = (0..6).map(|_| vec![0.0; len]).collect();
        for p in 0..len {
            let xi = [g[0][p], g[1][p], g[2][p]];
            let eta = [g[3][p], g[4][p], g[5][p]];
            let uu = [g[6][p], g[7][p], g[8][p]];
            let bb = [g[9][p], g[10][p], g[11][p]];
            for i in 0..3 {
                let (j, k) = ((i + 1) % 3, (i + 2) % 3);
                prods[i][p] = xi[j] * uu[k] - xi[k] * uu[j] - s * (eta[j] * bb[k] - eta[k] * bb[j]);
                prods[3 + i][p] = uu[j] * bb[k] - uu[k] * bb[j];
            }
        }
        let spec = self.transform.analyze_real(&prods, lattice)?;
        let make = |off: usize| {
            let coeffs = (0..lattice.len())
                .map(|i| [spec[off][i], spec[off + 1][i], spec[off + 2][i]])
                .collect();
            SpectralField::with_flags(lattice.clone(), coeffs, true, false)
        };
        let b1 = make(0).curl();
        let b2 = make(3).curl().curl().scaled(-1.0);
        Ok(State::new_unchecked(b1.leray_project(), b2.leray_project()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn cutoff_shape() {
        let f = CutoffFn::new(2.0).unwrap();
        assert_eq!(f.eval(1.0), 1.0);
        assert_eq!(f.eval(2.0), 1.0);
        assert_eq!(f.eval(4.0), 0.0);
        assert_abs_diff_eq!(f.eval(2.5), 0.5, epsilon = 1e-15);
        let mut prev = 1.0;
        for i in 0..=400 {
            let r = i as f64 * 0.01;
            let v = f.eval(r);
            assert!(v <= prev + 1e-15 && (0.0..=1.0).contains(&v));
            prev = v;
        }
        // C¹ at both joints
        assert_abs_diff_eq!(f.derivative(2.0 + 1e-12), 0.0, epsilon = 1e-10);
        assert_abs_diff_eq!(f.derivative(3.0 - 1e-12), 0.0, epsilon = 1e-10);
        assert!(CutoffFn::new(-1.0).is_err());
    }

    #[test]
    fn delta_range() {
        assert!(check_delta(0.25).is_ok());
        assert!(check_delta(0.0).is_err());
        assert!(check_delta(0.5).is_err());
        assert!(check_delta(0.7).is_err());
    }

    #[test]
    fn params_must_be_positive() {
        assert!(PhysicsParams::default().validate().is_ok());
        let p = PhysicsParams {
            reynolds: 0.0,
            ..Default::default()
        };
        assert!(p.validate().is_err());
    }

    use crate::field::random_solenoidal;
    use crate::vec3::{cross, rdot, to_f64, CVec3, CZERO3};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn lat(m: u32) -> Arc<Lattice> {
        Arc::new(Lattice::new(m).unwrap())
    }

    fn rand_field(l: &Arc<Lattice>, seed: u64) -> SpectralField {
        random_solenoidal(l.clone(), &mut ChaCha8Rng::seed_from_u64(seed), 1.0)
    }

    /// Direct convolution over mode pairs `p + q = m` of a bilinear per-mode kernel.
    fn convolve(
        x: &SpectralField,
        y: &SpectralField,
        kernel: impl Fn(Vec3f, &CVec3, Vec3f, &CVec3) -> CVec3,
    ) -> SpectralField {
        let l = x.lattice();
        let mut out = vec![CZERO3; l.len()];
        for (i, p) in l.modes().iter().enumerate() {
            for (j, q) in l.modes().iter().enumerate() {
                let m = [p[0] + q[0], p[1] + q[1], p[2] + q[2]];
                if let Some(o) = l.index_of(m) {
                    let c = kernel(to_f64(p), &x.coeffs()[i], to_f64(q), &y.coeffs()[j]);
                    for d in 0..3 {
                        out[o][d] += c[d];
                    }
                }
            }
        }
        SpectralField::from_coeffs(l.clone(), out).unwrap()
    }

    type Vec3f = [f64; 3];
    const TWO_PI_I: num_complex::Complex64 = num_complex::Complex64::new(0.0, 2.0 * PI);

    fn lie_oracle(x: &SpectralField, y: &SpectralField) -> SpectralField {
        // X_p e_p · ∇ (Y_q e_q) - Y_q e_q · ∇ (X_p e_p)
        convolve(x, y, |p, xp, q, yq| {
            let a = rdot(&q, xp) * TWO_PI_I;
            let b = rdot(&p, yq) * TWO_PI_I;
            std::array::from_fn(|d| a * yq[d] - b * xp[d])
        })
    }

    fn max_rel(a: &SpectralField, b: &SpectralField) -> f64 {
        a.max_diff(b) / b.max_abs().max(1e-300)
    }

    #[test]
    fn lie_derivative_matches_convolution() {
        let l = lat(3);
        let (x, y) = (rand_field(&l, 1), rand_field(&l, 2));
        let got = lie_derivative(&x, &y).unwrap();
        assert!(max_rel(&got, &lie_oracle(&x, &y)) < 1e-12);
        assert!(got.is_real());
    }

    #[test]
    fn stretching_matches_convolution() {
        let l = lat(3);
        let (b, u) = (rand_field(&l, 3), rand_field(&l, 4));
        let got = stretching_t(&b, &u).unwrap();
        let oracle = convolve(&b, &u, |p, bp, q, uq| {
            let s = bp[0] * uq[0] + bp[1] * uq[1] + bp[2] * uq[2];
            cross(&p, &q).map(|c| s * (-4.0 * PI * PI * c))
        });
        assert!(max_rel(&got, &oracle) < 1e-12);
    }

    #[test]
    fn lie_derivative_antisymmetric() {
        let l = lat(3);
        let (x, y) = (rand_field(&l, 5), rand_field(&l, 6));
        let a = lie_derivative(&x, &y).unwrap();
        let b = lie_derivative(&y, &x).unwrap();
        assert!(a.add(&b).max_abs() < 1e-12 * a.max_abs());
    }

    #[test]
    fn adjoint_duality() {
        let l = lat(3);
        let (x, y, z) = (rand_field(&l, 7), rand_field(&l, 8), rand_field(&l, 9));
        let lhs = lie_derivative(&x, &y).unwrap().inner(&z);
        let rhs = y.inner(&lie_adjoint(&x, &z).unwrap());
        assert!((lhs + rhs).norm() < 1e-11 * lhs.norm().max(1.0), "{lhs} {rhs}");
    }

    #[test]
    fn advection_is_skew() {
        let l = lat(3);
        let (x, v) = (rand_field(&l, 10), rand_field(&l, 11));
        let t = product_transform(&l).unwrap();
        let (xv, gv) = (values(&t, &x).unwrap(), gradient(&t, &v).unwrap());
        let mut out = zeros3(xv[0].len());
        advect(&xv, &gv, &mut out, 1.0);
        let adv = back(&t, out, &l).unwrap();
        let s = adv.inner(&v);
        assert!(s.norm() < 1e-11 * adv.l2_norm() * v.l2_norm());
    }

    #[test]
    fn curl_route_matches_literal_route() {
        let l = lat(4);
        let params = PhysicsParams {
            reynolds: 10.0,
            magnetic_reynolds: 5.0,
            coupling: 0.7,
        };
        let phi = State::new(rand_field(&l, 12), rand_field(&l, 13)).unwrap();
        let slow = nonlinearity_b(&phi, &params).unwrap();
        let fast = Nonlinearity::new(&l, params).unwrap().apply(&phi).unwrap();
        let scale = slow.xi.max_abs().max(slow.eta.max_abs());
        assert!(fast.max_diff(&slow) < 1e-12 * scale, "{}", fast.max_diff(&slow) / scale);
        assert!(fast.xi.is_real() && fast.eta.is_real());
    }

    #[test]
    fn adjoint_rejects_divergent_x() {
        let l = lat(2);
        let mut x = SpectralField::from_fn(l.clone(), |k| {
            if k == [1, 0, 0] || k == [-1, 0, 0] {
                [num_complex::Complex64::new(1.0, 0.0), CZERO3[1], CZERO3[2]]
            } else {
                CZERO3
            }
        });
        x.refresh_flags();
        let y = rand_field(&l, 1);
        assert!(matches!(lie_adjoint(&x, &y), Err(crate::Error::ContractViolation(_))));
        assert!(lie_derivative(&y, &rand_field(&lat(3), 2)).is_err());
    }
}
