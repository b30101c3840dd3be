//! Truncated wavevector lattices and the per-mode orthonormal frames.
//!
//! A [`Lattice`] of radius `M` holds every nonzero `k ∈ Z³` with `|k| ≤ M`,
//! ordered by `|k|²` and then lexicographically. Each mode carries a frame
//! `(a₁, a₂)` spanning `k⊥`; the frame is right-handed with respect to `k`
//! for the positive half `Z³₊` and copied to `-k` for the negative half.

use crate::error::{invalid, Result};
use crate::vec3::{cross, dot, norm, norm2_i, scale, to_f64, Vec3};

pub type Wavevector = [i32; 3];

/// Sign of a mode under the lexicographic partition `Z³₀ = Z³₊ ∪ Z³₋`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Half {
    Plus,
    Minus,
}

impl std::ops::Neg for Half {
    type Output = Half;
    fn neg(self) -> Half {
        match self {
            Half::Plus => Half::Minus,
            Half::Minus => Half::Plus,
        }
    }
}

/// Lexicographic half: the first nonzero component decides.
pub fn half_of(k: Wavevector) -> Option<Half> {
    k.iter().find(|&&c| c != 0).map(|&c| {
        if c > 0 {
            Half::Plus
        } else {
            Half::Minus
        }
    })
}

/// Orthonormal frame of `k⊥`.
///
/// For `k ∈ Z³₊`: `a₁ = k × ẑ / |k × ẑ|` unless `k ∥ ẑ`, in which case `a₁ = x̂`;
/// `a₂ = k̂ × a₁`. For `k ∈ Z³₋` the frame of `-k` is returned.
pub fn frame_vectors(k: Wavevector) -> Result<(Vec3, Vec3)> {
    let half = half_of(k).ok_or_else(|| invalid("frame of the zero wavevector"))?;
    let rep = match half {
        Half::Plus => k,
        Half::Minus => [-k[0], -k[1], -k[2]],
    };
    let kf = to_f64(&rep);
    let khat = scale(&kf, 1.0 / norm(&kf));
    let kz = cross(&kf, &[0.0, 0.0, 1.0]);
    let a1 = if rep[0] == 0 && rep[1] == 0 {
        [1.0, 0.0, 0.0]
    } else {
        scale(&kz, 1.0 / norm(&kz))
    };
    let a2 = cross(&khat, &a1);
    Ok((a1, a2))
}

#[derive(Debug)]
pub struct Lattice {
    radius: u32,
    modes: Vec<Wavevector>,
    frames: Vec<[Vec3; 2]>,
    negation: Vec<usize>,
    /// Dense `(2M+1)³` lookup; `u32::MAX` marks an absent mode.
    lookup: Vec<u32>,
}

impl Lattice {
    pub fn new(radius: u32) -> Result<Self> {
        if radius < 1 {
            return Err(invalid(format!("lattice radius must be >= 1, got {radius}")));
        }
        if radius > 256 {
            return Err(invalid(format!("lattice radius {radius} is unreasonably large")));
        }
        let m = radius as i32;
        let r2 = i64::from(m) * i64::from(m);
        let mut modes = Vec::new();
        for a in -m..=m {
            for b in -m..=m {
                for c in -m..=m {
                    let k = [a, b, c];
                    let n2 = norm2_i(&k);
                    if n2 > 0 && n2 <= r2 {
                        modes.push(k);
                    }
                }
            }
        }
        modes.sort_by_key(|k| (norm2_i(k), *k));

        let side = (2 * m + 1) as usize;
        let mut lookup = vec![u32::MAX; side * side * side];
        for (i, k) in modes.iter().enumerate() {
            lookup[cube_index(*k, m, side)] = i as u32;
        }
        let frames = modes
            .iter()
            .map(|&k| {
                let (a1, a2) = frame_vectors(k).expect("nonzero mode");
                [a1, a2]
            })
            .collect();
        let negation = modes
            .iter()
            .map(|k| lookup[cube_index([-k[0], -k[1], -k[2]], m, side)] as usize)
            .collect();
        Ok(Self {
            radius,
            modes,
            frames,
            negation,
            lookup,
        })
    }

    pub fn radius(&self) -> u32 {
        self.radius
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    pub fn modes(&self) -> &[Wavevector] {
        &self.modes
    }

    pub fn mode(&self, i: usize) -> Wavevector {
        self.modes[i]
    }

    pub fn frame(&self, i: usize) -> &[Vec3; 2] {
        &self.frames[i]
    }

    /// Index of `-k` for the mode at index `i`.
    pub fn neg(&self, i: usize) -> usize {
        self.negation[i]
    }

    pub fn half(&self, i: usize) -> Half {
        half_of(self.modes[i]).expect("nonzero mode")
    }

    pub fn index_of(&self, k: Wavevector) -> Option<usize> {
        let m = self.radius as i32;
        if k.iter().any(|c| c.abs() > m) {
            return None;
        }
        let side = (2 * m + 1) as usize;
        match self.lookup[cube_index(k, m, side)] {
            u32::MAX => None,
            i => Some(i as usize),
        }
    }

    pub fn norm2(&self, i: usize) -> f64 {
        norm2_i(&self.modes[i]) as f64
    }

    /// Indices of the modes lying in `Z³₊`.
    pub fn positive_half(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| self.half(i) == Half::Plus)
    }

    /// Projection of `x` onto `k⊥` via the frame: `Σ_α (a_α·x) a_α`.
    pub fn frame_project(&self, i: usize, x: &Vec3) -> Vec3 {
        let [a1, a2] = &self.frames[i];
        let (p, q) = (dot(a1, x), dot(a2, x));
        [
            p * a1[0] + q * a2[0],
            p * a1[1] + q * a2[1],
            p * a1[2] + q * a2[2],
        ]
    }
}

fn cube_index(k: Wavevector, m: i32, side: usize) -> usize {
    let [a, b, c] = k.map(|x| (x + m) as usize);
    (a * side + b) * side + c
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn det(a: &Vec3, b: &Vec3, c: &Vec3) -> f64 {
        dot(&cross(a, b), c)
    }

    #[test]
    fn radius_one_has_six_modes() {
        let lat = Lattice::new(1).unwrap();
        assert_eq!(lat.len(), 6);
        for k in lat.modes() {
            assert_eq!(norm2_i(k), 1);
        }
    }

    #[test]
    fn radius_two_shell_counts() {
        // brute-force count of integer triples per |k|^2
        let mut counts = [0usize; 5];
        for a in -2i64..=2 {
            for b in -2i64..=2 {
                for c in -2i64..=2 {
                    let n2 = (a * a + b * b + c * c) as usize;
                    if (1..=4).contains(&n2) {
                        counts[n2] += 1;
                    }
                }
            }
        }
        assert_eq!(&counts[1..], &[6, 12, 8, 6]);
        let lat = Lattice::new(2).unwrap();
        assert_eq!(lat.len(), 32);
        for n2 in 1..=4 {
            let got = lat.modes().iter().filter(|k| norm2_i(k) == n2 as i64).count();
            assert_eq!(got, counts[n2]);
        }
    }

    #[test]
    fn zero_radius_rejected() {
        assert!(Lattice::new(0).is_err());
        assert!(frame_vectors([0, 0, 0]).is_err());
    }

    #[test]
    fn frame_along_z() {
        let (a1, a2) = frame_vectors([0, 0, 1]).unwrap();
        assert_eq!(a1, [1.0, 0.0, 0.0]);
        assert_abs_diff_eq!(a2[1], 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(a2[0].abs() + a2[2].abs(), 0.0, epsilon = 1e-15);
        assert_eq!(frame_vectors([0, 0, -5]).unwrap(), frame_vectors([0, 0, 5]).unwrap());
    }

    #[test]
    fn frame_along_x() {
        let (a1, a2) = frame_vectors([1, 0, 0]).unwrap();
        let expect1 = [0.0, -1.0, 0.0];
        let expect2 = [0.0, 0.0, -1.0];
        for i in 0..3 {
            assert_abs_diff_eq!(a1[i], expect1[i], epsilon = 1e-15);
            assert_abs_diff_eq!(a2[i], expect2[i], epsilon = 1e-15);
        }
        let c = cross(&a1, &a2);
        assert_abs_diff_eq!(c[0], 1.0, epsilon = 1e-15);
    }

    #[test]
    fn frames_satisfy_invariants() {
        let lat = Lattice::new(4).unwrap();
        for i in 0..lat.len() {
            let k = to_f64(&lat.mode(i));
            let khat = scale(&k, 1.0 / norm(&k));
            let [a1, a2] = lat.frame(i);
            assert_abs_diff_eq!(dot(a1, &k), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(dot(a2, &k), 0.0, epsilon = 1e-13);
            assert_abs_diff_eq!(norm(a1), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(norm(a2), 1.0, epsilon = 1e-14);
            assert_abs_diff_eq!(dot(a1, a2), 0.0, epsilon = 1e-14);
            let j = lat.neg(i);
            assert_eq!(lat.frame(j), lat.frame(i));
            assert_eq!(lat.half(j), -lat.half(i));
            let orientation = det(a1, a2, &khat);
            match lat.half(i) {
                Half::Plus => assert_abs_diff_eq!(orientation, 1.0, epsilon = 1e-13),
                Half::Minus => assert_abs_diff_eq!(orientation, -1.0, epsilon = 1e-13),
            }
        }
    }

    #[test]
    fn lookup_round_trips() {
        let lat = Lattice::new(3).unwrap();
        for (i, &k) in lat.modes().iter().enumerate() {
            assert_eq!(lat.index_of(k), Some(i));
        }
        assert_eq!(lat.index_of([0, 0, 0]), None);
        assert_eq!(lat.index_of([3, 3, 0]), None);
        assert_eq!(lat.index_of([9, 0, 0]), None);
    }
}
