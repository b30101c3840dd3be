//! Fourier ↔ grid transforms on uniform `n³` grids.
//!
//! Grid point `j` sits at `x = j/n`. Synthesis evaluates `Σ_k c_k e^{2πi k·x}`
//! exactly; analysis returns `(1/n³) Σ_j f_j e^{-2πi k·j/n}`, which equals
//! the Fourier coefficient whenever the grid resolves the field. Real fields
//! are packed two per complex transform, and passes skip grid lines that the
//! lattice support cannot reach.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{invalid, Result};
use crate::field::SpectralField;
use crate::lattice::Lattice;
use crate::vec3::CVec3;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// A real vector field sampled on an `n³` grid, one buffer per component.
#[derive(Clone, Debug)]
pub struct GridVector {
    pub n: usize,
    pub comps: [Vec<f64>; 3],
}

impl GridVector {
    pub fn point(&self, j: [usize; 3]) -> [f64; 3] {
        let idx = (j[0] * self.n + j[1]) * self.n + j[2];
        [self.comps[0][idx], self.comps[1][idx], self.comps[2][idx]]
    }
}

pub struct GridTransform {
    n: usize,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for GridTransform {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("GridTransform").field("n", &self.n).finish()
    }
}

/// Smallest `2^a 3^b 5^c` not below `min`.
pub fn smooth_size(min: usize) -> usize {
    let mut n = min.max(2);
    loop {
        let mut m = n;
        for p in [2, 3, 5] {
            while m % p == 0 {
                m /= p;
            }
        }
        if m == 1 {
            return n;
        }
        n += 1;
    }
}

/// Grid size that evaluates the product of fields of radii `a` and `b`
/// without aliasing into output modes of radius `out`.
pub fn product_grid_size(a: u32, b: u32, out: u32) -> usize {
    let need = (a + b + out + 1) as usize;
    let resolve = (2 * a.max(b).max(out) + 1) as usize;
    smooth_size(need.max(resolve))
}

impl GridTransform {
    pub fn new(n: usize) -> Result<Self> {
        if n < 2 {
            return Err(invalid(format!("grid size must be >= 2, got {n}")));
        }
        let mut planner = FftPlanner::new();
        Ok(Self {
            n,
            fwd: planner.plan_fft_forward(n),
            inv: planner.plan_fft_inverse(n),
        })
    }

    /// Process-wide cache of transforms keyed by grid size.
    pub fn shared(n: usize) -> Result<Arc<GridTransform>> {
        static CACHE: OnceLock<Mutex<HashMap<usize, Arc<GridTransform>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
        let mut map = cache.lock().expect("transform cache poisoned");
        if let Some(t) = map.get(&n) {
            return Ok(t.clone());
        }
        let t = Arc::new(GridTransform::new(n)?);
        map.insert(n, t.clone());
        Ok(t)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    fn len(&self) -> usize {
        self.n * self.n * self.n
    }

    pub fn check_lattice(&self, lattice: &Lattice) -> Result<()> {
        let need = 2 * lattice.radius() as usize + 1;
        if self.n < need {
            Err(invalid(format!(
                "grid of size {} cannot resolve a lattice of radius {} (need n >= {need})",
                self.n,
                lattice.radius()
            )))
        } else {
            Ok(())
        }
    }

    fn wrap(&self, k: i32) -> usize {
        k.rem_euclid(self.n as i32) as usize
    }

    fn grid_index(&self, k: [i32; 3]) -> usize {
        (self.wrap(k[0]) * self.n + self.wrap(k[1])) * self.n + self.wrap(k[2])
    }

    fn active(&self, radius: u32) -> Vec<usize> {
        let r = radius as usize;
        let mut v: Vec<usize> = (0..=r).collect();
        v.extend((self.n - r)..self.n);
        v
    }

    /// One batch of 1D transforms along `axis` over the lines whose other two
    /// indices are drawn from `outer` × `inner`.
    fn pass(
        &self,
        data: &mut [Complex64],
        axis: usize,
        outer: &[usize],
        inner: &[usize],
        fft: &Arc<dyn Fft<f64>>,
    ) {
        let n = self.n;
        let strides = [n * n, n, 1];
        let stride = strides[axis];
        let (so, si) = match axis {
            0 => (strides[1], strides[2]),
            1 => (strides[0], strides[2]),
            _ => (strides[0], strides[1]),
        };
        let mut scratch = vec![ZERO; fft.get_inplace_scratch_len()];
        if axis == 2 {
            for &o in outer {
                for &i in inner {
                    let base = o * so + i * si;
                    fft.process_with_scratch(&mut data[base..base + n], &mut scratch);
                }
            }
            return;
        }
        let lines = outer.len() * inner.len();
        let mut buf = vec![ZERO; lines * n];
        let mut line = 0;
        for &o in outer {
            for &i in inner {
                let base = o * so + i * si;
                let dst = &mut buf[line * n..(line + 1) * n];
                for (t, d) in dst.iter_mut().enumerate() {
                    *d = data[base + t * stride];
                }
                line += 1;
            }
        }
        fft.process_with_scratch(&mut buf, &mut scratch);
        line = 0;
        for &o in outer {
            for &i in inner {
                let base = o * so + i * si;
                let src = &buf[line * n..(line + 1) * n];
                for (t, s) in src.iter().enumerate() {
                    data[base + t * stride] = *s;
                }
                line += 1;
            }
        }
    }

    /// Inverse transform of data supported on `|k_i| ≤ radius`.
    fn inverse_pruned(&self, data: &mut [Complex64], radius: u32) {
        let all: Vec<usize> = (0..self.n).collect();
        let act = self.active(radius);
        self.pass(data, 2, &act, &act, &self.inv);
        self.pass(data, 1, &act, &all, &self.inv);
        self.pass(data, 0, &all, &all, &self.inv);
    }

    /// Forward transform, exact only on output modes with `|k_i| ≤ radius`.
    fn forward_pruned(&self, data: &mut [Complex64], radius: u32) {
        let all: Vec<usize> = (0..self.n).collect();
        let act = self.active(radius);
        self.pass(data, 0, &all, &all, &self.fwd);
        self.pass(data, 1, &act, &all, &self.fwd);
        self.pass(data, 2, &act, &act, &self.fwd);
    }

    /// Evaluates real scalar fields given by lattice-ordered coefficients.
    pub fn synthesize_real(&self, lattice: &Lattice, channels: &[Vec<Complex64>]) -> Result<Vec<Vec<f64>>> {
        self.check_lattice(lattice)?;
        let mut out = Vec::with_capacity(channels.len());
        for pair in channels.chunks(2) {
            let mut z = vec![ZERO; self.len()];
            for (i, k) in lattice.modes().iter().enumerate() {
                let g = self.grid_index(*k);
                z[g] += pair[0][i];
                if let Some(second) = pair.get(1) {
                    z[g] += Complex64::new(-second[i].im, second[i].re);
                }
            }
            self.inverse_pruned(&mut z, lattice.radius());
            out.push(z.iter().map(|c| c.re).collect());
            if pair.len() == 2 {
                out.push(z.iter().map(|c| c.im).collect());
            }
        }
        Ok(out)
    }

    /// Fourier coefficients of real grid functions at the lattice modes.
    pub fn analyze_real(&self, grids: &[Vec<f64>], lattice: &Lattice) -> Result<Vec<Vec<Complex64>>> {
        self.check_lattice(lattice)?;
        let norm = 1.0 / self.len() as f64;
        let mut out = Vec::with_capacity(grids.len());
        for pair in grids.chunks(2) {
            let mut z: Vec<Complex64> = match pair {
                [a, b] => a.iter().zip(b).map(|(&x, &y)| Complex64::new(x, y)).collect(),
                [a] => a.iter().map(|&x| Complex64::new(x, 0.0)).collect(),
                _ => unreachable!(),
            };
            self.forward_pruned(&mut z, lattice.radius());
            let mut first = Vec::with_capacity(lattice.len());
            let mut second = Vec::with_capacity(lattice.len());
            for (i, k) in lattice.modes().iter().enumerate() {
                let zk = z[self.grid_index(*k)];
                let zm = z[self.grid_index(lattice.mode(lattice.neg(i)))].conj();
                if pair.len() == 2 {
                    first.push((zk + zm) * (0.5 * norm));
                    let d = (zk - zm) * (0.5 * norm);
                    second.push(Complex64::new(d.im, -d.re));
                } else {
                    first.push(zk * norm);
                }
            }
            out.push(first);
            if pair.len() == 2 {
                out.push(second);
            }
        }
        Ok(out)
    }

    pub fn to_grid(&self, v: &SpectralField) -> Result<GridVector> {
        if !v.is_real() {
            return Err(invalid("to_grid needs a real field; use to_grid_complex"));
        }
        let channels: Vec<Vec<Complex64>> = (0..3).map(|c| v.component(c)).collect();
        let mut g = self.synthesize_real(v.lattice(), &channels)?.into_iter();
        Ok(GridVector {
            n: self.n,
            comps: [g.next().unwrap(), g.next().unwrap(), g.next().unwrap()],
        })
    }

    pub fn to_grid_complex(&self, v: &SpectralField) -> Result<[Vec<Complex64>; 3]> {
        self.check_lattice(v.lattice())?;
        let mut comps: [Vec<Complex64>; 3] = std::array::from_fn(|_| vec![ZERO; self.len()]);
        for (c, z) in comps.iter_mut().enumerate() {
            for (i, k) in v.lattice().modes().iter().enumerate() {
                z[self.grid_index(*k)] = v.coeffs()[i][c];
            }
            self.inverse_pruned(z, v.lattice().radius());
        }
        Ok(comps)
    }

    pub fn to_spectrum(&self, g: &GridVector, lattice: &Arc<Lattice>) -> Result<SpectralField> {
        if g.n != self.n {
            return Err(invalid(format!("grid of size {} given to a size-{} transform", g.n, self.n)));
        }
        let chans = self.analyze_real(&g.comps, lattice)?;
        let coeffs = (0..lattice.len())
            .map(|i| [chans[0][i], chans[1][i], chans[2][i]])
            .collect();
        let mut f = SpectralField::with_flags(lattice.clone(), coeffs, true, false);
        f.refresh_flags();
        Ok(f)
    }

    pub fn to_spectrum_complex(&self, comps: &[Vec<Complex64>; 3], lattice: &Arc<Lattice>) -> Result<SpectralField> {
        self.check_lattice(lattice)?;
        let norm = 1.0 / self.len() as f64;
        let mut spec: Vec<CVec3> = vec![[ZERO; 3]; lattice.len()];
        for (c, z) in comps.iter().enumerate() {
            let mut z = z.clone();
            self.forward_pruned(&mut z, lattice.radius());
            for (i, k) in lattice.modes().iter().enumerate() {
                spec[i][c] = z[self.grid_index(*k)] * norm;
            }
        }
        SpectralField::from_coeffs(lattice.clone(), spec)
    }
}

/// Samples a real field on an `n³` grid.
pub fn transform_to_grid(v: &SpectralField, n: usize) -> Result<GridVector> {
    GridTransform::shared(n)?.to_grid(v)
}

/// Fourier coefficients of a real grid field at the lattice modes.
pub fn transform_to_spectrum(g: &GridVector, lattice: &Arc<Lattice>) -> Result<SpectralField> {
    GridTransform::shared(g.n)?.to_spectrum(g, lattice)
}
