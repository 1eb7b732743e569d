//! Collocation grid transforms.
//!
//! The grid carries `M = 2(2K + 1)` points per axis, so that the pointwise
//! product of two fields of cutoff `K` is resolved without aliasing.

use std::collections::HashMap;
use std::f64::consts::TAU;
use std::sync::{Arc, Mutex, OnceLock};

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{mode_count, SpectralField};

type Plans = (Arc<dyn Fft<f64>>, Arc<dyn Fft<f64>>);

fn plans(n: usize) -> Plans {
    static CACHE: OnceLock<Mutex<HashMap<usize, Plans>>> = OnceLock::new();
    let cache = CACHE.get_or_init(|| Mutex::new(HashMap::new()));
    let mut guard = cache.lock().expect("fft plan cache poisoned");
    guard
        .entry(n)
        .or_insert_with(|| {
            let mut planner = FftPlanner::new();
            (planner.plan_fft_forward(n), planner.plan_fft_inverse(n))
        })
        .clone()
}

/// Points per axis of the collocation grid for cutoff `K`.
#[inline]
pub fn grid_size(cutoff: usize) -> usize {
    2 * (2 * cutoff + 1)
}

/// Geometry of the collocation grid.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Grid {
    pub dim: usize,
    pub cutoff: usize,
    pub n: usize,
}

impl Grid {
    pub fn new(dim: usize, cutoff: usize) -> Self {
        Self { dim, cutoff, n: grid_size(cutoff) }
    }

    pub fn points(&self) -> usize {
        self.n.pow(self.dim as u32)
    }

    pub fn spacing(&self) -> f64 {
        TAU / self.n as f64
    }

    /// Coordinates of flat grid point `idx` (row-major, last axis fastest).
    pub fn coords(&self, mut idx: usize) -> [f64; 3] {
        let h = self.spacing();
        let mut x = [0.0; 3];
        for axis in (0..self.dim).rev() {
            x[axis] = (idx % self.n) as f64 * h;
            idx /= self.n;
        }
        x
    }
}

/// Coordinates of every grid point, flattened with stride `d`.
pub fn grid_coords(dim: usize, cutoff: usize) -> Vec<f64> {
    let g = Grid::new(dim, cutoff);
    let mut out = Vec::with_capacity(g.points() * dim);
    for i in 0..g.points() {
        out.extend_from_slice(&g.coords(i)[..dim]);
    }
    out
}

fn fft_all_axes(buf: &mut [Complex64], dim: usize, n: usize, fft: &Arc<dyn Fft<f64>>) {
    let total = buf.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); fft.get_inplace_scratch_len()];
    fft.process_with_scratch(buf, &mut scratch);
    if dim == 1 {
        return;
    }
    let mut line = vec![Complex64::new(0.0, 0.0); n];
    for axis in 0..dim - 1 {
        let stride = n.pow((dim - 1 - axis) as u32);
        let block = stride * n;
        for base in (0..total).step_by(block) {
            for off in 0..stride {
                let start = base + off;
                for (t, v) in line.iter_mut().enumerate() {
                    *v = buf[start + t * stride];
                }
                fft.process_with_scratch(&mut line, &mut scratch);
                for (t, v) in line.iter().enumerate() {
                    buf[start + t * stride] = *v;
                }
            }
        }
    }
}

#[inline]
fn grid_index_of_mode(k: &[i64; 3], dim: usize, n: usize) -> usize {
    let mut idx = 0usize;
    for &ka in k.iter().take(dim) {
        idx = idx * n + ka.rem_euclid(n as i64) as usize;
    }
    idx
}

/// Values of every component on the collocation grid, component-major.
pub fn to_grid(f: &SpectralField) -> Vec<f64> {
    let g = Grid::new(f.dim(), f.cutoff());
    let np = g.points();
    let (_, inv) = plans(g.n);
    let modes = f.modes();
    let targets: Vec<usize> =
        (0..modes).map(|i| grid_index_of_mode(&f.mode(i), g.dim, g.n)).collect();
    let mut out = Vec::with_capacity(np * f.components());
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    for c in 0..f.components() {
        buf.iter_mut().for_each(|v| *v = Complex64::new(0.0, 0.0));
        for (i, &t) in targets.iter().enumerate() {
            buf[t] = f.block(c)[i];
        }
        fft_all_axes(&mut buf, g.dim, g.n, &inv);
        out.extend(buf.iter().map(|v| v.re));
    }
    out
}

/// Projects grid values (component-major) back onto the cutoff cube.
///
/// The result is symmetrized so that it is exactly real.
pub fn from_grid(dim: usize, cutoff: usize, components: usize, values: &[f64]) -> SpectralField {
    let g = Grid::new(dim, cutoff);
    let np = g.points();
    assert_eq!(values.len(), np * components, "grid value count mismatch");
    let (fwd, _) = plans(g.n);
    let modes = mode_count(dim, cutoff);
    let mut out = SpectralField::zeros(dim, cutoff, components);
    let sources: Vec<usize> =
        (0..modes).map(|i| grid_index_of_mode(&out.mode(i), dim, g.n)).collect();
    let scale = 1.0 / np as f64;
    let mut buf = vec![Complex64::new(0.0, 0.0); np];
    for c in 0..components {
        for (b, &v) in buf.iter_mut().zip(&values[c * np..(c + 1) * np]) {
            *b = Complex64::new(v, 0.0);
        }
        fft_all_axes(&mut buf, dim, g.n, &fwd);
        let blk = out.block_mut(c);
        for (i, &s) in sources.iter().enumerate() {
            blk[i] = buf[s] * scale;
        }
    }
    out.symmetrize();
    out
}

/// Scalar shorthand for [`from_grid`].
pub fn from_grid_scalar(dim: usize, cutoff: usize, values: &[f64]) -> SpectralField {
    from_grid(dim, cutoff, 1, values)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_values_match_cosines() {
        let mut f = SpectralField::zeros(2, 3, 1);
        f.add_cos(0, &[1, 2], 0.5);
        f.add_sin(0, &[-3, 1], 0.25);
        f.add_cos(0, &[0, 0], 2.0);
        let vals = to_grid(&f);
        let g = Grid::new(2, 3);
        for (i, v) in vals.iter().enumerate() {
            let x = g.coords(i);
            let exact = 2.0 + 0.5 * (x[0] + 2.0 * x[1]).cos() + 0.25 * (-3.0 * x[0] + x[1]).sin();
            assert!((v - exact).abs() < 1e-13);
        }
    }

    #[test]
    fn round_trip_three_dims() {
        let mut f = SpectralField::zeros(3, 2, 2);
        f.add_cos(0, &[1, -2, 2], 0.3);
        f.add_sin(1, &[2, 2, -1], -0.7);
        f.add_cos(1, &[0, 0, 0], 0.1);
        let back = from_grid(3, 2, 2, &to_grid(&f));
        assert!(back.max_coeff_diff(&f) < 1e-14);
    }
}
