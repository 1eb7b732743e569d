//! Band-limited Fourier fields on the torus `[0, 2π)^d`.
//!
//! A field is stored as its coefficients `ĉ_k` over the cube `‖k‖∞ ≤ K`, with the
//! convention `f(x) = Σ_k ĉ_k e^{i k·x}` and the normalized measure
//! `∫ dx / (2π)^d`. Vector fields keep one coefficient block per component.
//! All public operations preserve the reality condition `ĉ_{-k} = conj ĉ_k`.

mod eval;
mod grid;
mod io;
mod norm;
mod ops;

use num_complex::Complex64;
use thiserror::Error;

pub use eval::{evaluate_at, evaluate_at_direct, PointEvaluator};
pub use grid::{from_grid, from_grid_scalar, grid_coords, grid_size, to_grid, Grid};
pub use io::{read_field, write_field, write_grid_csv};
pub use norm::{
    analytic_norm, analytic_norm_with, default_delta_grid, gradient_analytic_norm, shrinking_norm,
    weighted_l1, ModeNorm, ShrinkingNormParams,
};
pub use ops::{
    biot_savart, compose_analytic, curl, derivative, divergence, dot, gradient, helmholtz_decompose,
    leray_project, multiply, solve_poisson, solve_poisson_with_tol, DEFAULT_NEUTRALITY_TOL,
    DEFAULT_TAYLOR_TERMS,
};

/// Errors raised by spectral operations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum SpectralError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("analytic radius must exceed 1, got {0}")]
    InvalidRadius(f64),
    #[error("invalid norm parameters: {0}")]
    InvalidParams(String),
    #[error("neutrality violated: mean density {mean} differs from 1 by more than {tol}")]
    NeutralityViolation { mean: f64, tol: f64 },
    #[error("field is not divergence free: residual {0}")]
    NotDivergenceFree(f64),
    #[error("composition needs a real-analytic function with known Taylor coefficients")]
    NonAnalytic,
    #[error("malformed field data: {0}")]
    Format(String),
}

/// Band-limited field with `components` coefficient blocks over `‖k‖∞ ≤ cutoff`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectralField {
    dim: usize,
    cutoff: usize,
    components: usize,
    coeffs: Vec<Complex64>,
}

/// Number of modes per axis, `2K + 1`.
#[inline]
pub fn side(cutoff: usize) -> usize {
    2 * cutoff + 1
}

/// Number of modes in the cube `‖k‖∞ ≤ K` in dimension `d`.
#[inline]
pub fn mode_count(dim: usize, cutoff: usize) -> usize {
    side(cutoff).pow(dim as u32)
}

/// Wavevector of a flat mode index, padded with zeros to three entries.
#[inline]
pub fn mode_of(dim: usize, cutoff: usize, mut idx: usize) -> [i64; 3] {
    let s = side(cutoff);
    let mut k = [0i64; 3];
    for axis in (0..dim).rev() {
        k[axis] = (idx % s) as i64 - cutoff as i64;
        idx /= s;
    }
    k
}

/// Flat index of a wavevector, or `None` when it lies outside the cube.
#[inline]
pub fn index_of(dim: usize, cutoff: usize, k: &[i64]) -> Option<usize> {
    let s = side(cutoff);
    let kk = cutoff as i64;
    let mut idx = 0usize;
    for &ka in k.iter().take(dim) {
        if ka.abs() > kk {
            return None;
        }
        idx = idx * s + (ka + kk) as usize;
    }
    Some(idx)
}

/// `|k|²` of a padded wavevector.
#[inline]
pub fn norm_sq(k: &[i64; 3]) -> f64 {
    (k[0] * k[0] + k[1] * k[1] + k[2] * k[2]) as f64
}

impl SpectralField {
    /// Zero field with `components` blocks.
    pub fn zeros(dim: usize, cutoff: usize, components: usize) -> Self {
        assert!((1..=3).contains(&dim), "dimension must be 1, 2 or 3");
        Self {
            dim,
            cutoff,
            components,
            coeffs: vec![Complex64::new(0.0, 0.0); components * mode_count(dim, cutoff)],
        }
    }

    /// Spatially constant field.
    pub fn constant(dim: usize, cutoff: usize, values: &[f64]) -> Self {
        let mut f = Self::zeros(dim, cutoff, values.len());
        let zero = f.zero_index();
        for (c, &v) in values.iter().enumerate() {
            f.block_mut(c)[zero] = Complex64::new(v, 0.0);
        }
        f
    }

    /// Builds a field from raw coefficients laid out component-major.
    pub fn from_coeffs(
        dim: usize,
        cutoff: usize,
        components: usize,
        coeffs: Vec<Complex64>,
    ) -> Result<Self, SpectralError> {
        if !(1..=3).contains(&dim) {
            return Err(SpectralError::DimensionMismatch(format!("dimension {dim}")));
        }
        if coeffs.len() != components * mode_count(dim, cutoff) {
            return Err(SpectralError::DimensionMismatch(format!(
                "expected {} coefficients, got {}",
                components * mode_count(dim, cutoff),
                coeffs.len()
            )));
        }
        Ok(Self { dim, cutoff, components, coeffs })
    }

    /// Stacks scalar fields into a vector field.
    pub fn from_components(parts: &[SpectralField]) -> Result<Self, SpectralError> {
        let first = parts
            .first()
            .ok_or_else(|| SpectralError::DimensionMismatch("no components".into()))?;
        let mut out = Self::zeros(first.dim, first.cutoff, 0);
        for p in parts {
            if p.dim != first.dim || p.cutoff != first.cutoff {
                return Err(SpectralError::DimensionMismatch("inconsistent components".into()));
            }
            out.coeffs.extend_from_slice(&p.coeffs);
            out.components += p.components;
        }
        Ok(out)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    pub fn components(&self) -> usize {
        self.components
    }

    pub fn modes(&self) -> usize {
        mode_count(self.dim, self.cutoff)
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    /// Index of the zero mode inside one block.
    pub fn zero_index(&self) -> usize {
        (self.modes() - 1) / 2
    }

    pub fn block(&self, c: usize) -> &[Complex64] {
        let m = self.modes();
        &self.coeffs[c * m..(c + 1) * m]
    }

    pub fn block_mut(&mut self, c: usize) -> &mut [Complex64] {
        let m = self.modes();
        &mut self.coeffs[c * m..(c + 1) * m]
    }

    /// Scalar field holding component `c`.
    pub fn component(&self, c: usize) -> SpectralField {
        SpectralField {
            dim: self.dim,
            cutoff: self.cutoff,
            components: 1,
            coeffs: self.block(c).to_vec(),
        }
    }

    pub fn mode(&self, idx: usize) -> [i64; 3] {
        mode_of(self.dim, self.cutoff, idx)
    }

    pub fn coeff(&self, c: usize, k: &[i64]) -> Complex64 {
        match index_of(self.dim, self.cutoff, k) {
            Some(i) => self.block(c)[i],
            None => Complex64::new(0.0, 0.0),
        }
    }

    /// Adds `amp · cos(k·x)` to component `c`.
    pub fn add_cos(&mut self, c: usize, k: &[i64], amp: f64) {
        self.add_pair(c, k, Complex64::new(amp / 2.0, 0.0));
    }

    /// Adds `amp · sin(k·x)` to component `c`.
    pub fn add_sin(&mut self, c: usize, k: &[i64], amp: f64) {
        self.add_pair(c, k, Complex64::new(0.0, -amp / 2.0));
    }

    /// Adds `z e^{ik·x} + conj(z) e^{-ik·x}`; at `k = 0` only `2 Re z` is added.
    pub fn add_pair(&mut self, c: usize, k: &[i64], z: Complex64) {
        let dim = self.dim;
        let cutoff = self.cutoff;
        let i = index_of(dim, cutoff, k).expect("mode outside the cutoff cube");
        let m = self.modes();
        let j = m - 1 - i;
        let b = self.block_mut(c);
        if i == j {
            b[i] += Complex64::new(2.0 * z.re, 0.0);
        } else {
            b[i] += z;
            b[j] += z.conj();
        }
    }

    pub fn same_shape(&self, other: &Self) -> bool {
        self.dim == other.dim && self.cutoff == other.cutoff && self.components == other.components
    }

    fn check_shape(&self, other: &Self) {
        assert!(
            self.same_shape(other),
            "shape mismatch: (d={}, K={}, m={}) vs (d={}, K={}, m={})",
            self.dim,
            self.cutoff,
            self.components,
            other.dim,
            other.cutoff,
            other.components
        );
    }

    /// `self += a · other`.
    pub fn axpy(&mut self, a: f64, other: &Self) {
        self.check_shape(other);
        for (x, y) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *x += y * a;
        }
    }

    /// Returns `self + a · other`.
    pub fn plus_scaled(&self, a: f64, other: &Self) -> Self {
        let mut out = self.clone();
        out.axpy(a, other);
        out
    }

    pub fn scaled(&self, a: f64) -> Self {
        let mut out = self.clone();
        out.scale(a);
        out
    }

    pub fn scale(&mut self, a: f64) {
        for x in &mut self.coeffs {
            *x *= a;
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        self.plus_scaled(1.0, other)
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.plus_scaled(-1.0, other)
    }

    /// Spatial mean of every component; the imaginary parts are round-off.
    pub fn mean(&self) -> Vec<f64> {
        let z = self.zero_index();
        (0..self.components).map(|c| self.block(c)[z].re).collect()
    }

    /// Squared `L²` norm over the normalized measure, summed over components.
    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Largest coefficient modulus.
    pub fn max_abs_coeff(&self) -> f64 {
        self.coeffs.iter().fold(0.0, |m, c| m.max(c.norm()))
    }

    /// Maximal violation of `ĉ_{-k} = conj ĉ_k`.
    pub fn reality_defect(&self) -> f64 {
        let m = self.modes();
        let mut worst = 0.0f64;
        for c in 0..self.components {
            let b = self.block(c);
            for i in 0..m {
                worst = worst.max((b[i] - b[m - 1 - i].conj()).norm());
            }
        }
        worst
    }

    /// Enforces the reality condition by averaging each coefficient with its mirror.
    pub fn symmetrize(&mut self) {
        let m = self.modes();
        for c in 0..self.components {
            let b = self.block_mut(c);
            for i in 0..m.div_ceil(2) {
                let j = m - 1 - i;
                let avg = (b[i] + b[j].conj()) * 0.5;
                b[i] = avg;
                b[j] = avg.conj();
            }
        }
    }

    /// Copies the field into a cube of a different cutoff, truncating or zero padding.
    pub fn resized(&self, cutoff: usize) -> Self {
        let mut out = Self::zeros(self.dim, cutoff, self.components);
        let kmin = self.cutoff.min(cutoff);
        for idx in 0..self.modes() {
            let k = self.mode(idx);
            if k.iter().all(|&x| x.unsigned_abs() as usize <= kmin) {
                let j = index_of(self.dim, cutoff, &k).expect("inside target cube");
                for c in 0..self.components {
                    out.block_mut(c)[j] = self.block(c)[idx];
                }
            }
        }
        out
    }

    /// Largest difference of coefficients, used for exact-identity checks.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.check_shape(other);
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .fold(0.0, |m, (a, b)| m.max((a - b).norm()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn index_round_trip() {
        for dim in 1..=3 {
            let k = 3;
            for idx in 0..mode_count(dim, k) {
                let m = mode_of(dim, k, idx);
                assert_eq!(index_of(dim, k, &m[..dim]), Some(idx));
            }
        }
    }

    #[test]
    fn mirror_index_is_negated_mode() {
        let (dim, k) = (2, 4);
        let n = mode_count(dim, k);
        for idx in 0..n {
            let a = mode_of(dim, k, idx);
            let b = mode_of(dim, k, n - 1 - idx);
            assert_eq!([a[0], a[1]], [-b[0], -b[1]]);
        }
    }

    #[test]
    fn cos_and_sin_are_real() {
        let mut f = SpectralField::zeros(2, 3, 1);
        f.add_cos(0, &[1, -2], 0.7);
        f.add_sin(0, &[0, 3], -0.3);
        f.add_cos(0, &[0, 0], 1.5);
        assert_eq!(f.reality_defect(), 0.0);
        assert!((f.mean()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn resize_keeps_common_modes() {
        let mut f = SpectralField::zeros(2, 2, 1);
        f.add_cos(0, &[2, 1], 1.0);
        let g = f.resized(5).resized(2);
        assert_eq!(f, g);
        assert_eq!(f.resized(1).l2_norm_sq(), 0.0);
    }
}
