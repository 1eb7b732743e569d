//! Comparison of the `H⁻¹` distance of two densities with their `W₂` distance.
//!
//! For densities of mean one the potentials of `-Δψᵢ = ρᵢ - 1` satisfy
//! `‖∇ψ₁ - ∇ψ₂‖ ≤ max(‖ρ₁‖∞, ‖ρ₂‖∞)^{1/2} W₂(ρ₁, ρ₂)`. The left side is exact
//! by Parseval; `W₂` is estimated by exact transport between samples.

use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vmlimit_core::spectral::{norm_sq, solve_poisson, to_grid, PointEvaluator};
use vmlimit_core::SpectralField;

use crate::{w2_exact_with, EmpiricalMeasure, ExactOptions, TransportError};

pub const DEFAULT_LOEPER_SLACK: f64 = 0.1;

const MEAN_TOL: f64 = 1e-10;

#[derive(Clone, Debug, PartialEq)]
pub struct LoeperResult {
    /// `‖∇ψ₁ - ∇ψ₂‖_{L²}`.
    pub lhs: f64,
    /// `max sup ρᵢ^{1/2} · W₂` with the sampled `W₂`.
    pub rhs: f64,
    pub w2: f64,
    pub sup_rho: f64,
    pub pass: bool,
}

/// Supremum of a scalar field on a grid twice as fine as its own.
fn sup_on_fine_grid(rho: &SpectralField) -> f64 {
    to_grid(&rho.resized(2 * rho.cutoff())).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// `n` positions drawn from the probability density `ρ` by rejection.
pub fn sample_density(rho: &SpectralField, n: usize, seed: u64) -> Result<Vec<f64>, TransportError> {
    if rho.components() != 1 {
        return Err(TransportError::InvalidDensity("density must be scalar".into()));
    }
    let grid = to_grid(&rho.resized(2 * rho.cutoff()));
    let min = grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(min > 0.0) {
        return Err(TransportError::InvalidDensity(format!("minimum {min} is not positive")));
    }
    let bound = 1.05 * grid.iter().cloned().fold(0.0, f64::max);
    let d = rho.dim();
    let eval = PointEvaluator::new(&[rho]);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(n * d);
    let mut x = vec![0.0; d];
    let mut val = [0.0];
    while out.len() < n * d {
        for xa in x.iter_mut() {
            *xa = rng.random::<f64>() * TAU;
        }
        eval.eval(&x, &mut val);
        if rng.random::<f64>() * bound < val[0] {
            out.extend_from_slice(&x);
        }
    }
    Ok(out)
}

fn validate(rho: &SpectralField) -> Result<(), TransportError> {
    if rho.components() != 1 {
        return Err(TransportError::InvalidDensity("density must be scalar".into()));
    }
    let m = rho.mean()[0];
    if (m - 1.0).abs() > MEAN_TOL {
        return Err(TransportError::InvalidDensity(format!("mean {m} differs from 1")));
    }
    Ok(())
}

pub fn loeper_check(
    rho1: &SpectralField,
    rho2: &SpectralField,
    n_samples: usize,
    seed: u64,
) -> Result<LoeperResult, TransportError> {
    loeper_check_with(rho1, rho2, n_samples, seed, DEFAULT_LOEPER_SLACK)
}

/// Checks the inequality with relative slack `slack` on the right-hand side.
pub fn loeper_check_with(
    rho1: &SpectralField,
    rho2: &SpectralField,
    n_samples: usize,
    seed: u64,
    slack: f64,
) -> Result<LoeperResult, TransportError> {
    validate(rho1)?;
    validate(rho2)?;
    if !rho1.same_shape(rho2) {
        return Err(TransportError::InvalidDensity("densities have different shapes".into()));
    }
    let psi = solve_poisson(rho1)?.sub(&solve_poisson(rho2)?);
    let lhs = psi
        .coeffs()
        .iter()
        .enumerate()
        .map(|(i, c)| norm_sq(&psi.mode(i)) * c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let x1 = sample_density(rho1, n_samples, seed)?;
    let x2 = sample_density(rho2, n_samples, seed ^ 0x9e37_79b9_7f4a_7c15)?;
    let d = rho1.dim();
    let mu = EmpiricalMeasure::positions_only(d, x1)?;
    let nu = EmpiricalMeasure::positions_only(d, x2)?;
    let opts = ExactOptions { n_exact: n_samples.max(ExactOptions::default().n_exact), ..Default::default() };
    let w2 = w2_exact_with(&mu, &nu, &opts)?;
    let sup_rho = sup_on_fine_grid(rho1).max(sup_on_fine_grid(rho2));
    let rhs = sup_rho.sqrt() * w2;
    Ok(LoeperResult { lhs, rhs, w2, sup_rho, pass: lhs <= rhs * (1.0 + slack) })
}
