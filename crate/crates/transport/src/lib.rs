//! Quadratic Wasserstein distances on `Tᵈ × ℝᵈ`.
//!
//! Positions live on the torus `[0, 2π)ᵈ` with the per-axis geodesic distance,
//! momenta in flat space. Exact distances come from a dense assignment solver
//! for uniform clouds of equal size and from a min-cost-flow solver for
//! general weights; a sliced estimator covers large clouds.

mod flow;
mod loeper;
mod lsap;
mod sliced;
mod sparse;

use std::f64::consts::TAU;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;
use vmlimit_core::ParticleCloud;

pub use loeper::{loeper_check, loeper_check_with, sample_density, LoeperResult, DEFAULT_LOEPER_SLACK};
pub use lsap::solve as solve_assignment;
pub use sparse::solve as solve_assignment_sparse;
pub use sliced::w2_sliced;

#[derive(Debug, Error)]
pub enum TransportError {
    #[error("invalid measure: {0}")]
    InvalidMeasure(String),
    #[error("unsupported problem: {0}")]
    Unsupported(String),
    #[error("invalid density: {0}")]
    InvalidDensity(String),
    #[error(transparent)]
    Spectral(#[from] vmlimit_core::SpectralError),
}

/// Weighted point cloud on phase space. `xi` is empty for position-only measures.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalMeasure {
    dim: usize,
    x: Vec<f64>,
    xi: Vec<f64>,
    weights: Vec<f64>,
}

const WEIGHT_TOL: f64 = 1e-12;

impl EmpiricalMeasure {
    pub fn new(dim: usize, x: Vec<f64>, xi: Vec<f64>, weights: Vec<f64>) -> Result<Self, TransportError> {
        if !(1..=3).contains(&dim) {
            return Err(TransportError::InvalidMeasure(format!("dimension {dim}")));
        }
        let n = weights.len();
        if x.len() != n * dim || !(xi.is_empty() || xi.len() == n * dim) {
            return Err(TransportError::InvalidMeasure("coordinate arrays do not match weights".into()));
        }
        if weights.iter().any(|w| !(*w >= 0.0)) {
            return Err(TransportError::InvalidMeasure("negative weight".into()));
        }
        let total: f64 = weights.iter().sum();
        if n == 0 || (total - 1.0).abs() > WEIGHT_TOL * n as f64 {
            return Err(TransportError::InvalidMeasure(format!("weights sum to {total}")));
        }
        if x.iter().chain(&xi).any(|v| !v.is_finite()) {
            return Err(TransportError::InvalidMeasure("non-finite coordinate".into()));
        }
        let x = x.into_iter().map(|v| v.rem_euclid(TAU)).collect();
        Ok(Self { dim, x, xi, weights })
    }

    /// Uniform weights `1/N`.
    pub fn uniform(dim: usize, x: Vec<f64>, xi: Vec<f64>) -> Result<Self, TransportError> {
        let n = x.len() / dim.max(1);
        Self::new(dim, x, xi, vec![1.0 / n.max(1) as f64; n])
    }

    pub fn positions_only(dim: usize, x: Vec<f64>) -> Result<Self, TransportError> {
        Self::uniform(dim, x, Vec::new())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn has_velocity(&self) -> bool {
        !self.xi.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.x[i * self.dim..(i + 1) * self.dim]
    }

    pub fn velocity(&self, i: usize) -> &[f64] {
        if self.xi.is_empty() {
            &[]
        } else {
            &self.xi[i * self.dim..(i + 1) * self.dim]
        }
    }

    /// Whether all weights equal `1/N` to rounding.
    pub fn is_uniform(&self) -> bool {
        let w = 1.0 / self.len() as f64;
        self.weights.iter().all(|v| (v - w).abs() <= 1e-14)
    }

    /// Same points shifted by `dx` in position and `dxi` in momentum.
    pub fn translated(&self, dx: &[f64], dxi: &[f64]) -> Self {
        let d = self.dim;
        let x = self.x.iter().enumerate().map(|(i, v)| (v + dx[i % d]).rem_euclid(TAU)).collect();
        let xi = self.xi.iter().enumerate().map(|(i, v)| v + dxi[i % d]).collect();
        Self { dim: d, x, xi, weights: self.weights.clone() }
    }

    /// Uniform measure on the selected points.
    pub fn select(&self, idx: &[usize]) -> Self {
        let d = self.dim;
        let mut x = Vec::with_capacity(idx.len() * d);
        let mut xi = Vec::with_capacity(if self.xi.is_empty() { 0 } else { idx.len() * d });
        for &i in idx {
            x.extend_from_slice(self.position(i));
            xi.extend_from_slice(self.velocity(i));
        }
        let w = 1.0 / idx.len() as f64;
        Self { dim: d, x, xi, weights: vec![w; idx.len()] }
    }
}

/// Geodesic distance on the circle of length `2π`.
pub fn circle_dist(a: f64, b: f64) -> f64 {
    let r = (a - b).rem_euclid(TAU);
    r.min(TAU - r)
}

pub fn torus_dist_sq(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| circle_dist(*x, *y).powi(2)).sum()
}

/// Squared product-metric distance between point `i` of `mu` and point `j` of `nu`.
pub fn ground_cost(mu: &EmpiricalMeasure, i: usize, nu: &EmpiricalMeasure, j: usize) -> f64 {
    let p = torus_dist_sq(mu.position(i), nu.position(j));
    let v: f64 = mu.velocity(i).iter().zip(nu.velocity(j)).map(|(a, b)| (a - b) * (a - b)).sum();
    p + v
}

fn cost_matrix(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Vec<f64> {
    let m = nu.len();
    let mut c = vec![0.0; mu.len() * m];
    for i in 0..mu.len() {
        for j in 0..m {
            c[i * m + j] = ground_cost(mu, i, nu, j);
        }
    }
    c
}

/// Largest assignment handed to the dense solver.
const DENSE_LIMIT: usize = 64;
/// Initial candidate columns per row of the sparse solver.
const CANDIDATES: usize = 24;

/// Size limits of the exact solvers.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExactOptions {
    pub n_exact: usize,
    pub n_flow: usize,
}

impl Default for ExactOptions {
    fn default() -> Self {
        Self { n_exact: 2048, n_flow: 512 }
    }
}

fn check_pair(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<(), TransportError> {
    if mu.dim != nu.dim || mu.has_velocity() != nu.has_velocity() {
        return Err(TransportError::InvalidMeasure("measures live on different spaces".into()));
    }
    Ok(())
}

/// Exact `W₂²`: assignment for uniform clouds of equal size, min-cost flow otherwise.
pub fn w2_squared_with(
    mu: &EmpiricalMeasure,
    nu: &EmpiricalMeasure,
    opts: &ExactOptions,
) -> Result<f64, TransportError> {
    check_pair(mu, nu)?;
    let (n, m) = (mu.len(), nu.len());
    if n == m && mu.is_uniform() && nu.is_uniform() {
        if n > opts.n_exact {
            return Err(TransportError::Unsupported(format!("N = {n} exceeds the exact limit {}", opts.n_exact)));
        }
        let c = cost_matrix(mu, nu);
        let sol = if n > DENSE_LIMIT { sparse::solve(n, &c, CANDIDATES) } else { lsap::solve(n, &c) };
        return Ok(sol.iter().enumerate().map(|(i, &j)| c[i * n + j]).sum::<f64>() / n as f64);
    }
    if n.max(m) > opts.n_flow {
        return Err(TransportError::Unsupported(format!(
            "general weights need N ≤ {}, got {n} and {m}",
            opts.n_flow
        )));
    }
    let c = cost_matrix(mu, nu);
    Ok(flow::min_cost(&mu.weights, &nu.weights, &c).max(0.0))
}

pub fn w2_exact_with(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure, opts: &ExactOptions) -> Result<f64, TransportError> {
    Ok(w2_squared_with(mu, nu, opts)?.sqrt())
}

/// Exact `W₂` with the default size limits.
pub fn w2_exact(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64, TransportError> {
    w2_exact_with(mu, nu, &ExactOptions::default())
}

/// Squared cost of the pairing `i ↔ i` between two clouds of equal length.
pub fn pairing_cost(mu: &EmpiricalMeasure, nu: &EmpiricalMeasure) -> Result<f64, TransportError> {
    check_pair(mu, nu)?;
    if mu.len() != nu.len() {
        return Err(TransportError::InvalidMeasure("pairing needs equal lengths".into()));
    }
    Ok((0..mu.len()).map(|i| mu.weights[i] * ground_cost(mu, i, nu, i)).sum())
}

/// `Q = ½ Σᵢ wᵢ (d_T(X^VP_i, X^VM_i)² + |Ξ^VP_i - Ξ^VM_i|²)`.
pub fn coupling_q(cloud: &ParticleCloud) -> f64 {
    let d = cloud.dim;
    let mut q = 0.0;
    for (i, w) in cloud.weights.iter().enumerate() {
        let s = i * d..(i + 1) * d;
        let dx = torus_dist_sq(&cloud.vp.x[s.clone()], &cloud.vm.x[s.clone()]);
        let dv: f64 = cloud.vp.xi[s.clone()].iter().zip(&cloud.vm.xi[s]).map(|(a, b)| (a - b) * (a - b)).sum();
        q += w * (dx + dv);
    }
    0.5 * q
}

/// Measure carried by the Vlasov-Poisson (`vm == false`) or Vlasov-Maxwell samples.
pub fn cloud_measure(cloud: &ParticleCloud, vm: bool) -> Result<EmpiricalMeasure, TransportError> {
    let t = if vm { &cloud.vm } else { &cloud.vp };
    EmpiricalMeasure::new(cloud.dim, t.x.clone(), t.xi.clone(), cloud.weights.clone())
}

/// `W₂²` between the two flows on a random subsample, with a bootstrap error bar.
#[derive(Clone, Debug, PartialEq)]
pub struct SubsampledW2 {
    pub w2_sq: f64,
    /// Bootstrap standard error of `w2_sq`.
    pub std_err: f64,
    /// Half the pairing cost on the same subsample.
    pub q_sub: f64,
    pub n_sub: usize,
    pub seed: u64,
}

/// Exact `W₂²(f^VP, f^VM)` on `n_sub` samples drawn without replacement, and
/// the standard deviation of `n_boot` bootstrap replicates of it.
pub fn subsampled_w2(
    cloud: &ParticleCloud,
    n_sub: usize,
    n_boot: usize,
    seed: u64,
) -> Result<SubsampledW2, TransportError> {
    let vp = cloud_measure(cloud, false)?;
    let vm = cloud_measure(cloud, true)?;
    if !vp.is_uniform() {
        return Err(TransportError::Unsupported("subsampling needs uniform weights".into()));
    }
    let n = cloud.len();
    let n_sub = n_sub.min(n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = index::sample(&mut rng, n, n_sub).into_vec();
    idx.sort_unstable();
    let opts = ExactOptions { n_exact: n_sub.max(ExactOptions::default().n_exact), ..Default::default() };
    let (a, b) = (vp.select(&idx), vm.select(&idx));
    let w2_sq = w2_squared_with(&a, &b, &opts)?;
    let q_sub = 0.5 * pairing_cost(&a, &b)?;
    let mut reps = Vec::with_capacity(n_boot);
    for _ in 0..n_boot {
        let boot: Vec<usize> = (0..n_sub).map(|_| idx[rng.random_range(0..n_sub)]).collect();
        reps.push(w2_squared_with(&vp.select(&boot), &vm.select(&boot), &opts)?);
    }
    let std_err = if reps.len() > 1 {
        let m = reps.iter().sum::<f64>() / reps.len() as f64;
        (reps.iter().map(|r| (r - m).powi(2)).sum::<f64>() / (reps.len() - 1) as f64).sqrt()
    } else {
        0.0
    };
    Ok(SubsampledW2 { w2_sq, std_err, q_sub, n_sub, seed })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn circle_distance_wraps() {
        assert!((circle_dist(0.1, TAU - 0.1) - 0.2).abs() < 1e-15);
        assert!((circle_dist(0.0, PI) - PI).abs() < 1e-15);
        assert!(circle_dist(3.0, 3.0 + 2.0 * TAU) < 1e-12);
    }

    #[test]
    fn dirac_pair() {
        let a = EmpiricalMeasure::uniform(1, vec![0.2], vec![0.0]).unwrap();
        let b = EmpiricalMeasure::uniform(1, vec![1.0], vec![0.0]).unwrap();
        assert!((w2_exact(&a, &b).unwrap() - 0.8).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_weights() {
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![], vec![0.5, 0.6]).is_err());
        assert!(EmpiricalMeasure::new(1, vec![0.0, 1.0], vec![], vec![1.5, -0.5]).is_err());
    }
}
