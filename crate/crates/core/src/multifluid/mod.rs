//! Multifluid (monokinetic phase) representation of the Vlasov systems.
//!
//! The distribution is `f(t, x, dξ) = Σ_θ μ_θ ρ_θ(t, x) δ(ξ - ξ_θ(t, x))`, and each
//! phase obeys the pressureless relativistic Euler equations
//!
//! ```text
//!   ∂_t ρ_θ + ∇·(v(ξ_θ) ρ_θ) = 0
//!   ∂_t ξ_θ + (v(ξ_θ)·∇) ξ_θ = E + ε v(ξ_θ) × B,     v(ξ) = ξ / √(1 + ε²|ξ|²)
//! ```
//!
//! All nonlinear terms are formed pointwise on the collocation grid and
//! projected back onto the cutoff cube.

mod ck;
mod step;

use log::warn;
use serde::Serialize;
use thiserror::Error;

use crate::fields::FieldsError;
use crate::spectral::{
    derivative, divergence, from_grid, to_grid, weighted_l1, Grid, ModeNorm, SpectralError,
    SpectralField,
};

pub use ck::{ck_iterate, CkIterationReport, CkOptions};
pub use step::{vm_step, vm_step_detailed, vp_step, vp_step_detailed, StageFields, VmStep, VpStep, RK4_WEIGHTS};

/// Grid values of `ρ_θ` below this abort the run.
pub const NEGATIVE_DENSITY_ABORT: f64 = -1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("invalid ensemble: {0}")]
    Validation(String),
    #[error("validity gate violated: eps * |xi|_delta = {value} exceeds {limit}")]
    GateViolation { value: f64, limit: f64 },
    #[error("density of phase {phase} reached {min} on the grid")]
    NegativeDensity { phase: usize, min: f64 },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
    #[error(transparent)]
    Fields(#[from] FieldsError),
}

/// One monokinetic phase with probability weight `μ_θ`.
#[derive(Clone, Debug, PartialEq)]
pub struct Phase {
    pub weight: f64,
    pub rho: SpectralField,
    pub xi: SpectralField,
}

/// Finite phase ensemble; `eps = 0` selects the Vlasov-Poisson velocity `v(ξ) = ξ`.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseEnsemble {
    pub eps: f64,
    pub phases: Vec<Phase>,
}

/// Time derivative of one phase.
#[derive(Clone, Debug, PartialEq)]
pub struct PhaseRate {
    pub drho: SpectralField,
    pub dxi: SpectralField,
}

/// `ε · sup_θ |ξ_θ|_δ ≤ 1/√2`, under which `v(ξ)` stays analytic with `|v|_δ ≤ √2 |ξ|_δ`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ValidityGate {
    pub delta: f64,
}

impl ValidityGate {
    pub const LIMIT: f64 = std::f64::consts::FRAC_1_SQRT_2;

    pub fn new(delta: f64) -> Self {
        Self { delta }
    }

    /// `ε · sup_θ |ξ_θ|_δ` for the ensemble.
    pub fn level(&self, ens: &PhaseEnsemble) -> f64 {
        ens.phases
            .iter()
            .map(|p| ens.eps * weighted_l1(&p.xi, self.delta, ModeNorm::Euclidean))
            .fold(0.0, f64::max)
    }

    pub fn check(&self, ens: &PhaseEnsemble) -> Result<f64, SolverError> {
        if ens.eps == 0.0 {
            return Ok(0.0);
        }
        let value = self.level(ens);
        if !value.is_finite() {
            return Err(SolverError::NonFinite("validity gate"));
        }
        if value > Self::LIMIT {
            return Err(SolverError::GateViolation { value, limit: Self::LIMIT });
        }
        Ok(value)
    }
}

impl PhaseEnsemble {
    /// Validates weights, shapes and total neutrality.
    pub fn new(eps: f64, phases: Vec<Phase>) -> Result<Self, SolverError> {
        let ens = Self { eps, phases };
        ens.validate()?;
        Ok(ens)
    }

    pub fn validate(&self) -> Result<(), SolverError> {
        let first = self.phases.first().ok_or_else(|| SolverError::Validation("no phases".into()))?;
        let (d, k) = (first.rho.dim(), first.rho.cutoff());
        if !(0.0..=1.0).contains(&self.eps) {
            return Err(SolverError::Validation(format!("eps = {} outside [0, 1]", self.eps)));
        }
        for (i, p) in self.phases.iter().enumerate() {
            if !(p.weight > 0.0) {
                return Err(SolverError::Validation(format!("phase {i} has weight {}", p.weight)));
            }
            if p.rho.dim() != d || p.rho.cutoff() != k || p.rho.components() != 1 {
                return Err(SolverError::Validation(format!("phase {i} density shape")));
            }
            if p.xi.dim() != d || p.xi.cutoff() != k || p.xi.components() != d {
                return Err(SolverError::Validation(format!("phase {i} momentum shape")));
            }
        }
        let wsum: f64 = self.phases.iter().map(|p| p.weight).sum();
        if (wsum - 1.0).abs() > 1e-12 {
            return Err(SolverError::Validation(format!("weights sum to {wsum}")));
        }
        let mass: f64 = self.phases.iter().map(|p| p.weight * p.rho.mean()[0]).sum();
        if (mass - 1.0).abs() > 1e-10 {
            return Err(SolverError::Validation(format!("total mass {mass} is not 1")));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.phases[0].rho.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.phases[0].rho.cutoff()
    }

    /// Same phases with a different `ε`.
    pub fn with_eps(&self, eps: f64) -> Self {
        Self { eps, phases: self.phases.clone() }
    }

    /// `Σ_θ μ_θ ρ_θ`.
    pub fn total_density(&self) -> SpectralField {
        let mut out = SpectralField::zeros(self.dim(), self.cutoff(), 1);
        for p in &self.phases {
            out.axpy(p.weight, &p.rho);
        }
        out
    }

    /// `self + Σ_s c_s · rates_s`.
    pub fn advanced(&self, terms: &[(f64, &[PhaseRate])]) -> Self {
        let mut out = self.clone();
        for (c, rates) in terms {
            for (p, r) in out.phases.iter_mut().zip(rates.iter()) {
                p.rho.axpy(*c, &r.drho);
                p.xi.axpy(*c, &r.dxi);
            }
        }
        out
    }

    /// `Σ_θ μ_θ ⟨ρ_θ ξ_θ⟩`.
    pub fn momentum_mean(&self) -> Vec<f64> {
        let d = self.dim();
        let mut out = vec![0.0; d];
        for p in &self.phases {
            let m = p.rho.modes();
            for (c, o) in out.iter_mut().enumerate() {
                let xb = p.xi.block(c);
                let s: f64 = p
                    .rho
                    .block(0)
                    .iter()
                    .enumerate()
                    .map(|(i, r)| (r * xb[m - 1 - i]).re)
                    .sum();
                *o += p.weight * s;
            }
        }
        out
    }

    /// Largest coefficient difference over all phases.
    pub fn max_coeff_diff(&self, other: &Self) -> f64 {
        self.phases
            .iter()
            .zip(&other.phases)
            .map(|(a, b)| a.rho.max_coeff_diff(&b.rho).max(a.xi.max_coeff_diff(&b.xi)))
            .fold(0.0, f64::max)
    }
}

/// `1 / √(1 + ε²|ξ|²)` at every grid point.
fn inverse_lorentz(xi_grid: &[f64], d: usize, np: usize, eps: f64) -> Vec<f64> {
    (0..np)
        .map(|p| {
            if eps == 0.0 {
                return 1.0;
            }
            let s: f64 = (0..d).map(|c| xi_grid[c * np + p].powi(2)).sum();
            1.0 / (1.0 + eps * eps * s).sqrt()
        })
        .collect()
}

/// `v(ξ) = ξ / √(1 + ε²|ξ|²)`, formed on the grid.
pub fn relativistic_velocity(
    xi: &SpectralField,
    eps: f64,
    gate: &ValidityGate,
) -> Result<SpectralField, SolverError> {
    let d = xi.dim();
    if eps > 0.0 {
        let value = eps * weighted_l1(xi, gate.delta, ModeNorm::Euclidean);
        if value > ValidityGate::LIMIT {
            return Err(SolverError::GateViolation { value, limit: ValidityGate::LIMIT });
        }
    }
    let np = Grid::new(d, xi.cutoff()).points();
    let mut g = to_grid(xi);
    let inv = inverse_lorentz(&g, d, np, eps);
    for c in 0..d {
        for p in 0..np {
            g[c * np + p] *= inv[p];
        }
    }
    Ok(from_grid(d, xi.cutoff(), d, &g))
}

/// Rates of all phases together with the current `j = Σ μ_θ v(ξ_θ) ρ_θ`.
pub(crate) fn rates_and_current(
    ens: &PhaseEnsemble,
    e: &SpectralField,
    b: Option<&SpectralField>,
) -> Result<(Vec<PhaseRate>, SpectralField), SolverError> {
    let d = ens.dim();
    let k = ens.cutoff();
    let np = Grid::new(d, k).points();
    let eps = ens.eps;
    let eg = to_grid(e);
    let bg = b.map(to_grid);
    let nb = b.map_or(0, |b| b.components());
    let mut current = vec![0.0; d * np];
    let mut rates = Vec::with_capacity(ens.phases.len());
    for (idx, ph) in ens.phases.iter().enumerate() {
        let rho = to_grid(&ph.rho);
        let min = rho.iter().cloned().fold(f64::INFINITY, f64::min);
        if !min.is_finite() {
            return Err(SolverError::NonFinite("density"));
        }
        if min < NEGATIVE_DENSITY_ABORT {
            return Err(SolverError::NegativeDensity { phase: idx, min });
        }
        if min < 0.0 {
            warn!("phase {idx} density undershoots to {min:e} on the grid");
        }
        let xi = to_grid(&ph.xi);
        let grads: Vec<Vec<f64>> =
            (0..d).map(|a| to_grid(&derivative(&ph.xi, a, 1).expect("axis < d"))).collect();
        let inv = inverse_lorentz(&xi, d, np, eps);
        let mut flux = vec![0.0; d * np];
        let mut dxi = vec![0.0; d * np];
        let mut v = [0.0; 3];
        for p in 0..np {
            for c in 0..d {
                v[c] = xi[c * np + p] * inv[p];
                flux[c * np + p] = v[c] * rho[p];
            }
            for c in 0..d {
                let mut adv = 0.0;
                for (a, g) in grads.iter().enumerate() {
                    adv += v[a] * g[c * np + p];
                }
                dxi[c * np + p] = -adv + eg[c * np + p];
            }
            if let Some(bg) = &bg {
                let lorentz = match (d, nb) {
                    (2, 1) => {
                        let bz = bg[p];
                        [v[1] * bz, -v[0] * bz, 0.0]
                    }
                    (3, 3) => {
                        let bb = [bg[p], bg[np + p], bg[2 * np + p]];
                        [
                            v[1] * bb[2] - v[2] * bb[1],
                            v[2] * bb[0] - v[0] * bb[2],
                            v[0] * bb[1] - v[1] * bb[0],
                        ]
                    }
                    _ => [0.0; 3],
                };
                for c in 0..d {
                    dxi[c * np + p] += eps * lorentz[c];
                }
            }
        }
        for (j, f) in current.iter_mut().zip(&flux) {
            *j += ph.weight * f;
        }
        if dxi.iter().any(|x| !x.is_finite()) || flux.iter().any(|x| !x.is_finite()) {
            return Err(SolverError::NonFinite("phase right-hand side"));
        }
        let flux = from_grid(d, k, d, &flux);
        let drho = divergence(&flux)?.scaled(-1.0);
        let dxi = from_grid(d, k, d, &dxi);
        rates.push(PhaseRate { drho, dxi });
    }
    Ok((rates, from_grid(d, k, d, &current)))
}

/// Per-phase `(∂_t ρ_θ, ∂_t ξ_θ)` for given fields; `B` is ignored when absent.
pub fn vm_rhs(
    ens: &PhaseEnsemble,
    e: &SpectralField,
    b: Option<&SpectralField>,
) -> Result<Vec<PhaseRate>, SolverError> {
    Ok(rates_and_current(ens, e, b)?.0)
}

/// Moments reported for the hypothesis ledger.
#[derive(Clone, Debug)]
pub struct Moments {
    pub density: SpectralField,
    pub current: SpectralField,
    /// `sup_x Σ μ_θ |v(ξ_θ)|^α ρ_θ` on the grid.
    pub m_alpha_sup: f64,
    /// `‖Σ μ_θ |ξ_θ|⁴ ρ_θ‖_{L¹}` by the grid mean.
    pub fourth_moment_l1: f64,
}

pub fn moments(ens: &PhaseEnsemble, alpha: f64) -> Moments {
    let d = ens.dim();
    let k = ens.cutoff();
    let np = Grid::new(d, k).points();
    let mut current = vec![0.0; d * np];
    let mut m_alpha = vec![0.0; np];
    let mut fourth = vec![0.0; np];
    for ph in &ens.phases {
        let rho = to_grid(&ph.rho);
        let xi = to_grid(&ph.xi);
        let inv = inverse_lorentz(&xi, d, np, ens.eps);
        for p in 0..np {
            let s: f64 = (0..d).map(|c| xi[c * np + p].powi(2)).sum();
            let vabs = s.sqrt() * inv[p];
            m_alpha[p] += ph.weight * vabs.powf(alpha) * rho[p];
            fourth[p] += ph.weight * s * s * rho[p];
            for c in 0..d {
                current[c * np + p] += ph.weight * xi[c * np + p] * inv[p] * rho[p];
            }
        }
    }
    Moments {
        density: ens.total_density(),
        current: from_grid(d, k, d, &current),
        m_alpha_sup: m_alpha.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        fourth_moment_l1: fourth.iter().map(|x| x.abs()).sum::<f64>() / np as f64,
    }
}

/// `Σ_θ μ_θ φ(ξ_θ(x)) ρ_θ(x)`, formed on the grid.
pub fn measure_eval(ens: &PhaseEnsemble, test: impl Fn(&[f64]) -> f64) -> SpectralField {
    let d = ens.dim();
    let k = ens.cutoff();
    let np = Grid::new(d, k).points();
    let mut out = vec![0.0; np];
    let mut x = vec![0.0; d];
    for ph in &ens.phases {
        let rho = to_grid(&ph.rho);
        let xi = to_grid(&ph.xi);
        for p in 0..np {
            for (c, xc) in x.iter_mut().enumerate() {
                *xc = xi[c * np + p];
            }
            out[p] += ph.weight * test(&x) * rho[p];
        }
    }
    from_grid(d, k, 1, &out)
}

/// `Σ_θ μ_θ ∫ ε⁻²(√(1 + ε²|ξ_θ|²) - 1) ρ_θ`, written as `|ξ|² / (√(1 + ε²|ξ|²) + 1)`.
pub fn kinetic_energy(ens: &PhaseEnsemble) -> f64 {
    let d = ens.dim();
    let np = Grid::new(d, ens.cutoff()).points();
    let eps2 = ens.eps * ens.eps;
    let mut total = 0.0;
    for ph in &ens.phases {
        let rho = to_grid(&ph.rho);
        let xi = to_grid(&ph.xi);
        let s: f64 = (0..np)
            .map(|p| {
                let x2: f64 = (0..d).map(|c| xi[c * np + p].powi(2)).sum();
                rho[p] * x2 / ((1.0 + eps2 * x2).sqrt() + 1.0)
            })
            .sum();
        total += ph.weight * s / np as f64;
    }
    total
}

/// Kinetic plus field energy.
pub fn total_energy(ens: &PhaseEnsemble, em: &crate::fields::EmState) -> f64 {
    kinetic_energy(ens) + crate::fields::field_energy(em)
}
