//! Maxwell fields in potential form.
//!
//! The state holds the Coulomb-gauge potentials: the scalar potential `φ`
//! (slaved to the density through Poisson), the transverse vector potential `A`
//! and `W = ε ∂_t A`. The electric and magnetic fields are
//! `E = -∇φ - W` and `B = curl A + ⟨B⟩`.
//!
//! Per nonzero mode the transverse wave part reads
//!
//! ```text
//!   a' =  ω b,   b' = -ω a + s,   a = Â,  b = Ŵ/|k|,  ω = |k|/ε,  s = (Pj)^/|k|
//! ```
//!
//! which diagonalizes in `p = a + ib`, `q = a - ib` with eigenvalues `∓iω`. The
//! propagators below apply `e^{hL}` exactly and the source through φ-functions,
//! so the stiffness `1/ε` never enters a stability constraint. The mean of `W`
//! follows `⟨W⟩' = ⟨j⟩` and `⟨A⟩` is fixed at zero.

use num_complex::Complex64;
use serde::Serialize;
use thiserror::Error;

use crate::spectral::{
    biot_savart, curl, divergence, gradient, leray_project, norm_sq, solve_poisson,
    SpectralError, SpectralField,
};

const DATA_TOL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FieldsError {
    #[error("invalid initial data: {0}")]
    Validation(String),
    #[error("time step must be positive and finite, got {0}")]
    InvalidStep(f64),
    #[error(transparent)]
    Spectral(#[from] SpectralError),
}

/// Electromagnetic state in potential form.
#[derive(Clone, Debug, PartialEq)]
pub struct EmState {
    pub eps: f64,
    pub phi: SpectralField,
    pub a: SpectralField,
    pub w: SpectralField,
    pub mean_b: Vec<f64>,
}

/// `[e^z, φ₁(z), φ₂(z), φ₃(z)]` with `φ_j(z) = Σ_m z^m / (m + j)!`.
pub fn phi_functions(z: Complex64) -> [Complex64; 4] {
    let one = Complex64::new(1.0, 0.0);
    if z.norm() < 1.0 {
        let mut out = [Complex64::new(0.0, 0.0); 4];
        for (j, o) in out.iter_mut().enumerate() {
            let mut term = one;
            for m in 1..=j {
                term /= m as f64;
            }
            let mut sum = term;
            for m in 1..24 {
                term *= z / (m + j) as f64;
                sum += term;
            }
            *o = sum;
        }
        out
    } else {
        let e = z.exp();
        let p1 = (e - one) / z;
        let p2 = (p1 - one) / z;
        let p3 = (p2 - 0.5) / z;
        [e, p1, p2, p3]
    }
}

/// Weights `(w₁, w₂, w₃)` of the combination `w₁φ₁ + w₂φ₂ + w₃φ₃`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PhiWeights(pub [f64; 3]);

impl PhiWeights {
    pub const EULER: PhiWeights = PhiWeights([1.0, 0.0, 0.0]);

    fn apply(&self, phi: &[Complex64; 4]) -> Complex64 {
        phi[1] * self.0[0] + phi[2] * self.0[1] + phi[3] * self.0[2]
    }

    fn at_zero(&self) -> f64 {
        self.0[0] + self.0[1] / 2.0 + self.0[2] / 6.0
    }
}

impl EmState {
    pub fn dim(&self) -> usize {
        self.phi.dim()
    }

    pub fn cutoff(&self) -> usize {
        self.phi.cutoff()
    }

    /// `y⁺ = e^{hL} y + h Σ_c (w₁φ₁ + w₂φ₂ + w₃φ₃)(hL) N_c` for the transverse
    /// wave part, with `N_c` built from the currents `j_c`.
    ///
    /// `φ` is carried over unchanged.
    pub fn advance(&self, h: f64, sources: &[(PhiWeights, &SpectralField)]) -> EmState {
        let d = self.dim();
        let mut a = SpectralField::zeros(d, self.cutoff(), d);
        let mut w = SpectralField::zeros(d, self.cutoff(), d);
        let zero = a.zero_index();
        let eps = self.eps;
        for (pw, j) in sources {
            let m0 = pw.at_zero() * h;
            for c in 0..d {
                w.block_mut(c)[zero] += j.block(c)[zero] * m0;
            }
        }
        for c in 0..d {
            w.block_mut(c)[zero] += self.w.block(c)[zero];
        }
        if eps > 0.0 {
            let i = Complex64::new(0.0, 1.0);
            let mut gains = vec![Complex64::new(0.0, 0.0); sources.len()];
            let mut s = [Complex64::new(0.0, 0.0); 3];
            for idx in 0..a.modes() {
                if idx == zero {
                    continue;
                }
                let k = a.mode(idx);
                let k2 = norm_sq(&k);
                let kn = k2.sqrt();
                let omega = kn / eps;
                let phi = phi_functions(Complex64::new(0.0, -omega * h));
                for (g, (pw, _)) in gains.iter_mut().zip(sources) {
                    *g = pw.apply(&phi) * h;
                }
                let mut src_p = [Complex64::new(0.0, 0.0); 3];
                let mut src_q = [Complex64::new(0.0, 0.0); 3];
                for (g, (_, j)) in gains.iter().zip(sources) {
                    let mut kj = Complex64::new(0.0, 0.0);
                    for (ax, &ka) in k.iter().enumerate().take(d) {
                        kj += j.block(ax)[idx] * ka as f64;
                    }
                    for (ax, sv) in s.iter_mut().enumerate().take(d) {
                        *sv = (j.block(ax)[idx] - kj * (k[ax] as f64 / k2)) / kn;
                    }
                    for ax in 0..d {
                        src_p[ax] += g * i * s[ax];
                        src_q[ax] -= g.conj() * i * s[ax];
                    }
                }
                for ax in 0..d {
                    let a0 = self.a.block(ax)[idx];
                    let b0 = self.w.block(ax)[idx] / kn;
                    let p = phi[0] * (a0 + i * b0) + src_p[ax];
                    let q = phi[0].conj() * (a0 - i * b0) + src_q[ax];
                    a.block_mut(ax)[idx] = (p + q) * 0.5;
                    w.block_mut(ax)[idx] = (p - q) / (i * 2.0) * kn;
                }
            }
            a = leray_project(&a).expect("d components");
            let wmean: Vec<Complex64> = (0..d).map(|c| w.block(c)[zero]).collect();
            w = leray_project(&w).expect("d components");
            for (c, m) in wmean.into_iter().enumerate() {
                w.block_mut(c)[zero] = m;
            }
            for c in 0..d {
                a.block_mut(c)[zero] = Complex64::new(0.0, 0.0);
            }
            a.symmetrize();
            w.symmetrize();
        }
        EmState { eps, phi: self.phi.clone(), a, w, mean_b: self.mean_b.clone() }
    }

    /// Electric field `-∇φ - W`.
    pub fn electric(&self) -> SpectralField {
        gradient(&self.phi).expect("scalar potential").scaled(-1.0).sub(&self.w)
    }

    /// Magnetic field `curl A + ⟨B⟩`; `None` in one dimension.
    pub fn magnetic(&self) -> Option<SpectralField> {
        if self.dim() == 1 {
            return None;
        }
        let mut b = curl(&self.a).expect("d components");
        let z = b.zero_index();
        for (c, &m) in self.mean_b.iter().enumerate() {
            b.block_mut(c)[z] = Complex64::new(m, 0.0);
        }
        Some(b)
    }

    /// Replaces `φ` by the Poisson potential of `ρ`.
    pub fn with_density(&self, rho: &SpectralField) -> Result<EmState, FieldsError> {
        let mut out = self.clone();
        out.phi = solve_poisson(rho)?;
        Ok(out)
    }

    /// `(max |∇·A|, max |⟨A⟩|)` in coefficient space.
    pub fn gauge_residual(&self) -> (f64, f64) {
        let div = divergence(&self.a).expect("d components").max_abs_coeff();
        let mean = self.a.mean().iter().fold(0.0f64, |m, v| m.max(v.abs()));
        (div, mean)
    }
}

/// One exponential-Euler step of the wave part driven by the current `j`.
pub fn wave_step(state: &EmState, j: &SpectralField, dt: f64) -> Result<EmState, FieldsError> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(FieldsError::InvalidStep(dt));
    }
    if !j.same_shape(&state.a) {
        return Err(FieldsError::Validation("current shape does not match the field".into()));
    }
    Ok(state.advance(dt, &[(PhiWeights::EULER, j)]))
}

/// Builds the potential state from normalized initial data.
///
/// Checks `∇·E⁰ = ρ⁰ - 1`, `∇·B⁰ = 0`, `⟨E⁰⟩ = 0` and the zero-momentum mean.
pub fn init_em_state(
    rho: &SpectralField,
    e0: &SpectralField,
    b0: Option<&SpectralField>,
    eps: f64,
    momentum_mean: &[f64],
) -> Result<EmState, FieldsError> {
    let d = rho.dim();
    if !(0.0..=1.0).contains(&eps) {
        return Err(FieldsError::Validation(format!("eps = {eps} outside [0, 1]")));
    }
    if e0.components() != d || e0.dim() != d || e0.cutoff() != rho.cutoff() {
        return Err(FieldsError::Validation("electric field shape".into()));
    }
    if let Some(m) = momentum_mean.iter().find(|m| m.abs() > DATA_TOL) {
        return Err(FieldsError::Validation(format!("mean momentum {m} is not zero")));
    }
    if let Some(m) = e0.mean().iter().find(|m| m.abs() > DATA_TOL) {
        return Err(FieldsError::Validation(format!("mean electric field {m} is not zero")));
    }
    let mut gauss = divergence(e0)?.sub(rho);
    let z = gauss.zero_index();
    gauss.block_mut(0)[z] += 1.0;
    let res = gauss.max_abs_coeff();
    if res > DATA_TOL {
        return Err(FieldsError::Validation(format!("Gauss law residual {res}")));
    }
    let phi = solve_poisson(rho)?;
    let w = gradient(&phi)?.add(e0).scaled(-1.0);
    let (a, mean_b) = match (d, b0) {
        (1, Some(_)) => {
            return Err(FieldsError::Validation("no magnetic field in one dimension".into()))
        }
        (1, None) => (SpectralField::zeros(d, rho.cutoff(), d), Vec::new()),
        (_, None) => {
            let nb = if d == 2 { 1 } else { 3 };
            (SpectralField::zeros(d, rho.cutoff(), d), vec![0.0; nb])
        }
        (_, Some(b)) => {
            if d == 3 {
                let r = divergence(b)?.max_abs_coeff();
                if r > DATA_TOL {
                    return Err(FieldsError::Validation(format!("div B residual {r}")));
                }
            }
            (biot_savart(b)?, b.mean())
        }
    };
    if eps == 0.0 {
        let mut transverse = w.clone();
        for c in 0..d {
            transverse.block_mut(c)[z] = Complex64::new(0.0, 0.0);
        }
        if transverse.max_abs_coeff() > DATA_TOL || a.max_abs_coeff() > DATA_TOL {
            return Err(FieldsError::Validation(
                "transverse fields are incompatible with the electrostatic limit".into(),
            ));
        }
        return Ok(EmState {
            eps,
            phi,
            a: SpectralField::zeros(d, rho.cutoff(), d),
            w: SpectralField::zeros(d, rho.cutoff(), d),
            mean_b,
        });
    }
    Ok(EmState { eps, phi, a, w, mean_b })
}

/// `½(‖E‖² + ‖B‖²)` over the normalized measure.
pub fn field_energy(state: &EmState) -> f64 {
    let e = state.electric().l2_norm_sq();
    let b = state.magnetic().map_or(0.0, |b| b.l2_norm_sq());
    0.5 * (e + b)
}

/// `max_c |⟨W⟩_c(t) - ⟨W⟩_c(0) - ∫₀ᵗ ⟨j_c⟩|`.
pub fn mean_momentum_ledger(state: &EmState, initial_mean_w: &[f64], integrated_mean_j: &[f64]) -> f64 {
    state
        .w
        .mean()
        .iter()
        .zip(initial_mean_w)
        .zip(integrated_mean_j)
        .fold(0.0f64, |m, ((w, w0), j)| m.max((w - w0 - j).abs()))
}

/// Running record of `⟨W⟩(0)` and `∫⟨j⟩`.
#[derive(Clone, Debug, Serialize)]
pub struct MomentumLedger {
    pub initial_mean_w: Vec<f64>,
    pub integrated_mean_j: Vec<f64>,
}

impl MomentumLedger {
    pub fn new(state: &EmState) -> Self {
        Self { initial_mean_w: state.w.mean(), integrated_mean_j: vec![0.0; state.dim()] }
    }

    /// Adds `Σ_s weight_s · ⟨j⟩_s` for one step.
    pub fn accumulate(&mut self, weighted: &[(f64, &[f64])]) {
        for (wt, mj) in weighted {
            for (acc, v) in self.integrated_mean_j.iter_mut().zip(mj.iter()) {
                *acc += wt * v;
            }
        }
    }

    pub fn residual(&self, state: &EmState) -> f64 {
        mean_momentum_ledger(state, &self.initial_mean_w, &self.integrated_mean_j)
    }
}
