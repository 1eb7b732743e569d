//! Smallest constant in the Osgood-type integral inequality satisfied by `Q(t)`:
//!
//! ```text
//!   Q(t) ≤ C(1+T)² εᵏ + ∫₀ᵗ C(1+T)² Q(s)(1 + log⁺(1/Q(s))) ds
//! ```
//!
//! with the integral discretized by the trapezoid rule on the logged times.

use serde::Serialize;

use crate::error::HarnessError;

/// `κ = min(α - (β + 2γ₂), 1 - (γ₁ + γ₂))`.
pub fn kappa(alpha: f64, beta: f64, gamma1: f64, gamma2: f64) -> f64 {
    (alpha - (beta + 2.0 * gamma2)).min(1.0 - (gamma1 + gamma2))
}

/// `z(1 + log⁺(1/z))`.
pub fn osgood_modulus(z: f64) -> f64 {
    if z <= 0.0 {
        0.0
    } else {
        z * (1.0 + (-z.ln()).max(0.0))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OsgoodResult {
    pub c_min: f64,
    pub kappa: f64,
    pub eps: f64,
    /// `(1+T)²`.
    pub horizon_factor: f64,
    pub bisection_steps: usize,
}

fn validate(times: &[f64], q: &[f64]) -> Result<(), HarnessError> {
    if times.len() != q.len() || times.is_empty() {
        return Err(HarnessError::Validation("Q series and times differ in length".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(HarnessError::Validation("times must increase".into()));
    }
    if q.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(HarnessError::Numerical("Q series has negative or non-finite entries".into()));
    }
    Ok(())
}

/// Whether the discretized inequality holds with constant `c` at every logged time.
pub fn osgood_holds(times: &[f64], q: &[f64], eps: f64, kappa: f64, t_final: f64, c: f64) -> bool {
    let l = (1.0 + t_final).powi(2);
    let floor = c * l * eps.powf(kappa);
    let mut integral = 0.0;
    for n in 0..q.len() {
        if n > 0 {
            integral += 0.5 * (times[n] - times[n - 1]) * (osgood_modulus(q[n]) + osgood_modulus(q[n - 1]));
        }
        if q[n] > floor + c * l * integral {
            return false;
        }
    }
    true
}

/// Minimal `C` by bisection, to relative precision `1e-12`.
pub fn osgood_min_c(times: &[f64], q: &[f64], eps: f64, kappa: f64, t_final: f64) -> Result<OsgoodResult, HarnessError> {
    validate(times, q)?;
    if !(eps > 0.0 && kappa > 0.0) {
        return Err(HarnessError::Validation("Osgood diagnostic needs eps > 0 and kappa > 0".into()));
    }
    let horizon_factor = (1.0 + t_final).powi(2);
    let done = |c_min, steps| OsgoodResult { c_min, kappa, eps, horizon_factor, bisection_steps: steps };
    if q.iter().all(|v| *v == 0.0) {
        return Ok(done(0.0, 0));
    }
    let holds = |c: f64| osgood_holds(times, q, eps, kappa, t_final, c);
    let mut hi = 1.0;
    while !holds(hi) {
        hi *= 2.0;
        if !hi.is_finite() {
            return Err(HarnessError::Numerical("no finite Osgood constant".into()));
        }
    }
    let mut lo = 0.0;
    let mut steps = 0;
    while hi - lo > 1e-12 * hi && steps < 200 {
        let mid = 0.5 * (lo + hi);
        if holds(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        steps += 1;
    }
    Ok(done(hi, steps))
}
