//! Analytic (exponentially weighted `ℓ¹`) norms.

use super::{norm_sq, SpectralError, SpectralField};

/// Length used for the weight `δ^{|k|}`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum ModeNorm {
    #[default]
    Euclidean,
    L1,
}

impl ModeNorm {
    #[inline]
    pub fn length(self, k: &[i64; 3]) -> f64 {
        match self {
            ModeNorm::Euclidean => norm_sq(k).sqrt(),
            ModeNorm::L1 => (k[0].abs() + k[1].abs() + k[2].abs()) as f64,
        }
    }
}

/// `max_c Σ_k |ĉ_k| δ^{|k|}` for any `δ > 0`.
pub fn weighted_l1(f: &SpectralField, delta: f64, norm: ModeNorm) -> f64 {
    let ln = delta.ln();
    let weights: Vec<f64> =
        (0..f.modes()).map(|i| (norm.length(&f.mode(i)) * ln).exp()).collect();
    (0..f.components())
        .map(|c| f.block(c).iter().zip(&weights).map(|(z, w)| z.norm() * w).sum::<f64>())
        .fold(0.0, f64::max)
}

/// `|f|_δ` with Euclidean mode length; requires `δ > 1`.
pub fn analytic_norm(f: &SpectralField, delta: f64) -> Result<f64, SpectralError> {
    analytic_norm_with(f, delta, ModeNorm::Euclidean)
}

pub fn analytic_norm_with(
    f: &SpectralField,
    delta: f64,
    norm: ModeNorm,
) -> Result<f64, SpectralError> {
    if !(delta > 1.0) || !delta.is_finite() {
        return Err(SpectralError::InvalidRadius(delta));
    }
    Ok(weighted_l1(f, delta, norm))
}

/// `max_{c,a} Σ_k |k_a| |ĉ_k| δ^{|k|}`, the norm of the gradient.
pub fn gradient_analytic_norm(f: &SpectralField, delta: f64) -> f64 {
    let ln = delta.ln();
    let d = f.dim();
    let mut best = 0.0f64;
    let weights: Vec<(f64, [i64; 3])> = (0..f.modes())
        .map(|i| {
            let k = f.mode(i);
            ((ModeNorm::Euclidean.length(&k) * ln).exp(), k)
        })
        .collect();
    for c in 0..f.components() {
        let b = f.block(c);
        for a in 0..d {
            let s: f64 = b
                .iter()
                .zip(&weights)
                .map(|(z, (w, k))| z.norm() * w * k[a].abs() as f64)
                .sum();
            best = best.max(s);
        }
    }
    best
}

/// `δ₀(1 - j/J) + j/J` for `j = 0..=J`.
pub fn default_delta_grid(delta0: f64, steps: usize) -> Vec<f64> {
    (0..=steps)
        .map(|j| {
            let s = j as f64 / steps as f64;
            delta0 * (1.0 - s) + s
        })
        .collect()
}

/// Parameters of the shrinking-radius norm.
#[derive(Clone, Debug, PartialEq)]
pub struct ShrinkingNormParams {
    pub delta0: f64,
    pub eta: f64,
    pub beta: f64,
    pub deltas: Vec<f64>,
}

impl ShrinkingNormParams {
    pub fn new(delta0: f64, eta: f64, beta: f64) -> Result<Self, SpectralError> {
        let p = Self { delta0, eta, beta, deltas: default_delta_grid(delta0, 16) };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SpectralError> {
        if !(self.delta0 > 1.0) {
            return Err(SpectralError::InvalidRadius(self.delta0));
        }
        if !(self.eta > 0.0) {
            return Err(SpectralError::InvalidParams(format!("eta = {}", self.eta)));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(SpectralError::InvalidParams(format!("beta = {}", self.beta)));
        }
        if self.deltas.iter().any(|&d| !(d >= 1.0 && d <= self.delta0)) {
            return Err(SpectralError::InvalidParams("radius grid outside [1, delta0]".into()));
        }
        Ok(())
    }

    /// Latest time at which some radius of the grid is still admissible.
    pub fn horizon(&self) -> f64 {
        let dmin = self.deltas.iter().cloned().fold(f64::INFINITY, f64::min);
        self.eta * (self.delta0 - dmin)
    }
}

/// `sup_{t ≤ η(δ₀-δ)} |u(t)|_δ + (δ₀ - δ - t/η)^β |∇u(t)|_δ` over the sampled trajectory.
pub fn shrinking_norm(
    trajectory: &[(f64, &SpectralField)],
    params: &ShrinkingNormParams,
) -> Result<f64, SpectralError> {
    params.validate()?;
    let mut best = 0.0f64;
    for &(t, u) in trajectory {
        if t < 0.0 || t > params.horizon() * (1.0 + 1e-12) {
            return Err(SpectralError::InvalidParams(format!(
                "time {t} outside [0, {}]",
                params.horizon()
            )));
        }
        for &delta in &params.deltas {
            let gap = params.delta0 - delta - t / params.eta;
            if gap < -1e-12 {
                continue;
            }
            let val = weighted_l1(u, delta, ModeNorm::Euclidean)
                + gap.max(0.0).powf(params.beta) * gradient_analytic_norm(u, delta);
            best = best.max(val);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_mode_norm() {
        let mut f = SpectralField::zeros(2, 4, 1);
        f.add_cos(0, &[3, 4], 2.0);
        let n = analytic_norm(&f, 1.5).unwrap();
        assert!((n - 2.0 * 1.5f64.powi(5)).abs() < 1e-12);
        assert!((gradient_analytic_norm(&f, 1.5) - 2.0 * 4.0 * 1.5f64.powi(5)).abs() < 1e-11);
    }

    #[test]
    fn radius_must_exceed_one() {
        let f = SpectralField::zeros(1, 2, 1);
        assert!(analytic_norm(&f, 1.0).is_err());
        assert!(analytic_norm(&f, f64::NAN).is_err());
    }

    #[test]
    fn constant_trajectory_norm() {
        let mut f = SpectralField::zeros(1, 2, 1);
        f.add_cos(0, &[1], 1.0);
        let p = ShrinkingNormParams::new(2.0, 0.5, 0.5).unwrap();
        let v = shrinking_norm(&[(0.0, &f)], &p).unwrap();
        let expect = p
            .deltas
            .iter()
            .map(|&d| d * (1.0 + (2.0 - d).sqrt()))
            .fold(0.0, f64::max);
        assert!((v - expect).abs() < 1e-12);
    }
}
