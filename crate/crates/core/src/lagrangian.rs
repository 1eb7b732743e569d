//! Characteristics of both systems started from one shared sample of `f⁰`.
//!
//! Sample `i` is pushed by the Vlasov-Poisson flow and by the Vlasov-Maxwell
//! flow; the pairing is never re-indexed, so the coupling functional `Q(t)` can
//! be read off directly. Particles are passive tracers of the fluid fields and
//! use the same stage fields as the fluid steppers.

use std::f64::consts::TAU;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::multifluid::{PhaseEnsemble, SolverError, StageFields};
use crate::spectral::{gradient, to_grid, PointEvaluator, SpectralField};

/// Rejection bound relative to the grid maximum of the density.
pub const REJECTION_MARGIN: f64 = 1.02;

/// Positions and momenta, flattened with stride `d`.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ParticleCloud {
    pub dim: usize,
    pub seed: u64,
    pub weights: Vec<f64>,
    /// Phase each sample was drawn from.
    pub phase: Vec<usize>,
    pub x0: Vec<f64>,
    pub xi0: Vec<f64>,
    pub vp: Trajectory,
    pub vm: Trajectory,
}

impl ParticleCloud {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Cloud built from explicit samples with uniform weights.
    pub fn from_samples(dim: usize, x0: Vec<f64>, xi0: Vec<f64>) -> Self {
        let n = x0.len() / dim;
        let start = Trajectory { x: x0.clone(), xi: xi0.clone() };
        Self {
            dim,
            seed: 0,
            weights: vec![1.0 / n as f64; n],
            phase: vec![0; n],
            x0,
            xi0,
            vp: start.clone(),
            vm: start,
        }
    }
}

/// Draws `n` samples of `Σ μ_θ ρ_θ δ(ξ - ξ_θ)` with weight `1/n` each.
///
/// The phase is drawn with probability `μ_θ⟨ρ_θ⟩` and the position by rejection
/// against a bound slightly above the grid maximum of `ρ_θ`.
pub fn sample_cloud(ens: &PhaseEnsemble, n: usize, seed: u64) -> Result<ParticleCloud, SolverError> {
    let d = ens.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let masses: Vec<f64> = ens.phases.iter().map(|p| p.weight * p.rho.mean()[0]).collect();
    let total: f64 = masses.iter().sum();
    let mut bounds = Vec::with_capacity(ens.phases.len());
    let mut evals = Vec::with_capacity(ens.phases.len());
    for (i, p) in ens.phases.iter().enumerate() {
        let g = to_grid(&p.rho);
        let min = g.iter().cloned().fold(f64::INFINITY, f64::min);
        if min < 0.0 {
            return Err(SolverError::NegativeDensity { phase: i, min });
        }
        bounds.push(REJECTION_MARGIN * g.iter().cloned().fold(0.0, f64::max));
        evals.push(PointEvaluator::new(&[&p.rho, &p.xi]));
    }
    let mut x0 = Vec::with_capacity(n * d);
    let mut xi0 = Vec::with_capacity(n * d);
    let mut phase = Vec::with_capacity(n);
    let mut out = vec![0.0; 1 + d];
    let mut x = vec![0.0; d];
    for _ in 0..n {
        let mut u = rng.random::<f64>() * total;
        let mut th = 0;
        while th + 1 < masses.len() && u >= masses[th] {
            u -= masses[th];
            th += 1;
        }
        let mut tries = 0usize;
        loop {
            tries += 1;
            if tries > 1000 {
                return Err(SolverError::Validation(format!(
                    "rejection efficiency below 1e-3 for phase {th}"
                )));
            }
            for xa in x.iter_mut() {
                *xa = rng.random::<f64>() * TAU;
            }
            evals[th].eval(&x, &mut out);
            if out[0] > bounds[th] {
                log::warn!("density {} exceeds rejection bound {}", out[0], bounds[th]);
            }
            if rng.random::<f64>() * bounds[th] < out[0] {
                break;
            }
        }
        x0.extend_from_slice(&x);
        xi0.extend_from_slice(&out[1..]);
        phase.push(th);
    }
    let start = Trajectory { x: x0.clone(), xi: xi0.clone() };
    Ok(ParticleCloud {
        dim: d,
        seed,
        weights: vec![1.0 / n as f64; n],
        phase,
        x0,
        xi0,
        vp: start.clone(),
        vm: start,
    })
}

fn wrap(x: f64) -> f64 {
    let y = x.rem_euclid(TAU);
    if y >= TAU {
        0.0
    } else {
        y
    }
}

/// Classical RK4 for `ẋ = vel(ξ)`, `ξ̇ = force_s(x, ξ)` with per-stage force evaluators.
fn rk4_particles<V, F>(traj: &mut Trajectory, d: usize, dt: f64, vel: V, force: F)
where
    V: Fn(&[f64], &mut [f64]),
    F: Fn(usize, &[f64], &[f64], &mut [f64]),
{
    let n = traj.x.len() / d;
    let h = dt;
    let mut y = [0.0; 6];
    let mut k = [[0.0; 6]; 4];
    let mut v = [0.0; 3];
    let mut f = [0.0; 3];
    for i in 0..n {
        let mut x0 = [0.0; 3];
        let mut p0 = [0.0; 3];
        x0[..d].copy_from_slice(&traj.x[i * d..(i + 1) * d]);
        p0[..d].copy_from_slice(&traj.xi[i * d..(i + 1) * d]);
        for s in 0..4 {
            let c = match s {
                0 => 0.0,
                1 | 2 => h / 2.0,
                _ => h,
            };
            for a in 0..d {
                let (dx, dp) = if s == 0 { (0.0, 0.0) } else { (k[s - 1][a], k[s - 1][d + a]) };
                y[a] = x0[a] + c * dx;
                y[d + a] = p0[a] + c * dp;
            }
            vel(&y[d..2 * d], &mut v[..d]);
            force(s, &y[..d], &y[d..2 * d], &mut f[..d]);
            k[s][..d].copy_from_slice(&v[..d]);
            k[s][d..2 * d].copy_from_slice(&f[..d]);
        }
        for a in 0..d {
            let dx = k[0][a] + 2.0 * k[1][a] + 2.0 * k[2][a] + k[3][a];
            let dp = k[0][d + a] + 2.0 * k[1][d + a] + 2.0 * k[2][d + a] + k[3][d + a];
            traj.x[i * d + a] = wrap(x0[a] + h / 6.0 * dx);
            traj.xi[i * d + a] = p0[a] + h / 6.0 * dp;
        }
    }
}

/// One RK4 step of `Ẋ = Ξ`, `Ξ̇ = -∇φ(X)` with the four stage potentials.
pub fn flow_vp_step_staged(cloud: &mut ParticleCloud, stages: &[&SpectralField], dt: f64) {
    assert_eq!(stages.len(), 4, "four stage potentials");
    let d = cloud.dim;
    let grads: Vec<SpectralField> =
        stages.iter().map(|p| gradient(p).expect("scalar potential").scaled(-1.0)).collect();
    let evals: Vec<PointEvaluator> = grads.iter().map(|g| PointEvaluator::new(&[g])).collect();
    rk4_particles(
        &mut cloud.vp,
        d,
        dt,
        |xi, v| v.copy_from_slice(xi),
        |s, x, _, f| evals[s].eval(x, f),
    );
}

/// Frozen-potential variant of [`flow_vp_step_staged`].
pub fn flow_vp_step(cloud: &mut ParticleCloud, phi: &SpectralField, dt: f64) {
    flow_vp_step_staged(cloud, &[phi, phi, phi, phi], dt);
}

/// One RK4 step of `Ẋ = v(Ξ)`, `Ξ̇ = E(X) + ε v(Ξ) × B(X)` with four stage fields.
pub fn flow_vm_step_staged(cloud: &mut ParticleCloud, stages: &[StageFields], eps: f64, dt: f64) {
    assert_eq!(stages.len(), 4, "four stage fields");
    let d = cloud.dim;
    let evals: Vec<PointEvaluator> = stages
        .iter()
        .map(|s| match &s.b {
            Some(b) => PointEvaluator::new(&[&s.e, b]),
            None => PointEvaluator::new(&[&s.e]),
        })
        .collect();
    let nb = stages[0].b.as_ref().map_or(0, |b| b.components());
    let velocity = |xi: &[f64], v: &mut [f64]| {
        let s: f64 = xi.iter().map(|x| x * x).sum();
        let inv = 1.0 / (1.0 + eps * eps * s).sqrt();
        for (va, xa) in v.iter_mut().zip(xi) {
            *va = xa * inv;
        }
    };
    rk4_particles(&mut cloud.vm, d, dt, velocity, |s, x, xi, f| {
        let mut buf = [0.0; 6];
        evals[s].eval(x, &mut buf[..d + nb]);
        let mut v = [0.0; 3];
        velocity(xi, &mut v[..d]);
        let lorentz = match (d, nb) {
            (2, 1) => [v[1] * buf[2], -v[0] * buf[2], 0.0],
            (3, 3) => {
                let b = [buf[3], buf[4], buf[5]];
                [v[1] * b[2] - v[2] * b[1], v[2] * b[0] - v[0] * b[2], v[0] * b[1] - v[1] * b[0]]
            }
            _ => [0.0; 3],
        };
        for a in 0..d {
            f[a] = buf[a] + eps * lorentz[a];
        }
    });
}

/// Frozen-field variant of [`flow_vm_step_staged`].
pub fn flow_vm_step(
    cloud: &mut ParticleCloud,
    e: &SpectralField,
    b: Option<&SpectralField>,
    eps: f64,
    dt: f64,
) {
    let s = StageFields { e: e.clone(), b: b.cloned() };
    flow_vm_step_staged(cloud, &[s.clone(), s.clone(), s.clone(), s], eps, dt);
}

/// Which flow of the cloud to inspect.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum System {
    Vp,
    Vm,
}

#[derive(Clone, Debug, Serialize)]
pub struct Consistency {
    /// `(Σ_{0<‖k‖∞≤k_c} |ρ̂_emp(k) - ρ̂(k)|²)^{1/2}` over low modes.
    pub density_score: f64,
    /// `max_i |Ξ_i - ξ_θ(X_i)|`.
    pub max_residual: f64,
    pub mean_residual: f64,
}

/// Compares the cloud against the fluid state it should be sampling.
pub fn consistency_check(
    cloud: &ParticleCloud,
    ens: &PhaseEnsemble,
    system: System,
    low_modes: usize,
) -> Consistency {
    let d = cloud.dim;
    let traj = match system {
        System::Vp => &cloud.vp,
        System::Vm => &cloud.vm,
    };
    let evals: Vec<PointEvaluator> =
        ens.phases.iter().map(|p| PointEvaluator::new(&[&p.xi])).collect();
    let mut out = [0.0; 3];
    let mut max_r = 0.0f64;
    let mut sum_r = 0.0;
    for i in 0..cloud.len() {
        evals[cloud.phase[i]].eval(&traj.x[i * d..(i + 1) * d], &mut out[..d]);
        let r: f64 = (0..d).map(|a| (traj.xi[i * d + a] - out[a]).powi(2)).sum::<f64>().sqrt();
        max_r = max_r.max(r);
        sum_r += cloud.weights[i] * r;
    }
    let rho = ens.total_density().resized(low_modes);
    let mut score = 0.0;
    let zero = rho.zero_index();
    for idx in 0..rho.modes() {
        if idx == zero {
            continue;
        }
        let k = rho.mode(idx);
        let mut emp = Complex64::new(0.0, 0.0);
        for i in 0..cloud.len() {
            let phase: f64 = (0..d).map(|a| k[a] as f64 * traj.x[i * d + a]).sum();
            emp += Complex64::from_polar(cloud.weights[i], -phase);
        }
        score += (emp - rho.block(0)[idx]).norm_sqr();
    }
    Consistency { density_score: score.sqrt(), max_residual: max_r, mean_residual: sum_r }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::multifluid::Phase;

    #[test]
    fn free_streaming() {
        let mut c = ParticleCloud::from_samples(2, vec![1.0, 6.0], vec![0.5, 1.0]);
        let zero = SpectralField::zeros(2, 2, 1);
        flow_vp_step(&mut c, &zero, 0.5);
        assert!((c.vp.x[0] - 1.25).abs() < 1e-15);
        assert!((c.vp.x[1] - (6.5 - TAU)).abs() < 1e-14);
        let e = SpectralField::zeros(2, 2, 2);
        flow_vm_step(&mut c, &e, None, 1.0, 1.0);
        let inv = 1.0 / 2.25f64.sqrt();
        assert!((c.vm.x[0] - (1.0 + 0.5 * inv)).abs() < 1e-15);
    }

    #[test]
    fn determinism_and_uniform_phase() {
        let ens = PhaseEnsemble::new(
            0.1,
            vec![Phase {
                weight: 1.0,
                rho: SpectralField::constant(2, 2, &[1.0]),
                xi: SpectralField::constant(2, 2, &[0.3, -0.2]),
            }],
        )
        .unwrap();
        let a = sample_cloud(&ens, 64, 9).unwrap();
        let b = sample_cloud(&ens, 64, 9).unwrap();
        assert_eq!(a, b);
        assert!(a.xi0.chunks(2).all(|p| (p[0] - 0.3).abs() < 1e-15 && (p[1] + 0.2).abs() < 1e-15));
        let r = consistency_check(&a, &ens, System::Vm, 2);
        assert!(r.max_residual < 1e-15);
    }
}
