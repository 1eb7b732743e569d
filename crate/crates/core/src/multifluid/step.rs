//! Time steppers.
//!
//! The Vlasov-Maxwell step is the Cox-Matthews fourth-order exponential
//! Runge-Kutta scheme (ETDRK4). The linear part acts only on the transverse
//! potentials, so for the fluid unknowns it reduces to classical RK4 while the
//! wave part is propagated exactly with φ-function weighted currents. The
//! Vlasov-Poisson step is classical RK4 with `φ` re-solved at every stage.

use crate::fields::{EmState, PhiWeights};
use crate::spectral::{gradient, solve_poisson, SpectralField};

use super::{rates_and_current, PhaseEnsemble, PhaseRate, SolverError, ValidityGate};

/// Fields seen by the particles at one stage.
#[derive(Clone, Debug)]
pub struct StageFields {
    pub e: SpectralField,
    pub b: Option<SpectralField>,
}

/// Result of one Vlasov-Maxwell step with its stage data.
#[derive(Clone, Debug)]
pub struct VmStep {
    pub ens: PhaseEnsemble,
    pub em: EmState,
    /// Fields at the stages `t, t + h/2, t + h/2, t + h`.
    pub stages: Vec<StageFields>,
    /// `⟨j⟩` at the same stages.
    pub stage_mean_j: Vec<Vec<f64>>,
}

/// Result of one Vlasov-Poisson step with the stage potentials.
#[derive(Clone, Debug)]
pub struct VpStep {
    pub ens: PhaseEnsemble,
    pub potentials: Vec<SpectralField>,
}

/// RK4 quadrature weights of the four stages.
pub const RK4_WEIGHTS: [f64; 4] = [1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0];

struct StageEval {
    rates: Vec<PhaseRate>,
    current: SpectralField,
    fields: StageFields,
}

fn eval_vm(
    ens: &PhaseEnsemble,
    em: &EmState,
    gate: &ValidityGate,
) -> Result<(StageEval, EmState), SolverError> {
    gate.check(ens)?;
    let em = em.with_density(&ens.total_density())?;
    let e = em.electric();
    let b = em.magnetic();
    let (rates, current) = rates_and_current(ens, &e, b.as_ref())?;
    Ok((StageEval { rates, current, fields: StageFields { e, b } }, em))
}

fn check_dt(dt: f64) -> Result<(), SolverError> {
    if dt > 0.0 && dt.is_finite() {
        Ok(())
    } else {
        Err(SolverError::InvalidStep(dt))
    }
}

/// One ETDRK4 step of the coupled fluid-Maxwell system.
pub fn vm_step_detailed(
    ens: &PhaseEnsemble,
    em: &EmState,
    dt: f64,
    gate: &ValidityGate,
) -> Result<VmStep, SolverError> {
    check_dt(dt)?;
    let h = dt;
    let euler = PhiWeights::EULER;
    let (nu, em_u) = eval_vm(ens, em, gate)?;

    let a_f = ens.advanced(&[(h / 2.0, &nu.rates)]);
    let a_w = em_u.advance(h / 2.0, &[(euler, &nu.current)]);
    let (na, _) = eval_vm(&a_f, &a_w, gate)?;

    let b_f = ens.advanced(&[(h / 2.0, &na.rates)]);
    let b_w = em_u.advance(h / 2.0, &[(euler, &na.current)]);
    let (nb, _) = eval_vm(&b_f, &b_w, gate)?;

    let c_f = a_f.advanced(&[(h, &nb.rates), (-h / 2.0, &nu.rates)]);
    let c_src = nb.current.scaled(2.0).sub(&nu.current);
    let c_w = a_w.advance(h / 2.0, &[(euler, &c_src)]);
    let (nc, _) = eval_vm(&c_f, &c_w, gate)?;

    let out_f = ens.advanced(&[
        (h * RK4_WEIGHTS[0], &nu.rates),
        (h * RK4_WEIGHTS[1], &na.rates),
        (h * RK4_WEIGHTS[2], &nb.rates),
        (h * RK4_WEIGHTS[3], &nc.rates),
    ]);
    let ab = na.current.add(&nb.current);
    let out_w = em_u.advance(
        h,
        &[
            (PhiWeights([1.0, -3.0, 4.0]), &nu.current),
            (PhiWeights([0.0, 2.0, -4.0]), &ab),
            (PhiWeights([0.0, -1.0, 4.0]), &nc.current),
        ],
    );
    let out_w = out_w.with_density(&out_f.total_density())?;
    let stage_mean_j = [&nu, &na, &nb, &nc].iter().map(|s| s.current.mean()).collect();
    let stages = vec![nu.fields, na.fields, nb.fields, nc.fields];
    Ok(VmStep { ens: out_f, em: out_w, stages, stage_mean_j })
}

pub fn vm_step(
    ens: &PhaseEnsemble,
    em: &EmState,
    dt: f64,
    gate: &ValidityGate,
) -> Result<(PhaseEnsemble, EmState), SolverError> {
    let s = vm_step_detailed(ens, em, dt, gate)?;
    Ok((s.ens, s.em))
}

fn eval_vp(ens: &PhaseEnsemble) -> Result<(Vec<PhaseRate>, SpectralField), SolverError> {
    let phi = solve_poisson(&ens.total_density())?;
    let e = gradient(&phi)?.scaled(-1.0);
    let (rates, _) = rates_and_current(ens, &e, None)?;
    Ok((rates, phi))
}

/// One classical RK4 step of the Vlasov-Poisson multifluid system.
pub fn vp_step_detailed(ens: &PhaseEnsemble, dt: f64) -> Result<VpStep, SolverError> {
    check_dt(dt)?;
    if ens.eps != 0.0 {
        return Err(SolverError::Validation("Vlasov-Poisson ensembles carry eps = 0".into()));
    }
    let h = dt;
    let (k1, p1) = eval_vp(ens)?;
    let (k2, p2) = eval_vp(&ens.advanced(&[(h / 2.0, &k1)]))?;
    let (k3, p3) = eval_vp(&ens.advanced(&[(h / 2.0, &k2)]))?;
    let (k4, p4) = eval_vp(&ens.advanced(&[(h, &k3)]))?;
    let out = ens.advanced(&[
        (h * RK4_WEIGHTS[0], &k1),
        (h * RK4_WEIGHTS[1], &k2),
        (h * RK4_WEIGHTS[2], &k3),
        (h * RK4_WEIGHTS[3], &k4),
    ]);
    Ok(VpStep { ens: out, potentials: vec![p1, p2, p3, p4] })
}

pub fn vp_step(ens: &PhaseEnsemble, dt: f64) -> Result<PhaseEnsemble, SolverError> {
    Ok(vp_step_detailed(ens, dt)?.ens)
}
