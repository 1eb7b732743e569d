//! Cauchy-Kovalevskaya iteration on configured data and its comparison with time stepping.

use serde::Serialize;
use vmlimit_core::multifluid::{ck_iterate, vm_step, CkIterationReport, CkOptions};
use vmlimit_core::spectral::{to_grid, ShrinkingNormParams};
use vmlimit_core::{EmState, PhaseEnsemble, ValidityGate};

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::setup::initial_state;

/// Time steps per half node interval of the reference trajectory.
const REFERENCE_SUBSTEPS: usize = 20;

#[derive(Clone, Debug, Serialize)]
pub struct CkRun {
    pub eps: f64,
    pub iteration: CkIterationReport,
    /// Grid sup-norm distance between the last iterate and a fine time-stepped trajectory, over all nodes.
    pub stepping_gap: f64,
    pub reference_dt: f64,
    pub contracts: bool,
}

fn grid_gap(a: &PhaseEnsemble, b: &PhaseEnsemble) -> f64 {
    let sup = |x: &vmlimit_core::SpectralField, y: &vmlimit_core::SpectralField| {
        to_grid(&x.sub(y)).into_iter().fold(0.0f64, |m, v| m.max(v.abs()))
    };
    a.phases
        .iter()
        .zip(&b.phases)
        .map(|(p, q)| sup(&p.rho, &q.rho).max(sup(&p.xi, &q.xi)))
        .fold(0.0, f64::max)
}

/// Runs the iteration at `eps` and measures its distance to fine ETDRK4 stepping at the node times.
pub fn run_ck(cfg: &RunConfig, eps: f64) -> Result<CkRun, HarnessError> {
    let (ens, em) = initial_state(cfg, eps)?;
    let n = &cfg.norms;
    let params = ShrinkingNormParams::new(n.delta0, n.eta, n.beta)?;
    let opts = CkOptions {
        delta1: n.delta1,
        n_max: cfg.ck.n_max,
        substeps: cfg.ck.substeps,
        contraction: cfg.ck.contraction,
    };
    let iteration = ck_iterate(&ens, &em, &params, &opts)?;
    let half = iteration.times[1] - iteration.times[0];
    let dt = half / REFERENCE_SUBSTEPS as f64;
    let gate = ValidityGate::new(cfg.run.gate_delta);
    let mut state: (PhaseEnsemble, EmState) = (ens, em);
    let mut gap = grid_gap(&state.0, &iteration.trajectory[0].0);
    for node in iteration.trajectory.iter().skip(1) {
        for _ in 0..REFERENCE_SUBSTEPS {
            state = vm_step(&state.0, &state.1, dt, &gate)?;
        }
        gap = gap.max(grid_gap(&state.0, &node.0));
    }
    let contracts = iteration.contracts_on(3, 8.min(iteration.n_iters));
    Ok(CkRun { eps, iteration, stepping_gap: gap, reference_dt: dt, contracts })
}
