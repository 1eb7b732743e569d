//! Successive approximations in analytic norms.
//!
//! Iterate `n + 1` solves the transport and forcing equations with every
//! coefficient frozen at iterate `n`:
//!
//! ```text
//!   ∂_t ρⁿ⁺¹ = -∇·(v(ξⁿ) ρⁿ),   ∂_t ξⁿ⁺¹ = -(v(ξⁿ)·∇)ξⁿ + Eⁿ + ε v(ξⁿ) × Bⁿ
//! ```
//!
//! with `(φⁿ, Aⁿ)` rebuilt from iterate `n` through Poisson and the Duhamel
//! formula for the wave equation. In time the right-hand side is known, so each
//! sub-interval is integrated with the four-stage rule (Simpson at the nodes)
//! and the wave Duhamel integral is taken against the quadratic interpolant of
//! the current. Differences between iterates are measured in the
//! shrinking-radius norm.

use serde::Serialize;

use crate::fields::{EmState, PhiWeights};
use crate::spectral::{shrinking_norm, ShrinkingNormParams, SpectralField};

use super::{rates_and_current, PhaseEnsemble, SolverError, ValidityGate};

/// Discretization and stopping options.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CkOptions {
    /// Final analytic radius `δ₁`; the horizon is `η(δ₀ - δ₁)`.
    pub delta1: f64,
    pub n_max: usize,
    /// Number of sub-intervals of the time grid.
    pub substeps: usize,
    /// Declared contraction factor for successive differences.
    pub contraction: f64,
}

impl Default for CkOptions {
    fn default() -> Self {
        Self { delta1: 1.5, n_max: 10, substeps: 16, contraction: 0.75 }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CkIterationReport {
    pub n_iters: usize,
    pub horizon: f64,
    pub eta: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub beta: f64,
    /// `sup_θ ‖ρⁿ - ρⁿ⁻¹‖` for `n = 1, 2, …`.
    pub diffs_rho: Vec<f64>,
    pub diffs_xi: Vec<f64>,
    /// Same for the potentials `(A, εȦ)`.
    pub diffs_field: Vec<f64>,
    /// `dₙ / dₙ₋₁` with `dₙ = max(diffs_rho, diffs_xi)`, starting at `n = 2`.
    pub ratios: Vec<f64>,
    pub c0: f64,
    pub c1: f64,
    pub c2: f64,
    /// `dₙ ≤ C₂ 2⁻ⁿ` for every recorded `n`.
    pub geometric_bound_holds: bool,
    pub contraction: f64,
    pub diverged: bool,
    #[serde(skip)]
    pub times: Vec<f64>,
    #[serde(skip)]
    pub trajectory: Vec<(PhaseEnsemble, EmState)>,
}

impl CkIterationReport {
    /// Whether every ratio with index `n ∈ [lo, hi]` is below the contraction factor.
    pub fn contracts_on(&self, lo: usize, hi: usize) -> bool {
        (lo..=hi).all(|n| {
            n >= 2 && self.ratios.get(n - 2).is_some_and(|r| *r <= self.contraction)
        })
    }
}

type Node = (PhaseEnsemble, EmState);

fn sup_diff<F>(
    times: &[f64],
    a: &[Node],
    b: &[Node],
    params: &ShrinkingNormParams,
    pick: F,
) -> Result<f64, SolverError>
where
    F: Fn(&Node, &Node) -> Vec<SpectralField>,
{
    let per_node: Vec<Vec<SpectralField>> =
        a.iter().zip(b).map(|(x, y)| pick(x, y)).collect();
    let count = per_node.first().map_or(0, |v| v.len());
    let mut best = 0.0f64;
    for item in 0..count {
        let traj: Vec<(f64, &SpectralField)> =
            times.iter().zip(&per_node).map(|(&t, v)| (t, &v[item])).collect();
        best = best.max(shrinking_norm(&traj, params)?);
    }
    Ok(best)
}

/// Runs the successive approximation scheme from `(init, em0)`.
pub fn ck_iterate(
    init: &PhaseEnsemble,
    em0: &EmState,
    params: &ShrinkingNormParams,
    opts: &CkOptions,
) -> Result<CkIterationReport, SolverError> {
    params.validate()?;
    if !(opts.delta1 >= 1.0 && opts.delta1 < params.delta0) || opts.substeps == 0 {
        return Err(SolverError::Validation("need 1 ≤ δ₁ < δ₀ and at least one substep".into()));
    }
    let gate = ValidityGate::new(params.delta0);
    let horizon = params.eta * (params.delta0 - opts.delta1);
    let m = opts.substeps;
    let h = horizon / m as f64;
    let times: Vec<f64> = (0..=2 * m).map(|i| i as f64 * h / 2.0).collect();
    let em0 = em0.with_density(&init.total_density())?;
    let mut traj: Vec<Node> = vec![(init.clone(), em0.clone()); 2 * m + 1];

    let c0 = init
        .phases
        .iter()
        .map(|p| {
            let r = crate::spectral::weighted_l1(&p.rho, params.delta0, Default::default());
            let x = crate::spectral::weighted_l1(&p.xi, params.delta0, Default::default());
            r.max(x)
        })
        .fold(0.0, f64::max);
    let c1 = 4.0 * c0;
    let c2 = 8.0 * c1;

    let mut report = CkIterationReport {
        n_iters: 0,
        horizon,
        eta: params.eta,
        delta0: params.delta0,
        delta1: opts.delta1,
        beta: params.beta,
        diffs_rho: Vec::new(),
        diffs_xi: Vec::new(),
        diffs_field: Vec::new(),
        ratios: Vec::new(),
        c0,
        c1,
        c2,
        geometric_bound_holds: true,
        contraction: opts.contraction,
        diverged: false,
        times: times.clone(),
        trajectory: Vec::new(),
    };
    let mut growths = 0usize;

    for n in 1..=opts.n_max {
        let mut evals = Vec::with_capacity(traj.len());
        for (ens, em) in &traj {
            gate.check(ens)?;
            let e = em.electric();
            let b = em.magnetic();
            evals.push(rates_and_current(ens, &e, b.as_ref())?);
        }
        let mut next: Vec<Node> = Vec::with_capacity(traj.len());
        next.push((init.clone(), em0.clone()));
        for s in 0..m {
            let (y0, w0) = next[2 * s].clone();
            let (g0, j0) = &evals[2 * s];
            let (gh, jh) = &evals[2 * s + 1];
            let (g1, j1) = &evals[2 * s + 2];
            let half = y0.advanced(&[
                (h * 5.0 / 24.0, g0.as_slice()),
                (h * 8.0 / 24.0, gh.as_slice()),
                (-h / 24.0, g1.as_slice()),
            ]);
            let full = y0.advanced(&[
                (h / 6.0, g0.as_slice()),
                (h * 4.0 / 6.0, gh.as_slice()),
                (h / 6.0, g1.as_slice()),
            ]);
            let lin = j0.scaled(-3.0).plus_scaled(4.0, jh).plus_scaled(-1.0, j1);
            let quad = j0.plus_scaled(-2.0, jh).add(j1);
            let duhamel = |hp: f64| {
                let r = hp / h;
                let c1 = lin.scaled(r);
                let c2 = quad.scaled(4.0 * r * r);
                w0.advance(
                    hp,
                    &[
                        (PhiWeights([1.0, 0.0, 0.0]), j0),
                        (PhiWeights([0.0, 1.0, 0.0]), &c1),
                        (PhiWeights([0.0, 0.0, 1.0]), &c2),
                    ],
                )
            };
            let w_half = duhamel(h / 2.0).with_density(&half.total_density())?;
            let w_full = duhamel(h).with_density(&full.total_density())?;
            next.push((half, w_half));
            next.push((full, w_full));
        }
        let pick_rho = |a: &Node, b: &Node| -> Vec<SpectralField> {
            a.0.phases.iter().zip(&b.0.phases).map(|(p, q)| p.rho.sub(&q.rho)).collect()
        };
        let pick_xi = |a: &Node, b: &Node| -> Vec<SpectralField> {
            a.0.phases.iter().zip(&b.0.phases).map(|(p, q)| p.xi.sub(&q.xi)).collect()
        };
        let pick_field =
            |a: &Node, b: &Node| -> Vec<SpectralField> { vec![a.1.a.sub(&b.1.a), a.1.w.sub(&b.1.w)] };
        let dr = sup_diff(&times, &next, &traj, params, pick_rho)?;
        let dx = sup_diff(&times, &next, &traj, params, pick_xi)?;
        let df = sup_diff(&times, &next, &traj, params, pick_field)?;
        if !(dr.is_finite() && dx.is_finite() && df.is_finite()) {
            return Err(SolverError::NonFinite("iterate difference"));
        }
        let d = dr.max(dx);
        if let Some(prev) = report.diffs_rho.last().zip(report.diffs_xi.last()).map(|(a, b)| a.max(*b)) {
            let ratio = if prev > 0.0 { d / prev } else { 0.0 };
            report.ratios.push(ratio);
            growths = if ratio > 1.0 { growths + 1 } else { 0 };
        }
        if d > c2 / 2f64.powi(n as i32) {
            report.geometric_bound_holds = false;
        }
        report.diffs_rho.push(dr);
        report.diffs_xi.push(dx);
        report.diffs_field.push(df);
        report.n_iters = n;
        traj = next;
        if growths >= 3 {
            report.diverged = true;
            break;
        }
    }
    report.trajectory = traj;
    Ok(report)
}
