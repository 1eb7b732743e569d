//! Paired runs: one sample of `f⁰` pushed by both flows on a common time grid.

use std::path::PathBuf;

use serde::Serialize;
use vmlimit_core::fields::MomentumLedger;
use vmlimit_core::lagrangian::{consistency_check, flow_vm_step_staged, flow_vp_step_staged, sample_cloud, System};
use vmlimit_core::multifluid::{kinetic_energy, moments, total_energy, vm_step_detailed, vp_step_detailed, RK4_WEIGHTS};
use vmlimit_core::spectral::{gradient, to_grid};
use vmlimit_core::{EmState, ParticleCloud, PhaseEnsemble, ValidityGate};
use vmlimit_transport::{coupling_q, subsampled_w2};

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::io::write_cloud;
use crate::osgood::{osgood_min_c, OsgoodResult};
use crate::setup::{build_ensemble, initial_state};

/// Low Fourier modes compared in the cloud consistency score.
const CONSISTENCY_MODES: usize = 3;

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Directory receiving cloud snapshots at every W2 snapshot time.
    pub snapshot_dir: Option<PathBuf>,
}

/// Vlasov-Poisson state at one logged time.
#[derive(Clone, Debug)]
pub struct VpFrame {
    pub t: f64,
    pub x: Vec<f64>,
    pub xi: Vec<f64>,
    pub energy: f64,
    pub mean_j: Vec<f64>,
    pub rho_sup: f64,
    pub residual: f64,
}

/// Vlasov-Poisson trajectory shared by all members of a sweep.
#[derive(Clone, Debug)]
pub struct VpTrack {
    pub cloud0: ParticleCloud,
    pub frames: Vec<VpFrame>,
    pub dt: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Row {
    pub t: f64,
    pub q: f64,
    pub energy_vm: f64,
    pub energy_vp: f64,
    pub mean_b: Vec<f64>,
    pub mean_j_vp: Vec<f64>,
    pub momentum_ledger: f64,
    pub gauge_div: f64,
    pub gauge_mean: f64,
    pub m_alpha_sup: f64,
    pub rho_sup: f64,
    pub rho_l1: f64,
    pub fourth_moment: f64,
    pub e_l2: f64,
    pub b_l2: f64,
    pub w_l2: f64,
    pub gate_level: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Snapshot {
    pub t: f64,
    pub q: f64,
    pub w2_sq: f64,
    pub w2_std_err: f64,
    /// Three bootstrap standard errors.
    pub slack: f64,
    pub q_sub: f64,
    pub subsample_seed: u64,
    pub violation: bool,
    pub vm_residual: f64,
    pub vp_residual: f64,
    pub vm_density_score: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct LedgerEntry {
    pub hypothesis: String,
    pub measured: Option<f64>,
    /// Power of `ε` the bound may grow with.
    pub eps_exponent: f64,
    /// `measured · ε^{exponent}`, the implied constant.
    pub implied_constant: Option<f64>,
    pub note: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct HypothesisLedger {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
    pub kappa: f64,
    pub entries: Vec<LedgerEntry>,
    /// Largest implied constant.
    pub c0: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Conservation {
    pub mean_b_drift: f64,
    pub mean_j_vp_drift: f64,
    pub momentum_ledger_max: f64,
    pub energy_rel_drift: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct Abort {
    pub t: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunReport {
    pub eps: f64,
    pub dim: usize,
    pub cutoff: usize,
    pub dt: f64,
    pub t_final: f64,
    pub n_particles: usize,
    pub seed: u64,
    pub subsample_seed: u64,
    pub rows: Vec<Row>,
    pub snapshots: Vec<Snapshot>,
    pub conservation: Conservation,
    pub ledger: HypothesisLedger,
    pub osgood: Option<OsgoodResult>,
    pub sup_w2: f64,
    pub sup_q: f64,
    pub coupling_violations: usize,
    pub aborted: Option<Abort>,
}

fn grid_max(f: &vmlimit_core::SpectralField) -> f64 {
    to_grid(f).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

fn vp_energy(ens: &PhaseEnsemble) -> Result<f64, HarnessError> {
    let phi = vmlimit_core::spectral::solve_poisson(&ens.total_density())?;
    Ok(kinetic_energy(ens) + 0.5 * gradient(&phi)?.l2_norm_sq())
}

fn vp_frame(t: f64, cloud: &ParticleCloud, ens: &PhaseEnsemble) -> Result<VpFrame, HarnessError> {
    Ok(VpFrame {
        t,
        x: cloud.vp.x.clone(),
        xi: cloud.vp.xi.clone(),
        energy: vp_energy(ens)?,
        mean_j: ens.momentum_mean(),
        rho_sup: grid_max(&ens.total_density()),
        residual: consistency_check(cloud, ens, System::Vp, CONSISTENCY_MODES).max_residual,
    })
}

/// Samples `f⁰` and pushes it with the Vlasov-Poisson flow, logging every `log_interval`.
pub fn vp_track(cfg: &RunConfig) -> Result<VpTrack, HarnessError> {
    let dt = cfg.run.dt;
    let mut ens = build_ensemble(cfg, 0.0)?;
    let mut cloud = sample_cloud(&ens, cfg.particles.n, cfg.particles.seed)?;
    let cloud0 = cloud.clone();
    let log_every = cfg.log_every();
    let mut frames = vec![vp_frame(0.0, &cloud, &ens)?];
    for step in 1..=cfg.steps() {
        let s = vp_step_detailed(&ens, dt)?;
        let p: Vec<_> = s.potentials.iter().collect();
        flow_vp_step_staged(&mut cloud, &p, dt);
        ens = s.ens;
        if step % log_every == 0 {
            frames.push(vp_frame(step as f64 * dt, &cloud, &ens)?);
        }
    }
    Ok(VpTrack { cloud0, frames, dt })
}

struct VmProbe<'a> {
    ens: &'a PhaseEnsemble,
    em: &'a EmState,
    gate: &'a ValidityGate,
    alpha: f64,
}

fn make_row(t: f64, q: f64, p: &VmProbe, frame: &VpFrame, ledger: &MomentumLedger) -> Row {
    let m = moments(p.ens, p.alpha);
    let rho = to_grid(&m.density);
    let (gauge_div, gauge_mean) = p.em.gauge_residual();
    Row {
        t,
        q,
        energy_vm: total_energy(p.ens, p.em),
        energy_vp: frame.energy,
        mean_b: p.em.mean_b.clone(),
        mean_j_vp: frame.mean_j.clone(),
        momentum_ledger: ledger.residual(p.em),
        gauge_div,
        gauge_mean,
        m_alpha_sup: m.m_alpha_sup,
        rho_sup: rho.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        rho_l1: rho.iter().map(|v| v.abs()).sum::<f64>() / rho.len() as f64,
        fourth_moment: m.fourth_moment_l1,
        e_l2: p.em.electric().l2_norm_sq().sqrt(),
        b_l2: p.em.magnetic().map_or(0.0, |b| b.l2_norm_sq().sqrt()),
        w_l2: p.em.w.l2_norm_sq().sqrt(),
        gate_level: p.gate.level(p.ens),
    }
}

fn with_vp(cloud: &ParticleCloud, frame: &VpFrame) -> ParticleCloud {
    let mut c = cloud.clone();
    c.vp.x.clone_from(&frame.x);
    c.vp.xi.clone_from(&frame.xi);
    c
}

/// Paired run at `eps` with a freshly computed Vlasov-Poisson track.
pub fn run_pair(cfg: &RunConfig, eps: f64, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    let track = vp_track(cfg)?;
    run_pair_with(cfg, eps, &track, opts)
}

/// Paired run at `eps` against a precomputed Vlasov-Poisson track.
pub fn run_pair_with(cfg: &RunConfig, eps: f64, track: &VpTrack, opts: &RunOptions) -> Result<RunReport, HarnessError> {
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(HarnessError::Validation(format!("eps = {eps} outside (0, 1]")));
    }
    if track.dt != cfg.run.dt || track.frames.len() != cfg.steps() / cfg.log_every() + 1 {
        return Err(HarnessError::Validation("Vlasov-Poisson track does not match the time grid".into()));
    }
    let dt = cfg.run.dt;
    let (mut ens, mut em) = initial_state(cfg, eps)?;
    let gate = ValidityGate::new(cfg.run.gate_delta);
    let alpha = cfg.hypotheses.alpha;
    let log_every = cfg.log_every();
    let snap_every = cfg.snapshot_every();
    let mut cloud = track.cloud0.clone();
    let mut ledger = MomentumLedger::new(&em);
    let mut rows = Vec::new();
    let mut snapshots = Vec::new();
    let mut aborted = None;
    if let Some(dir) = &opts.snapshot_dir {
        std::fs::create_dir_all(dir)?;
    }

    let record = |step: usize,
                      ens: &PhaseEnsemble,
                      em: &EmState,
                      cloud: &ParticleCloud,
                      ledger: &MomentumLedger,
                      rows: &mut Vec<Row>,
                      snapshots: &mut Vec<Snapshot>|
     -> Result<(), HarnessError> {
        let t = step as f64 * dt;
        let frame = &track.frames[step / log_every];
        let paired = with_vp(cloud, frame);
        let q = coupling_q(&paired);
        let probe = VmProbe { ens, em, gate: &gate, alpha };
        rows.push(make_row(t, q, &probe, frame, ledger));
        if step % snap_every == 0 {
            let seed = cfg.particles.subsample_seed.wrapping_add(snapshots.len() as u64);
            let s = subsampled_w2(&paired, cfg.particles.w2_subsample, cfg.particles.bootstrap, seed)?;
            let cons = consistency_check(&paired, ens, System::Vm, CONSISTENCY_MODES);
            let slack = 3.0 * s.std_err;
            snapshots.push(Snapshot {
                t,
                q,
                w2_sq: s.w2_sq,
                w2_std_err: s.std_err,
                slack,
                q_sub: s.q_sub,
                subsample_seed: seed,
                violation: s.w2_sq > 2.0 * q + slack,
                vm_residual: cons.max_residual,
                vp_residual: frame.residual,
                vm_density_score: cons.density_score,
            });
            if let Some(dir) = &opts.snapshot_dir {
                write_cloud(&dir.join(format!("cloud_{:04}.bin", snapshots.len() - 1)), &paired, t)?;
            }
        }
        Ok(())
    };

    let start_gate = gate.check(&ens);
    record(0, &ens, &em, &cloud, &ledger, &mut rows, &mut snapshots)?;
    if let Err(e) = start_gate {
        aborted = Some(Abort { t: 0.0, reason: e.to_string() });
    }
    if aborted.is_none() {
        for step in 1..=cfg.steps() {
            let s = match vm_step_detailed(&ens, &em, dt, &gate) {
                Ok(s) => s,
                Err(e) => {
                    aborted = Some(Abort { t: (step - 1) as f64 * dt, reason: e.to_string() });
                    break;
                }
            };
            let weighted: Vec<(f64, &[f64])> =
                RK4_WEIGHTS.iter().zip(&s.stage_mean_j).map(|(w, j)| (w * dt, j.as_slice())).collect();
            ledger.accumulate(&weighted);
            flow_vm_step_staged(&mut cloud, &s.stages, eps, dt);
            ens = s.ens;
            em = s.em;
            if step % log_every == 0 {
                record(step, &ens, &em, &cloud, &ledger, &mut rows, &mut snapshots)?;
            }
        }
    }
    if let Some(a) = &aborted {
        log::warn!("run at eps = {eps} aborted at t = {}: {}", a.t, a.reason);
    }

    let first = &rows[0];
    let max_over = |f: &dyn Fn(&Row) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let vec_drift = |a: &[f64], b: &[f64]| a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()));
    let conservation = Conservation {
        mean_b_drift: max_over(&|r| vec_drift(&r.mean_b, &first.mean_b)),
        mean_j_vp_drift: max_over(&|r| vec_drift(&r.mean_j_vp, &first.mean_j_vp)),
        momentum_ledger_max: max_over(&|r| r.momentum_ledger),
        energy_rel_drift: max_over(&|r| ((r.energy_vm - first.energy_vm) / first.energy_vm).abs()),
    };
    let ledger = hypothesis_ledger(cfg, eps, &rows, track)?;
    let times: Vec<f64> = rows.iter().map(|r| r.t).collect();
    let qs: Vec<f64> = rows.iter().map(|r| r.q).collect();
    let osgood = osgood_min_c(&times, &qs, eps, cfg.kappa(), cfg.run.t_final).ok();
    Ok(RunReport {
        eps,
        dim: cfg.run.dim,
        cutoff: cfg.run.cutoff,
        dt,
        t_final: cfg.run.t_final,
        n_particles: cfg.particles.n,
        seed: cfg.particles.seed,
        subsample_seed: cfg.particles.subsample_seed,
        sup_w2: snapshots.iter().map(|s| s.w2_sq.sqrt()).fold(0.0, f64::max),
        sup_q: max_over(&|r| r.q),
        coupling_violations: snapshots.iter().filter(|s| s.violation).count(),
        rows,
        snapshots,
        conservation,
        ledger,
        osgood,
        aborted,
    })
}

fn hypothesis_ledger(cfg: &RunConfig, eps: f64, rows: &[Row], track: &VpTrack) -> Result<HypothesisLedger, HarnessError> {
    let h = &cfg.hypotheses;
    let sup = |f: &dyn Fn(&Row) -> f64| rows.iter().map(f).fold(0.0f64, f64::max);
    let entry = |name: &str, measured: f64, exponent: f64, note: &str| LedgerEntry {
        hypothesis: name.into(),
        measured: Some(measured),
        eps_exponent: exponent,
        implied_constant: Some(measured * eps.powf(exponent)),
        note: note.into(),
    };
    let (ens0, em0) = initial_state(cfg, eps)?;
    let normalization = ens0
        .momentum_mean()
        .iter()
        .chain(em0.electric().mean().iter())
        .fold(0.0f64, |m, v| m.max(v.abs()));
    let vp_rho = track.frames.iter().map(|f| f.rho_sup).fold(0.0f64, f64::max);
    let mut entries = vec![
        entry(
            "initial data normalized",
            normalization,
            0.0,
            "max of |mean current| and |mean E| at t = 0; Gauss's law is enforced at construction",
        ),
        entry(
            "density bounded in L1 and Linf",
            sup(&|r| r.rho_sup.max(r.rho_l1)),
            0.0,
            "sup over logged times of the grid maximum and the L1 norm of the VM density",
        ),
        entry("moment of order alpha", sup(&|r| r.m_alpha_sup), h.beta, "grid sup of sum_theta mu |v(xi)|^alpha rho"),
        entry("eps dA/dt in L2", sup(&|r| r.w_l2), h.gamma1, "transverse part of the electric field"),
        entry("vp density bounded", vp_rho, 0.0, "grid sup of the Vlasov-Poisson density"),
    ];
    if cfg.run.dim == 1 {
        entries.push(LedgerEntry {
            hypothesis: "magnetic field in L2".into(),
            measured: None,
            eps_exponent: h.gamma2,
            implied_constant: None,
            note: "not applicable: no magnetic field in one dimension".into(),
        });
    } else {
        entries.push(entry("magnetic field in L2", sup(&|r| r.b_l2), h.gamma2, "includes the mean field"));
    }
    let c0 = entries.iter().filter_map(|e| e.implied_constant).fold(0.0, f64::max);
    Ok(HypothesisLedger {
        alpha: h.alpha,
        beta: h.beta,
        gamma1: h.gamma1,
        gamma2: h.gamma2,
        kappa: cfg.kappa(),
        entries,
        c0,
    })
}

/// Column names of the time-series CSV for dimension `d`.
pub fn row_header(d: usize) -> Vec<String> {
    let nb = match d {
        1 => 0,
        2 => 1,
        _ => 3,
    };
    let mut h: Vec<String> = ["t", "q", "energy_vm", "energy_vp"].iter().map(|s| s.to_string()).collect();
    h.extend((0..nb).map(|c| format!("mean_b_{c}")));
    h.extend((0..d).map(|c| format!("mean_j_vp_{c}")));
    h.extend(
        [
            "momentum_ledger",
            "gauge_div",
            "gauge_mean",
            "m_alpha_sup",
            "rho_sup",
            "rho_l1",
            "fourth_moment",
            "e_l2",
            "b_l2",
            "w_l2",
            "gate_level",
            "w2_subsampled",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    h
}

/// Numeric CSV rows; `w2_subsampled` is filled at snapshot times and NaN elsewhere.
pub fn row_values(report: &RunReport) -> Vec<Vec<f64>> {
    report
        .rows
        .iter()
        .map(|r| {
            let mut v = vec![r.t, r.q, r.energy_vm, r.energy_vp];
            v.extend(&r.mean_b);
            v.extend(&r.mean_j_vp);
            let w2 = report
                .snapshots
                .iter()
                .find(|s| (s.t - r.t).abs() < 1e-12)
                .map_or(f64::NAN, |s| s.w2_sq.sqrt());
            v.extend([
                r.momentum_ledger,
                r.gauge_div,
                r.gauge_mean,
                r.m_alpha_sup,
                r.rho_sup,
                r.rho_l1,
                r.fourth_moment,
                r.e_l2,
                r.b_l2,
                r.w_l2,
                r.gate_level,
                w2,
            ]);
            v
        })
        .collect()
}

/// Minimal Osgood constants at `dt` and `dt/2` and their relative change.
#[derive(Clone, Debug, Serialize)]
pub struct OsgoodStability {
    pub c_dt: f64,
    pub c_half: f64,
    pub rel_change: f64,
}

pub fn osgood_stability(cfg: &RunConfig, eps: f64, coarse: Option<&RunReport>) -> Result<OsgoodStability, HarnessError> {
    let owned;
    let coarse = match coarse {
        Some(r) => r,
        None => {
            owned = run_pair(cfg, eps, &RunOptions::default())?;
            &owned
        }
    };
    let fine = run_pair(&cfg.refined(2), eps, &RunOptions::default())?;
    let c = |r: &RunReport| r.osgood.as_ref().map_or(f64::INFINITY, |o| o.c_min);
    let (c_dt, c_half) = (c(coarse), c(&fine));
    Ok(OsgoodStability { c_dt, c_half, rel_change: (c_half - c_dt).abs() / c_dt.abs().max(f64::MIN_POSITIVE) })
}

/// File stem of a member run, e.g. `run_eps0.2`.
pub fn run_stem(eps: f64) -> String {
    format!("run_eps{eps}")
}

/// Writes `<stem>.csv` with the time series and `<stem>.json` with the full report.
pub fn write_run(dir: &std::path::Path, report: &RunReport) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let stem = run_stem(report.eps);
    crate::io::write_csv(&dir.join(format!("{stem}.csv")), &row_header(report.dim), &row_values(report))?;
    crate::io::write_json(&dir.join(format!("{stem}.json")), report)
}
