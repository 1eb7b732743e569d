//! `ε` sweeps: paired runs on a list of `ε` sharing data, seed and the Vlasov-Poisson track.

use std::path::Path;
use std::sync::Mutex;

use serde::Serialize;

use crate::config::RunConfig;
use crate::error::HarnessError;
use crate::io::{write_csv, write_json};
use crate::run::{run_pair_with, vp_track, RunOptions, RunReport};

/// Environment variable holding the number of concurrent sweep members.
pub const WORKERS_VAR: &str = "VMLIMIT_WORKERS";

#[derive(Clone, Debug, Serialize)]
pub struct SweepEntry {
    pub eps: f64,
    pub sup_w2: f64,
    pub sup_q: f64,
    pub c_min: Option<f64>,
    pub coupling_violations: usize,
    pub aborted: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct RateFit {
    /// Least-squares slope of `log sup_t W2` against `log ε`.
    pub kappa_measured: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepReport {
    pub entries: Vec<SweepEntry>,
    pub fit: Option<RateFit>,
    /// `sup_t W2` strictly decreases as `ε` decreases.
    pub monotone: bool,
    pub kappa_theory: f64,
    /// `κ exp(-C(1+T)²)` with the largest member `C_min`; the constant of the estimate is unknown,
    /// so this is only a qualitative reference.
    pub kappa_floor: Option<f64>,
    pub partial: bool,
    #[serde(skip)]
    pub members: Vec<RunReport>,
}

/// Least-squares line through `(ln x, ln y)`.
pub fn fit_log_log(x: &[f64], y: &[f64]) -> Option<RateFit> {
    if x.len() < 2 || x.len() != y.len() || x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return None;
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let syy: f64 = ly.iter().map(|b| (b - my).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let slope = sxy / sxx;
    let r_squared = if syy == 0.0 { 1.0 } else { sxy * sxy / (sxx * syy) };
    Some(RateFit { kappa_measured: slope, intercept: my - slope * mx, r_squared })
}

fn workers() -> usize {
    std::env::var(WORKERS_VAR)
        .ok()
        .and_then(|v| v.parse::<usize>().ok())
        .filter(|w| *w > 0)
        .unwrap_or(1)
}

pub fn run_sweep(cfg: &RunConfig, eps_list: &[f64]) -> Result<SweepReport, HarnessError> {
    if eps_list.len() < 3 {
        return Err(HarnessError::Validation(format!("a sweep needs at least 3 eps values, got {}", eps_list.len())));
    }
    let track = vp_track(cfg)?;
    let slots: Vec<Mutex<Option<Result<RunReport, HarnessError>>>> = eps_list.iter().map(|_| Mutex::new(None)).collect();
    let w = workers().min(eps_list.len());
    std::thread::scope(|s| {
        for id in 0..w {
            let (track, slots) = (&track, &slots);
            s.spawn(move || {
                for i in (id..eps_list.len()).step_by(w) {
                    log::info!("sweep member eps = {}", eps_list[i]);
                    let r = run_pair_with(cfg, eps_list[i], track, &RunOptions::default());
                    *slots[i].lock().expect("slot") = Some(r);
                }
            });
        }
    });
    let members = slots
        .into_iter()
        .map(|m| m.into_inner().expect("slot").expect("member ran"))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(sweep_report(cfg, members))
}

/// Aggregates member runs into a sweep report.
pub fn sweep_report(cfg: &RunConfig, members: Vec<RunReport>) -> SweepReport {
    let entries: Vec<SweepEntry> = members
        .iter()
        .map(|r| SweepEntry {
            eps: r.eps,
            sup_w2: r.sup_w2,
            sup_q: r.sup_q,
            c_min: r.osgood.as_ref().map(|o| o.c_min),
            coupling_violations: r.coupling_violations,
            aborted: r.aborted.is_some(),
        })
        .collect();
    let partial = entries.iter().any(|e| e.aborted);
    let mut by_eps: Vec<&SweepEntry> = entries.iter().collect();
    by_eps.sort_by(|a, b| a.eps.total_cmp(&b.eps));
    let monotone = by_eps.windows(2).all(|w| w[0].sup_w2 < w[1].sup_w2);
    let fit = fit_log_log(
        &entries.iter().map(|e| e.eps).collect::<Vec<_>>(),
        &entries.iter().map(|e| e.sup_w2).collect::<Vec<_>>(),
    );
    let kappa_theory = cfg.kappa();
    let horizon = (1.0 + cfg.run.t_final).powi(2);
    let kappa_floor = entries
        .iter()
        .map(|e| e.c_min)
        .collect::<Option<Vec<f64>>>()
        .map(|cs| kappa_theory * (-cs.into_iter().fold(0.0, f64::max) * horizon).exp());
    SweepReport { entries, fit, monotone, kappa_theory, kappa_floor, partial, members }
}

pub const SWEEP_HEADER: [&str; 6] = ["eps", "sup_w2", "sup_q", "c_min", "coupling_violations", "aborted"];

/// Writes `sweep.csv`, `sweep.json` and per-member `run_eps<ε>.csv`.
pub fn write_sweep(dir: &Path, report: &SweepReport) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let rows: Vec<Vec<f64>> = report
        .entries
        .iter()
        .map(|e| {
            vec![
                e.eps,
                e.sup_w2,
                e.sup_q,
                e.c_min.unwrap_or(f64::NAN),
                e.coupling_violations as f64,
                if e.aborted { 1.0 } else { 0.0 },
            ]
        })
        .collect();
    let header: Vec<String> = SWEEP_HEADER.iter().map(|s| s.to_string()).collect();
    write_csv(&dir.join("sweep.csv"), &header, &rows)?;
    write_json(&dir.join("sweep.json"), report)?;
    for m in &report.members {
        crate::run::write_run(dir, m)?;
    }
    Ok(())
}
