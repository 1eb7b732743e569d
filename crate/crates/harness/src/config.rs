//! Run configuration, read from TOML.
//!
//! ```toml
//! [run]
//! mode = "pair"            # vm | vp | pair | sweep | ck | verify
//! dim = 2
//! cutoff = 16
//! eps = [0.2]
//! t_final = 0.5
//! dt = 1e-3
//! log_interval = 5e-3      # diagnostics and Q(t)
//! snapshot_interval = 5e-2 # subsampled W2 and cloud snapshots
//! gate_delta = 1.5
//! output_dir = "out/small2d"
//!
//! [particles]
//! n = 4096
//! seed = 7
//! w2_subsample = 1024
//! bootstrap = 16
//! subsample_seed = 11
//!
//! [norms]                  # analytic radii and shrinking rate
//! delta0 = 2.0
//! delta1 = 1.5
//! eta = 0.4
//! beta = 0.5
//!
//! [hypotheses]             # exponents of the uniform bounds
//! alpha = 0.9
//! beta = 0.0
//! gamma1 = 0.0
//! gamma2 = 0.0
//!
//! [fields]
//! b0 = "quasi_static"      # zero | quasi_static | modes
//! gamma = 0.0              # transverse data scaled by eps^-gamma
//!
//! [[phase]]
//! weight = 0.5
//! rho_mean = 1.0
//! xi_mean = [1.0, 0.0]
//! rho = [{ k = [1, 0], cos = 0.2 }]
//! xi = [{ c = 0, k = [0, 1], sin = 0.2 }]
//! ```
//!
//! Mode entries add `cos·cos(k·x) + sin·sin(k·x)` to component `c`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::HarnessError;
use crate::osgood::kappa;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Vm,
    Vp,
    Pair,
    Sweep,
    Ck,
    Verify,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    pub mode: Mode,
    pub dim: usize,
    pub cutoff: usize,
    pub eps: Vec<f64>,
    pub t_final: f64,
    pub dt: f64,
    pub log_interval: f64,
    pub snapshot_interval: f64,
    pub gate_delta: f64,
    pub output_dir: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleSection {
    pub n: usize,
    pub seed: u64,
    pub w2_subsample: usize,
    pub bootstrap: usize,
    pub subsample_seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NormSection {
    pub delta0: f64,
    pub delta1: f64,
    pub eta: f64,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HypothesisSection {
    pub alpha: f64,
    pub beta: f64,
    pub gamma1: f64,
    pub gamma2: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MagneticData {
    Zero,
    QuasiStatic,
    Modes,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FieldSection {
    pub b0: MagneticData,
    #[serde(default)]
    pub gamma: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub b0_modes: Vec<ModeSpec>,
    /// Divergence-free part of `E⁰`; the longitudinal part always comes from Gauss's law.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub e_transverse: Vec<ModeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeSpec {
    #[serde(default)]
    pub c: usize,
    pub k: Vec<i64>,
    #[serde(default)]
    pub cos: f64,
    #[serde(default)]
    pub sin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhaseSpec {
    pub weight: f64,
    pub rho_mean: f64,
    pub xi_mean: Vec<f64>,
    #[serde(default)]
    pub rho: Vec<ModeSpec>,
    #[serde(default)]
    pub xi: Vec<ModeSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CkSection {
    pub substeps: usize,
    pub n_max: usize,
    pub contraction: f64,
}

impl Default for CkSection {
    fn default() -> Self {
        Self { substeps: 10, n_max: 10, contraction: 0.75 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub run: RunSection,
    pub particles: ParticleSection,
    pub norms: NormSection,
    pub hypotheses: HypothesisSection,
    pub fields: FieldSection,
    #[serde(default)]
    pub ck: CkSection,
    #[serde(rename = "phase")]
    pub phases: Vec<PhaseSpec>,
}

pub const SMALL2D: &str = include_str!("../../../bundled/small2d.toml");
pub const CK2D: &str = include_str!("../../../bundled/ck2d.toml");

/// Ratio `a / b` as an integer, if it is one to relative precision `1e-9`.
pub fn exact_ratio(a: f64, b: f64) -> Option<usize> {
    let r = a / b;
    let n = r.round();
    ((r - n).abs() <= 1e-9 * n.max(1.0) && n >= 1.0).then_some(n as usize)
}

fn bad(msg: impl Into<String>) -> HarnessError {
    HarnessError::Validation(msg.into())
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, HarnessError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Reads a config file; `bundled/<name>` resolves to a built-in config when no such file exists.
    pub fn load(path: &str) -> Result<Self, HarnessError> {
        let p = Path::new(path);
        if p.exists() {
            return Self::from_toml(&std::fs::read_to_string(p)?);
        }
        let name = path.trim_end_matches(".toml");
        match name {
            "bundled/small2d" => Self::from_toml(SMALL2D),
            "bundled/ck2d" => Self::from_toml(CK2D),
            _ => Err(bad(format!("config file {path} not found"))),
        }
    }

    pub fn steps(&self) -> usize {
        exact_ratio(self.run.t_final, self.run.dt).expect("validated")
    }

    pub fn log_every(&self) -> usize {
        exact_ratio(self.run.log_interval, self.run.dt).expect("validated")
    }

    pub fn snapshot_every(&self) -> usize {
        exact_ratio(self.run.snapshot_interval, self.run.dt).expect("validated")
    }

    /// Copy with the time step divided by `factor`.
    pub fn refined(&self, factor: usize) -> Self {
        let mut c = self.clone();
        c.run.dt /= factor as f64;
        c
    }

    pub fn kappa(&self) -> f64 {
        let h = &self.hypotheses;
        kappa(h.alpha, h.beta, h.gamma1, h.gamma2)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let r = &self.run;
        let d = r.dim;
        if !(1..=3).contains(&d) {
            return Err(bad(format!("dim = {d} must be 1, 2 or 3")));
        }
        if r.cutoff == 0 {
            return Err(bad("cutoff must be positive"));
        }
        if r.eps.is_empty() {
            return Err(bad("eps list is empty"));
        }
        if let Some(e) = r.eps.iter().find(|e| !(**e > 0.0 && **e <= 1.0)) {
            return Err(bad(format!("eps = {e} outside (0, 1]")));
        }
        if !(r.t_final > 0.0 && r.t_final.is_finite() && r.dt > 0.0) {
            return Err(bad("t_final and dt must be positive"));
        }
        if exact_ratio(r.t_final, r.dt).is_none() {
            return Err(bad(format!("dt = {} does not divide t_final = {}", r.dt, r.t_final)));
        }
        let log = exact_ratio(r.log_interval, r.dt).ok_or_else(|| bad("log_interval must be a multiple of dt"))?;
        let snap = exact_ratio(r.snapshot_interval, r.dt).ok_or_else(|| bad("snapshot_interval must be a multiple of dt"))?;
        if snap % log != 0 {
            return Err(bad("snapshot_interval must be a multiple of log_interval"));
        }
        if r.gate_delta < 1.0 {
            return Err(bad("gate_delta must be at least 1"));
        }
        let n = &self.norms;
        if !(n.delta0 > n.delta1 && n.delta1 > 1.0) {
            return Err(bad(format!("need delta0 > delta1 > 1, got {} and {}", n.delta0, n.delta1)));
        }
        if !(n.eta > 0.0 && n.beta > 0.0) {
            return Err(bad("eta and beta must be positive"));
        }
        let h = &self.hypotheses;
        for (name, v) in [("alpha", h.alpha), ("beta", h.beta), ("gamma1", h.gamma1), ("gamma2", h.gamma2)] {
            if !(0.0..1.0).contains(&v) {
                return Err(bad(format!("{name} = {v} outside [0, 1)")));
            }
        }
        if self.kappa() <= 0.0 {
            return Err(bad(format!("kappa = {} must be positive", self.kappa())));
        }
        let p = &self.particles;
        if p.n == 0 || p.w2_subsample == 0 {
            return Err(bad("particle counts must be positive"));
        }
        if self.ck.substeps == 0 || self.ck.n_max == 0 || !(self.ck.contraction > 0.0) {
            return Err(bad("ck settings must be positive"));
        }
        if !(self.fields.gamma >= 0.0) {
            return Err(bad("gamma must be nonnegative"));
        }
        if self.phases.is_empty() {
            return Err(bad("at least one phase is required"));
        }
        let nb = match d {
            1 => 0,
            2 => 1,
            _ => 3,
        };
        let check_modes = |modes: &[ModeSpec], comps: usize, what: &str| -> Result<(), HarnessError> {
            for m in modes {
                if m.k.len() != d || m.c >= comps {
                    return Err(bad(format!("{what}: mode {:?} component {} does not fit", m.k, m.c)));
                }
                if m.k.iter().any(|k| k.unsigned_abs() as usize > r.cutoff) {
                    return Err(bad(format!("{what}: mode {:?} exceeds the cutoff", m.k)));
                }
                if m.k.iter().all(|k| *k == 0) {
                    return Err(bad(format!("{what}: use the mean for the zero mode")));
                }
            }
            Ok(())
        };
        for (i, ph) in self.phases.iter().enumerate() {
            if !(ph.weight > 0.0) {
                return Err(bad(format!("phase {i}: weight must be positive")));
            }
            if ph.xi_mean.len() != d {
                return Err(bad(format!("phase {i}: xi_mean needs {d} entries")));
            }
            check_modes(&ph.rho, 1, &format!("phase {i} rho"))?;
            check_modes(&ph.xi, d, &format!("phase {i} xi"))?;
        }
        if nb == 0 && (self.fields.b0 != MagneticData::Zero || !self.fields.e_transverse.is_empty()) {
            return Err(bad("one-dimensional runs carry no transverse fields"));
        }
        check_modes(&self.fields.b0_modes, nb.max(1), "b0_modes")?;
        check_modes(&self.fields.e_transverse, d, "e_transverse")?;
        if self.fields.b0 != MagneticData::Modes && !self.fields.b0_modes.is_empty() {
            return Err(bad("b0_modes given but b0 is not \"modes\""));
        }
        Ok(())
    }
}
