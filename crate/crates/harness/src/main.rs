use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vmlimit_harness::ck::run_ck;
use vmlimit_harness::config::Mode;
use vmlimit_harness::io::{read_cloud, write_json};
use vmlimit_harness::run::{run_pair, write_run, RunOptions};
use vmlimit_harness::sweep::{run_sweep, write_sweep};
use vmlimit_harness::verify::{verify_suite, Status, VerifyOptions};
use vmlimit_harness::{HarnessError, RunConfig};
use vmlimit_transport::{cloud_measure, w2_exact, w2_sliced, ExactOptions};

#[derive(Parser)]
#[command(name = "vmlimit", version, about = "Vlasov-Maxwell to Vlasov-Poisson limit experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// Config file; `bundled/small2d` and `bundled/ck2d` are built in.
    #[arg(long, default_value = "bundled/small2d")]
    config: String,
    /// Overrides the mode named in the config.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Comma-separated list of eps values.
    #[arg(long, value_delimiter = ',')]
    eps: Option<Vec<f64>>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    t_final: Option<f64>,
    #[arg(long)]
    cutoff: Option<usize>,
    /// Number of particles.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Runs the mode named in the config (pair runs for vm, vp and pair).
    Simulate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Also write cloud snapshots under <output_dir>/clouds.
        #[arg(long)]
        snapshots: bool,
    },
    /// Paired runs over the eps list with a fitted rate.
    Sweep {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// Successive approximations and their comparison with time stepping.
    Ck {
        #[command(flatten)]
        cfg: ConfigArgs,
    },
    /// W2 between the VP and VM marginals of a cloud snapshot.
    Wasserstein {
        cloud: PathBuf,
        /// Projections of the sliced estimator used above the exact-solver limit.
        #[arg(long, default_value_t = 256)]
        projections: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Invariant battery.
    Verify {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Corrupt the gauge before checking it.
        #[arg(long)]
        break_gauge: bool,
    },
    /// Summary of a JSON report.
    Report { path: PathBuf },
}

impl ConfigArgs {
    fn load(&self) -> Result<RunConfig, HarnessError> {
        let mut cfg = RunConfig::load(&self.config)?;
        if let Some(m) = self.mode {
            cfg.run.mode = m;
        }
        if let Some(e) = &self.eps {
            cfg.run.eps = e.clone();
        }
        if let Some(v) = self.dt {
            cfg.run.dt = v;
        }
        if let Some(v) = self.t_final {
            cfg.run.t_final = v;
        }
        if let Some(v) = self.cutoff {
            cfg.run.cutoff = v;
        }
        if let Some(v) = self.n {
            cfg.particles.n = v;
        }
        if let Some(v) = self.seed {
            cfg.particles.seed = v;
        }
        if let Some(v) = &self.output_dir {
            cfg.run.output_dir = v.display().to_string();
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn simulate(cfg: &RunConfig, snapshots: bool) -> Result<u8, HarnessError> {
    match cfg.run.mode {
        Mode::Sweep => sweep(cfg),
        Mode::Ck => ck(cfg),
        Mode::Verify => verify(cfg, &VerifyOptions::default()),
        Mode::Vm | Mode::Vp | Mode::Pair => {
            let dir = PathBuf::from(&cfg.run.output_dir);
            let mut code = 0;
            for &eps in &cfg.run.eps {
                let opts = RunOptions { snapshot_dir: snapshots.then(|| dir.join("clouds").join(format!("eps{eps}"))) };
                let r = run_pair(cfg, eps, &opts)?;
                write_run(&dir, &r)?;
                println!("eps {eps}: sup W2 {:.6e}, sup Q {:.6e}", r.sup_w2, r.sup_q);
                if r.aborted.is_some() {
                    code = 3;
                }
            }
            Ok(code)
        }
    }
}

fn sweep(cfg: &RunConfig) -> Result<u8, HarnessError> {
    let r = run_sweep(cfg, &cfg.run.eps)?;
    write_sweep(PathBuf::from(&cfg.run.output_dir).as_path(), &r)?;
    for e in &r.entries {
        println!("eps {:<8} sup W2 {:.6e}", e.eps, e.sup_w2);
    }
    if let Some(f) = &r.fit {
        println!("kappa_measured {:.4} (R^2 {:.4}), monotone {}", f.kappa_measured, f.r_squared, r.monotone);
    }
    Ok(if r.partial { 3 } else { 0 })
}

fn ck(cfg: &RunConfig) -> Result<u8, HarnessError> {
    let dir = PathBuf::from(&cfg.run.output_dir);
    std::fs::create_dir_all(&dir)?;
    let r = run_ck(cfg, cfg.run.eps[0])?;
    write_json(&dir.join("ck.json"), &r)?;
    println!("ratios {:?}", r.iteration.ratios);
    println!("stepping gap {:.3e}, contracts {}", r.stepping_gap, r.contracts);
    Ok(if r.iteration.diverged { 3 } else { 0 })
}

fn verify(cfg: &RunConfig, opts: &VerifyOptions) -> Result<u8, HarnessError> {
    let r = verify_suite(cfg, opts);
    let dir = PathBuf::from(&cfg.run.output_dir);
    std::fs::create_dir_all(&dir)?;
    write_json(&dir.join("verify.json"), &r)?;
    for c in &r.checks {
        let status = match c.status {
            Status::Pass => "pass",
            Status::Fail => "FAIL",
            Status::ExpectedFail => "expected-fail",
        };
        println!("{status:<14} {:<30} {:.3e} (tol {:.1e})", c.name, c.measured, c.tolerance);
    }
    Ok(if r.all_pass { 0 } else { 1 })
}

fn wasserstein(path: &PathBuf, projections: usize, seed: u64) -> Result<u8, HarnessError> {
    let (cloud, t) = read_cloud(path)?;
    let vp = cloud_measure(&cloud, false)?;
    let vm = cloud_measure(&cloud, true)?;
    if cloud.len() <= ExactOptions::default().n_exact {
        println!("t {t}: W2 {:.10e} (exact)", w2_exact(&vp, &vm)?);
    } else {
        println!("t {t}: W2 {:.10e} (sliced, {projections} projections)", w2_sliced(&vp, &vm, projections, seed)?);
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> Result<u8, HarnessError> {
    match cli.command {
        Command::Simulate { cfg, snapshots } => simulate(&cfg.load()?, snapshots),
        Command::Sweep { cfg } => sweep(&cfg.load()?),
        Command::Ck { cfg } => ck(&cfg.load()?),
        Command::Wasserstein { cloud, projections, seed } => wasserstein(&cloud, projections, seed),
        Command::Verify { cfg, break_gauge } => verify(&cfg.load()?, &VerifyOptions { break_gauge }),
        Command::Report { path } => {
            let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&path)?)?;
            print!("{}", vmlimit_harness::report::summarize(&v)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
