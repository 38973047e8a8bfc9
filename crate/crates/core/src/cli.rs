//! Command-line front end.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crate::config::{parse_config, Command, EffectiveConfig, Overrides, RunConfig};
use crate::error::{Error, Result};
use crate::moments::stationary_profile;
use crate::output::{self, git_describe, version};
use crate::params::{ChainParams, TensionSchedule};
use crate::pde::{stationary_profiles, thermal_split, MacroSolver};
use crate::sim::run_ness;
use crate::verify::{richardson, run_suite, scaled_currents};

pub const EXIT_OK: i32 = 0;
pub const EXIT_ENGINE: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "ness", version, about = "Stationary and transient moments of a harmonic chain with momentum exchange")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Debug, Subcommand)]
enum Sub {
    /// Exact stationary moments and profiles.
    Moments(CommonArgs),
    /// Monte-Carlo estimate of the stationary profiles.
    Simulate(CommonArgs),
    /// Macroscopic stretch and energy fields.
    Pde(CommonArgs),
    /// Run the verification suite.
    Verify(CommonArgs),
    /// Sign of the extrapolated current over a tension range.
    Sweep(CommonArgs),
}

#[derive(Debug, Args)]
struct CommonArgs {
    /// TOML configuration file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long = "gamma-tilde")]
    gamma_tilde: Option<f64>,
    /// Tension; `lo:step:hi` for sweep.
    #[arg(long, allow_hyphen_values = true)]
    tau: Option<String>,
    #[arg(long = "t-minus", alias = "T-minus")]
    t_minus: Option<f64>,
    #[arg(long = "t-plus", alias = "T-plus")]
    t_plus: Option<f64>,
    /// Simulator time step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    replicas: Option<usize>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// quick or full.
    #[arg(long)]
    suite: Option<String>,
}

impl CommonArgs {
    fn overrides(&self) -> Overrides {
        Overrides {
            n: self.n,
            gamma: self.gamma,
            gamma_tilde: self.gamma_tilde,
            tau: self.tau.clone(),
            t_minus: self.t_minus,
            t_plus: self.t_plus,
            dt: self.dt,
            seed: self.seed,
            replicas: self.replicas,
            out: self.out.clone(),
            suite: self.suite.clone(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Manifest<'a> {
    tool: &'static str,
    version: &'static str,
    git_describe: &'static str,
    command: &'static str,
    seed: u64,
    threads: usize,
    config: EffectiveConfig,
    outputs: &'a [String],
}

/// Result of a completed run.
#[derive(Debug)]
pub struct Outcome {
    pub exit_code: i32,
    pub summary: String,
    pub outputs: Vec<String>,
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let (command, common) = match &cli.command {
        Sub::Moments(a) => (Command::Moments, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Pde(a) => (Command::Pde, a),
        Sub::Verify(a) => (Command::Verify, a),
        Sub::Sweep(a) => (Command::Sweep, a),
    };
    if let Err(e) = configure_threads() {
        eprintln!("error: {e}");
        return EXIT_CONFIG;
    }
    let cfg = match parse_config(command, common.config.as_deref(), &common.overrides()) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return EXIT_CONFIG;
        }
    };
    match run(&cfg) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            outcome.exit_code
        }
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_ENGINE
        }
    }
}

fn configure_threads() -> Result<()> {
    if let Ok(text) = std::env::var("NESS_THREADS") {
        let k: usize = text
            .trim()
            .parse()
            .ok()
            .filter(|k| *k > 0)
            .ok_or_else(|| Error::Config(format!("NESS_THREADS must be a positive integer, got '{text}'")))?;
        // A pool built earlier in the same process keeps its size.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(k).build_global();
    }
    Ok(())
}

/// Executes the subcommand and writes its artifacts, the config echo and the
/// manifest into `cfg.out`.
pub fn run(cfg: &RunConfig) -> Result<Outcome> {
    std::fs::create_dir_all(&cfg.out)?;
    let mut outcome = match cfg.command {
        Command::Moments => run_moments(cfg)?,
        Command::Simulate => run_simulate(cfg)?,
        Command::Pde => run_pde(cfg)?,
        Command::Verify => run_verify(cfg)?,
        Command::Sweep => run_sweep(cfg)?,
    };
    let echo = cfg.out.join("config.toml");
    std::fs::write(&echo, cfg.echo()?)?;
    outcome.outputs.push("config.toml".into());
    outcome.outputs.push("manifest.json".into());
    let manifest = Manifest {
        tool: "ness",
        version: version(),
        git_describe: git_describe(),
        command: cfg.command.name(),
        seed: cfg.seed,
        threads: rayon::current_num_threads(),
        config: cfg.effective(),
        outputs: &outcome.outputs,
    };
    output::write_json(&cfg.out.join("manifest.json"), &manifest)?;
    Ok(outcome)
}

fn path(dir: &Path, name: &str) -> PathBuf {
    dir.join(name)
}

fn constant_tau(params: &ChainParams, what: &str) -> Result<f64> {
    params
        .tau_plus
        .as_constant()
        .ok_or_else(|| Error::InvalidParameter(format!("{what} requires a constant tension")))
}

fn run_moments(cfg: &RunConfig) -> Result<Outcome> {
    constant_tau(&cfg.params, "moments")?;
    let (sol, prof) = stationary_profile(&cfg.params)?;
    output::write_profile_csv(output::create(&path(&cfg.out, "profile.csv"))?, &prof)?;
    let summary = json!({
        "n": cfg.params.n,
        "jbar": prof.jbar,
        "pbar": prof.pbar,
        "residual": sol.residual,
        "iterations": sol.iterations,
    });
    output::write_json(&path(&cfg.out, "summary.json"), &summary)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        summary: format!(
            "moments n={} jbar={:.10e} pbar={:.10e} residual={:.3e}",
            cfg.params.n, prof.jbar, prof.pbar, sol.residual
        ),
        outputs: vec!["profile.csv".into(), "summary.json".into()],
    })
}

fn run_simulate(cfg: &RunConfig) -> Result<Outcome> {
    constant_tau(&cfg.params, "simulate")?;
    let est = run_ness(&cfg.params, &cfg.sim)?;
    output::write_estimate_csv(output::create(&path(&cfg.out, "sim_profile.csv"))?, &est)?;
    let summary = json!({
        "n": cfg.params.n,
        "jbar": est.jbar.value,
        "jbar_se": est.jbar.std_err,
        "batches": est.batches,
        "flagged": est.flagged,
        "dt": cfg.sim.dt,
        "t_burnin": cfg.sim.t_burnin,
        "t_measure": cfg.sim.t_measure,
        "replicas": cfg.sim.n_replicas,
    });
    output::write_json(&path(&cfg.out, "summary.json"), &summary)?;
    if est.flagged {
        eprintln!(
            "warning: only {} batches; standard errors are unreliable",
            est.batches
        );
    }
    Ok(Outcome {
        exit_code: EXIT_OK,
        summary: format!(
            "simulate n={} jbar={:.6e} se={:.3e} batches={}{}",
            cfg.params.n,
            est.jbar.value,
            est.jbar.std_err,
            est.batches,
            if est.flagged { " FLAGGED" } else { "" }
        ),
        outputs: vec!["sim_profile.csv".into(), "summary.json".into()],
    })
}

fn run_pde(cfg: &RunConfig) -> Result<Outcome> {
    let mut solver = MacroSolver::from_rest(&cfg.params, cfg.pde.m, cfg.pde.dt)?;
    let mut snapshots = vec![solver.fields().clone()];
    for &t in &cfg.pde.times {
        if t > 0.0 {
            snapshots.push(solver.advance_to(t)?.clone());
        }
    }
    output::write_fields_csv(output::create(&path(&cfg.out, "fields.csv"))?, &snapshots)?;
    let t_end = snapshots.last().map(|f| f.t).unwrap_or(0.0);
    let tau_end = cfg.params.tau_plus.value_at(t_end);
    let stationary = stationary_profiles(&cfg.params.with_schedule(TensionSchedule::constant(tau_end))?)?;
    let k = snapshots.len();
    let residual = if k >= 2 {
        thermal_split(&snapshots[k - 1], cfg.params.gamma, Some(&snapshots[k - 2])).residual
    } else {
        thermal_split(&snapshots[0], cfg.params.gamma, None).residual
    };
    let summary = json!({
        "J_ss": stationary.j_ss,
        "u_max": stationary.u_max,
        "e_th_max": stationary.e_th_max,
        "tau_for_stationary": tau_end,
        "thermal_residual_last_interval": residual,
        "m": cfg.pde.m,
        "dt": cfg.pde.dt,
    });
    output::write_json(&path(&cfg.out, "summary.json"), &summary)?;
    Ok(Outcome {
        exit_code: EXIT_OK,
        summary: format!(
            "pde m={} t_end={} J_ss={:.6} u_max={:.6} e_th_max={:.6}",
            cfg.pde.m, t_end, stationary.j_ss, stationary.u_max, stationary.e_th_max
        ),
        outputs: vec!["fields.csv".into(), "summary.json".into()],
    })
}

fn run_verify(cfg: &RunConfig) -> Result<Outcome> {
    let params = cfg.params.with_schedule(TensionSchedule::constant(constant_tau(&cfg.params, "verify")?))?;
    let result = run_suite(cfg.suite, &params)?;
    let mut outputs = Vec::new();
    let mut seen = std::collections::HashMap::new();
    let mut index = Vec::new();
    for rep in &result.reports {
        let k = seen.entry(rep.check.clone()).or_insert(0usize);
        let name = if *k == 0 {
            format!("reports/{}.json", rep.check)
        } else {
            format!("reports/{}_{}.json", rep.check, k)
        };
        *k += 1;
        output::write_json(&path(&cfg.out, &name), rep)?;
        index.push(json!({"check": rep.check, "verdict": rep.verdict, "file": name}));
        outputs.push(name);
    }
    let summary = json!({"suite": result.suite, "passed": result.passed, "checks": index});
    output::write_json(&path(&cfg.out, "verify_summary.json"), &summary)?;
    outputs.push("verify_summary.json".into());
    let failed: Vec<&str> = result
        .reports
        .iter()
        .filter(|r| !r.passed())
        .map(|r| r.check.as_str())
        .collect();
    Ok(Outcome {
        exit_code: if result.passed { EXIT_OK } else { EXIT_VERIFY },
        summary: if failed.is_empty() {
            format!("verify suite={} passed ({} checks)", result.suite, result.reports.len())
        } else {
            format!("verify suite={} FAILED: {}", result.suite, failed.join(", "))
        },
        outputs,
    })
}

#[derive(Debug, Serialize)]
struct SweepRow {
    tau: f64,
    scaled_currents: Vec<f64>,
    extrapolated: f64,
    j_ss: f64,
    uphill: bool,
}

fn run_sweep(cfg: &RunConfig) -> Result<Outcome> {
    let p = &cfg.params;
    let mut ns = cfg.sweep.n_list.clone();
    ns.sort_unstable();
    ns.dedup();
    let rows = cfg
        .sweep
        .taus
        .par_iter()
        .map(|&tau| {
            let q = ChainParams::new(ns[0], p.gamma, p.gamma_tilde, tau, p.t_minus, p.t_plus)?;
            let vals = scaled_currents(&q, &ns)?;
            let extrapolated = richardson(&ns, &vals);
            Ok(SweepRow {
                tau,
                extrapolated,
                j_ss: stationary_profiles(&q)?.j_ss,
                uphill: extrapolated * (p.t_minus - p.t_plus) < 0.0,
                scaled_currents: vals,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let mut header = vec!["tau".to_string()];
    header.extend(ns.iter().map(|n| format!("n_jbar_{n}")));
    header.extend(["extrapolated", "j_ss", "sign", "uphill"].map(String::from));
    let mut w = csv::Writer::from_writer(output::create(&path(&cfg.out, "sweep.csv"))?);
    w.write_record(&header)?;
    let mut table = String::new();
    table.push_str("tau       n*jbar(ext)   J_ss        sign  uphill\n");
    for r in &rows {
        let sign = if r.extrapolated > 0.0 { "+" } else if r.extrapolated < 0.0 { "-" } else { "0" };
        let mut rec = vec![format!("{}", r.tau)];
        rec.extend(r.scaled_currents.iter().map(|v| format!("{v:.17e}")));
        rec.push(format!("{:.17e}", r.extrapolated));
        rec.push(format!("{:.17e}", r.j_ss));
        rec.push(sign.into());
        rec.push(r.uphill.to_string());
        w.write_record(&rec)?;
        table.push_str(&format!(
            "{:<9} {:>12.6} {:>11.6} {:>5} {:>7}\n",
            r.tau, r.extrapolated, r.j_ss, sign, r.uphill
        ));
    }
    w.flush()?;
    let crossing = rows
        .windows(2)
        .find(|w| w[0].extrapolated.signum() != w[1].extrapolated.signum())
        .map(|w| {
            let (a, b) = (&w[0], &w[1]);
            a.tau + (b.tau - a.tau) * a.extrapolated / (a.extrapolated - b.extrapolated)
        });
    let analytic = ((1.0 + p.gamma * p.gamma) * (p.t_minus - p.t_plus)).max(0.0).sqrt();
    let summary = json!({
        "n_list": ns,
        "rows": rows,
        "crossing": crossing,
        "analytic_crossing": analytic,
    });
    output::write_json(&path(&cfg.out, "summary.json"), &summary)?;
    print!("{table}");
    Ok(Outcome {
        exit_code: EXIT_OK,
        summary: match crossing {
            Some(c) => format!("sweep crossing at tau={c:.4} (analytic {analytic:.4})"),
            None => "sweep: no sign change on the grid".to_string(),
        },
        outputs: vec!["sweep.csv".into(), "summary.json".into()],
    })
}
