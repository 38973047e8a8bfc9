//! Run configuration: TOML file plus command-line overrides.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ChainParams, TensionSchedule};
use crate::pde::DEFAULT_M;
use crate::sim::{SimConfig, SweepOrder};
use crate::verify::Suite;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Command {
    Moments,
    Simulate,
    Pde,
    Verify,
    Sweep,
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Moments => "moments",
            Command::Simulate => "simulate",
            Command::Pde => "pde",
            Command::Verify => "verify",
            Command::Sweep => "sweep",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PdeSettings {
    pub m: usize,
    pub dt: f64,
    pub times: Vec<f64>,
}

impl Default for PdeSettings {
    fn default() -> Self {
        PdeSettings {
            m: DEFAULT_M,
            dt: 1e-3,
            times: vec![0.1, 0.5, 1.0],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSettings {
    pub taus: Vec<f64>,
    pub n_list: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub command: Command,
    pub params: ChainParams,
    pub sim: SimConfig,
    pub pde: PdeSettings,
    pub sweep: SweepSettings,
    pub suite: Suite,
    pub out: PathBuf,
    pub seed: u64,
}

/// Values given on the command line; `None` leaves the file or default value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub n: Option<usize>,
    pub gamma: Option<f64>,
    pub gamma_tilde: Option<f64>,
    /// A number, or `lo:step:hi` for sweeps.
    pub tau: Option<String>,
    pub t_minus: Option<f64>,
    pub t_plus: Option<f64>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub replicas: Option<usize>,
    pub out: Option<PathBuf>,
    pub suite: Option<String>,
}

pub const KNOWN_KEYS: [&str; 21] = [
    "n",
    "gamma",
    "gamma_tilde",
    "tau_plus",
    "T_minus",
    "T_plus",
    "seed",
    "out",
    "dt",
    "t_burnin",
    "t_measure",
    "replicas",
    "batches",
    "sample_every",
    "sweep_order",
    "m",
    "pde_dt",
    "times",
    "suite",
    "sweep_tau",
    "sweep_n",
];

/// The effective configuration in file form; reading it back reproduces the run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[allow(non_snake_case)]
pub struct EffectiveConfig {
    pub n: usize,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub T_minus: f64,
    pub T_plus: f64,
    pub seed: u64,
    pub out: String,
    pub dt: f64,
    pub t_burnin: f64,
    pub t_measure: f64,
    pub replicas: usize,
    pub batches: usize,
    pub sample_every: usize,
    pub sweep_order: SweepOrder,
    pub m: usize,
    pub pde_dt: f64,
    pub times: Vec<f64>,
    pub suite: Suite,
    pub sweep_tau: Vec<f64>,
    pub sweep_n: Vec<usize>,
    pub tau_plus: TensionSchedule,
}

impl RunConfig {
    pub fn effective(&self) -> EffectiveConfig {
        EffectiveConfig {
            n: self.params.n,
            gamma: self.params.gamma,
            gamma_tilde: self.params.gamma_tilde,
            T_minus: self.params.t_minus,
            T_plus: self.params.t_plus,
            seed: self.seed,
            out: self.out.display().to_string(),
            dt: self.sim.dt,
            t_burnin: self.sim.t_burnin,
            t_measure: self.sim.t_measure,
            replicas: self.sim.n_replicas,
            batches: self.sim.n_batches,
            sample_every: self.sim.sample_every,
            sweep_order: self.sim.sweep_order,
            m: self.pde.m,
            pde_dt: self.pde.dt,
            times: self.pde.times.clone(),
            suite: self.suite,
            sweep_tau: self.sweep.taus.clone(),
            sweep_n: self.sweep.n_list.clone(),
            tau_plus: self.params.tau_plus,
        }
    }

    pub fn echo(&self) -> Result<String> {
        toml::to_string(&self.effective()).map_err(|e| Error::Config(e.to_string()))
    }
}

/// Parses `lo:step:hi` (inclusive) or a single number.
pub fn parse_range(text: &str) -> Result<Vec<f64>> {
    let bad = || Error::Config(format!("invalid range '{text}' (expected lo:step:hi)"));
    let parts: Vec<&str> = text.split(':').collect();
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
    match parts.as_slice() {
        [v] => Ok(vec![num(v)?]),
        [lo, step, hi] => {
            let (lo, step, hi) = (num(lo)?, num(step)?, num(hi)?);
            if !(step > 0.0) || hi < lo || !lo.is_finite() || !hi.is_finite() {
                return Err(bad());
            }
            let count = ((hi - lo) / step + 1e-9).floor() as usize;
            Ok((0..=count).map(|k| lo + k as f64 * step).collect())
        }
        _ => Err(bad()),
    }
}

fn config_err(key: &str, expected: &str) -> Error {
    Error::Config(format!("key '{key}' must be {expected}"))
}

fn get_f64(t: &toml::Table, key: &str) -> Result<Option<f64>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Float(v)) => Ok(Some(*v)),
        Some(toml::Value::Integer(v)) => Ok(Some(*v as f64)),
        Some(_) => Err(config_err(key, "a number")),
    }
}

fn get_usize(t: &toml::Table, key: &str) -> Result<Option<usize>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Integer(v)) if *v >= 0 => Ok(Some(*v as usize)),
        Some(_) => Err(config_err(key, "a nonnegative integer")),
    }
}

fn get_str<'a>(t: &'a toml::Table, key: &str) -> Result<Option<&'a str>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::String(s)) => Ok(Some(s)),
        Some(_) => Err(config_err(key, "a string")),
    }
}

fn get_f64_list(t: &toml::Table, key: &str) -> Result<Option<Vec<f64>>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                toml::Value::Float(x) => Ok(*x),
                toml::Value::Integer(x) => Ok(*x as f64),
                _ => Err(config_err(key, "an array of numbers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(toml::Value::String(s)) => parse_range(s).map(Some),
        Some(_) => Err(config_err(key, "an array of numbers")),
    }
}

fn get_usize_list(t: &toml::Table, key: &str) -> Result<Option<Vec<usize>>> {
    match t.get(key) {
        None => Ok(None),
        Some(toml::Value::Array(items)) => items
            .iter()
            .map(|v| match v {
                toml::Value::Integer(x) if *x >= 0 => Ok(*x as usize),
                _ => Err(config_err(key, "an array of nonnegative integers")),
            })
            .collect::<Result<Vec<_>>>()
            .map(Some),
        Some(_) => Err(config_err(key, "an array of integers")),
    }
}

fn get_schedule(t: &toml::Table) -> Result<Option<TensionSchedule>> {
    match t.get("tau_plus") {
        None => Ok(None),
        Some(toml::Value::Float(v)) => Ok(Some(TensionSchedule::constant(*v))),
        Some(toml::Value::Integer(v)) => Ok(Some(TensionSchedule::constant(*v as f64))),
        Some(v @ toml::Value::Table(_)) => v
            .clone()
            .try_into()
            .map(Some)
            .map_err(|e| Error::Config(format!("key 'tau_plus': {e}"))),
        Some(_) => Err(config_err("tau_plus", "a number or a schedule table")),
    }
}

/// Reads the file (if any), applies `flags`, fills defaults and validates.
pub fn parse_config(command: Command, path: Option<&Path>, flags: &Overrides) -> Result<RunConfig> {
    let table = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| Error::Config(format!("cannot read {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("cannot parse {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };
    let unknown: Vec<&str> = table
        .keys()
        .map(|k| k.as_str())
        .filter(|k| !KNOWN_KEYS.contains(k))
        .collect();
    if !unknown.is_empty() {
        return Err(Error::Config(format!("unknown keys: {}", unknown.join(", "))));
    }

    let n = flags.n.or(get_usize(&table, "n")?).unwrap_or(16);
    let gamma = flags.gamma.or(get_f64(&table, "gamma")?).unwrap_or(1.0);
    let gamma_tilde = flags.gamma_tilde.or(get_f64(&table, "gamma_tilde")?).unwrap_or(1.0);
    let t_minus = flags.t_minus.or(get_f64(&table, "T_minus")?).unwrap_or(1.0);
    let t_plus = flags.t_plus.or(get_f64(&table, "T_plus")?).unwrap_or(2.0);

    let mut sweep_taus = get_f64_list(&table, "sweep_tau")?;
    let mut schedule = get_schedule(&table)?.unwrap_or(TensionSchedule::constant(1.0));
    if let Some(text) = &flags.tau {
        let values = parse_range(text)?;
        if command == Command::Sweep {
            sweep_taus = Some(values);
        } else if values.len() == 1 {
            schedule = TensionSchedule::constant(values[0]);
        } else {
            return Err(Error::Config("--tau ranges are only accepted by sweep".into()));
        }
    }
    let sweep_taus = sweep_taus.unwrap_or_else(|| (0..=12).map(|k| 0.25 * k as f64).collect());
    if command == Command::Sweep {
        schedule = TensionSchedule::constant(sweep_taus[0]);
    }

    let params = ChainParams::new(n, gamma, gamma_tilde, 0.0, t_minus, t_plus)
        .and_then(|p| p.with_schedule(schedule))
        .map_err(|e| Error::Config(e.to_string()))?;

    let seed = flags.seed.or(get_usize(&table, "seed")?.map(|s| s as u64)).unwrap_or(0);
    let mut sim = SimConfig::defaults_for(&params);
    sim.seed = seed;
    if let Some(v) = flags.dt.or(get_f64(&table, "dt")?) {
        sim.dt = v;
    }
    if let Some(v) = get_f64(&table, "t_burnin")? {
        sim.t_burnin = v;
    }
    if let Some(v) = get_f64(&table, "t_measure")? {
        sim.t_measure = v;
    }
    if let Some(v) = flags.replicas.or(get_usize(&table, "replicas")?) {
        sim.n_replicas = v;
    }
    if let Some(v) = get_usize(&table, "batches")? {
        sim.n_batches = v;
    }
    if let Some(v) = get_usize(&table, "sample_every")? {
        sim.sample_every = v;
    }
    if let Some(v) = get_str(&table, "sweep_order")? {
        sim.sweep_order = v.parse().map_err(Error::Config)?;
    }
    sim.validate().map_err(|e| Error::Config(e.to_string()))?;

    let mut pde = PdeSettings::default();
    if let Some(v) = get_usize(&table, "m")? {
        pde.m = v;
    }
    if let Some(v) = get_f64(&table, "pde_dt")? {
        pde.dt = v;
    }
    if let Some(v) = get_f64_list(&table, "times")? {
        pde.times = v;
    }
    if pde.m < 2 {
        return Err(Error::Config("m must be at least 2".into()));
    }
    if !(pde.dt > 0.0) {
        return Err(Error::Config("pde_dt must be positive".into()));
    }
    if pde.times.windows(2).any(|w| w[1] < w[0]) || pde.times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::Config("times must be nonnegative and sorted".into()));
    }

    let sweep = SweepSettings {
        taus: sweep_taus,
        n_list: get_usize_list(&table, "sweep_n")?.unwrap_or_else(|| vec![64, 128]),
    };
    if sweep.n_list.is_empty() || sweep.n_list.iter().any(|&n| n < 2) {
        return Err(Error::Config("sweep_n must list chain lengths >= 2".into()));
    }

    let suite_text = flags
        .suite
        .clone()
        .or(get_str(&table, "suite")?.map(str::to_string))
        .unwrap_or_else(|| "full".into());
    let suite: Suite = suite_text.parse()?;

    let out = flags
        .out
        .clone()
        .or(get_str(&table, "out")?.map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("ness-out"));

    Ok(RunConfig {
        command,
        params,
        sim,
        pde,
        sweep,
        suite,
        out,
        seed,
    })
}
