//! Stochastic simulation of the chain by operator splitting.

mod integrator;
mod stats;

pub use integrator::{
    rotate_pair, step_exchange, step_hamiltonian, step_thermostat, strang_step, SweepOrder,
};
pub use stats::{batch_estimates, BatchAccumulator, Estimate};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chain::StateVector;
use crate::error::{Error, Result};
use crate::moments::{MomentSolution, ProfileTable};
use crate::params::ChainParams;

/// Batch count below which a run is flagged.
pub const MIN_BATCHES: usize = 8;
const FINITE_CHECK_EVERY: u64 = 256;
const BLOWUP: f64 = 1e150;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    /// Microscopic time step.
    pub dt: f64,
    /// Microscopic burn-in duration per replica.
    pub t_burnin: f64,
    /// Microscopic measurement duration per replica.
    pub t_measure: f64,
    pub n_replicas: usize,
    pub seed: u64,
    pub sweep_order: SweepOrder,
    /// Total batch count across replicas.
    pub n_batches: usize,
    /// Integrator steps between recorded samples.
    pub sample_every: usize,
}

impl SimConfig {
    pub fn default_dt(params: &ChainParams) -> f64 {
        0.02 / params.gamma.max(params.gamma_tilde).max(1.0)
    }

    pub fn defaults_for(params: &ChainParams) -> Self {
        let n2 = (params.n * params.n) as f64;
        SimConfig {
            dt: Self::default_dt(params),
            t_burnin: 20.0 * n2,
            t_measure: 200.0 * n2,
            n_replicas: 4,
            seed: 0,
            sweep_order: SweepOrder::EvenOdd,
            n_batches: 32,
            sample_every: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter("dt must be positive".into()));
        }
        if !(self.t_measure > 0.0 && self.t_measure.is_finite()) {
            return Err(Error::InvalidParameter("t_measure must be positive".into()));
        }
        if !(self.t_burnin >= 0.0 && self.t_burnin.is_finite()) {
            return Err(Error::InvalidParameter("t_burnin must be nonnegative".into()));
        }
        if self.n_replicas == 0 {
            return Err(Error::InvalidParameter("n_replicas must be at least 1".into()));
        }
        if self.n_batches == 0 || self.sample_every == 0 {
            return Err(Error::InvalidParameter(
                "n_batches and sample_every must be positive".into(),
            ));
        }
        Ok(())
    }

    fn replica_rng(&self, replica: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(replica as u64);
        rng
    }
}

/// Per-site estimates. Layout follows [`ProfileTable`]: index `x = 0..=n`,
/// with `mean_r`, `rr`, `pp_left` and `phi` carrying a zero placeholder at
/// `x = 0`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EstimateTable {
    pub n: usize,
    pub mean_r: Vec<Estimate>,
    pub mean_p: Vec<Estimate>,
    pub pp: Vec<Estimate>,
    pub rr: Vec<Estimate>,
    pub pp_left: Vec<Estimate>,
    pub energy: Vec<Estimate>,
    pub phi: Vec<Estimate>,
    pub current: Vec<Estimate>,
    pub jbar: Estimate,
    pub batches: usize,
    pub flagged: bool,
    pub time: Option<f64>,
}

/// One observable compared against a reference value.
#[derive(Debug, Clone, Serialize)]
pub struct Comparison {
    pub observable: &'static str,
    pub x: usize,
    pub estimate: Estimate,
    pub reference: f64,
}

impl Comparison {
    pub fn z_score(&self) -> f64 {
        self.estimate.z_score(self.reference)
    }
}

const BLOCKS: usize = 8;

fn sample_width(n: usize) -> usize {
    BLOCKS * (n + 1) + 1
}

/// Writes one sample of every tracked observable into `out`.
fn record(z: &StateVector, params: &ChainParams, tau: f64, out: &mut [f64]) {
    let n = z.n();
    let w = n + 1;
    let g = params.gamma;
    let s = z.as_slice();
    let r = |x: usize| if x == 0 { 0.0 } else { s[x - 1] };
    let p = |x: usize| s[n + x];
    for x in 0..=n {
        let (rx, px) = (r(x), p(x));
        let pl = if x == 0 { 0.0 } else { p(x - 1) * px };
        out[x] = rx;
        out[w + x] = px;
        out[2 * w + x] = px * px;
        out[3 * w + x] = rx * rx;
        out[4 * w + x] = pl;
        out[5 * w + x] = 0.5 * (px * px + rx * rx);
        out[6 * w + x] = if x == 0 {
            0.0
        } else {
            let pp = p(x - 1);
            crate::moments::phi_value(g, rx * rx, pl, px * px, pp * pp)
        };
        out[7 * w + x] = if x < n {
            let q = p(x + 1);
            -px * r(x + 1) + 0.5 * g * (px * px - q * q)
        } else {
            -0.5 * params.gamma_tilde * (params.t_plus - px * px) - tau * px
        };
    }
    let p0 = p(0);
    out[BLOCKS * w] = 0.5 * params.gamma_tilde * (params.t_minus - p0 * p0);
}

impl EstimateTable {
    fn from_estimates(n: usize, est: &[Estimate], batches: usize, time: Option<f64>) -> Self {
        let w = n + 1;
        let block = |k: usize| est[k * w..(k + 1) * w].to_vec();
        EstimateTable {
            n,
            mean_r: block(0),
            mean_p: block(1),
            pp: block(2),
            rr: block(3),
            pp_left: block(4),
            energy: block(5),
            phi: block(6),
            current: block(7),
            jbar: est[BLOCKS * w],
            batches,
            flagged: batches < MIN_BATCHES,
            time,
        }
    }

    /// Point estimates as a profile table.
    pub fn to_profile(&self) -> ProfileTable {
        let v = |e: &[Estimate]| e.iter().map(|e| e.value).collect::<Vec<_>>();
        let mean_r = v(&self.mean_r);
        let rr = v(&self.rr);
        let mut phi: Vec<Option<f64>> = self.phi.iter().map(|e| Some(e.value)).collect();
        phi[0] = None;
        let mean_p = v(&self.mean_p);
        let pbar = mean_p.iter().sum::<f64>() / (self.n + 1) as f64;
        ProfileTable {
            n: self.n,
            mech_energy_mean: mean_r.iter().map(|m| 0.5 * m * m).collect(),
            mech_energy_second: rr.iter().map(|m| 0.5 * m).collect(),
            mean_r,
            mean_p,
            pp: v(&self.pp),
            rr,
            pp_left: v(&self.pp_left),
            energy: v(&self.energy),
            phi,
            current: v(&self.current),
            jbar: self.jbar.value,
            pbar,
            time: self.time,
        }
    }

    /// First and second moments and currents against a reference profile:
    /// `⟨r_x⟩`, `⟨r_x²⟩` for `x ≥ 1`; `⟨p_x⟩`, `⟨p_x²⟩` and the current for all `x`.
    pub fn compare(&self, reference: &ProfileTable) -> Vec<Comparison> {
        let mut out = Vec::new();
        let mut push = |name: &'static str, est: &[Estimate], exact: &[f64], from: usize| {
            for x in from..=self.n {
                out.push(Comparison {
                    observable: name,
                    x,
                    estimate: est[x],
                    reference: exact[x],
                });
            }
        };
        push("mean_r", &self.mean_r, &reference.mean_r, 1);
        push("mean_p", &self.mean_p, &reference.mean_p, 0);
        push("pp", &self.pp, &reference.pp, 0);
        push("rr", &self.rr, &reference.rr, 1);
        push("current", &self.current, &reference.current, 0);
        out
    }
}

/// Initial law for transient runs.
#[derive(Debug, Clone)]
pub enum InitialEnsemble {
    /// Independent coordinates; means and variances indexed like the state
    /// vector.
    ProductGaussian { mean: Vec<f64>, var: Vec<f64> },
    /// Correlated Gaussian with lower Cholesky factor of the covariance.
    Gaussian { mean: Vec<f64>, chol: DMatrix<f64> },
}

impl InitialEnsemble {
    /// Zero-mean Gibbs law at temperature `t`.
    pub fn gibbs(n: usize, t: f64) -> Self {
        let dim = 2 * n + 1;
        InitialEnsemble::ProductGaussian {
            mean: vec![0.0; dim],
            var: vec![t; dim],
        }
    }

    /// Product Gaussian with per-site `r` and `p` laws.
    pub fn product(mean_r: &[f64], var_r: &[f64], mean_p: &[f64], var_p: &[f64]) -> Result<Self> {
        let n = mean_r.len();
        if var_r.len() != n || mean_p.len() != n + 1 || var_p.len() != n + 1 {
            return Err(Error::DimensionMismatch {
                expected: n + 1,
                got: mean_p.len(),
            });
        }
        if var_r.iter().chain(var_p).any(|v| *v < 0.0 || !v.is_finite()) {
            return Err(Error::InvalidParameter("variances must be nonnegative".into()));
        }
        Ok(InitialEnsemble::ProductGaussian {
            mean: mean_r.iter().chain(mean_p).copied().collect(),
            var: var_r.iter().chain(var_p).copied().collect(),
        })
    }

    /// Gaussian law with the given first and second moments.
    pub fn from_moments(sol: &MomentSolution) -> Result<Self> {
        let cov = sol.covariance();
        let dim = cov.nrows();
        let jitter = 1e-12 * (1.0 + cov.diagonal().amax());
        let chol = (cov + DMatrix::identity(dim, dim) * jitter)
            .cholesky()
            .ok_or_else(|| Error::NotPositiveSemidefinite("initial covariance".into()))?;
        Ok(InitialEnsemble::Gaussian {
            mean: sol.mean.iter().copied().collect(),
            chol: chol.l(),
        })
    }

    fn dim(&self) -> usize {
        match self {
            InitialEnsemble::ProductGaussian { mean, .. } => mean.len(),
            InitialEnsemble::Gaussian { mean, .. } => mean.len(),
        }
    }

    fn sample<R: Rng + ?Sized>(&self, n: usize, rng: &mut R) -> StateVector {
        let z: Vec<f64> = match self {
            InitialEnsemble::ProductGaussian { mean, var } => mean
                .iter()
                .zip(var)
                .map(|(m, v)| m + v.sqrt() * rng.sample::<f64, _>(StandardNormal))
                .collect(),
            InitialEnsemble::Gaussian { mean, chol } => {
                let xi = DVector::from_fn(mean.len(), |_, _| rng.sample::<f64, _>(StandardNormal));
                let y = chol * xi;
                mean.iter().zip(y.iter()).map(|(m, y)| m + y).collect()
            }
        };
        StateVector::from_vec(n, z).expect("ensemble dimension checked")
    }
}

fn check_state(z: &StateVector, step: u64) -> Result<()> {
    if z.as_slice().iter().all(|v| v.is_finite() && v.abs() < BLOWUP) {
        Ok(())
    } else {
        Err(Error::NonFinite { step })
    }
}

fn run_replica(
    params: &ChainParams,
    cfg: &SimConfig,
    tau: f64,
    replica: usize,
    batches_per_replica: usize,
) -> Result<Vec<Vec<f64>>> {
    let n = params.n;
    let mut rng = cfg.replica_rng(replica);
    let init = InitialEnsemble::gibbs(n, 0.5 * (params.t_minus + params.t_plus));
    let mut z = init.sample(n, &mut rng);

    let burn_steps = (cfg.t_burnin / cfg.dt).ceil() as u64;
    let measure_steps = (cfg.t_measure / cfg.dt).ceil() as u64;
    let samples = (measure_steps / cfg.sample_every as u64).max(1);
    let batch_len = (samples / batches_per_replica as u64).max(1) as usize;

    let width = sample_width(n);
    let mut acc = BatchAccumulator::new(width, batch_len);
    let mut buf = vec![0.0; width];
    let mut step: u64 = 0;
    let advance = |z: &mut StateVector, rng: &mut ChaCha8Rng, step: &mut u64| -> Result<()> {
        strang_step(z, cfg.dt, tau, params, cfg.sweep_order, rng);
        *step += 1;
        if step.is_multiple_of(FINITE_CHECK_EVERY) {
            check_state(z, *step)?;
        }
        Ok(())
    };
    for _ in 0..burn_steps {
        advance(&mut z, &mut rng, &mut step)?;
    }
    for _ in 0..samples {
        for _ in 0..cfg.sample_every {
            advance(&mut z, &mut rng, &mut step)?;
        }
        check_state(&z, step)?;
        record(&z, params, tau, &mut buf);
        acc.push(&buf);
    }
    let mut batches = acc.into_batches();
    batches.truncate(batches_per_replica);
    Ok(batches)
}

/// Time averages in the stationary state over `cfg.n_replicas` independent
/// replicas. Replica `k` uses stream `k` of the seeded generator, and batch
/// means are merged in replica order, so the result does not depend on the
/// number of worker threads.
pub fn run_ness(params: &ChainParams, cfg: &SimConfig) -> Result<EstimateTable> {
    params.validate()?;
    cfg.validate()?;
    let tau = params.constant_tau()?;
    let per_replica = cfg.n_batches.div_ceil(cfg.n_replicas);
    let results: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|k| run_replica(params, cfg, tau, k, per_replica))
        .collect();
    let mut batches = Vec::new();
    for r in results {
        batches.extend(r?);
    }
    let est = batch_estimates(&batches, sample_width(params.n));
    if batches.len() < MIN_BATCHES {
        log::warn!("only {} batches; standard errors are unreliable", batches.len());
    }
    Ok(EstimateTable::from_estimates(
        params.n,
        &est,
        batches.len(),
        None,
    ))
}

/// Ensemble averages at macroscopic `times` (microscopic duration `n²·t`),
/// one trajectory per replica. Standard errors are across replicas.
pub fn run_transient(
    params: &ChainParams,
    cfg: &SimConfig,
    initial: &InitialEnsemble,
    times: &[f64],
) -> Result<Vec<EstimateTable>> {
    params.validate()?;
    cfg.validate()?;
    if initial.dim() != params.dim() {
        return Err(Error::DimensionMismatch {
            expected: params.dim(),
            got: initial.dim(),
        });
    }
    if times.windows(2).any(|w| w[1] < w[0]) || times.iter().any(|t| *t < 0.0 || !t.is_finite()) {
        return Err(Error::InvalidParameter(
            "output times must be finite, nonnegative and sorted".into(),
        ));
    }
    let n = params.n;
    let n2 = (n * n) as f64;
    let width = sample_width(n);
    let per_replica: Vec<Result<Vec<Vec<f64>>>> = (0..cfg.n_replicas)
        .into_par_iter()
        .map(|k| {
            let mut rng = cfg.replica_rng(k);
            let mut z = initial.sample(n, &mut rng);
            let mut now = 0.0;
            let mut step: u64 = 0;
            let mut rows = Vec::with_capacity(times.len());
            for &t in times {
                let span = (t - now) * n2;
                if span > 0.0 {
                    let k = (span / cfg.dt).ceil().max(1.0) as u64;
                    let h = span / k as f64;
                    for i in 0..k {
                        let mid = now + (i as f64 + 0.5) * h / n2;
                        let tau = params.tau_plus.value_at(mid);
                        strang_step(&mut z, h, tau, params, cfg.sweep_order, &mut rng);
                        step += 1;
                        if step.is_multiple_of(FINITE_CHECK_EVERY) {
                            check_state(&z, step)?;
                        }
                    }
                    now = t;
                }
                check_state(&z, step)?;
                let mut buf = vec![0.0; width];
                record(&z, params, params.tau_plus.value_at(t), &mut buf);
                rows.push(buf);
            }
            Ok(rows)
        })
        .collect();
    let mut per_replica_rows = Vec::with_capacity(cfg.n_replicas);
    for r in per_replica {
        per_replica_rows.push(r?);
    }
    Ok(times
        .iter()
        .enumerate()
        .map(|(i, &t)| {
            let rows: Vec<Vec<f64>> = per_replica_rows.iter().map(|r| r[i].clone()).collect();
            let est = batch_estimates(&rows, width);
            EstimateTable::from_estimates(n, &est, rows.len(), Some(t))
        })
        .collect())
}
