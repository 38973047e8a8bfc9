use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::checks::*;
use super::report::VerificationReport;
use crate::error::{Error, Result};
use crate::params::{ChainParams, TensionSchedule};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Quick,
    Full,
}

impl std::str::FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "quick" => Ok(Suite::Quick),
            "full" => Ok(Suite::Full),
            other => Err(Error::Config(format!(
                "unknown suite '{other}' (expected quick or full)"
            ))),
        }
    }
}

impl std::fmt::Display for Suite {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Suite::Quick => "quick",
            Suite::Full => "full",
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SuiteResult {
    pub suite: Suite,
    pub reports: Vec<VerificationReport>,
    pub passed: bool,
}

struct Ladders {
    ladder: &'static [usize],
    boundary: &'static [usize],
    uphill: &'static [usize],
    peak: usize,
    ode: &'static [usize],
    probe: &'static [usize],
}

type Job<'a> = Box<dyn Fn() -> Result<VerificationReport> + Send + Sync + 'a>;

/// Runs every check. `base` supplies `γ`, `γ̃` and, for the single-point
/// checks, `τ` and the bath temperatures; `n` is ignored.
pub fn run_suite(suite: Suite, base: &ChainParams) -> Result<SuiteResult> {
    let base = *base;
    let l = match suite {
        Suite::Quick => Ladders {
            ladder: &[32, 64, 128],
            boundary: &[32, 64, 128],
            uphill: &[32, 64],
            peak: 64,
            ode: &[16, 64],
            probe: &[16, 32, 64],
        },
        Suite::Full => Ladders {
            ladder: &[64, 128, 256],
            boundary: &[32, 64, 128, 256],
            uphill: &[64, 128],
            peak: 128,
            ode: &[16, 32, 64],
            probe: &[32, 64, 128],
        },
    };
    let (ladder, boundary, uphill_ns, peak_n, ode_ns, probe_ns) =
        (l.ladder, l.boundary, l.uphill.to_vec(), l.peak, l.ode.to_vec(), l.probe.to_vec());
    let (g, gt) = (base.gamma, base.gamma_tilde);
    let taus: Vec<f64> = (0..=12).map(|k| 0.25 * k as f64).collect();

    let mut jobs: Vec<Job> = Vec::new();
    jobs.push(Box::new(|| check_elongation_profile(&base, ladder)));
    jobs.push(Box::new(|| check_current_limit(&base, ladder)));
    jobs.push(Box::new(|| {
        check_energy_profile(&base, ladder, &[TestFunction::One, TestFunction::SinPi])
    }));
    jobs.push(Box::new(|| {
        check_uphill(&UphillGrid {
            gamma: g,
            gamma_tilde: gt,
            t_minus: 2.0,
            t_plus: 1.0,
            taus: taus.clone(),
            n_list: uphill_ns.clone(),
        })
    }));
    jobs.push(Box::new(move || {
        check_interior_maximum(&ChainParams::new(peak_n, g, gt, 2.0, 1.0, 1.0)?, peak_n)
    }));
    jobs.push(Box::new(|| check_boundary_limits(&base, boundary)));
    jobs.push(Box::new(|| {
        let ramp = TensionSchedule::Ramp {
            from: 0.0,
            to: 1.0,
            t_ramp: 0.5,
        };
        let p = ChainParams::new(ode_ns[0], g, gt, 0.0, base.t_minus, base.t_plus)?
            .with_schedule(ramp)?;
        check_nonstationary_consistency(
            &p,
            &ConsistencySetup {
                n_list: ode_ns.clone(),
                m: 256,
                times: vec![0.1, 0.5],
                pde_dt: 1e-4,
                ode_dt: 1e-3,
            },
        )
    }));
    for probe_gamma in [0.5, 2.0] {
        let ns = probe_ns.clone();
        jobs.push(Box::new(move || {
            let p = ChainParams::new(ns[0], probe_gamma, gt, base.constant_tau()?, base.t_minus, base.t_plus)?;
            conjecture_probe(&p, &ns)
        }));
    }
    jobs.push(Box::new(move || {
        let p = ChainParams::new(64, g, gt, 0.0, 2.0, 1.0)?;
        refrigerator_scan(&p, &[0.0, 0.5, 1.0, 1.5, 2.0, 2.5, 3.0], 64)
    }));

    let reports = jobs
        .par_iter()
        .map(|job| job())
        .collect::<Result<Vec<_>>>()?;
    let passed = reports.iter().all(|r| r.passed());
    Ok(SuiteResult {
        suite,
        reports,
        passed,
    })
}
