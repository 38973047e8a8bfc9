//! Time evolution of means and raw second moments in macroscopic time.
//!
//! `dm/dt = n²(B m + c(t))` and
//! `dM/dt = n²(B M + M Bᵀ + Σ C_k M C_kᵀ + c(t) mᵀ + m c(t)ᵀ + D)`,
//! integrated with classical RK4.

use nalgebra::{DMatrix, DVector};

use super::MomentSolution;
use crate::chain::{assemble_operators, ip, OperatorSet};
use crate::error::{Error, Result};
use crate::params::ChainParams;

/// Upper bound on `n² · dt · ‖B‖₁`.
pub const STEP_BOUND: f64 = 0.5;
const MAX_HALVINGS: u32 = 8;
const BLOWUP_FACTOR: f64 = 1e6;

/// Largest macroscopic step allowed for these parameters.
pub fn max_stable_step(ops: &OperatorSet) -> f64 {
    let n2 = (ops.n * ops.n) as f64;
    STEP_BOUND / (n2 * ops.b.norm_one())
}

struct Rhs<'a> {
    ops: OperatorSet,
    params: &'a ChainParams,
    n2: f64,
}

impl Rhs<'_> {
    fn eval(&mut self, t: f64, m: &DVector<f64>, s: &DMatrix<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let n = self.ops.n;
        self.ops.c[ip(n, n)] = self.params.tau_plus.value_at(t);
        let dm = self.ops.drift(m) * self.n2;
        let ds = self.ops.second_moment_rhs(m, s) * self.n2;
        (dm, ds)
    }
}

/// Evolves `initial` and returns snapshots at each of `output_times`
/// (macroscopic, nondecreasing, ≥ 0). `dt` is an upper bound on the step;
/// it is reduced to respect [`STEP_BOUND`].
pub fn evolve_moments(
    params: &ChainParams,
    initial: &MomentSolution,
    output_times: &[f64],
    dt: f64,
) -> Result<Vec<MomentSolution>> {
    params.validate()?;
    let dim = params.dim();
    if initial.mean.len() != dim || initial.second.nrows() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: initial.mean.len(),
        });
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    if output_times.windows(2).any(|w| w[1] < w[0]) || output_times.iter().any(|&t| t < 0.0) {
        return Err(Error::InvalidParameter(
            "output times must be nonnegative and sorted".into(),
        ));
    }
    let t0 = initial.time.unwrap_or(0.0);
    let ops = assemble_operators(params, params.tau_plus.value_at(t0))?;
    let h_max = dt.min(max_stable_step(&ops));
    let mut rhs = Rhs {
        ops,
        params,
        n2: (params.n * params.n) as f64,
    };

    let mut m = initial.mean.clone();
    let mut s = symmetrized(&initial.second);
    let mut t = t0;
    let bound = BLOWUP_FACTOR * (1.0 + s.amax() + forcing_scale(params));
    let mut out = Vec::with_capacity(output_times.len());

    for &target in output_times {
        if target < t {
            return Err(Error::InvalidParameter(format!(
                "output time {target} precedes start time {t}"
            )));
        }
        let span = target - t;
        let mut halvings = 0;
        loop {
            let h_try = h_max / f64::from(1u32 << halvings);
            let steps = (span / h_try).ceil().max(if span > 0.0 { 1.0 } else { 0.0 }) as usize;
            let h = if steps > 0 { span / steps as f64 } else { 0.0 };
            match integrate(&mut rhs, t, &m, &s, h, steps, bound) {
                Some((m1, s1)) => {
                    m = m1;
                    s = s1;
                    t = target;
                    break;
                }
                None if halvings < MAX_HALVINGS => {
                    halvings += 1;
                    log::warn!("moment evolution unstable near t={t}; halving step ({halvings})");
                }
                None => {
                    return Err(Error::Unstable {
                        time: t,
                        reason: format!("moment growth beyond {bound:.3e} after {halvings} halvings"),
                    })
                }
            }
        }
        let residual = rhs.eval(t, &m, &s).1.amax() / rhs.n2;
        out.push(MomentSolution {
            mean: m.clone(),
            second: s.clone(),
            residual,
            iterations: 0,
            time: Some(t),
        });
    }
    Ok(out)
}

fn forcing_scale(params: &ChainParams) -> f64 {
    let tau = match params.tau_plus {
        crate::params::TensionSchedule::Constant { value } => value.abs(),
        crate::params::TensionSchedule::Ramp { from, to, .. } => from.abs().max(to.abs()),
        crate::params::TensionSchedule::Sinusoid {
            mean, amplitude, ..
        } => mean.abs() + amplitude.abs(),
    };
    params.t_minus + params.t_plus + tau * tau
}

fn integrate(
    rhs: &mut Rhs,
    t0: f64,
    m0: &DVector<f64>,
    s0: &DMatrix<f64>,
    h: f64,
    steps: usize,
    bound: f64,
) -> Option<(DVector<f64>, DMatrix<f64>)> {
    let mut m = m0.clone();
    let mut s = s0.clone();
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let (k1m, k1s) = rhs.eval(t, &m, &s);
        let (k2m, k2s) = rhs.eval(t + 0.5 * h, &(&m + &k1m * (0.5 * h)), &(&s + &k1s * (0.5 * h)));
        let (k3m, k3s) = rhs.eval(t + 0.5 * h, &(&m + &k2m * (0.5 * h)), &(&s + &k2s * (0.5 * h)));
        let (k4m, k4s) = rhs.eval(t + h, &(&m + &k3m * h), &(&s + &k3s * h));
        m += (k1m + k2m * 2.0 + k3m * 2.0 + k4m) * (h / 6.0);
        s += (k1s + k2s * 2.0 + k3s * 2.0 + k4s) * (h / 6.0);
        s = symmetrized(&s);
        let size = s.amax();
        if !size.is_finite() || size > bound || m.iter().any(|v| !v.is_finite()) {
            return None;
        }
    }
    Some((m, s))
}

fn symmetrized(s: &DMatrix<f64>) -> DMatrix<f64> {
    (s + s.transpose()) * 0.5
}

/// Moments of the product Gibbs measure at temperature `t` with zero mean.
pub fn gibbs_moments(n: usize, t: f64) -> MomentSolution {
    let dim = 2 * n + 1;
    MomentSolution {
        mean: DVector::zeros(dim),
        second: DMatrix::identity(dim, dim) * t,
        residual: 0.0,
        iterations: 0,
        time: Some(0.0),
    }
}

/// Moments of a product Gaussian ensemble: independent `r_x ~ N(mean_r[x-1], var_r[x-1])`
/// and `p_x ~ N(mean_p[x], var_p[x])`.
pub fn product_gaussian_moments(
    mean_r: &[f64],
    var_r: &[f64],
    mean_p: &[f64],
    var_p: &[f64],
) -> Result<MomentSolution> {
    let n = mean_r.len();
    if var_r.len() != n || mean_p.len() != n + 1 || var_p.len() != n + 1 {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: var_r.len(),
        });
    }
    if var_r.iter().chain(var_p).any(|&v| !(v >= 0.0)) {
        return Err(Error::InvalidParameter("variances must be nonnegative".into()));
    }
    let mean = DVector::from_iterator(2 * n + 1, mean_r.iter().chain(mean_p).copied());
    let mut second = &mean * mean.transpose();
    for (i, v) in var_r.iter().chain(var_p).enumerate() {
        second[(i, i)] += v;
    }
    Ok(MomentSolution {
        mean,
        second,
        residual: 0.0,
        iterations: 0,
        time: Some(0.0),
    })
}
