//! C interface to the exact moment solver, the stationary closed forms and
//! the simulator.
//!
//! Every fallible function returns a [`NessStatus`]. On failure a message is
//! kept per thread and can be read with [`ness_last_error`]. Handles are
//! created by `*_solve` / `*_run` functions and released with the matching
//! `*_free`.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use ness_core::moments::{stationary_profile, MomentSolution, ProfileTable};
use ness_core::pde::stationary_profiles;
use ness_core::sim::{run_ness, EstimateTable, SimConfig, SweepOrder};
use ness_core::{ChainParams, Error};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NessStatus {
    Ok = 0,
    InvalidArgument = 1,
    NullPointer = 2,
    IndexOutOfRange = 3,
    BufferTooSmall = 4,
    SolverFailure = 5,
    NumericalFailure = 6,
    Panic = 7,
}

/// Chain parameters with constant tension `tau`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NessParams {
    pub n: usize,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub tau: f64,
    pub t_minus: f64,
    pub t_plus: f64,
}

/// Per-site columns, indexed `x = 0..=n`.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NessColumn {
    MeanR = 0,
    MeanP = 1,
    Pp = 2,
    Rr = 3,
    PpLeft = 4,
    Energy = 5,
    /// NaN at `x = 0`.
    Phi = 6,
    Current = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct NessStationary {
    pub j_ss: f64,
    pub u_max: f64,
    pub e_th_max: f64,
    pub interior: bool,
}

#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct NessSimConfig {
    pub dt: f64,
    pub t_burnin: f64,
    pub t_measure: f64,
    pub n_replicas: usize,
    pub seed: u64,
    pub n_batches: usize,
    pub sample_every: usize,
}

/// Exact stationary moments.
pub struct NessMoments {
    solution: MomentSolution,
    profile: ProfileTable,
}

/// Simulator estimates.
pub struct NessEstimates {
    table: EstimateTable,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn status_of(err: &Error) -> NessStatus {
    match err {
        Error::InvalidParameter(_) | Error::Config(_) | Error::DimensionMismatch { .. } => {
            NessStatus::InvalidArgument
        }
        Error::IndexOutOfRange { .. } => NessStatus::IndexOutOfRange,
        Error::Solver { .. } | Error::NoConvergence { .. } | Error::NotPositiveSemidefinite(_) => {
            NessStatus::SolverFailure
        }
        Error::Unstable { .. } | Error::NonFinite { .. } => NessStatus::NumericalFailure,
        _ => NessStatus::SolverFailure,
    }
}

fn guard<F: FnOnce() -> Result<(), (NessStatus, String)>>(f: F) -> NessStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => NessStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(&msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            NessStatus::Panic
        }
    }
}

fn engine<T>(r: ness_core::Result<T>) -> Result<T, (NessStatus, String)> {
    r.map_err(|e| (status_of(&e), e.to_string()))
}

fn null(what: &str) -> (NessStatus, String) {
    (NessStatus::NullPointer, format!("{what} is null"))
}

unsafe fn params_from(p: *const NessParams) -> Result<ChainParams, (NessStatus, String)> {
    let p = p.as_ref().ok_or_else(|| null("params"))?;
    engine(ChainParams::new(p.n, p.gamma, p.gamma_tilde, p.tau, p.t_minus, p.t_plus))
}

/// Library version, a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ness_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Message of the last failure on this thread. Valid until the next failing
/// call on the same thread; empty if none.
#[no_mangle]
pub extern "C" fn ness_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Solves for the exact stationary moments.
///
/// # Safety
/// `params` must point to a valid `NessParams`; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_solve(
    params: *const NessParams,
    out: *mut *mut NessMoments,
) -> NessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = params_from(params)?;
        let (solution, profile) = engine(stationary_profile(&p))?;
        *out = Box::into_raw(Box::new(NessMoments { solution, profile }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `ness_moments_solve` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_free(h: *mut NessMoments) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Number of springs, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_n(h: *const NessMoments) -> usize {
    h.as_ref().map(|m| m.profile.n).unwrap_or(0)
}

/// State dimension `2n + 1`, 0 for a null handle.
///
/// # Safety
/// `h` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_dim(h: *const NessMoments) -> usize {
    h.as_ref().map(|m| m.solution.mean.len()).unwrap_or(0)
}

/// Scalar summaries: left boundary current, average momentum and solver residual.
///
/// # Safety
/// `h` must be a live handle; each output pointer may be null.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_summary(
    h: *const NessMoments,
    jbar: *mut f64,
    pbar: *mut f64,
    residual: *mut f64,
) -> NessStatus {
    guard(|| {
        let m = h.as_ref().ok_or_else(|| null("handle"))?;
        if let Some(v) = jbar.as_mut() {
            *v = m.profile.jbar;
        }
        if let Some(v) = pbar.as_mut() {
            *v = m.profile.pbar;
        }
        if let Some(v) = residual.as_mut() {
            *v = m.solution.residual;
        }
        Ok(())
    })
}

/// Mean of state coordinate `a` (`r_x` at `x-1`, `p_x` at `n+x`).
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_mean(h: *const NessMoments, a: usize, out: *mut f64) -> NessStatus {
    guard(|| {
        let m = h.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let dim = m.solution.mean.len();
        if a >= dim {
            return Err((NessStatus::IndexOutOfRange, format!("index {a} >= {dim}")));
        }
        *out = m.solution.mean[a];
        Ok(())
    })
}

/// Raw second moment `E[z_a z_b]`.
///
/// # Safety
/// `h` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_second(
    h: *const NessMoments,
    a: usize,
    b: usize,
    out: *mut f64,
) -> NessStatus {
    guard(|| {
        let m = h.as_ref().ok_or_else(|| null("handle"))?;
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let dim = m.solution.mean.len();
        if a >= dim || b >= dim {
            return Err((NessStatus::IndexOutOfRange, format!("index ({a}, {b}) outside {dim}")));
        }
        *out = m.solution.at(a, b);
        Ok(())
    })
}

fn profile_column(p: &ProfileTable, col: NessColumn) -> Vec<f64> {
    match col {
        NessColumn::MeanR => p.mean_r.clone(),
        NessColumn::MeanP => p.mean_p.clone(),
        NessColumn::Pp => p.pp.clone(),
        NessColumn::Rr => p.rr.clone(),
        NessColumn::PpLeft => p.pp_left.clone(),
        NessColumn::Energy => p.energy.clone(),
        NessColumn::Phi => p.phi.iter().map(|v| v.unwrap_or(f64::NAN)).collect(),
        NessColumn::Current => p.current.clone(),
    }
}

unsafe fn copy_out(values: &[f64], buf: *mut f64, len: usize) -> Result<(), (NessStatus, String)> {
    if buf.is_null() {
        return Err(null("buffer"));
    }
    if len < values.len() {
        return Err((
            NessStatus::BufferTooSmall,
            format!("buffer holds {len} values, {} needed", values.len()),
        ));
    }
    ptr::copy_nonoverlapping(values.as_ptr(), buf, values.len());
    Ok(())
}

/// Copies column `col` (n + 1 values) into `buf`.
///
/// # Safety
/// `h` must be a live handle; `buf` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ness_moments_profile(
    h: *const NessMoments,
    col: NessColumn,
    buf: *mut f64,
    len: usize,
) -> NessStatus {
    guard(|| {
        let m = h.as_ref().ok_or_else(|| null("handle"))?;
        copy_out(&profile_column(&m.profile, col), buf, len)
    })
}

/// Closed-form macroscopic stationary quantities (`n` is ignored but must be ≥ 2).
///
/// # Safety
/// `params` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ness_stationary_profiles(
    params: *const NessParams,
    out: *mut NessStationary,
) -> NessStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = params_from(params)?;
        let sp = engine(stationary_profiles(&p))?;
        *out = NessStationary {
            j_ss: sp.j_ss,
            u_max: sp.u_max,
            e_th_max: sp.e_th_max,
            interior: sp.interior,
        };
        Ok(())
    })
}

/// Default simulator settings for `params`.
///
/// # Safety
/// `params` must be valid and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ness_sim_config_default(
    params: *const NessParams,
    out: *mut NessSimConfig,
) -> NessStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("out"))?;
        let p = params_from(params)?;
        let c = SimConfig::defaults_for(&p);
        *out = NessSimConfig {
            dt: c.dt,
            t_burnin: c.t_burnin,
            t_measure: c.t_measure,
            n_replicas: c.n_replicas,
            seed: c.seed,
            n_batches: c.n_batches,
            sample_every: c.sample_every,
        };
        Ok(())
    })
}

/// Runs the stationary simulation with the even-odd exchange sweep.
///
/// # Safety
/// `params` and `cfg` must be valid; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ness_simulate(
    params: *const NessParams,
    cfg: *const NessSimConfig,
    out: *mut *mut NessEstimates,
) -> NessStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        *out = ptr::null_mut();
        let p = params_from(params)?;
        let c = cfg.as_ref().ok_or_else(|| null("cfg"))?;
        let sim = SimConfig {
            dt: c.dt,
            t_burnin: c.t_burnin,
            t_measure: c.t_measure,
            n_replicas: c.n_replicas,
            seed: c.seed,
            sweep_order: SweepOrder::EvenOdd,
            n_batches: c.n_batches,
            sample_every: c.sample_every,
        };
        let table = engine(run_ness(&p, &sim))?;
        *out = Box::into_raw(Box::new(NessEstimates { table }));
        Ok(())
    })
}

/// # Safety
/// `h` must come from `ness_simulate` and not be freed twice. Null is ignored.
#[no_mangle]
pub unsafe extern "C" fn ness_estimates_free(h: *mut NessEstimates) {
    if !h.is_null() {
        drop(Box::from_raw(h));
    }
}

/// Batch count and whether the run fell below the minimum batch count.
///
/// # Safety
/// `h` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn ness_estimates_info(
    h: *const NessEstimates,
    batches: *mut usize,
    flagged: *mut bool,
) -> NessStatus {
    guard(|| {
        let e = h.as_ref().ok_or_else(|| null("handle"))?;
        if let Some(v) = batches.as_mut() {
            *v = e.table.batches;
        }
        if let Some(v) = flagged.as_mut() {
            *v = e.table.flagged;
        }
        Ok(())
    })
}

/// Estimated left boundary current and its standard error.
///
/// # Safety
/// `h` must be a live handle; output pointers may be null.
#[no_mangle]
pub unsafe extern "C" fn ness_estimates_jbar(
    h: *const NessEstimates,
    value: *mut f64,
    std_err: *mut f64,
) -> NessStatus {
    guard(|| {
        let e = h.as_ref().ok_or_else(|| null("handle"))?;
        if let Some(v) = value.as_mut() {
            *v = e.table.jbar.value;
        }
        if let Some(v) = std_err.as_mut() {
            *v = e.table.jbar.std_err;
        }
        Ok(())
    })
}

/// Copies estimates and standard errors of column `col` (n + 1 values each).
///
/// # Safety
/// `h` must be a live handle; `values` and `std_errs` must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn ness_estimates_column(
    h: *const NessEstimates,
    col: NessColumn,
    values: *mut f64,
    std_errs: *mut f64,
    len: usize,
) -> NessStatus {
    guard(|| {
        let e = h.as_ref().ok_or_else(|| null("handle"))?;
        let t = &e.table;
        let src = match col {
            NessColumn::MeanR => &t.mean_r,
            NessColumn::MeanP => &t.mean_p,
            NessColumn::Pp => &t.pp,
            NessColumn::Rr => &t.rr,
            NessColumn::PpLeft => &t.pp_left,
            NessColumn::Energy => &t.energy,
            NessColumn::Phi => &t.phi,
            NessColumn::Current => &t.current,
        };
        let v: Vec<f64> = src.iter().map(|e| e.value).collect();
        let s: Vec<f64> = src.iter().map(|e| e.std_err).collect();
        copy_out(&v, values, len)?;
        copy_out(&s, std_errs, len)
    })
}
