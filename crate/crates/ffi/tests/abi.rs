use std::ffi::CStr;
use std::ptr;

use ness_ffi::*;

fn params(n: usize) -> NessParams {
    NessParams {
        n,
        gamma: 1.0,
        gamma_tilde: 1.0,
        tau: 1.0,
        t_minus: 1.0,
        t_plus: 2.0,
    }
}

fn last_error() -> String {
    unsafe { CStr::from_ptr(ness_last_error()) }
        .to_string_lossy()
        .into_owned()
}

#[test]
fn version_is_nul_terminated() {
    let v = unsafe { CStr::from_ptr(ness_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

#[test]
fn solve_and_read_profile() {
    let p = params(12);
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ness_moments_solve(&p, &mut h) }, NessStatus::Ok);
    assert!(!h.is_null());
    unsafe {
        assert_eq!(ness_moments_n(h), 12);
        assert_eq!(ness_moments_dim(h), 25);

        let (mut jbar, mut residual) = (0.0, 1.0);
        assert_eq!(ness_moments_summary(h, &mut jbar, ptr::null_mut(), &mut residual), NessStatus::Ok);
        assert!(residual < 1e-10);

        let mut cur = vec![0.0; 13];
        assert_eq!(ness_moments_profile(h, NessColumn::Current, cur.as_mut_ptr(), 13), NessStatus::Ok);
        for c in &cur[..12] {
            assert!((c - jbar).abs() < 1e-10);
        }
        // heat flows from the hot right bath
        assert!(jbar < 0.0);

        let mut pp = vec![0.0; 13];
        ness_moments_profile(h, NessColumn::Pp, pp.as_mut_ptr(), 13);
        let mut second = 0.0;
        assert_eq!(ness_moments_second(h, 12 + 3, 12 + 3, &mut second), NessStatus::Ok);
        assert_eq!(second, pp[3]);

        let mut phi = vec![0.0; 13];
        ness_moments_profile(h, NessColumn::Phi, phi.as_mut_ptr(), 13);
        assert!(phi[0].is_nan() && phi[1].is_finite());
        ness_moments_free(h);
    }
}

#[test]
fn error_codes() {
    let mut h = ptr::null_mut();
    let mut bad = params(8);
    bad.gamma = 0.0;
    assert_eq!(unsafe { ness_moments_solve(&bad, &mut h) }, NessStatus::InvalidArgument);
    assert!(h.is_null());
    assert!(last_error().contains("gamma must be positive"));

    assert_eq!(unsafe { ness_moments_solve(ptr::null(), &mut h) }, NessStatus::NullPointer);
    assert_eq!(unsafe { ness_moments_solve(&params(8), ptr::null_mut()) }, NessStatus::NullPointer);

    let p = params(8);
    unsafe {
        ness_moments_solve(&p, &mut h);
        let mut small = vec![0.0; 4];
        assert_eq!(
            ness_moments_profile(h, NessColumn::Energy, small.as_mut_ptr(), 4),
            NessStatus::BufferTooSmall
        );
        assert!(last_error().contains("9 needed"));
        let mut v = 0.0;
        assert_eq!(ness_moments_mean(h, 17, &mut v), NessStatus::IndexOutOfRange);
        assert_eq!(ness_moments_mean(h, 16, &mut v), NessStatus::Ok);
        assert_eq!(ness_moments_profile(ptr::null(), NessColumn::Energy, v_ptr(&mut v), 1), NessStatus::NullPointer);
        ness_moments_free(h);
        ness_moments_free(ptr::null_mut());
        ness_estimates_free(ptr::null_mut());
        assert_eq!(ness_moments_n(ptr::null()), 0);
    }
}

fn v_ptr(v: &mut f64) -> *mut f64 {
    v
}

#[test]
fn stationary_closed_forms() {
    let mut s = NessStationary::default();
    let p = NessParams {
        tau: 2.0,
        ..params(4)
    };
    assert_eq!(unsafe { ness_stationary_profiles(&p, &mut s) }, NessStatus::Ok);
    let core = ness_core::pde::stationary_profiles(
        &ness_core::ChainParams::new(4, 1.0, 1.0, 2.0, 1.0, 2.0).unwrap(),
    )
    .unwrap();
    assert_eq!(s.j_ss, core.j_ss);
    assert_eq!(s.u_max, core.u_max);
    assert_eq!(s.interior, core.interior);
}

#[test]
fn short_simulation_round_trip() {
    let p = params(4);
    let mut cfg = unsafe { std::mem::zeroed::<NessSimConfig>() };
    assert_eq!(unsafe { ness_sim_config_default(&p, &mut cfg) }, NessStatus::Ok);
    cfg.t_burnin = 20.0;
    cfg.t_measure = 400.0;
    cfg.n_replicas = 2;
    cfg.n_batches = 8;
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ness_simulate(&p, &cfg, &mut h) }, NessStatus::Ok);
    unsafe {
        let (mut batches, mut flagged) = (0usize, true);
        ness_estimates_info(h, &mut batches, &mut flagged);
        assert_eq!(batches, 8);
        assert!(!flagged);
        let mut v = vec![0.0; 5];
        let mut se = vec![0.0; 5];
        assert_eq!(
            ness_estimates_column(h, NessColumn::Pp, v.as_mut_ptr(), se.as_mut_ptr(), 5),
            NessStatus::Ok
        );
        assert!(v.iter().all(|x| *x > 0.5 && *x < 3.0));
        assert!(se.iter().all(|x| *x > 0.0));
        ness_estimates_free(h);
    }

    cfg.dt = -1.0;
    assert_eq!(unsafe { ness_simulate(&p, &cfg, &mut h) }, NessStatus::InvalidArgument);
    assert!(h.is_null());
}
