use nalgebra::DMatrix;
use ness_core::chain::{assemble_operators, ip, ir};
use ness_core::moments::{
    energy_decomposition, equipartition_defect, solve_stationary_mean,
    solve_stationary_second_moments_with, stationary_profile, LyapunovMethod, MomentSolution,
    ProfileTable,
};
use ness_core::sim::{run_ness, SimConfig};
use ness_core::ChainParams;

fn solve(n: usize, g: f64, gt: f64, tau: f64, tm: f64, tp: f64) -> (MomentSolution, ProfileTable) {
    stationary_profile(&ChainParams::new(n, g, gt, tau, tm, tp).unwrap()).unwrap()
}

#[test]
fn closed_form_means_for_nine_springs() {
    let (sol, prof) = solve(9, 1.0, 1.0, 1.0, 1.0, 2.0);
    assert!((prof.pbar - 0.1).abs() < 1e-12);
    assert!((sol.mean[ir(5)] - 0.5).abs() < 1e-12);
    assert!((prof.pp[0] + prof.pp[9] - 3.2).abs() < 1e-10);
}

#[test]
fn no_tension_means_no_mean() {
    let p = ChainParams::new(12, 0.7, 1.4, 0.0, 1.0, 3.0).unwrap();
    let m = solve_stationary_mean(&assemble_operators(&p, 0.0).unwrap()).unwrap();
    assert_eq!(m.amax(), 0.0);
}

#[test]
fn closed_form_means_for_fifty_springs() {
    let (n, g, gt, tau) = (50, 2.0, 0.7, 1.3);
    let (sol, _) = solve(n, g, gt, tau, 1.0, 1.0);
    let denom = g * n as f64 + gt;
    for x in 0..=n {
        assert!((sol.mean[ip(n, x)] - tau / denom).abs() < 1e-10);
    }
    for x in 1..=n {
        let want = tau * (2.0 * g * x as f64 + gt - g) / (2.0 * denom);
        assert!((sol.mean[ir(x)] - want).abs() < 1e-10);
    }
}

#[test]
fn lyapunov_residual_and_methods_agree() {
    let p = ChainParams::new(10, 1.5, 0.8, 0.9, 0.7, 1.1).unwrap();
    let ops = assemble_operators(&p, 0.9).unwrap();
    let mean = solve_stationary_mean(&ops).unwrap();
    let direct = solve_stationary_second_moments_with(&ops, &mean, LyapunovMethod::Direct).unwrap();
    assert!(direct.residual <= 1e-9 * (1.0 + direct.second.amax()));
    let slow = solve_stationary_second_moments_with(&ops, &mean, LyapunovMethod::FixedPoint);
    assert!(matches!(slow, Err(ness_core::Error::NoConvergence { .. })));

    // residual recomputed from the equation itself
    let m = &direct.second;
    let b = DMatrix::from_fn(p.dim(), p.dim(), |i, j| {
        let mut e = nalgebra::DVector::zeros(p.dim());
        e[j] = 1.0;
        (ops.drift(&e) - &ops.c)[i]
    });
    let c = &ops.c;
    let mut lhs = &b * m + m * b.transpose() + c * mean.transpose() + &mean * c.transpose();
    lhs += ops.noise_term(m);
    lhs[(ip(10, 0), ip(10, 0))] += p.gamma_tilde * p.t_minus;
    lhs[(ip(10, 10), ip(10, 10))] += p.gamma_tilde * p.t_plus;
    assert!(lhs.amax() < 1e-10, "{}", lhs.amax());
}

#[test]
fn fixed_point_agrees_with_direct_solve_on_short_chains() {
    let p = ChainParams::new(4, 0.5, 2.0, 0.9, 0.7, 1.1).unwrap();
    let ops = assemble_operators(&p, 0.9).unwrap();
    let mean = solve_stationary_mean(&ops).unwrap();
    let direct = solve_stationary_second_moments_with(&ops, &mean, LyapunovMethod::Direct).unwrap();
    let fixed = solve_stationary_second_moments_with(&ops, &mean, LyapunovMethod::FixedPoint).unwrap();
    assert!((&direct.second - &fixed.second).amax() < 1e-8);
}

#[test]
fn exact_moments_match_long_simulation() {
    let p = ChainParams::new(8, 1.5, 0.8, 0.9, 0.7, 1.1).unwrap();
    let (_, exact) = stationary_profile(&p).unwrap();
    let est = run_ness(&p, &SimConfig::defaults_for(&p)).unwrap();
    let cmp = est.compare(&exact);
    let inside = cmp.iter().filter(|c| c.z_score().abs() <= 3.0).count();
    assert!(inside as f64 >= 0.95 * cmp.len() as f64, "{inside}/{}", cmp.len());
}

#[test]
fn phi_gradient_is_the_current() {
    let (_, prof) = solve(40, 0.6, 1.7, -1.2, 2.0, 0.5);
    for x in 1..40 {
        assert!((prof.phi_at(x + 1) - prof.phi_at(x) - prof.jbar).abs() < 1e-10);
    }
}

#[test]
fn boundary_covariances_decay() {
    let (tau, n_list) = (1.0, [16, 32, 64, 128]);
    let sols: Vec<MomentSolution> = n_list.iter().map(|&n| solve(n, 1.0, 1.0, tau, 1.0, 2.0).0).collect();
    let probes: [fn(usize, &MomentSolution) -> f64; 4] = [
        |n, s| s.at(ip(n, 0), ip(n, 1)),
        |n, s| s.at(ir(1), ip(n, 0)),
        |n, s| s.at(ip(n, n), ip(n, n - 1)) - s.mean[ip(n, n)] * s.mean[ip(n, n - 1)],
        |n, s| s.at(ir(n), ip(n, n)) - s.mean[ir(n)] * s.mean[ip(n, n)],
    ];
    for (k, f) in probes.iter().enumerate() {
        let v: Vec<f64> = n_list.iter().zip(&sols).map(|(&n, s)| f(n, s).abs()).collect();
        assert!(v.windows(2).all(|w| w[1] < w[0]), "probe {k}: {v:?}");
    }
}

#[test]
fn left_spring_approaches_left_temperature() {
    let n_list = [32, 64, 128, 256];
    let v: Vec<f64> = n_list.iter().map(|&n| solve(n, 1.0, 1.0, 1.0, 1.0, 2.0).0.at(ir(1), ir(1))).collect();
    assert!(v.windows(2).all(|w| (w[1] - 1.0).abs() <= (w[0] - 1.0).abs()));
    let ext = 2.0 * v[3] - v[2];
    assert!((ext - 1.0).abs() < 0.01);
}

#[test]
fn energy_stays_bounded_in_n() {
    let avg = |n: usize| {
        let (_, prof) = solve(n, 1.0, 1.0, 1.5, 1.0, 2.0);
        let nf = n as f64;
        (prof.pp.iter().sum::<f64>() / nf, prof.rr.iter().sum::<f64>() / nf)
    };
    let vals: Vec<(f64, f64)> = [16, 32, 64, 128, 256].iter().map(|&n| avg(n)).collect();
    let (lo, hi) = vals.iter().fold((f64::INFINITY, 0.0f64), |(lo, hi), &(a, b)| {
        (lo.min(a.min(b)), hi.max(a.max(b)))
    });
    assert!(hi / lo < 3.0, "{vals:?}");
}

#[test]
fn decomposition_terms_at_unit_gamma() {
    let (tau, tm, tp) = (1.0, 1.0, 2.0);
    let limit = tau * tau / 4.0 + (tp - tm) / 2.0 + tm;
    let mut prev: Option<(f64, f64, f64)> = None;
    for n in [32, 64, 128] {
        let (_, prof) = solve(n, 1.0, 1.0, tau, tm, tp);
        let d = energy_decomposition(&prof, 1.0, &|_| 1.0);
        assert_eq!(d.h_m, 0.0);
        let cur = (d.h_nabla.abs(), d.h_corr.abs(), (d.h_phi - limit).abs());
        if let Some(p) = prev {
            assert!(cur.0 < p.0 && cur.1 < p.1 && cur.2 < p.2, "{p:?} -> {cur:?}");
        }
        prev = Some(cur);
    }
    assert!(prev.unwrap().2 < 0.02 * limit);
}

#[test]
fn equipartition_defect_at_unit_gamma() {
    let g = |u: f64| (std::f64::consts::PI * u).sin();
    let (_, eq) = solve(24, 1.0, 1.0, 0.0, 1.3, 1.3);
    assert!(equipartition_defect(&eq, &g).abs() < 1e-10);
    let d: Vec<f64> = [32, 64, 128]
        .iter()
        .map(|&n| equipartition_defect(&solve(n, 1.0, 1.0, 1.0, 1.0, 2.0).1, &g).abs())
        .collect();
    assert!(d.windows(2).all(|w| w[1] < w[0]), "{d:?}");
}
