use ness_core::pde::{stationary_profiles, thermal_split, MacroFields, MacroSolver};
use ness_core::{ChainParams, TensionSchedule};

fn ramp_params(gamma: f64) -> ChainParams {
    ChainParams::new(2, gamma, 1.0, 0.0, 1.0, 2.0)
        .unwrap()
        .with_schedule(TensionSchedule::Ramp { from: 0.0, to: 1.5, t_ramp: 0.2 })
        .unwrap()
}

fn run(p: &ChainParams, m: usize, dt: f64, t: f64) -> MacroFields {
    let mut s = MacroSolver::from_rest(p, m, dt).unwrap();
    s.advance_to(t).unwrap().clone()
}

/// Sup difference on the nodes of the coarser grid.
fn sup_diff(coarse: &MacroFields, fine: &MacroFields) -> f64 {
    let k = fine.m / coarse.m;
    (0..=coarse.m)
        .map(|i| {
            let j = i * k;
            (coarse.r[i] - fine.r[j]).abs().max((coarse.e[i] - fine.e[j]).abs())
        })
        .fold(0.0, f64::max)
}

#[test]
fn second_order_in_space() {
    for gamma in [0.5, 1.0, 2.0] {
        let p = ramp_params(gamma);
        let f: Vec<MacroFields> = [16, 32, 64].iter().map(|&m| run(&p, m, 2e-5, 0.1)).collect();
        let ratio = sup_diff(&f[0], &f[1]) / sup_diff(&f[1], &f[2]);
        assert!((3.3..4.7).contains(&ratio), "gamma={gamma} ratio={ratio}");
    }
}

#[test]
fn second_order_in_time() {
    let p = ramp_params(1.0);
    let f: Vec<MacroFields> = [4e-3, 2e-3, 1e-3].iter().map(|&dt| run(&p, 32, dt, 0.3)).collect();
    let ratio = sup_diff(&f[0], &f[1]) / sup_diff(&f[1], &f[2]);
    assert!((3.3..4.7).contains(&ratio), "ratio={ratio}");
}

#[test]
fn stretch_obeys_the_maximum_principle() {
    let tau = 1.7;
    let p = ChainParams::new(2, 0.8, 1.0, tau, 1.0, 1.0).unwrap();
    let m = 64;
    let r0: Vec<f64> = (0..=m).map(|i| tau * (i as f64 / m as f64).powi(3)).collect();
    let e0: Vec<f64> = (0..=m).map(|i| 1.0 + 0.5 * r0[i] * r0[i]).collect();
    let mut s = MacroSolver::new(&p, r0, e0, m, 1e-3).unwrap();
    for k in 1..=40 {
        let f = s.advance_to(0.025 * k as f64).unwrap();
        assert!(f.r.iter().all(|&r| (-1e-12..=tau + 1e-12).contains(&r)));
        assert!(f.e_th().iter().all(|&e| e > 0.0));
    }
}

#[test]
fn temperature_bulge_reaches_its_closed_form_peak() {
    let p = ChainParams::new(2, 1.0, 1.0, 2.0, 1.0, 1.0).unwrap();
    let sp = stationary_profiles(&p).unwrap();
    assert_eq!(sp.u_max, 0.5);
    assert!((sp.e_th_ss(0.5) - 1.5).abs() < 1e-15);
    assert!((sp.e_th_max - 1.5).abs() < 1e-15);
    assert!(sp.interior);

    let m = 128;
    let mut s = MacroSolver::from_rest(&p, m, 1e-3).unwrap();
    let f = s.advance_to(5.0).unwrap();
    let th = f.e_th();
    assert!((th[m / 2] - 1.5).abs() < 1e-8);
    let argmax = (0..=m).max_by(|&a, &b| th[a].total_cmp(&th[b])).unwrap();
    assert_eq!(argmax, m / 2);
}

#[test]
fn thermal_split_is_consistent_along_a_transient() {
    let p = ramp_params(1.3);
    let mut s = MacroSolver::from_rest(&p, 64, 1e-3).unwrap();
    let mut prev = s.fields().clone();
    for k in 1..=5 {
        let f = s.advance_to(0.05 * k as f64).unwrap().clone();
        let split = thermal_split(&f, p.gamma, Some(&prev));
        for i in 0..=64 {
            assert!((split.e_mech[i] + split.e_th[i] - f.e[i]).abs() < 1e-12);
        }
        prev = f;
    }
}

#[test]
fn current_of_the_stationary_profile() {
    for (g, tau, tm, tp) in [(1.0, 0.0, 1.0, 2.0), (0.5, 1.0, 2.0, 1.0), (2.0, 3.0, 1.0, 1.0)] {
        let sp = stationary_profiles(&ChainParams::new(2, g, 1.0, tau, tm, tp).unwrap()).unwrap();
        // flux -(a/2) ∂e - (b/2) ∂(r²)
        let a = 1.0 / g + g;
        let b = 0.5 * (1.0 / g - g);
        let h = 1e-5;
        let de = (sp.e_ss(0.3 + h) - sp.e_ss(0.3 - h)) / (2.0 * h);
        let dr2 = (sp.r_ss(0.3 + h).powi(2) - sp.r_ss(0.3 - h).powi(2)) / (2.0 * h);
        let flux = -0.5 * a * de - 0.5 * b * dr2;
        assert!((flux - sp.j_ss).abs() < 1e-6, "{flux} {}", sp.j_ss);
    }
}
