use nalgebra::{DMatrix, SymmetricEigen};
use ness_core::chain::StateVector;
use ness_core::moments::stationary_profile;
use ness_core::sim::{
    run_ness, run_transient, step_exchange, step_hamiltonian, step_thermostat, InitialEnsemble,
    SimConfig, SweepOrder,
};
use ness_core::ChainParams;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}

#[test]
fn slowest_normal_mode_period() {
    let n = 4;
    let mut d = DMatrix::zeros(n, n + 1);
    for x in 1..=n {
        d[(x - 1, x)] = 1.0;
        d[(x - 1, x - 1)] = -1.0;
    }
    let eig = SymmetricEigen::new(&d * d.transpose());
    let (k, w2) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, &v)| if v < acc.1 { (i, v) } else { acc });
    let omega = w2.sqrt();
    let period = 2.0 * std::f64::consts::PI / omega;
    let v = eig.eigenvectors.column(k).into_owned();

    let mut z = StateVector::zeros(n);
    for x in 1..=n {
        z.set_r(x, v[x - 1]);
    }
    let dt = period / 2000.0;
    let proj = |z: &StateVector| (1..=n).map(|x| z.r(x) * v[x - 1]).sum::<f64>();
    let mut prev = proj(&z);
    let mut crossings = Vec::new();
    for step in 1..=(6.0 * period / dt) as usize {
        step_hamiltonian(&mut z, dt, 0.0);
        let cur = proj(&z);
        if prev.signum() != cur.signum() {
            crossings.push((step as f64 - 1.0 + prev / (prev - cur)) * dt);
        }
        prev = cur;
    }
    assert!(crossings.len() >= 10);
    let spacing = (crossings.last().unwrap() - crossings[0]) / (crossings.len() - 1) as f64;
    let measured = 2.0 * spacing;
    assert!(((measured - period) / period).abs() < 0.005, "{measured} vs {period}");
}

#[test]
fn verlet_energy_error_is_second_order_and_bounded() {
    let run = |dt: f64| {
        let mut z = StateVector::from_vec(6, (0..13).map(|i| ((i * 7) % 5) as f64 - 2.0).collect()).unwrap();
        let e0 = z.total_energy();
        let mut worst: f64 = 0.0;
        for _ in 0..(200.0 / dt) as usize {
            step_hamiltonian(&mut z, dt, 0.0);
            worst = worst.max((z.total_energy() - e0).abs());
        }
        worst / e0
    };
    let (a, b) = (run(0.1), run(0.05));
    assert!(a < 0.01);
    let ratio = a / b;
    assert!((3.5..4.5).contains(&ratio), "{ratio}");
}

#[test]
fn exchange_law_on_a_single_pair() {
    let gamma = 1.3;
    let (dt, steps) = (0.05, 10);
    let t = dt * steps as f64;
    let (a, b) = (1.2, 0.7);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let draws = 1_000_000;
    let mut cross = Vec::with_capacity(draws);
    let mut diff = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut z = StateVector::from_vec(1, vec![0.0, a, b]).unwrap();
        for _ in 0..steps {
            step_exchange(&mut z, dt, gamma, SweepOrder::EvenOdd, false, &mut rng);
        }
        let (p0, p1) = (z.p(0), z.p(1));
        assert!((p0 * p0 + p1 * p1 - a * a - b * b).abs() < 1e-12);
        cross.push(p0 * p1);
        diff.push(p0 * p0 - p1 * p1);
    }
    let decay = (-2.0 * gamma * t).exp();
    let (m, se) = mean_and_se(&cross);
    assert!((m - a * b * decay).abs() < 4.0 * se, "{m} {se}");
    let (m, se) = mean_and_se(&diff);
    assert!((m - (a * a - b * b) * decay).abs() < 4.0 * se, "{m} {se}");
}

#[test]
fn thermostat_variance_relaxes_geometrically() {
    let p = ChainParams::new(3, 1.0, 0.8, 0.0, 0.5, 2.5).unwrap();
    let (dt, steps) = (0.1, 15);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut left = Vec::new();
    let mut right = Vec::new();
    for _ in 0..200_000 {
        let mut z = StateVector::zeros(3);
        z.set_p(0, 2.0);
        z.set_p(3, -1.0);
        for _ in 0..steps {
            step_thermostat(&mut z, dt, &p, &mut rng);
        }
        left.push(z.p(0) * z.p(0));
        right.push(z.p(3) * z.p(3));
    }
    let rho = (-p.gamma_tilde * dt * steps as f64).exp();
    let want_l = 4.0 * rho + p.t_minus * (1.0 - rho);
    let want_r = rho + p.t_plus * (1.0 - rho);
    let (m, se) = mean_and_se(&left);
    assert!((m - want_l).abs() < 4.0 * se);
    let (m, se) = mean_and_se(&right);
    assert!((m - want_r).abs() < 4.0 * se);
}

fn short_config(p: &ChainParams) -> SimConfig {
    SimConfig {
        t_burnin: 200.0,
        t_measure: 4000.0,
        ..SimConfig::defaults_for(p)
    }
}

#[test]
fn reproducible_across_runs_and_thread_counts() {
    let p = ChainParams::new(5, 1.0, 1.0, 0.7, 1.0, 2.0).unwrap();
    let cfg = short_config(&p);
    let in_pool = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| serde_json::to_string(&run_ness(&p, &cfg).unwrap()).unwrap())
    };
    let one = in_pool(1);
    assert_eq!(one, in_pool(3));
    assert_eq!(one, in_pool(1));
    let other = serde_json::to_string(&run_ness(&p, &SimConfig { seed: 9, ..cfg }).unwrap()).unwrap();
    assert_ne!(one, other);
}

#[test]
fn stationary_energy_balance() {
    let p = ChainParams::new(8, 1.0, 1.0, 0.8, 1.0, 2.0).unwrap();
    let est = run_ness(&p, &short_config(&p)).unwrap();
    let left = est.jbar;
    let right = est.current[8];
    let se = (left.std_err.powi(2) + right.std_err.powi(2)).sqrt();
    assert!((left.value - right.value).abs() < 4.0 * se);
}

#[test]
fn every_sweep_order_reaches_the_exact_state() {
    let p = ChainParams::new(6, 1.5, 1.0, 1.0, 1.0, 2.0).unwrap();
    let (_, exact) = stationary_profile(&p).unwrap();
    for order in [SweepOrder::EvenOdd, SweepOrder::LeftToRight, SweepOrder::RandomPermutation] {
        let cfg = SimConfig {
            sweep_order: order,
            ..SimConfig::defaults_for(&p)
        };
        let est = run_ness(&p, &cfg).unwrap();
        let cmp = est.compare(&exact);
        let inside = cmp.iter().filter(|c| c.z_score().abs() <= 3.0).count();
        assert!(inside as f64 >= 0.9 * cmp.len() as f64, "{order:?}: {inside}/{}", cmp.len());
    }
}

#[test]
fn gibbs_start_stays_stationary_at_equilibrium() {
    let t = 1.3;
    let p = ChainParams::new(6, 1.0, 1.0, 0.0, t, t).unwrap();
    let cfg = SimConfig {
        n_replicas: 4000,
        ..SimConfig::defaults_for(&p)
    };
    let snaps = run_transient(&p, &cfg, &InitialEnsemble::gibbs(6, t), &[0.05, 0.2]).unwrap();
    for snap in &snaps {
        let mut checked = 0;
        let mut inside = 0;
        for x in 0..=6 {
            for (est, want) in [(&snap.pp[x], t), (&snap.mean_p[x], 0.0)] {
                checked += 1;
                inside += usize::from(est.z_score(want).abs() <= 3.0);
            }
            if x > 0 {
                checked += 1;
                inside += usize::from(snap.rr[x].z_score(t).abs() <= 3.0);
            }
        }
        assert!(inside as f64 >= 0.9 * checked as f64, "{inside}/{checked}");
    }
}
