//! The drift/noise representation against a direct transcription of the
//! generator `A + (γ/2) Σ 𝒳_x² + (γ̃/2) S̃` acting on quadratic observables.

use nalgebra::DVector;
use ness_core::chain::{
    assemble_operators, boundary_currents, bulk_current, ip, ir, OperatorSet, QuadraticForm,
    StateVector,
};
use ness_core::moments::stationary_profile;
use ness_core::ChainParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

/// Generator divided by `n²`, applied to `f` at `z`, from the differential
/// operators themselves.
fn oracle(p: &ChainParams, tau: f64, f: &QuadraticForm, z: &DVector<f64>) -> f64 {
    let n = p.n;
    let grad = 2.0 * (&f.q * z) + &f.l;
    let hess = 2.0 * &f.q;
    let r = |x: usize| z[ir(x)];
    let pm = |x: usize| z[ip(n, x)];

    let mut a = DVector::zeros(z.len());
    for x in 1..=n {
        a[ir(x)] = pm(x) - pm(x - 1);
    }
    for x in 1..n {
        a[ip(n, x)] = r(x + 1) - r(x);
    }
    a[ip(n, 0)] = r(1);
    a[ip(n, n)] = tau - r(n);
    let drift = a.dot(&grad);

    let mut exchange = 0.0;
    for x in 0..n {
        let (i, j) = (ip(n, x), ip(n, x + 1));
        let mut v = DVector::zeros(z.len());
        v[i] = z[j];
        v[j] = -z[i];
        exchange += v.dot(&(&hess * &v)) - z[i] * grad[i] - z[j] * grad[j];
    }

    let (i0, i_n) = (ip(n, 0), ip(n, n));
    let baths = p.t_minus * hess[(i0, i0)] - z[i0] * grad[i0] + p.t_plus * hess[(i_n, i_n)]
        - z[i_n] * grad[i_n];

    drift + 0.5 * p.gamma * exchange + 0.5 * p.gamma_tilde * baths
}

fn random_params(rng: &mut ChaCha8Rng) -> (ChainParams, f64) {
    let n = rng.random_range(4..12);
    let tau = rng.random_range(-2.0..2.0);
    let p = ChainParams::new(
        n,
        rng.random_range(0.2..3.0),
        rng.random_range(0.2..3.0),
        tau,
        rng.random_range(0.1..3.0),
        rng.random_range(0.1..3.0),
    )
    .unwrap();
    (p, tau)
}

fn random_state(rng: &mut ChaCha8Rng, dim: usize) -> DVector<f64> {
    DVector::from_fn(dim, |_, _| rng.sample::<f64, _>(StandardNormal) * 1.5)
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-12 * (1.0 + a.abs().max(b.abs()))
}

fn monomials(n: usize, rng: &mut ChaCha8Rng) -> Vec<QuadraticForm> {
    let dim = 2 * n + 1;
    let mut out = Vec::new();
    for x in 1..=n {
        out.push(QuadraticForm::linear(dim, ir(x)));
        out.push(QuadraticForm::product(dim, ir(x), ir(x)));
    }
    for x in 0..=n {
        out.push(QuadraticForm::linear(dim, ip(n, x)));
        out.push(QuadraticForm::product(dim, ip(n, x), ip(n, x)));
    }
    for x in 1..=n {
        out.push(QuadraticForm::product(dim, ip(n, x - 1), ip(n, x)));
    }
    for x in 1..n {
        out.push(QuadraticForm::product(dim, ir(x), ir(x + 1)));
    }
    for _ in 0..6 {
        let x = rng.random_range(1..=n);
        let y = rng.random_range(0..=n);
        out.push(QuadraticForm::product(dim, ir(x), ip(n, y)));
    }
    out
}

#[test]
fn operator_representation_matches_generator_on_monomials() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..100 {
        let (p, tau) = random_params(&mut rng);
        let ops = assemble_operators(&p, tau).unwrap();
        let z = random_state(&mut rng, p.dim());
        for f in monomials(p.n, &mut rng) {
            let want = oracle(&p, tau, &f, &z);
            let got = ops.generator_quadratic(&f, &z);
            assert!(close(got, want), "n={} got {got} want {want}", p.n);
        }
    }
}

struct Ctx<'a> {
    p: &'a ChainParams,
    tau: f64,
    z: &'a DVector<f64>,
}

impl Ctx<'_> {
    fn r(&self, x: usize) -> f64 {
        self.z[ir(x)]
    }
    fn pm(&self, x: usize) -> f64 {
        self.z[ip(self.p.n, x)]
    }
    fn l(&self, a: usize, b: usize) -> f64 {
        oracle(self.p, self.tau, &QuadraticForm::product(self.p.dim(), a, b), self.z)
    }
}

#[test]
fn boundary_and_bulk_identities() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..100 {
        let (p, tau) = random_params(&mut rng);
        let z = random_state(&mut rng, p.dim());
        let c = Ctx { p: &p, tau, z: &z };
        let n = p.n;
        let (g, gt) = (p.gamma, p.gamma_tilde);

        // L(p_0 r_1)
        let rhs = (c.pm(1) - c.pm(0)) * c.pm(0) + c.r(1) * c.r(1) - 0.5 * (gt + g) * c.pm(0) * c.r(1);
        assert!(close(c.l(ip(n, 0), ir(1)), rhs));
        // L(p_n r_n)
        let rhs = c.pm(n) * (c.pm(n) - c.pm(n - 1)) + (tau - c.r(n)) * c.r(n)
            - 0.5 * (gt + g) * c.pm(n) * c.r(n);
        assert!(close(c.l(ip(n, n), ir(n)), rhs));
        // L(p_n²)
        let rhs = 2.0 * (tau - c.r(n)) * c.pm(n)
            + g * (c.pm(n - 1).powi(2) - c.pm(n).powi(2))
            + gt * (p.t_plus - c.pm(n).powi(2));
        assert!(close(c.l(ip(n, n), ip(n, n)), rhs));
        // L(p_0²)
        let rhs = 2.0 * c.r(1) * c.pm(0)
            + g * (c.pm(1).powi(2) - c.pm(0).powi(2))
            + gt * (p.t_minus - c.pm(0).powi(2));
        assert!(close(c.l(ip(n, 0), ip(n, 0)), rhs));
        // L(r_x²)
        for x in 1..=n {
            let rhs = 2.0 * (c.pm(x) - c.pm(x - 1)) * c.r(x);
            assert!(close(c.l(ir(x), ir(x)), rhs));
        }
        // L(r_1 p_1), L(r_n p_{n-1})
        let rhs = (c.pm(1) - c.pm(0)) * c.pm(1) + (c.r(2) - c.r(1)) * c.r(1) - g * c.r(1) * c.pm(1);
        assert!(close(c.l(ir(1), ip(n, 1)), rhs));
        let rhs = (c.pm(n) - c.pm(n - 1)) * c.pm(n - 1) + (c.r(n) - c.r(n - 1)) * c.r(n)
            - g * c.r(n) * c.pm(n - 1);
        assert!(close(c.l(ir(n), ip(n, n - 1)), rhs));
        // L(r_1 r_2)
        let rhs = (c.pm(1) - c.pm(0)) * c.r(2) + (c.pm(2) - c.pm(1)) * c.r(1);
        assert!(close(c.l(ir(1), ir(2)), rhs));
    }
}

/// Right-hand sides for `L(p_{x-1} p_x)` (bulk), `L(p_0 p_1)` and
/// `L(p_{n-1} p_n)`. Each lacks the cross term `−γ p_{x-1} p_x` that the
/// exchange noise of the shared bond produces.
fn neighbour_products_without_cross_term(c: &Ctx, x: usize) -> f64 {
    let n = c.p.n;
    let (g, gt) = (c.p.gamma, c.p.gamma_tilde);
    if x == 1 {
        (c.r(2) - c.r(1)) * c.pm(0) + c.r(1) * c.pm(1) - 0.5 * (3.0 * g + gt) * c.pm(0) * c.pm(1)
    } else if x == n {
        (c.tau - c.r(n)) * c.pm(n - 1) + (c.r(n) - c.r(n - 1)) * c.pm(n)
            - 0.5 * (3.0 * g + gt) * c.pm(n - 1) * c.pm(n)
    } else {
        (c.r(x + 1) - c.r(x)) * c.pm(x - 1) + (c.r(x) - c.r(x - 1)) * c.pm(x)
            - 2.0 * g * c.pm(x) * c.pm(x - 1)
    }
}

#[test]
fn neighbour_momentum_products_carry_exchange_cross_term() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for _ in 0..100 {
        let (p, tau) = random_params(&mut rng);
        let z = random_state(&mut rng, p.dim());
        let c = Ctx { p: &p, tau, z: &z };
        for x in 1..=p.n {
            let cross = -p.gamma * c.pm(x - 1) * c.pm(x);
            let want = neighbour_products_without_cross_term(&c, x) + cross;
            assert!(close(c.l(ip(p.n, x - 1), ip(p.n, x)), want), "x={x}");
        }
    }
}

#[test]
fn corrected_neighbour_identity_averages_to_zero_in_the_stationary_state() {
    let p = ChainParams::new(10, 1.3, 0.7, 1.1, 0.6, 1.8).unwrap();
    let (sol, _) = stationary_profile(&p).unwrap();
    let n = p.n;
    let m = |a: usize, b: usize| sol.at(a, b);
    let g = p.gamma;
    for x in 2..n {
        let drift = m(ir(x + 1), ip(n, x - 1)) - m(ir(x), ip(n, x - 1)) + m(ir(x), ip(n, x))
            - m(ir(x - 1), ip(n, x));
        let pp = m(ip(n, x - 1), ip(n, x));
        let corrected = drift - 3.0 * g * pp;
        let uncorrected = drift - 2.0 * g * pp;
        assert!(corrected.abs() < 1e-10, "x={x} corrected={corrected}");
        assert!((uncorrected - g * pp).abs() < 1e-10);
        assert!(pp.abs() > 1e-6);
    }
}

#[test]
fn kinetic_monomial_example() {
    let p = ChainParams::new(5, 2.0, 0.5, 0.8, 1.0, 1.5).unwrap();
    let ops = assemble_operators(&p, 0.8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let f = QuadraticForm::product(11, ip(5, 3), ip(5, 3));
    for _ in 0..20 {
        let z = random_state(&mut rng, 11);
        let (p2, p3, p4) = (z[ip(5, 2)], z[ip(5, 3)], z[ip(5, 4)]);
        let want = 2.0 * p3 * (z[ir(4)] - z[ir(3)]) - 4.0 * p3 * p3 + 2.0 * (p2 * p2 + p4 * p4);
        assert!(close(ops.generator_quadratic(&f, &z), want));
        assert!(close(oracle(&p, 0.8, &f, &z), want));
    }
}

fn energy_form(n: usize, x: usize) -> QuadraticForm {
    let dim = 2 * n + 1;
    let mut f = QuadraticForm::zero(dim);
    f.q[(ip(n, x), ip(n, x))] = 0.5;
    if x > 0 {
        f.q[(ir(x), ir(x))] = 0.5;
    }
    f
}

#[test]
fn energy_currents_telescope() {
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..100 {
        let (p, tau) = random_params(&mut rng);
        let n = p.n;
        let ops: OperatorSet = assemble_operators(&p, tau).unwrap();
        let z = random_state(&mut rng, p.dim());
        let s = StateVector::from_vec(n, z.iter().copied().collect()).unwrap();
        let (left, right) = boundary_currents(&s, &p, tau);
        let j = |x: usize| bulk_current(&s, x, p.gamma).unwrap();
        for x in 0..=n {
            let incoming = if x == 0 { left } else { j(x - 1) };
            let outgoing = if x == n { right } else { j(x) };
            let f = energy_form(n, x);
            assert!(close(oracle(&p, tau, &f, &z), incoming - outgoing), "x={x}");
            assert!(close(ops.generator_quadratic(&f, &z), incoming - outgoing));
        }
    }
}

#[test]
fn exchange_channels_are_antisymmetric() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let (p, tau) = random_params(&mut rng);
    let ops = assemble_operators(&p, tau).unwrap();
    for k in 0..p.n {
        let c = ops.channel_matrix(k);
        assert_eq!(c.transpose(), -&c);
        let z = random_state(&mut rng, p.dim());
        assert!(z.dot(&(&c * &z)).abs() < 1e-14);
    }
}
