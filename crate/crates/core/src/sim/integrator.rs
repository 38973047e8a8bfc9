//! Splitting integrator for the chain SDE.
//!
//! The Hamiltonian part is advanced by velocity Verlet. The exchange noise
//! and the boundary Langevin baths are advanced exactly in law: each bond
//! rotates its momentum pair by a Gaussian angle, and each bath applies the
//! exact Ornstein–Uhlenbeck transition.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::chain::StateVector;
use crate::params::ChainParams;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum SweepOrder {
    /// Even bonds then odd bonds; bonds within a parity class commute.
    #[default]
    EvenOdd,
    LeftToRight,
    RandomPermutation,
}

impl std::str::FromStr for SweepOrder {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "even-odd" => Ok(SweepOrder::EvenOdd),
            "left-to-right" => Ok(SweepOrder::LeftToRight),
            "random-permutation" => Ok(SweepOrder::RandomPermutation),
            other => Err(format!("unknown sweep order '{other}'")),
        }
    }
}

/// One velocity-Verlet step of the undamped linear flow
/// `ṙ_x = p_x − p_{x−1}`, `ṗ_x = r_{x+1} − r_x`, `ṗ_0 = r_1`, `ṗ_n = τ − r_n`.
pub fn step_hamiltonian(z: &mut StateVector, dt: f64, tau: f64) {
    let n = z.n();
    let half = 0.5 * dt;
    kick(z, half, tau);
    let s = z.as_mut_slice();
    for x in 1..=n {
        s[x - 1] += dt * (s[n + x] - s[n + x - 1]);
    }
    kick(z, half, tau);
}

#[inline]
fn kick(z: &mut StateVector, h: f64, tau: f64) {
    let n = z.n();
    let s = z.as_mut_slice();
    s[n] += h * s[0];
    for x in 1..n {
        s[n + x] += h * (s[x] - s[x - 1]);
    }
    s[2 * n] += h * (tau - s[n - 1]);
}

/// Rotates `(p_x, p_{x+1})` by angle `θ`.
#[inline]
pub fn rotate_pair(z: &mut StateVector, x: usize, theta: f64) {
    let n = z.n();
    let s = z.as_mut_slice();
    let (sin, cos) = theta.sin_cos();
    let (a, b) = (s[n + x], s[n + x + 1]);
    s[n + x] = a * cos - b * sin;
    s[n + x + 1] = a * sin + b * cos;
}

/// One exchange sweep over all bonds with `θ ~ N(0, γ dt)` per bond.
/// `reversed` runs the mirrored order so that two half sweeps compose
/// symmetrically.
pub fn step_exchange<R: Rng + ?Sized>(
    z: &mut StateVector,
    dt: f64,
    gamma: f64,
    order: SweepOrder,
    reversed: bool,
    rng: &mut R,
) {
    let n = z.n();
    let sd = (gamma * dt).sqrt();
    let draw = |z: &mut StateVector, x: usize, rng: &mut R| {
        let xi: f64 = rng.sample(StandardNormal);
        rotate_pair(z, x, sd * xi);
    };
    match order {
        SweepOrder::EvenOdd => {
            let parities: [usize; 2] = if reversed { [1, 0] } else { [0, 1] };
            for start in parities {
                for x in (start..n).step_by(2) {
                    draw(z, x, rng);
                }
            }
        }
        SweepOrder::LeftToRight => {
            if reversed {
                for x in (0..n).rev() {
                    draw(z, x, rng);
                }
            } else {
                for x in 0..n {
                    draw(z, x, rng);
                }
            }
        }
        SweepOrder::RandomPermutation => {
            let mut bonds: Vec<usize> = (0..n).collect();
            bonds.shuffle(rng);
            for x in bonds {
                draw(z, x, rng);
            }
        }
    }
}

/// Exact OU update of `p_0` and `p_n` over `dt`:
/// `p ← e^{−γ̃dt/2} p + √(T(1 − e^{−γ̃dt})) ξ`.
pub fn step_thermostat<R: Rng + ?Sized>(
    z: &mut StateVector,
    dt: f64,
    params: &ChainParams,
    rng: &mut R,
) {
    let decay = (-0.5 * params.gamma_tilde * dt).exp();
    let spread = 1.0 - (-params.gamma_tilde * dt).exp();
    let n = z.n();
    let x0: f64 = rng.sample(StandardNormal);
    let xn: f64 = rng.sample(StandardNormal);
    let p0 = decay * z.p(0) + (params.t_minus * spread).sqrt() * x0;
    let pn = decay * z.p(n) + (params.t_plus * spread).sqrt() * xn;
    z.set_p(0, p0);
    z.set_p(n, pn);
}

/// Full Strang step: half bath, half exchange sweep, Hamiltonian, mirrored
/// half exchange sweep, half bath.
pub fn strang_step<R: Rng + ?Sized>(
    z: &mut StateVector,
    dt: f64,
    tau: f64,
    params: &ChainParams,
    order: SweepOrder,
    rng: &mut R,
) {
    let half = 0.5 * dt;
    step_thermostat(z, half, params, rng);
    step_exchange(z, half, params.gamma, order, false, rng);
    step_hamiltonian(z, dt, tau);
    step_exchange(z, half, params.gamma, order, true, rng);
    step_thermostat(z, half, params, rng);
}
