//! Per-site observables derived from exact (or estimated) moments.

use serde::{Deserialize, Serialize};

use super::{solve_stationary, MomentSolution};
use crate::chain::{assemble_operators, ip, ir};
use crate::error::Result;
use crate::params::ChainParams;

/// Per-site observables for `x = 0..=n`.
///
/// Row `x = 0` has no spring: `mean_r`, `rr` are zero there (consistent with
/// `ℰ_0 = p_0²/2`) and `phi` is `None`. `current[x]` is `⟨j_{x,x+1}⟩` for
/// `x < n`; the last entry holds the right boundary current `⟨j_{n,n+1}⟩`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ProfileTable {
    pub n: usize,
    pub mean_r: Vec<f64>,
    pub mean_p: Vec<f64>,
    pub pp: Vec<f64>,
    pub rr: Vec<f64>,
    /// `⟨p_{x-1} p_x⟩`, zero at `x = 0`.
    pub pp_left: Vec<f64>,
    pub energy: Vec<f64>,
    /// `½⟨r_x⟩²`
    pub mech_energy_mean: Vec<f64>,
    /// `½⟨r_x²⟩`
    pub mech_energy_second: Vec<f64>,
    pub phi: Vec<Option<f64>>,
    pub current: Vec<f64>,
    /// Left boundary current `(γ̃/2)(T₋ − ⟨p_0²⟩)`.
    pub jbar: f64,
    /// Average momentum over all sites.
    pub pbar: f64,
    pub time: Option<f64>,
}

/// `φ(x)` from second moments.
pub fn phi_value(gamma: f64, rr: f64, pp_left: f64, pp: f64, pp_prev: f64) -> f64 {
    -(rr + pp_left) / (2.0 * gamma) - 0.25 * gamma * (pp + pp_prev)
}

pub fn profile_from_moments(sol: &MomentSolution, params: &ChainParams) -> ProfileTable {
    let n = sol.n();
    let g = params.gamma;
    let tau = params.tau_plus.value_at(sol.time.unwrap_or(0.0));
    let m = &sol.mean;
    let at = |a: usize, b: usize| sol.at(a, b);

    let mut t = ProfileTable {
        n,
        mean_r: vec![0.0; n + 1],
        mean_p: vec![0.0; n + 1],
        pp: vec![0.0; n + 1],
        rr: vec![0.0; n + 1],
        pp_left: vec![0.0; n + 1],
        energy: vec![0.0; n + 1],
        mech_energy_mean: vec![0.0; n + 1],
        mech_energy_second: vec![0.0; n + 1],
        phi: vec![None; n + 1],
        current: vec![0.0; n + 1],
        jbar: 0.0,
        pbar: 0.0,
        time: sol.time,
    };
    for x in 0..=n {
        t.mean_p[x] = m[ip(n, x)];
        t.pp[x] = at(ip(n, x), ip(n, x));
        if x >= 1 {
            t.mean_r[x] = m[ir(x)];
            t.rr[x] = at(ir(x), ir(x));
            t.pp_left[x] = at(ip(n, x - 1), ip(n, x));
        }
        t.energy[x] = 0.5 * (t.pp[x] + t.rr[x]);
        t.mech_energy_mean[x] = 0.5 * t.mean_r[x] * t.mean_r[x];
        t.mech_energy_second[x] = 0.5 * t.rr[x];
    }
    for x in 1..=n {
        t.phi[x] = Some(phi_value(g, t.rr[x], t.pp_left[x], t.pp[x], t.pp[x - 1]));
    }
    for x in 0..n {
        t.current[x] = -at(ip(n, x), ir(x + 1)) + 0.5 * g * (t.pp[x] - t.pp[x + 1]);
    }
    t.current[n] =
        -0.5 * params.gamma_tilde * (params.t_plus - t.pp[n]) - tau * t.mean_p[n];
    t.jbar = 0.5 * params.gamma_tilde * (params.t_minus - t.pp[0]);
    t.pbar = t.mean_p.iter().sum::<f64>() / (n + 1) as f64;
    t
}

/// Exact stationary moments and their profile for constant tension.
pub fn stationary_profile(params: &ChainParams) -> Result<(MomentSolution, ProfileTable)> {
    params.validate()?;
    let tau = params.constant_tau()?;
    let ops = assemble_operators(params, tau)?;
    let sol = solve_stationary(&ops)?;
    let profile = profile_from_moments(&sol, params);
    Ok((sol, profile))
}

impl ProfileTable {
    /// `φ(x)` for `x ≥ 1`.
    pub fn phi_at(&self, x: usize) -> f64 {
        self.phi[x].expect("phi is defined for x >= 1")
    }

    /// `(1/n) Σ_{x=1}^n G(x/n) v_x`
    pub fn weighted_average(&self, values: &[f64], g: &dyn Fn(f64) -> f64) -> f64 {
        let n = self.n as f64;
        (1..=self.n)
            .map(|x| g(x as f64 / n) * values[x])
            .sum::<f64>()
            / n
    }
}

/// Four-term split of `(1/n) Σ G(x/n) ⟨ℰ_x⟩`.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct DecompositionReport {
    pub h_phi: f64,
    pub h_nabla: f64,
    pub h_corr: f64,
    pub h_m: f64,
    /// `(1/n) Σ_{x=1}^n G(x/n) ⟨ℰ_x⟩`, computed directly.
    pub total: f64,
}

impl DecompositionReport {
    pub fn sum(&self) -> f64 {
        self.h_phi + self.h_nabla + self.h_corr + self.h_m
    }
}

pub fn energy_decomposition(
    profile: &ProfileTable,
    gamma: f64,
    g: &dyn Fn(f64) -> f64,
) -> DecompositionReport {
    let n = profile.n;
    let nf = n as f64;
    let g2 = gamma * gamma;
    let (mut phi, mut nabla, mut corr, mut mech, mut total) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for x in 1..=n {
        let w = g(x as f64 / nf);
        phi += w * profile.phi_at(x);
        nabla += w * (profile.pp[x] - profile.pp[x - 1]);
        corr += w * profile.pp_left[x];
        mech += w * (profile.pp[x] - profile.rr[x]);
        total += w * profile.energy[x];
    }
    DecompositionReport {
        h_phi: -2.0 * gamma / (1.0 + g2) * phi / nf,
        h_nabla: g2 / (2.0 * (1.0 + g2)) * nabla / nf,
        h_corr: -1.0 / (1.0 + g2) * corr / nf,
        h_m: (1.0 - g2) / (2.0 * (1.0 + g2)) * mech / nf,
        total: total / nf,
    }
}

/// `(1/n) Σ_{x=2}^{n-2} (Δ_n G)_x (⟨p_x²⟩ − Var r_x)` with
/// `(Δ_n G)_x = n²(G_{x+1} + G_{x-1} − 2G_x)`.
pub fn equipartition_defect(profile: &ProfileTable, g: &dyn Fn(f64) -> f64) -> f64 {
    let n = profile.n;
    let nf = n as f64;
    let gx = |x: usize| g(x as f64 / nf);
    let mut acc = 0.0;
    for x in 2..n.saturating_sub(1) {
        let lap = nf * nf * (gx(x + 1) + gx(x - 1) - 2.0 * gx(x));
        let var_r = profile.rr[x] - profile.mean_r[x] * profile.mean_r[x];
        acc += lap * (profile.pp[x] - var_r);
    }
    acc / nf
}
