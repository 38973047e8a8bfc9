//! Macroscopic diffusive system for stretch and energy on `[0, 1]`.
//!
//! `∂_t r = γ⁻¹ ∂²r`, `∂_t e = ½ ∂²{(γ⁻¹+γ) e + ½(γ⁻¹−γ) r²}` with
//! `r(0) = 0`, `r(1) = τ(t)`, `e(0) = T₋`, `e(1) = T₊ + τ(t)²/2`.

mod tridiag;

pub use tridiag::{thomas, CrankNicolson};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::{ChainParams, TensionSchedule};

pub const DEFAULT_M: usize = 256;
/// Largest accepted `κ dt / du²`.
pub const MAX_MESH_RATIO: f64 = 1e6;
const COMPAT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MacroFields {
    pub m: usize,
    pub t: f64,
    pub r: Vec<f64>,
    pub e: Vec<f64>,
}

impl MacroFields {
    pub fn u(&self, i: usize) -> f64 {
        i as f64 / self.m as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        (0..=self.m).map(|i| self.u(i)).collect()
    }

    pub fn e_mech(&self) -> Vec<f64> {
        self.r.iter().map(|r| 0.5 * r * r).collect()
    }

    pub fn e_th(&self) -> Vec<f64> {
        self.e.iter().zip(&self.r).map(|(e, r)| e - 0.5 * r * r).collect()
    }
}

/// Stretch at every time level of a uniform march.
#[derive(Debug, Clone)]
pub struct StretchHistory {
    pub m: usize,
    pub dt: f64,
    pub times: Vec<f64>,
    pub r: Vec<Vec<f64>>,
    pub tau: TensionSchedule,
}

fn check_grid(m: usize, kappa: f64, dt: f64) -> Result<()> {
    if m < 2 {
        return Err(Error::InvalidParameter("grid needs m >= 2".into()));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidParameter("dt must be positive".into()));
    }
    let ratio = kappa * dt * (m * m) as f64;
    if ratio > MAX_MESH_RATIO {
        return Err(Error::InvalidParameter(format!(
            "mesh ratio dt/du^2 = {ratio:.3e} exceeds {MAX_MESH_RATIO:.0e}"
        )));
    }
    Ok(())
}

fn check_field(name: &str, v: &[f64], m: usize, left: f64, right: f64) -> Result<()> {
    if v.len() != m + 1 {
        return Err(Error::DimensionMismatch {
            expected: m + 1,
            got: v.len(),
        });
    }
    let scale = 1.0 + left.abs().max(right.abs());
    if (v[0] - left).abs() > COMPAT_TOL * scale || (v[m] - right).abs() > COMPAT_TOL * scale {
        return Err(Error::InvalidParameter(format!(
            "initial {name} does not match the boundary data"
        )));
    }
    Ok(())
}

fn steps_for(t_end: f64, dt: f64) -> Result<(usize, f64)> {
    if !(t_end >= 0.0 && t_end.is_finite()) {
        return Err(Error::InvalidParameter("t_end must be nonnegative".into()));
    }
    let k = (t_end / dt).ceil() as usize;
    Ok((k, if k == 0 { 0.0 } else { t_end / k as f64 }))
}

/// Crank–Nicolson march of the stretch equation from `r0` to `t_end` with
/// step at most `dt`.
pub fn solve_stretch(
    r0: &[f64],
    tau: &TensionSchedule,
    gamma: f64,
    t_end: f64,
    dt: f64,
    m: usize,
) -> Result<StretchHistory> {
    if !(gamma > 0.0) {
        return Err(Error::InvalidParameter("gamma must be positive".into()));
    }
    check_grid(m, 1.0 / gamma, dt)?;
    check_field("stretch", r0, m, 0.0, tau.value_at(0.0))?;
    let (k, h) = steps_for(t_end, dt)?;
    let cn = CrankNicolson::new(m, 1.0 / gamma, h);
    let mut times = vec![0.0];
    let mut r = vec![r0.to_vec()];
    for s in 1..=k {
        let t = s as f64 * h;
        let next = cn.step(&r[s - 1], 0.0, tau.value_at(t), None);
        r.push(next);
        times.push(t);
    }
    Ok(StretchHistory {
        m,
        dt: h,
        times,
        r,
        tau: *tau,
    })
}

/// Energy march on the time levels of `stretch`. Diffusion of `e` is
/// Crank–Nicolson; the `r²` flux uses the average of the two known levels.
pub fn solve_energy(
    e0: &[f64],
    stretch: &StretchHistory,
    params: &ChainParams,
) -> Result<Vec<MacroFields>> {
    let m = stretch.m;
    let g = params.gamma;
    let a = g.recip() + g;
    let b = 0.5 * (g.recip() - g);
    let tau0 = stretch.tau.value_at(0.0);
    check_field("energy", e0, m, params.t_minus, params.t_plus + 0.5 * tau0 * tau0)?;
    let h = stretch.dt;
    let mut out = vec![MacroFields {
        m,
        t: 0.0,
        r: stretch.r[0].clone(),
        e: e0.to_vec(),
    }];
    if stretch.times.len() < 2 {
        return Ok(out);
    }
    check_grid(m, 0.5 * a, h)?;
    let cn = CrankNicolson::new(m, 0.5 * a, h);
    for s in 1..stretch.times.len() {
        let t = stretch.times[s];
        let tau = stretch.tau.value_at(t);
        let source = flux_source(&stretch.r[s - 1], &stretch.r[s], b, h, m);
        let e = cn.step(&out[s - 1].e, params.t_minus, params.t_plus + 0.5 * tau * tau, Some(&source));
        out.push(MacroFields {
            m,
            t,
            r: stretch.r[s].clone(),
            e,
        });
    }
    Ok(out)
}

/// `dt · ½ b ∂²(r²)` at the half step.
fn flux_source(r_old: &[f64], r_new: &[f64], b: f64, dt: f64, m: usize) -> Vec<f64> {
    let du2 = 1.0 / (m * m) as f64;
    let sq: Vec<f64> = r_old
        .iter()
        .zip(r_new)
        .map(|(x, y)| 0.5 * (x * x + y * y))
        .collect();
    let mut s = vec![0.0; m + 1];
    for i in 1..m {
        s[i] = dt * 0.5 * b * (sq[i - 1] - 2.0 * sq[i] + sq[i + 1]) / du2;
    }
    s
}

/// Coupled stepper for `(r, e)` that lands exactly on requested times.
#[derive(Debug, Clone)]
pub struct MacroSolver {
    params: ChainParams,
    dt: f64,
    state: MacroFields,
}

impl MacroSolver {
    pub fn new(params: &ChainParams, r0: Vec<f64>, e0: Vec<f64>, m: usize, dt: f64) -> Result<Self> {
        params.validate()?;
        let g = params.gamma;
        check_grid(m, (g.recip() + g).max(g.recip()), dt)?;
        let tau0 = params.tau_plus.value_at(0.0);
        check_field("stretch", &r0, m, 0.0, tau0)?;
        check_field("energy", &e0, m, params.t_minus, params.t_plus + 0.5 * tau0 * tau0)?;
        Ok(MacroSolver {
            params: *params,
            dt,
            state: MacroFields { m, t: 0.0, r: r0, e: e0 },
        })
    }

    /// Zero stretch and the linear interpolation of the energy boundary data.
    pub fn from_rest(params: &ChainParams, m: usize, dt: f64) -> Result<Self> {
        let tau0 = params.tau_plus.value_at(0.0);
        let grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        let r0 = grid.iter().map(|u| tau0 * u).collect();
        let e_right = params.t_plus + 0.5 * tau0 * tau0;
        let e0 = grid
            .iter()
            .map(|u| params.t_minus + (e_right - params.t_minus) * u)
            .collect();
        Self::new(params, r0, e0, m, dt)
    }

    pub fn fields(&self) -> &MacroFields {
        &self.state
    }

    pub fn advance_to(&mut self, t: f64) -> Result<&MacroFields> {
        if t < self.state.t {
            return Err(Error::InvalidParameter("cannot step backwards in time".into()));
        }
        let (k, h) = steps_for(t - self.state.t, self.dt)?;
        if k == 0 {
            return Ok(&self.state);
        }
        let g = self.params.gamma;
        let a = g.recip() + g;
        let b = 0.5 * (g.recip() - g);
        let m = self.state.m;
        let cn_r = CrankNicolson::new(m, g.recip(), h);
        let cn_e = CrankNicolson::new(m, 0.5 * a, h);
        let t0 = self.state.t;
        for s in 1..=k {
            let now = t0 + s as f64 * h;
            let tau = self.params.tau_plus.value_at(now);
            let r = cn_r.step(&self.state.r, 0.0, tau, None);
            let source = flux_source(&self.state.r, &r, b, h, m);
            let e_right = self.params.t_plus + 0.5 * tau * tau;
            let e = cn_e.step(&self.state.e, self.params.t_minus, e_right, Some(&source));
            if r.iter().chain(&e).any(|v| !v.is_finite()) {
                return Err(Error::Unstable {
                    time: now,
                    reason: "non-finite macroscopic field".into(),
                });
            }
            self.state.r = r;
            self.state.e = e;
            self.state.t = now;
        }
        self.state.t = t;
        Ok(&self.state)
    }
}

/// Mechanical and thermal energy with the residual of the thermal equation
/// `∂_t e_th = ½(γ⁻¹+γ) ∂²e_th + γ⁻¹ (∂_u r)²` on interior nodes.
#[derive(Debug, Clone, Serialize)]
pub struct ThermalSplit {
    pub e_mech: Vec<f64>,
    pub e_th: Vec<f64>,
    pub residual: f64,
}

/// With `previous` the time derivative is the difference quotient between
/// the two levels and spatial terms are averaged over them; without it the
/// fields are treated as stationary.
pub fn thermal_split(fields: &MacroFields, gamma: f64, previous: Option<&MacroFields>) -> ThermalSplit {
    let m = fields.m;
    let du = 1.0 / m as f64;
    let a = gamma.recip() + gamma;
    let e_th = fields.e_th();
    let spatial = |f: &MacroFields, th: &[f64], i: usize| {
        let lap = (th[i - 1] - 2.0 * th[i] + th[i + 1]) / (du * du);
        let ru = (f.r[i + 1] - f.r[i - 1]) / (2.0 * du);
        0.5 * a * lap + ru * ru / gamma
    };
    let prev_th = previous.map(|p| p.e_th());
    let mut residual: f64 = 0.0;
    for i in 1..m {
        let res = match (previous, &prev_th) {
            (Some(p), Some(pth)) => {
                let dt = fields.t - p.t;
                (e_th[i] - pth[i]) / dt - 0.5 * (spatial(fields, &e_th, i) + spatial(p, pth, i))
            }
            _ => -spatial(fields, &e_th, i),
        };
        residual = residual.max(res.abs());
    }
    ThermalSplit {
        e_mech: fields.e_mech(),
        e_th,
        residual,
    }
}

/// Closed-form stationary state for constant tension.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StationaryProfiles {
    pub gamma: f64,
    pub tau: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub j_ss: f64,
    /// Location of the maximum of `e_th_ss` on `[0, 1]`.
    pub u_max: f64,
    pub e_th_max: f64,
    /// Whether the maximum lies strictly inside `(0, 1)`.
    pub interior: bool,
}

pub fn stationary_profiles(params: &ChainParams) -> Result<StationaryProfiles> {
    params.validate()?;
    let tau = params.constant_tau()?;
    let g = params.gamma;
    let j_ss = -0.5 * (g.recip() + g) * (params.t_plus - params.t_minus) - tau * tau / (2.0 * g);
    let curvature = tau * tau / (1.0 + g * g);
    let delta = params.t_plus - params.t_minus;
    let u_max = if curvature == 0.0 {
        if delta >= 0.0 {
            1.0
        } else {
            0.0
        }
    } else {
        (0.5 + delta / (2.0 * curvature)).clamp(0.0, 1.0)
    };
    let mut sp = StationaryProfiles {
        gamma: g,
        tau,
        t_minus: params.t_minus,
        t_plus: params.t_plus,
        j_ss,
        u_max,
        e_th_max: 0.0,
        interior: u_max > 0.0 && u_max < 1.0,
    };
    sp.e_th_max = sp.e_th_ss(u_max);
    Ok(sp)
}

/// A shortcut maximiser,
/// `(½ + (1+γ²)(T₊−T₋)/τ²) ∧ 1`, for `T₊ ≥ T₋` and `τ ≠ 0`. It agrees with
/// [`StationaryProfiles::u_max`] only when `T₊ = T₋`.
pub fn naive_u_max(gamma: f64, tau: f64, t_minus: f64, t_plus: f64) -> f64 {
    (0.5 + (1.0 + gamma * gamma) * (t_plus - t_minus) / (tau * tau)).min(1.0)
}

impl StationaryProfiles {
    pub fn r_ss(&self, u: f64) -> f64 {
        self.tau * u
    }

    pub fn e_th_ss(&self, u: f64) -> f64 {
        self.tau * self.tau / (1.0 + self.gamma * self.gamma) * u * (1.0 - u)
            + (self.t_plus - self.t_minus) * u
            + self.t_minus
    }

    pub fn e_ss(&self, u: f64) -> f64 {
        let r = self.r_ss(u);
        self.e_th_ss(u) + 0.5 * r * r
    }

    /// Stationary fields sampled on `m + 1` nodes.
    pub fn fields(&self, m: usize) -> MacroFields {
        let grid: Vec<f64> = (0..=m).map(|i| i as f64 / m as f64).collect();
        MacroFields {
            m,
            t: 0.0,
            r: grid.iter().map(|&u| self.r_ss(u)).collect(),
            e: grid.iter().map(|&u| self.e_ss(u)).collect(),
        }
    }
}
