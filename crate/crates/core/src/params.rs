//! Model parameters and boundary tension schedules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tension applied at the right end, as a function of macroscopic time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TensionSchedule {
    Constant { value: f64 },
    /// `from` at t = 0, moving linearly to `to` at `t_ramp`, constant afterwards.
    Ramp { from: f64, to: f64, t_ramp: f64 },
    /// `mean + amplitude * sin(2π t / period)`
    Sinusoid { mean: f64, amplitude: f64, period: f64 },
}

impl TensionSchedule {
    pub fn constant(value: f64) -> Self {
        TensionSchedule::Constant { value }
    }

    pub fn value_at(&self, t: f64) -> f64 {
        match *self {
            TensionSchedule::Constant { value } => value,
            TensionSchedule::Ramp { from, to, t_ramp } => {
                if t_ramp <= 0.0 || t >= t_ramp {
                    to
                } else if t <= 0.0 {
                    from
                } else {
                    from + (to - from) * t / t_ramp
                }
            }
            TensionSchedule::Sinusoid {
                mean,
                amplitude,
                period,
            } => mean + amplitude * (2.0 * std::f64::consts::PI * t / period).sin(),
        }
    }

    pub fn as_constant(&self) -> Option<f64> {
        match *self {
            TensionSchedule::Constant { value } => Some(value),
            _ => None,
        }
    }

    fn validate(&self) -> Result<()> {
        let finite = match *self {
            TensionSchedule::Constant { value } => value.is_finite(),
            TensionSchedule::Ramp { from, to, t_ramp } => {
                if !(t_ramp >= 0.0) {
                    return Err(Error::InvalidParameter(
                        "tension ramp duration must be nonnegative".into(),
                    ));
                }
                from.is_finite() && to.is_finite() && t_ramp.is_finite()
            }
            TensionSchedule::Sinusoid {
                mean,
                amplitude,
                period,
            } => {
                if !(period > 0.0) {
                    return Err(Error::InvalidParameter(
                        "tension period must be positive".into(),
                    ));
                }
                mean.is_finite() && amplitude.is_finite() && period.is_finite()
            }
        };
        if finite {
            Ok(())
        } else {
            Err(Error::InvalidParameter("tension must be finite".into()))
        }
    }
}

/// Physical parameters of the open chain.
///
/// `n` springs; elongations `r_1..r_n`, momenta `p_0..p_n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChainParams {
    pub n: usize,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub tau_plus: TensionSchedule,
    pub t_minus: f64,
    pub t_plus: f64,
}

impl ChainParams {
    /// Parameters with a constant tension, validated.
    pub fn new(
        n: usize,
        gamma: f64,
        gamma_tilde: f64,
        tau: f64,
        t_minus: f64,
        t_plus: f64,
    ) -> Result<Self> {
        let p = ChainParams {
            n,
            gamma,
            gamma_tilde,
            tau_plus: TensionSchedule::constant(tau),
            t_minus,
            t_plus,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn with_schedule(mut self, schedule: TensionSchedule) -> Result<Self> {
        self.tau_plus = schedule;
        self.validate()?;
        Ok(self)
    }

    pub fn with_n(mut self, n: usize) -> Result<Self> {
        self.n = n;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "n must be at least 2 (got {})",
                self.n
            )));
        }
        if !(self.gamma > 0.0) || !self.gamma.is_finite() {
            return Err(Error::InvalidParameter("gamma must be positive".into()));
        }
        if !(self.gamma_tilde > 0.0) || !self.gamma_tilde.is_finite() {
            return Err(Error::InvalidParameter(
                "gamma_tilde must be positive".into(),
            ));
        }
        if !(self.t_minus >= 0.0) || !self.t_minus.is_finite() {
            return Err(Error::InvalidParameter(
                "T_minus must be nonnegative".into(),
            ));
        }
        if !(self.t_plus >= 0.0) || !self.t_plus.is_finite() {
            return Err(Error::InvalidParameter("T_plus must be nonnegative".into()));
        }
        self.tau_plus.validate()
    }

    /// The constant tension, or an error for time-dependent schedules.
    pub fn constant_tau(&self) -> Result<f64> {
        self.tau_plus.as_constant().ok_or_else(|| {
            Error::InvalidParameter("stationary computations need a constant tension".into())
        })
    }

    /// Dimension of the state vector, `2n + 1`.
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }
}
