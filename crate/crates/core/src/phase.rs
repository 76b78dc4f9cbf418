//! Canonical system: the exponentially decaying phase variable shared by
//! every dimension of a movement primitive.

use serde::{Deserialize, Serialize};

use crate::error::{DmpError, Result};

/// Decay rate, temporal scaling and horizon of the canonical system.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhaseConfig {
    pub alpha: f64,
    pub tau: f64,
    pub horizon: f64,
}

impl PhaseConfig {
    pub fn new(alpha: f64, tau: f64, horizon: f64) -> Result<Self> {
        let cfg = PhaseConfig {
            alpha,
            tau,
            horizon,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, value) in [
            ("alpha", self.alpha),
            ("tau", self.tau),
            ("horizon", self.horizon),
        ] {
            if !(value.is_finite() && value > 0.0) {
                return Err(DmpError::invalid(name, format!("must be positive, got {value}")));
            }
        }
        Ok(())
    }

    /// Phase value at time `t`.
    pub fn at(&self, t: f64) -> f64 {
        phase_at(t, self)
    }

    /// Phase reached at the end of the horizon, `exp(-alpha * T)`.
    pub fn final_phase(&self) -> f64 {
        (-self.alpha * self.horizon).exp()
    }

    /// Inverse of the learning-time phase map (`tau = 1`).
    pub fn time_of(&self, s: f64) -> f64 {
        -s.ln() / self.alpha
    }
}

/// Closed-form solution of `tau * ds/dt = -alpha * s`, `s(0) = 1`.
pub fn phase_at(t: f64, cfg: &PhaseConfig) -> f64 {
    (-cfg.alpha * t / cfg.tau).exp()
}
