use serde::{Deserialize, Serialize};

use crate::error::{ensure, Error, Result};

pub const DEFAULT_U_MAX: f64 = 19000.0;

/// Motor position under set-point-increment actuation: each increment moves
/// the target, and no further increment is taken until the motor settles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ActuatorState {
    u: f64,
    u_max: f64,
    pending_setpoint: f64,
    settled: bool,
}

impl ActuatorState {
    pub fn new(u: f64, u_max: f64) -> Result<Self> {
        ensure(u_max > 0.0, || format!("u_max {u_max} must be > 0"))?;
        ensure((0.0..=u_max).contains(&u), || format!("initial command {u} outside [0, {u_max}]"))?;
        Ok(Self {
            u,
            u_max,
            pending_setpoint: u,
            settled: true,
        })
    }

    pub fn u(&self) -> f64 {
        self.u
    }

    pub fn u_max(&self) -> f64 {
        self.u_max
    }

    pub fn pending_setpoint(&self) -> f64 {
        self.pending_setpoint
    }

    pub fn is_settled(&self) -> bool {
        self.settled
    }

    /// Moves the target by `delta`, clamped to `[0, u_max]`.
    pub fn request_increment(&mut self, delta: f64) -> Result<()> {
        if !self.settled {
            return Err(Error::Contract(format!(
                "increment {delta} requested while moving to {}",
                self.pending_setpoint
            )));
        }
        if !delta.is_finite() {
            return Err(Error::Parameter(format!("non-finite increment {delta}")));
        }
        self.pending_setpoint = (self.u + delta).clamp(0.0, self.u_max);
        self.settled = false;
        Ok(())
    }

    /// Sets an absolute target (open-loop ramps), clamped.
    pub fn request_position(&mut self, target: f64) -> Result<()> {
        self.request_increment(target - self.u)
    }

    /// The motor reaches its target.
    pub fn settle(&mut self) {
        self.u = self.pending_setpoint;
        self.settled = true;
    }
}
