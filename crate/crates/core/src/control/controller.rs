use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::imaging::DeformationMeasure;

/// Gain, set points and timing of the proportional controllers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ControllerConfig {
    /// Proportional gain in counts per unit error, shared by both controllers.
    pub gain: f64,
    /// Deformation set point `r` of the SSIM controller.
    pub setpoint: f64,
    /// Depth set point of the pose controller (mm).
    pub setpoint_z: f64,
    /// `-1` is negative feedback when a larger command closes the hand; `+1`
    /// applies the increment formula with the literal sign.
    pub feedback_sign: f64,
    /// Seconds per acquire/compute/actuate cycle (virtual time).
    pub cycle_time: f64,
    /// Pose estimates are kept only when the deformation exceeds this.
    pub reliability_gate: f64,
}

impl Default for ControllerConfig {
    fn default() -> Self {
        Self {
            gain: 100.0,
            setpoint: 0.7,
            setpoint_z: 2.0,
            feedback_sign: -1.0,
            cycle_time: 0.15,
            reliability_gate: 0.45,
        }
    }
}

impl ControllerConfig {
    pub fn validate(&self) -> Result<()> {
        // Zero gain is allowed: it is how an open (non-moving) loop is expressed.
        ensure(self.gain >= 0.0 && self.gain.is_finite(), || format!("gain {} must be >= 0", self.gain))?;
        ensure(self.setpoint > 0.0 && self.setpoint < 2.0, || format!("set point {} outside (0, 2)", self.setpoint))?;
        ensure((0.0..=3.0).contains(&self.setpoint_z), || format!("z set point {} outside [0, 3] mm", self.setpoint_z))?;
        ensure(self.feedback_sign == 1.0 || self.feedback_sign == -1.0, || {
            format!("feedback sign {} must be +1 or -1", self.feedback_sign)
        })?;
        ensure(self.cycle_time > 0.0, || "cycle time must be > 0".into())?;
        ensure((0.0..2.0).contains(&self.reliability_gate), || "reliability gate outside [0, 2)".into())
    }

    /// Number of cycles in `duration` seconds. The small slack keeps exact
    /// multiples such as 45 s / 0.15 s from rounding down.
    pub fn cycles_in(&self, duration: f64) -> usize {
        (duration / self.cycle_time + 1e-9).floor() as usize
    }
}

/// Set-point increment from the deformation error.
pub fn ssim_controller_step(e: DeformationMeasure, cfg: &ControllerConfig) -> f64 {
    cfg.feedback_sign * cfg.gain * (e.value() - cfg.setpoint)
}

/// Set-point increment from the estimated contact depth.
pub fn pose_controller_step(z: f64, cfg: &ControllerConfig) -> f64 {
    cfg.feedback_sign * cfg.gain * (z - cfg.setpoint_z)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ssim_step_arithmetic() {
        let mut cfg = ControllerConfig::default();
        assert_eq!(ssim_controller_step(DeformationMeasure(0.7), &cfg), 0.0);
        let e = DeformationMeasure(0.2);
        assert!((ssim_controller_step(e, &cfg) - 50.0).abs() < 1e-12);
        cfg.feedback_sign = 1.0;
        assert!((ssim_controller_step(e, &cfg) + 50.0).abs() < 1e-12);
    }

    #[test]
    fn pose_step_arithmetic() {
        let cfg = ControllerConfig { setpoint_z: 3.0, ..Default::default() };
        assert_eq!(pose_controller_step(3.0, &cfg), 0.0);
        assert!((pose_controller_step(1.0, &cfg) - 200.0).abs() < 1e-12);
    }

    #[test]
    fn validation() {
        assert!(ControllerConfig::default().validate().is_ok());
        assert!(ControllerConfig { gain: 0.0, ..Default::default() }.validate().is_ok());
        assert!(ControllerConfig { gain: -1.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { setpoint: 2.0, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { setpoint_z: 3.5, ..Default::default() }.validate().is_err());
        assert!(ControllerConfig { feedback_sign: 0.5, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn cycle_count_is_floor_of_duration_over_cycle() {
        let cfg = ControllerConfig::default();
        assert_eq!(cfg.cycles_in(45.0), 300);
        assert_eq!(cfg.cycles_in(20.0), 133);
        assert_eq!(cfg.cycles_in(120.0), 800);
        assert_eq!(cfg.cycles_in(0.1), 0);
    }
}
