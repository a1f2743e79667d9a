use super::actuator::ActuatorState;
use super::controller::{pose_controller_step, ssim_controller_step, ControllerConfig};
use super::plant::{plant_step, PlantModel, PlantSensor};
use super::trajectory::{TrajectoryLog, TrajectoryRow};
use crate::error::{ensure, Result};
use crate::imaging::{deformation, DeformationMeasure, ProcessedFrame};
use crate::posenet::{PoseEstimate, PoseNet};

/// Which feedback signal closes the loop.
#[derive(Debug, Clone, Copy)]
pub enum Controller<'a> {
    /// Deformation measure against the set point `r`.
    Ssim,
    /// Depth estimated by the pose model against `r_z`.
    Pose(&'a PoseNet),
}

/// One hand, one object, one sensor: runs controller and ramp segments back
/// to back on a shared clock and actuator.
pub struct ClosedLoop<'a> {
    plant: PlantModel,
    sensor: PlantSensor,
    reference: ProcessedFrame,
    model: Option<&'a PoseNet>,
    actuator: ActuatorState,
    step: u64,
    t: f64,
}

impl<'a> ClosedLoop<'a> {
    /// `model`, when given, is run on every frame for logging; the pose
    /// controller uses its own model.
    pub fn new(plant: PlantModel, sensor: PlantSensor, actuator: ActuatorState, model: Option<&'a PoseNet>) -> Result<Self> {
        plant.validate()?;
        sensor.sensor.validate()?;
        Ok(Self {
            plant,
            reference: sensor.reference()?,
            sensor,
            model,
            actuator,
            step: 0,
            t: 0.0,
        })
    }

    pub fn actuator(&self) -> &ActuatorState {
        &self.actuator
    }

    pub fn time(&self) -> f64 {
        self.t
    }

    /// Images the plant at the current command. Returns the depth, the
    /// deformation measure and the model's estimate.
    fn observe(&mut self, model: Option<&PoseNet>) -> Result<(f64, f64, Option<PoseEstimate>)> {
        let out = plant_step(&mut self.actuator, &self.plant, &self.sensor, self.step)?;
        self.step += 1;
        let e = deformation(&out.frame.grayscale, &self.reference.grayscale)?.value();
        let pose = model.map(|m| m.predict(&out.frame.binary)).transpose()?;
        Ok((out.depth, e, pose))
    }

    /// Fixed-cycle feedback: acquire, compute the increment, actuate, wait
    /// for the motor, log.
    pub fn run(&mut self, controller: Controller<'_>, duration: f64, cfg: &ControllerConfig) -> Result<TrajectoryLog> {
        cfg.validate()?;
        ensure(duration > 0.0, || format!("duration {duration} must be > 0"))?;
        let model = match controller {
            Controller::Pose(m) => Some(m),
            Controller::Ssim => self.model,
        };
        let n = cfg.cycles_in(duration);
        let mut log = TrajectoryLog::default();
        for k in 0..n {
            let t = self.t + k as f64 * cfg.cycle_time;
            let (depth, e, pose) = self.observe(model)?;
            let (delta_u, setpoint) = match controller {
                Controller::Ssim => (ssim_controller_step(DeformationMeasure(e), cfg), cfg.setpoint),
                // The gate only filters what is logged; the loop always acts on
                // the latest estimate so it can close from no contact.
                Controller::Pose(_) => (
                    pose_controller_step(pose.expect("pose controller has a model").z, cfg),
                    cfg.setpoint_z,
                ),
            };
            self.actuator.request_increment(delta_u)?;
            self.actuator.settle();
            let gated = e <= cfg.reliability_gate;
            log.rows.push(TrajectoryRow {
                t,
                u: self.actuator.u(),
                e_ssim: e,
                pose: if gated { None } else { pose },
                gated,
                depth,
                delta_u,
                setpoint: Some(setpoint),
            });
        }
        self.t += n as f64 * cfg.cycle_time;
        log.final_u = self.actuator.u();
        Ok(log)
    }

    /// Open-loop ramp `u(t) = u_start + rate · u_max · t`, clamped, sampled
    /// once per cycle.
    pub fn ramp(&mut self, rate: f64, duration: f64, cfg: &ControllerConfig) -> Result<TrajectoryLog> {
        cfg.validate()?;
        ensure(rate > 0.0, || format!("ramp rate {rate} must be > 0"))?;
        ensure(duration > 0.0, || format!("duration {duration} must be > 0"))?;
        self.actuator.settle();
        let u_start = self.actuator.u();
        let slope = rate * self.actuator.u_max();
        let n = cfg.cycles_in(duration);
        let mut log = TrajectoryLog::default();
        for k in 0..n {
            let dt = k as f64 * cfg.cycle_time;
            let before = self.actuator.u();
            self.actuator.request_position(u_start + slope * dt)?;
            let (depth, e, pose) = self.observe(self.model)?;
            let gated = e <= cfg.reliability_gate;
            log.rows.push(TrajectoryRow {
                t: self.t + dt,
                u: self.actuator.u(),
                e_ssim: e,
                pose: if gated { None } else { pose },
                gated,
                depth,
                delta_u: self.actuator.u() - before,
                setpoint: None,
            });
        }
        self.actuator.request_position(u_start + slope * duration)?;
        self.actuator.settle();
        self.t += n as f64 * cfg.cycle_time;
        log.final_u = self.actuator.u();
        Ok(log)
    }
}

/// Runs one feedback segment from `u_start`.
pub fn run_closed_loop(
    controller: Controller<'_>,
    plant: &PlantModel,
    sensor: &PlantSensor,
    u_start: f64,
    duration: f64,
    cfg: &ControllerConfig,
) -> Result<TrajectoryLog> {
    let actuator = ActuatorState::new(u_start, super::actuator::DEFAULT_U_MAX)?;
    ClosedLoop::new(*plant, *sensor, actuator, None)?.run(controller, duration, cfg)
}

/// Runs one open-loop ramp from `u_start`, optionally logging pose estimates.
pub fn ramp_motor(
    rate: f64,
    duration: f64,
    plant: &PlantModel,
    sensor: &PlantSensor,
    u_start: f64,
    model: Option<&PoseNet>,
    cfg: &ControllerConfig,
) -> Result<TrajectoryLog> {
    let actuator = ActuatorState::new(u_start, super::actuator::DEFAULT_U_MAX)?;
    ClosedLoop::new(*plant, *sensor, actuator, model)?.ramp(rate, duration, cfg)
}
