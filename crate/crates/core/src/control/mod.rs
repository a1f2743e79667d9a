//! The single-actuator hand as a plant, and the proportional set-point
//! increment controllers closing the loop through the tactile image.

mod actuator;
mod controller;
mod plant;
mod run;
mod trajectory;

pub use actuator::{ActuatorState, DEFAULT_U_MAX};
pub use controller::{pose_controller_step, ssim_controller_step, ControllerConfig};
pub use plant::{plant_step, ContactScenario, ObjectId, PlantModel, PlantOutput, PlantSensor};
pub use run::{ramp_motor, run_closed_loop, ClosedLoop, Controller};
pub use trajectory::{TrajectoryLog, TrajectoryRow, CSV_HEADER};
