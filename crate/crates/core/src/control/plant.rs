use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::actuator::ActuatorState;
use crate::error::{ensure, Error, Result};
use crate::imaging::{process_frame, ProcessedFrame, DEFAULT_THRESHOLD_WINDOW};
use crate::seed::{self, Stream};
use crate::tactile_sim::{synthesize_contact, EdgePose, SensorConfig, ShearPerturbation};

/// The grasped test objects.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ObjectId {
    #[serde(rename = "prism_20mm")]
    Prism20,
    #[serde(rename = "prism_30mm")]
    Prism30,
    #[serde(rename = "prism_40mm")]
    Prism40,
    #[serde(rename = "soft_object")]
    SoftObject,
}

impl ObjectId {
    pub const ALL: [ObjectId; 4] = [ObjectId::Prism20, ObjectId::Prism30, ObjectId::Prism40, ObjectId::SoftObject];

    pub fn name(self) -> &'static str {
        match self {
            ObjectId::Prism20 => "prism_20mm",
            ObjectId::Prism30 => "prism_30mm",
            ObjectId::Prism40 => "prism_40mm",
            ObjectId::SoftObject => "soft_object",
        }
    }
}

impl fmt::Display for ObjectId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ObjectId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace('-', "_").as_str() {
            "prism_20mm" | "prism20" => Ok(ObjectId::Prism20),
            "prism_30mm" | "prism30" => Ok(ObjectId::Prism30),
            "prism_40mm" | "prism40" => Ok(ObjectId::Prism40),
            "soft_object" | "soft" => Ok(ObjectId::SoftObject),
            _ => Err(Error::UnknownObject(s.to_string())),
        }
    }
}

/// Where and how the held object's edge meets the fingertip. `z` comes from
/// the plant; the rest is fixed per object.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ContactScenario {
    pub x: f64,
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
}

impl ContactScenario {
    pub fn pose_at(&self, depth: f64) -> EdgePose {
        EdgePose::new(self.x, depth, self.phi, self.psi, self.theta)
    }
}

/// Motor command to contact depth: zero up to the onset, then linear, then
/// clamped.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlantModel {
    pub object_id: ObjectId,
    pub contact_onset_u: f64,
    /// mm per count beyond the onset.
    pub depth_gain: f64,
    pub max_depth: f64,
    pub scenario: ContactScenario,
}

impl PlantModel {
    pub fn for_object(object_id: ObjectId) -> Self {
        let (onset, gain, x, phi, psi, theta) = match object_id {
            ObjectId::Prism20 => (5000.0, 0.0015, 0.0, 0.0, 0.0, 0.0),
            ObjectId::Prism30 => (4200.0, 0.0018, 1.0, 0.0, 0.0, 15.0),
            ObjectId::Prism40 => (3500.0, 0.0020, -1.5, 0.0, 0.0, -10.0),
            // Closes earlier but yields: a fraction of the depth per count.
            ObjectId::SoftObject => (4000.0, 0.0008, 0.5, 2.0, -3.0, 25.0),
        };
        Self {
            object_id,
            contact_onset_u: onset,
            depth_gain: gain,
            max_depth: 3.0,
            scenario: ContactScenario { x, phi, psi, theta },
        }
    }

    pub fn named(name: &str) -> Result<Self> {
        Ok(Self::for_object(name.parse()?))
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.contact_onset_u >= 0.0, || "contact onset must be >= 0".into())?;
        ensure(self.depth_gain > 0.0, || "depth gain must be > 0".into())?;
        ensure(self.max_depth > 0.0, || "max depth must be > 0".into())
    }

    pub fn depth(&self, u: f64) -> f64 {
        (self.depth_gain * (u - self.contact_onset_u)).clamp(0.0, self.max_depth)
    }
}

/// Sensor settings and noise seeding shared by every plant step of a run.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlantSensor {
    pub sensor: SensorConfig,
    pub threshold_window: usize,
    pub threshold_offset: f64,
    pub seed: u64,
}

impl PlantSensor {
    pub fn new(sensor: SensorConfig, seed: u64) -> Self {
        Self {
            sensor,
            threshold_window: DEFAULT_THRESHOLD_WINDOW,
            threshold_offset: 0.0,
            seed,
        }
    }

    /// Processed undeformed frame used as the SSIM reference.
    pub fn reference(&self) -> Result<ProcessedFrame> {
        let noise_seed = seed::derive(self.seed, Stream::Reference, 0);
        let raw = synthesize_contact(&EdgePose::default(), &ShearPerturbation::NONE, &self.sensor, noise_seed)?;
        process_frame(&raw, self.threshold_window, self.threshold_offset)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlantOutput {
    pub depth: f64,
    pub frame: ProcessedFrame,
}

/// Lets the actuator reach its pending set point, then images the contact at
/// the resulting depth. `step` indexes the pixel noise.
pub fn plant_step(state: &mut ActuatorState, plant: &PlantModel, sensor: &PlantSensor, step: u64) -> Result<PlantOutput> {
    state.settle();
    let depth = plant.depth(state.u());
    let noise_seed = seed::derive(sensor.seed, Stream::Plant, step);
    let raw = synthesize_contact(&plant.scenario.pose_at(depth), &ShearPerturbation::NONE, &sensor.sensor, noise_seed)?;
    let frame = process_frame(&raw, sensor.threshold_window, sensor.threshold_offset)?;
    Ok(PlantOutput { depth, frame })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn object_names_parse() {
        for id in ObjectId::ALL {
            assert_eq!(id.name().parse::<ObjectId>().unwrap(), id);
        }
        assert!(matches!("teapot".parse::<ObjectId>(), Err(Error::UnknownObject(_))));
        assert!(PlantModel::named("teapot").is_err());
    }

    #[test]
    fn depth_law_matches_closed_form() {
        let p = PlantModel::for_object(ObjectId::Prism20);
        for i in 0..100 {
            let u = i as f64 * 190.0;
            let expected = if u <= 5000.0 { 0.0 } else { (0.0015 * (u - 5000.0)).min(3.0) };
            assert!((p.depth(u) - expected).abs() < 1e-12, "u = {u}");
        }
    }

    #[test]
    fn onsets_differ_across_objects() {
        let mut onsets: Vec<f64> = ObjectId::ALL.iter().map(|&o| PlantModel::for_object(o).contact_onset_u).collect();
        onsets.sort_by(f64::total_cmp);
        onsets.dedup();
        assert_eq!(onsets.len(), 4);
    }

    #[test]
    fn onset_frame_is_the_rest_frame() {
        let plant = PlantModel::for_object(ObjectId::Prism30);
        let sensor = PlantSensor::new(SensorConfig::default().noise_free(), 1);
        let mut state = ActuatorState::new(plant.contact_onset_u, 19000.0).unwrap();
        let out = plant_step(&mut state, &plant, &sensor, 0).unwrap();
        assert_eq!(out.depth, 0.0);
        assert_eq!(out.frame, sensor.reference().unwrap());
    }

    #[test]
    fn full_command_clamps_depth() {
        let plant = PlantModel::for_object(ObjectId::SoftObject);
        assert_eq!(plant.depth(19000.0), plant.max_depth);
    }
}
