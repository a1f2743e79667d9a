use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::control::{ControllerConfig, ObjectId};
use crate::error::{ensure, Error, Result};
use crate::imaging::DEFAULT_THRESHOLD_WINDOW;
use crate::posenet::{CollectOptions, NetworkConfig};
use crate::tactile_sim::{PoseRanges, SensorConfig, ShearRanges};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Profile {
    /// Small network and dataset; minutes on one CPU core.
    Desk,
    /// Published network size and dataset size.
    Paper,
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Profile::Desk),
            "paper" => Ok(Profile::Paper),
            _ => Err(Error::Config(format!("unknown profile `{s}` (expected desk or paper)"))),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Profile::Desk => "desk",
            Profile::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ImagingConfig {
    pub threshold_window: usize,
    pub threshold_offset: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PosenetConfig {
    pub dataset_size: usize,
    pub ranges: PoseRanges,
    pub shear: ShearRanges,
    pub network: NetworkConfig,
    /// Upper bounds on test MAE for x, z, phi, psi, theta.
    pub max_mae: [f64; 5],
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp1Config {
    pub objects: Vec<ObjectId>,
    pub duration: f64,
    pub u_start: f64,
    /// The deformation must enter the band within this many cycles...
    pub convergence_cycles: usize,
    /// ...and stay in it for this many more.
    pub hold_cycles: usize,
    pub tolerance: f64,
    pub final_cycles: usize,
    pub max_final_delta_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp3aConfig {
    pub object: ObjectId,
    pub closure: f64,
    /// Fraction of `u_max` per second.
    pub ramp_rate: f64,
    pub ramp_duration: f64,
    pub min_r_squared: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Exp3bConfig {
    pub object: ObjectId,
    pub closure: f64,
    pub setpoints: Vec<f64>,
    pub segment: f64,
    pub tolerance: f64,
    /// Trailing fraction of each segment treated as steady state.
    pub tail_fraction: f64,
}

/// Every setting of a run, one section per module.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub profile: Profile,
    pub sensor: SensorConfig,
    pub imaging: ImagingConfig,
    pub posenet: PosenetConfig,
    pub control: ControllerConfig,
    pub exp1: Exp1Config,
    pub exp3a: Exp3aConfig,
    pub exp3b: Exp3bConfig,
}

impl RunConfig {
    pub fn for_profile(profile: Profile) -> Self {
        let (network, dataset_size) = match profile {
            Profile::Desk => (NetworkConfig::desk(), 4000),
            Profile::Paper => (NetworkConfig::paper(), 10_000),
        };
        Self {
            seed: 1,
            profile,
            sensor: SensorConfig::default(),
            imaging: ImagingConfig {
                threshold_window: DEFAULT_THRESHOLD_WINDOW,
                threshold_offset: 0.0,
            },
            posenet: PosenetConfig {
                dataset_size,
                ranges: PoseRanges::default(),
                shear: ShearRanges::default(),
                network,
                max_mae: [1.5, 0.3, 2.0, 3.2, 10.0],
            },
            control: ControllerConfig::default(),
            exp1: Exp1Config {
                objects: ObjectId::ALL.to_vec(),
                duration: 45.0,
                u_start: 0.0,
                convergence_cycles: 200,
                hold_cycles: 50,
                tolerance: 0.05,
                final_cycles: 10,
                max_final_delta_u: 1.0,
            },
            exp3a: Exp3aConfig {
                object: ObjectId::Prism20,
                closure: 20.0,
                ramp_rate: 0.01,
                ramp_duration: 20.0,
                min_r_squared: 0.9,
            },
            exp3b: Exp3bConfig {
                object: ObjectId::Prism20,
                closure: 20.0,
                setpoints: vec![1.0, 1.5, 2.0, 2.5, 3.0],
                segment: 20.0,
                tolerance: 0.25,
                tail_fraction: 0.25,
            },
        }
    }

    /// Parses TOML layered over the defaults of its profile; `profile`
    /// overrides the file's own `profile` key.
    pub fn from_toml(text: &str, profile: Option<Profile>) -> Result<Self> {
        let user: toml::Table = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let profile = match (profile, user.get("profile")) {
            (Some(p), _) => p,
            (None, Some(v)) => v
                .as_str()
                .ok_or_else(|| Error::Config("`profile` must be a string".into()))?
                .parse()?,
            (None, None) => Profile::Desk,
        };
        let mut base = toml::Table::try_from(Self::for_profile(profile)).map_err(|e| Error::Config(e.to_string()))?;
        merge(&mut base, user);
        base.insert("profile".into(), toml::Value::String(profile.to_string()));
        let cfg: Self = base.try_into().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path, profile: Option<Profile>) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_toml(&text, profile)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes to TOML")
    }

    pub fn collect_options(&self) -> CollectOptions {
        CollectOptions {
            ranges: self.posenet.ranges,
            shear: self.posenet.shear,
            threshold_window: self.imaging.threshold_window,
            threshold_offset: self.imaging.threshold_offset,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sensor.validate()?;
        self.posenet.network.validate()?;
        self.control.validate()?;
        ensure(self.imaging.threshold_window % 2 == 1, || "threshold window must be odd".into())?;
        ensure(self.posenet.dataset_size >= 1, || "dataset size must be >= 1".into())?;
        ensure(!self.exp1.objects.is_empty(), || "exp1 needs at least one object".into())?;
        ensure(self.exp1.duration > 0.0 && self.exp3a.closure > 0.0 && self.exp3b.closure > 0.0, || {
            "durations must be > 0".into()
        })?;
        ensure(self.exp3a.ramp_rate > 0.0 && self.exp3a.ramp_duration > 0.0, || "ramp must be > 0".into())?;
        ensure(!self.exp3b.setpoints.is_empty() && self.exp3b.segment > 0.0, || "exp3b needs set points".into())?;
        ensure(self.exp3b.setpoints.iter().all(|r| (0.0..=3.0).contains(r)), || {
            "exp3b set points must lie in [0, 3] mm".into()
        })?;
        ensure(self.exp3b.tail_fraction > 0.0 && self.exp3b.tail_fraction <= 1.0, || {
            "tail_fraction outside (0, 1]".into()
        })
    }
}

/// Recursively overlays `user` onto `base`; tables merge, other values replace.
fn merge(base: &mut toml::Table, user: toml::Table) {
    for (k, v) in user {
        match (base.get_mut(&k), v) {
            (Some(toml::Value::Table(b)), toml::Value::Table(u)) => merge(b, u),
            (_, v) => {
                base.insert(k, v);
            }
        }
    }
}
