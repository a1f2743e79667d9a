//! Marker-pin membrane deformation and tactile camera rendering.
//!
//! The stimulus is an infinite straight edge described by an [`EdgePose`].
//! [`deform_pins`] moves the 5×9 pin lattice, [`render_image`] images it, and
//! [`synthesize_contact`] chains the two with seeded sensor noise.

mod pins;
mod pose;
mod render;

pub use pins::{
    deform_pins, rest_pin_field, Deformation, MembraneParams, PinField, Point2, PIN_COLS, PIN_COUNT, PIN_ROWS,
};
pub use pose::{EdgePose, Interval, PoseRanges, ShearPerturbation, ShearRanges};
pub use render::{render_image, Camera};

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::imaging::{Stage, TactileImage};
use crate::seed::{self, Stream};

/// Everything needed to turn a contact into a raw camera frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    /// Pin lattice pitch (mm).
    pub pitch: f64,
    /// Pin radius (mm); the pins are 0.75 mm in diameter.
    pub pin_radius: f64,
    pub membrane: MembraneParams,
    pub camera: Camera,
    /// Std of additive Gaussian pixel noise on the raw frame.
    pub noise_sigma: f64,
}

impl Default for SensorConfig {
    fn default() -> Self {
        Self {
            pitch: 2.0,
            pin_radius: 0.375,
            membrane: MembraneParams::default(),
            camera: Camera::default(),
            noise_sigma: 2.0 / 255.0,
        }
    }
}

impl SensorConfig {
    pub fn noise_free(self) -> Self {
        Self {
            noise_sigma: 0.0,
            ..self
        }
    }

    /// Camera with its focal distance tied to the pad depth.
    pub fn camera(&self) -> Camera {
        Camera {
            focal_distance: self.membrane.pad_depth,
            ..self.camera
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.membrane.validate()?;
        self.camera().validate()?;
        ensure(self.noise_sigma >= 0.0, || format!("noise_sigma {} must be >= 0", self.noise_sigma))
    }

    pub fn rest_field(&self) -> Result<PinField> {
        rest_pin_field(self.pitch, self.pin_radius)
    }

    /// Noise-free image of the undeformed sensor.
    pub fn rest_image(&self) -> Result<TactileImage> {
        render_image(&self.rest_field()?, &self.camera())
    }
}

/// Adds seeded zero-mean Gaussian noise, clamping to `[0, 1]`.
pub fn add_pixel_noise(img: &TactileImage, sigma: f64, noise_seed: u64) -> Result<TactileImage> {
    if sigma == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, sigma).map_err(|e| crate::Error::Parameter(e.to_string()))?;
    let mut rng = seed::rng(noise_seed, Stream::PixelNoise, 0);
    let pixels = img
        .pixels()
        .iter()
        .map(|&v| (v + normal.sample(&mut rng)).clamp(0.0, 1.0))
        .collect();
    TactileImage::new(img.width(), img.height(), Stage::Raw, pixels)
}

/// Deforms the rest lattice under `pose` and `shear`, renders it, and adds
/// pixel noise drawn from `noise_seed`. Identical inputs give bit-identical
/// frames.
pub fn synthesize_contact(
    pose: &EdgePose,
    shear: &ShearPerturbation,
    sensor: &SensorConfig,
    noise_seed: u64,
) -> Result<TactileImage> {
    sensor.validate()?;
    let deformed = deform_pins(&sensor.rest_field()?, pose, shear, &sensor.membrane)?;
    let clean = render_image(&deformed.field, &sensor.camera())?;
    add_pixel_noise(&clean, sensor.noise_sigma, noise_seed)
}
