use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const PROCESSED_WIDTH: usize = 240;
pub const PROCESSED_HEIGHT: usize = 135;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Stage {
    Raw,
    Processed,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Raw => "raw",
            Stage::Processed => "processed",
        }
    }
}

/// Row-major grayscale image with intensities in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct TactileImage {
    width: usize,
    height: usize,
    stage: Stage,
    pixels: Vec<f64>,
}

impl TactileImage {
    pub fn new(width: usize, height: usize, stage: Stage, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Dimension(format!("empty image {width}x{height}")));
        }
        if pixels.len() != width * height {
            return Err(Error::Dimension(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        if stage == Stage::Processed && (width, height) != (PROCESSED_WIDTH, PROCESSED_HEIGHT) {
            return Err(Error::Dimension(format!(
                "processed images are {PROCESSED_WIDTH}x{PROCESSED_HEIGHT}, got {width}x{height}"
            )));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Parameter(format!("intensity {bad} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            stage,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, stage: Stage, value: f64) -> Result<Self> {
        Self::new(width, height, stage, vec![value; width * height])
    }

    /// Builds an image by evaluating `f(col, row)`; values are clamped to `[0, 1]`.
    pub fn from_fn(
        width: usize,
        height: usize,
        stage: Stage,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(c, r).clamp(0.0, 1.0));
            }
        }
        Self::new(width, height, stage, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }

    pub fn stage(&self) -> Stage {
        self.stage
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn get(&self, col: usize, row: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    /// Rounds every intensity to the nearest 8-bit level, matching what a
    /// PNG round trip produces.
    pub fn quantized_u8(&self) -> Self {
        Self {
            pixels: self
                .pixels
                .iter()
                .map(|&v| f64::from(to_u8(v)) / 255.0)
                .collect(),
            ..self.clone()
        }
    }

    pub fn to_u8(&self) -> Vec<u8> {
        self.pixels.iter().map(|&v| to_u8(v)).collect()
    }

    /// Mirror about the vertical axis through the image center.
    pub fn flipped_horizontal(&self) -> Self {
        let mut pixels = Vec::with_capacity(self.pixels.len());
        for row in self.pixels.chunks(self.width) {
            pixels.extend(row.iter().rev());
        }
        Self {
            pixels,
            ..self.clone()
        }
    }

    pub(crate) fn require_stage(&self, expected: Stage) -> Result<()> {
        if self.stage == expected {
            Ok(())
        } else {
            Err(Error::Stage {
                expected: expected.as_str(),
                actual: self.stage.as_str(),
            })
        }
    }
}

fn to_u8(v: f64) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn processed_stage_enforces_size() {
        assert!(TactileImage::filled(240, 135, Stage::Processed, 0.0).is_ok());
        assert!(matches!(
            TactileImage::filled(480, 270, Stage::Processed, 0.0),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn rejects_out_of_range_intensity() {
        assert!(TactileImage::new(2, 1, Stage::Raw, vec![0.0, 1.5]).is_err());
        assert!(TactileImage::new(2, 1, Stage::Raw, vec![0.0]).is_err());
    }

    #[test]
    fn flip_is_an_involution() {
        let img = TactileImage::from_fn(5, 3, Stage::Raw, |c, r| (c + 2 * r) as f64 / 20.0).unwrap();
        assert_eq!(img.flipped_horizontal().get(0, 1), img.get(4, 1));
        assert_eq!(img.flipped_horizontal().flipped_horizontal(), img);
    }
}
