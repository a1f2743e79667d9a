//! Tactile image pipeline and the SSIM contact-deformation measure.
//!
//! Raw camera frames are adaptively thresholded to isolate the pin markers and
//! then center-cropped and block-averaged to the 240×135 processed size. The
//! deformation measure `1 − SSIM(I, I_ref)` is computed on the processed
//! grayscale frame before thresholding.

mod image;
mod io;
mod ssim;
mod threshold;

pub use image::{Stage, TactileImage, PROCESSED_HEIGHT, PROCESSED_WIDTH};
pub use io::{image_file_name, read_png, write_png};
pub use ssim::{deformation, rms_intensity_change, ssim, ssim_with, DeformationMeasure, SsimWindow};
pub use threshold::{adaptive_threshold, subsample_crop, DEFAULT_THRESHOLD_WINDOW};

use crate::Result;

/// Both processed representations of one camera frame.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedFrame {
    /// Subsampled grayscale frame; input to the SSIM deformation measure.
    pub grayscale: TactileImage,
    /// Thresholded then subsampled frame, quantized to 8 bits; input to the
    /// pose regressor.
    pub binary: TactileImage,
}

/// Runs a raw frame through both branches of the pipeline.
pub fn process_frame(raw: &TactileImage, threshold_window: usize, offset: f64) -> Result<ProcessedFrame> {
    let grayscale = subsample_crop(raw)?;
    let binary = subsample_crop(&adaptive_threshold(raw, threshold_window, offset)?)?.quantized_u8();
    Ok(ProcessedFrame { grayscale, binary })
}
