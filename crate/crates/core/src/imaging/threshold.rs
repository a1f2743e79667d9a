use super::image::{Stage, TactileImage, PROCESSED_HEIGHT, PROCESSED_WIDTH};
use crate::error::{Error, Result};

pub const DEFAULT_THRESHOLD_WINDOW: usize = 39;

/// Slack on the "exceeds the local mean" comparison so that flat regions,
/// whose Gaussian mean equals the pixel up to rounding, stay dark.
const MEAN_TOLERANCE: f64 = 1e-9;

/// Normalized 1-D Gaussian of odd `size`, std `size / 6`.
fn gaussian_kernel(size: usize) -> Vec<f64> {
    let sigma = size as f64 / 6.0;
    let half = (size / 2) as f64;
    let raw: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|w| w / total).collect()
}

/// Separable convolution with replicated borders.
fn gaussian_blur(pixels: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let half = (kernel.len() / 2) as isize;
    let clamp = |v: isize, n: usize| v.clamp(0, n as isize - 1) as usize;

    let mut tmp = vec![0.0; pixels.len()];
    for r in 0..height {
        let row = &pixels[r * width..(r + 1) * width];
        for c in 0..width {
            let mut acc = 0.0;
            for (k, w) in kernel.iter().enumerate() {
                acc += w * row[clamp(c as isize + k as isize - half, width)];
            }
            tmp[r * width + c] = acc;
        }
    }

    let mut out = vec![0.0; pixels.len()];
    for r in 0..height {
        let out_row = &mut out[r * width..(r + 1) * width];
        for (k, w) in kernel.iter().enumerate() {
            let src = clamp(r as isize + k as isize - half, height);
            let src_row = &tmp[src * width..(src + 1) * width];
            for (o, s) in out_row.iter_mut().zip(src_row) {
                *o += w * s;
            }
        }
    }
    out
}

/// Binarizes a raw frame against its Gaussian-weighted local mean.
///
/// A pixel becomes 1 when its intensity exceeds the local mean minus
/// `offset`, otherwise 0. The Gaussian has std `window / 6`.
pub fn adaptive_threshold(img: &TactileImage, window: usize, offset: f64) -> Result<TactileImage> {
    img.require_stage(Stage::Raw)?;
    if window < 3 || window % 2 == 0 {
        return Err(Error::Parameter(format!(
            "threshold window must be odd and >= 3, got {window}"
        )));
    }
    let (w, h) = img.dims();
    let mean = gaussian_blur(img.pixels(), w, h, &gaussian_kernel(window));
    let pixels = img
        .pixels()
        .iter()
        .zip(&mean)
        .map(|(&v, &m)| if v - (m - offset) > MEAN_TOLERANCE { 1.0 } else { 0.0 })
        .collect();
    TactileImage::new(w, h, Stage::Raw, pixels)
}

/// Center-crops a raw frame to an integer multiple of 240×135 and block-averages
/// it down to the processed size.
pub fn subsample_crop(img: &TactileImage) -> Result<TactileImage> {
    img.require_stage(Stage::Raw)?;
    let (w, h) = img.dims();
    if w < PROCESSED_WIDTH || h < PROCESSED_HEIGHT {
        return Err(Error::Dimension(format!(
            "cannot subsample {w}x{h} to {PROCESSED_WIDTH}x{PROCESSED_HEIGHT}"
        )));
    }
    let factor = (w / PROCESSED_WIDTH).min(h / PROCESSED_HEIGHT);
    let x0 = (w - PROCESSED_WIDTH * factor) / 2;
    let y0 = (h - PROCESSED_HEIGHT * factor) / 2;
    let norm = 1.0 / (factor * factor) as f64;
    let src = img.pixels();

    let mut pixels = Vec::with_capacity(PROCESSED_WIDTH * PROCESSED_HEIGHT);
    for r in 0..PROCESSED_HEIGHT {
        for c in 0..PROCESSED_WIDTH {
            let mut acc = 0.0;
            for dy in 0..factor {
                let row = (y0 + r * factor + dy) * w;
                for dx in 0..factor {
                    acc += src[row + x0 + c * factor + dx];
                }
            }
            pixels.push((acc * norm).clamp(0.0, 1.0));
        }
    }
    TactileImage::new(PROCESSED_WIDTH, PROCESSED_HEIGHT, Stage::Processed, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn raw(w: usize, h: usize, f: impl FnMut(usize, usize) -> f64) -> TactileImage {
        TactileImage::from_fn(w, h, Stage::Raw, f).unwrap()
    }

    #[test]
    fn kernel_is_normalized_and_symmetric() {
        let k = gaussian_kernel(39);
        assert!((k.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        for i in 0..39 {
            assert_eq!(k[i], k[38 - i]);
        }
    }

    #[test]
    fn uniform_image_thresholds_to_zero() {
        let out = adaptive_threshold(&raw(64, 40, |_, _| 0.5), 39, 0.0).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn output_is_binary() {
        let img = raw(80, 50, |c, r| ((c * 7 + r * 13) % 17) as f64 / 16.0);
        let out = adaptive_threshold(&img, 11, 0.0).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 0.0 || v == 1.0));
        assert!(out.pixels().iter().any(|&v| v == 1.0));
    }

    #[test]
    fn bright_spot_survives_threshold() {
        let img = raw(60, 60, |c, r| if (28..32).contains(&c) && (28..32).contains(&r) { 0.9 } else { 0.1 });
        let out = adaptive_threshold(&img, 39, 0.0).unwrap();
        assert_eq!(out.get(30, 30), 1.0);
        assert_eq!(out.get(5, 5), 0.0);
        assert_eq!(out.pixels().iter().sum::<f64>(), 16.0);
    }

    #[test]
    fn rejects_bad_windows_and_stage() {
        let img = raw(20, 20, |_, _| 0.2);
        assert!(matches!(adaptive_threshold(&img, 38, 0.0), Err(Error::Parameter(_))));
        assert!(matches!(adaptive_threshold(&img, 1, 0.0), Err(Error::Parameter(_))));
        let processed = TactileImage::filled(240, 135, Stage::Processed, 0.2).unwrap();
        assert!(matches!(adaptive_threshold(&processed, 39, 0.0), Err(Error::Stage { .. })));
    }

    #[test]
    fn subsample_halves_default_raw_size() {
        let out = subsample_crop(&raw(480, 270, |c, r| (c + r) as f64 / 1000.0)).unwrap();
        assert_eq!(out.dims(), (240, 135));
        assert_eq!(out.stage(), Stage::Processed);
        // 2x2 block mean of (c + r) / 1000 at block (0, 0) is 1 / 1000.
        assert!((out.get(0, 0) - 0.001).abs() < 1e-15);
    }

    #[test]
    fn subsample_constant_and_checkerboard() {
        let flat = subsample_crop(&raw(480, 270, |_, _| 0.3)).unwrap();
        assert!(flat.pixels().iter().all(|&v| (v - 0.3).abs() < 1e-15));
        let checker = subsample_crop(&raw(480, 270, |c, r| ((c + r) % 2) as f64)).unwrap();
        assert!(checker.pixels().iter().all(|&v| v == 0.5));
    }

    #[test]
    fn subsample_center_crops_full_hd() {
        // 1920x1080 divides by 8; a 1000x300 frame crops to 960x270 first.
        let out = subsample_crop(&raw(1000, 300, |c, _| if c < 20 { 1.0 } else { 0.0 })).unwrap();
        assert!(out.pixels().iter().all(|&v| v == 0.0));
        assert_eq!(subsample_crop(&raw(1920, 1080, |_, _| 0.25)).unwrap().dims(), (240, 135));
    }

    #[test]
    fn subsample_rejects_undersized() {
        assert!(matches!(subsample_crop(&raw(200, 135, |_, _| 0.0)), Err(Error::Dimension(_))));
    }
}
