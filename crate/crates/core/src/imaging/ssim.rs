use serde::{Deserialize, Serialize};

use super::image::{Stage, TactileImage};
use crate::error::{Error, Result};

const K1: f64 = 0.01;
const K2: f64 = 0.03;
const DYNAMIC_RANGE: f64 = 1.0;
const C1: f64 = (K1 * DYNAMIC_RANGE) * (K1 * DYNAMIC_RANGE);
const C2: f64 = (K2 * DYNAMIC_RANGE) * (K2 * DYNAMIC_RANGE);

/// Local statistics window for SSIM. Only windows fully inside the image are
/// evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum SsimWindow {
    /// Square box window; variances use the unbiased `N − 1` normalization.
    Uniform { size: usize },
    /// Square Gaussian-weighted window with normalized weights.
    Gaussian { size: usize, sigma: f64 },
}

impl Default for SsimWindow {
    fn default() -> Self {
        SsimWindow::Uniform { size: 7 }
    }
}

impl SsimWindow {
    pub fn size(&self) -> usize {
        match *self {
            SsimWindow::Uniform { size } | SsimWindow::Gaussian { size, .. } => size,
        }
    }
}

#[inline]
fn ssim_term(mu_a: f64, mu_b: f64, var_a: f64, var_b: f64, cov: f64) -> f64 {
    ((2.0 * mu_a * mu_b + C1) * (2.0 * cov + C2))
        / ((mu_a * mu_a + mu_b * mu_b + C1) * (var_a + var_b + C2))
}

/// Mean SSIM over all valid positions of a 7×7 uniform window.
pub fn ssim(a: &TactileImage, b: &TactileImage) -> Result<f64> {
    ssim_with(a, b, SsimWindow::default())
}

pub fn ssim_with(a: &TactileImage, b: &TactileImage, window: SsimWindow) -> Result<f64> {
    if a.dims() != b.dims() {
        return Err(Error::Dimension(format!(
            "SSIM of {:?} and {:?} images",
            a.dims(),
            b.dims()
        )));
    }
    if a.stage() != b.stage() {
        return Err(Error::Stage {
            expected: a.stage().as_str(),
            actual: b.stage().as_str(),
        });
    }
    let size = window.size();
    let (w, h) = a.dims();
    if size < 2 || size > w || size > h {
        return Err(Error::Parameter(format!(
            "SSIM window {size} does not fit a {w}x{h} image"
        )));
    }
    match window {
        SsimWindow::Uniform { size } => Ok(uniform_ssim(a, b, size)),
        SsimWindow::Gaussian { size, sigma } => {
            if !(sigma > 0.0) {
                return Err(Error::Parameter(format!("Gaussian SSIM sigma {sigma}")));
            }
            Ok(gaussian_ssim(a, b, size, sigma))
        }
    }
}

/// Summed-area table with a zero first row and column.
struct Integral {
    stride: usize,
    sums: Vec<f64>,
}

impl Integral {
    fn new(width: usize, height: usize, value: impl Fn(usize) -> f64) -> Self {
        let stride = width + 1;
        let mut sums = vec![0.0; stride * (height + 1)];
        for r in 0..height {
            let mut row_acc = 0.0;
            for c in 0..width {
                row_acc += value(r * width + c);
                sums[(r + 1) * stride + c + 1] = sums[r * stride + c + 1] + row_acc;
            }
        }
        Self { stride, sums }
    }

    #[inline]
    fn window(&self, col: usize, row: usize, size: usize) -> f64 {
        let s = self.stride;
        let (r0, r1, c0, c1) = (row, row + size, col, col + size);
        self.sums[r1 * s + c1] - self.sums[r0 * s + c1] - self.sums[r1 * s + c0] + self.sums[r0 * s + c0]
    }
}

fn uniform_ssim(a: &TactileImage, b: &TactileImage, size: usize) -> f64 {
    let (w, h) = a.dims();
    let (pa, pb) = (a.pixels(), b.pixels());
    let sa = Integral::new(w, h, |i| pa[i]);
    let sb = Integral::new(w, h, |i| pb[i]);
    let saa = Integral::new(w, h, |i| pa[i] * pa[i]);
    let sbb = Integral::new(w, h, |i| pb[i] * pb[i]);
    let sab = Integral::new(w, h, |i| pa[i] * pb[i]);

    let n = (size * size) as f64;
    let unbias = 1.0 / (n - 1.0);
    let mut total = 0.0;
    let mut count = 0usize;
    for r in 0..=h - size {
        for c in 0..=w - size {
            let (ta, tb) = (sa.window(c, r, size), sb.window(c, r, size));
            let (mu_a, mu_b) = (ta / n, tb / n);
            let var_a = (saa.window(c, r, size) - ta * ta / n) * unbias;
            let var_b = (sbb.window(c, r, size) - tb * tb / n) * unbias;
            let cov = (sab.window(c, r, size) - ta * tb / n) * unbias;
            total += ssim_term(mu_a, mu_b, var_a, var_b, cov);
            count += 1;
        }
    }
    total / count as f64
}

/// Valid-mode separable filter of `src` with `kernel`.
fn filter_valid(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let k = kernel.len();
    let (ow, oh) = (width - k + 1, height - k + 1);
    let mut tmp = vec![0.0; ow * height];
    for r in 0..height {
        for c in 0..ow {
            tmp[r * ow + c] = kernel.iter().enumerate().map(|(i, w)| w * src[r * width + c + i]).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for r in 0..oh {
        for c in 0..ow {
            out[r * ow + c] = kernel.iter().enumerate().map(|(i, w)| w * tmp[(r + i) * ow + c]).sum();
        }
    }
    out
}

fn gaussian_ssim(a: &TactileImage, b: &TactileImage, size: usize, sigma: f64) -> f64 {
    let half = (size as f64 - 1.0) / 2.0;
    let mut kernel: Vec<f64> = (0..size)
        .map(|i| {
            let d = i as f64 - half;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = kernel.iter().sum();
    kernel.iter_mut().for_each(|v| *v /= norm);

    let (w, h) = a.dims();
    let (pa, pb) = (a.pixels(), b.pixels());
    let prod = |f: &dyn Fn(usize) -> f64| (0..pa.len()).map(f).collect::<Vec<_>>();
    let mu_a = filter_valid(pa, w, h, &kernel);
    let mu_b = filter_valid(pb, w, h, &kernel);
    let m_aa = filter_valid(&prod(&|i| pa[i] * pa[i]), w, h, &kernel);
    let m_bb = filter_valid(&prod(&|i| pb[i] * pb[i]), w, h, &kernel);
    let m_ab = filter_valid(&prod(&|i| pa[i] * pb[i]), w, h, &kernel);

    let total: f64 = (0..mu_a.len())
        .map(|i| {
            let (ma, mb) = (mu_a[i], mu_b[i]);
            ssim_term(ma, mb, m_aa[i] - ma * ma, m_bb[i] - mb * mb, m_ab[i] - ma * mb)
        })
        .sum();
    total / mu_a.len() as f64
}

/// Contact deformation `e = 1 − SSIM(I, I_ref)`, in `[0, 2]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
pub struct DeformationMeasure(pub f64);

impl DeformationMeasure {
    pub fn value(self) -> f64 {
        self.0
    }
}

/// Deformation of a processed frame against the undeformed reference frame.
pub fn deformation(img: &TactileImage, reference: &TactileImage) -> Result<DeformationMeasure> {
    deformation_with(img, reference, SsimWindow::default())
}

pub fn deformation_with(
    img: &TactileImage,
    reference: &TactileImage,
    window: SsimWindow,
) -> Result<DeformationMeasure> {
    img.require_stage(Stage::Processed)?;
    reference.require_stage(Stage::Processed)?;
    let s = ssim_with(img, reference, window)?;
    Ok(DeformationMeasure((1.0 - s).clamp(0.0, 2.0)))
}

/// Root-mean-square pixel difference. Kept as a diagnostic; it saturates at
/// small deformations and is not used for control.
pub fn rms_intensity_change(img: &TactileImage, reference: &TactileImage) -> Result<f64> {
    if img.dims() != reference.dims() {
        return Err(Error::Dimension(format!(
            "RMS change of {:?} and {:?} images",
            img.dims(),
            reference.dims()
        )));
    }
    let n = img.pixels().len() as f64;
    let sq: f64 = img
        .pixels()
        .iter()
        .zip(reference.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok((sq / n).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_image(rng: &mut ChaCha8Rng, w: usize, h: usize) -> TactileImage {
        TactileImage::from_fn(w, h, Stage::Raw, |_, _| rng.random::<f64>()).unwrap()
    }

    /// Direct per-window evaluation, written independently of the
    /// summed-area path.
    fn naive_ssim(a: &TactileImage, b: &TactileImage, size: usize) -> f64 {
        let (w, h) = a.dims();
        let n = (size * size) as f64;
        let mut values = Vec::new();
        for r in 0..=h - size {
            for c in 0..=w - size {
                let mut xs = Vec::new();
                let mut ys = Vec::new();
                for dr in 0..size {
                    for dc in 0..size {
                        xs.push(a.get(c + dc, r + dr));
                        ys.push(b.get(c + dc, r + dr));
                    }
                }
                let mx = xs.iter().sum::<f64>() / n;
                let my = ys.iter().sum::<f64>() / n;
                let vx = xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>() / (n - 1.0);
                let vy = ys.iter().map(|y| (y - my).powi(2)).sum::<f64>() / (n - 1.0);
                let cxy = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / (n - 1.0);
                let c1 = 0.01f64.powi(2);
                let c2 = 0.03f64.powi(2);
                values.push(
                    (2.0 * mx * my + c1) * (2.0 * cxy + c2) / ((mx * mx + my * my + c1) * (vx + vy + c2)),
                );
            }
        }
        values.iter().sum::<f64>() / values.len() as f64
    }

    #[test]
    fn matches_direct_formula() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..20 {
            let a = random_image(&mut rng, 16, 16);
            let b = random_image(&mut rng, 16, 16);
            let fast = ssim(&a, &b).unwrap();
            assert!((fast - naive_ssim(&a, &b, 7)).abs() < 1e-9);
        }
    }

    #[test]
    fn identity_and_symmetry() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let a = random_image(&mut rng, 30, 20);
        let b = random_image(&mut rng, 30, 20);
        assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        assert_eq!(ssim(&a, &b).unwrap(), ssim(&b, &a).unwrap());
        let g = SsimWindow::Gaussian { size: 11, sigma: 1.5 };
        assert!((ssim_with(&a, &a, g).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn gaussian_window_with_flat_kernel_tracks_uniform() {
        // A very wide Gaussian is nearly a box; only the N/(N-1) factor differs.
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let a = random_image(&mut rng, 24, 24);
        let b = TactileImage::from_fn(24, 24, Stage::Raw, |c, r| (a.get(c, r) * 0.8 + 0.1).min(1.0)).unwrap();
        let g = ssim_with(&a, &b, SsimWindow::Gaussian { size: 7, sigma: 1e3 }).unwrap();
        let u = ssim(&a, &b).unwrap();
        assert!((g - u).abs() < 0.02, "{g} vs {u}");
    }

    #[test]
    fn dimension_and_stage_errors() {
        let a = TactileImage::filled(16, 16, Stage::Raw, 0.1).unwrap();
        let b = TactileImage::filled(16, 17, Stage::Raw, 0.1).unwrap();
        assert!(matches!(ssim(&a, &b), Err(Error::Dimension(_))));
        assert!(matches!(rms_intensity_change(&a, &b), Err(Error::Dimension(_))));
        let p = TactileImage::filled(240, 135, Stage::Processed, 0.1).unwrap();
        let big = TactileImage::filled(240, 135, Stage::Raw, 0.1).unwrap();
        assert!(matches!(deformation(&big, &p), Err(Error::Stage { .. })));
        assert!(matches!(ssim(&big, &p), Err(Error::Stage { .. })));
    }

    #[test]
    fn deformation_of_reference_is_zero() {
        let p = TactileImage::from_fn(240, 135, Stage::Processed, |c, r| ((c * r) % 7) as f64 / 7.0).unwrap();
        assert_eq!(deformation(&p, &p).unwrap().value(), 0.0);
    }

    #[test]
    fn rms_extremes() {
        let zeros = TactileImage::filled(10, 10, Stage::Raw, 0.0).unwrap();
        let ones = TactileImage::filled(10, 10, Stage::Raw, 1.0).unwrap();
        assert_eq!(rms_intensity_change(&zeros, &zeros).unwrap(), 0.0);
        assert_eq!(rms_intensity_change(&zeros, &ones).unwrap(), 1.0);
    }
}
