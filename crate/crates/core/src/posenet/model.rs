use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::NetworkConfig;
use super::labels::{LabelScaler, PoseEstimate};
use super::network::{validate_arch, Architecture, OUTPUTS};
use crate::error::{Error, Result};
use crate::imaging::{Stage, TactileImage, PROCESSED_HEIGHT, PROCESSED_WIDTH};
use crate::tactile_sim::PoseRanges;

const MODEL_FORMAT: &str = "tactile-posenet";
const MODEL_VERSION: u32 = 1;

/// Per-axis area-resampling weights: for each output index, `(src, weight)`.
fn area_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let (a, b) = (o as f64 * scale, (o + 1) as f64 * scale);
            let mut w = Vec::new();
            let mut i = a.floor() as usize;
            while (i as f64) < b && i < src {
                let overlap = (b.min(i as f64 + 1.0) - a.max(i as f64)).max(0.0);
                if overlap > 0.0 {
                    w.push((i, overlap / scale));
                }
                i += 1;
            }
            w
        })
        .collect()
}

/// Area-resamples a processed frame to the network input size and centers it
/// around zero.
pub fn network_input(img: &TactileImage, width: usize, height: usize) -> Vec<f64> {
    let (sw, sh) = img.dims();
    let src = img.pixels();
    let wx = area_weights(sw, width);
    let wy = area_weights(sh, height);
    let mut out = Vec::with_capacity(width * height);
    for ry in &wy {
        for rx in &wx {
            let mut acc = 0.0;
            for &(y, fy) in ry {
                for &(x, fx) in rx {
                    acc += fy * fx * src[y * sw + x];
                }
            }
            out.push(acc - 0.5);
        }
    }
    out
}

/// Trained pose regressor with its configuration and label ranges.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseNet {
    config: NetworkConfig,
    ranges: PoseRanges,
    pub(crate) arch: Architecture,
    pub(crate) params: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    config: NetworkConfig,
    ranges: PoseRanges,
    image_width: usize,
    image_height: usize,
    params: Vec<f64>,
}

impl PoseNet {
    /// Freshly initialized network.
    pub fn new(config: NetworkConfig, ranges: PoseRanges) -> Result<Self> {
        let arch = validate_arch(&config)?;
        let params = arch.init_params(config.seed);
        Ok(Self {
            config,
            ranges,
            arch,
            params,
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn ranges(&self) -> &PoseRanges {
        &self.ranges
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn scaler(&self) -> LabelScaler {
        LabelScaler::new(self.ranges)
    }

    pub(crate) fn input_for(&self, image: &TactileImage) -> Result<Vec<f64>> {
        if image.dims() != (PROCESSED_WIDTH, PROCESSED_HEIGHT) || image.stage() != Stage::Processed {
            return Err(Error::Dimension(format!(
                "pose network expects a processed {PROCESSED_WIDTH}x{PROCESSED_HEIGHT} frame, got {:?} {}",
                image.dims(),
                image.stage().as_str()
            )));
        }
        Ok(network_input(image, self.config.input_width, self.config.input_height))
    }

    pub(crate) fn forward_normalized(&self, input: &[f64]) -> [f64; OUTPUTS] {
        let (out, _) = self.arch.forward::<rand_chacha::ChaCha8Rng>(&self.params, input, None);
        std::array::from_fn(|i| out[i])
    }

    pub(crate) fn forward_train<R: Rng>(&self, input: &[f64], rng: &mut R) -> (Vec<f64>, super::network::Trace) {
        let dropout = (self.config.dropout > 0.0).then_some((self.config.dropout, rng));
        self.arch.forward(&self.params, input, dropout)
    }

    /// Pose of the contacted edge in physical units. Inference never applies
    /// dropout, so the result is a pure function of the model and the image.
    pub fn predict(&self, image: &TactileImage) -> Result<PoseEstimate> {
        let input = self.input_for(image)?;
        Ok(self.scaler().denormalize(self.forward_normalized(&input)))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            config: self.config,
            ranges: self.ranges,
            image_width: PROCESSED_WIDTH,
            image_height: PROCESSED_HEIGHT,
            params: self.params.clone(),
        };
        let text = serde_json::to_string(&file)?;
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ModelFile = serde_json::from_str(&text)?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(Error::Dataset(format!(
                "{}: unsupported model format {} v{}",
                path.display(),
                file.format,
                file.version
            )));
        }
        let arch = validate_arch(&file.config)?;
        if arch.n_params != file.params.len() {
            return Err(Error::Dimension(format!(
                "model file has {} parameters, architecture needs {}",
                file.params.len(),
                arch.n_params
            )));
        }
        Ok(Self {
            config: file.config,
            ranges: file.ranges,
            arch,
            params: file.params,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn area_resample_preserves_constants_and_mass() {
        let img = TactileImage::filled(240, 135, Stage::Processed, 0.7).unwrap();
        let x = network_input(&img, 120, 68);
        assert_eq!(x.len(), 120 * 68);
        assert!(x.iter().all(|v| (v - 0.2).abs() < 1e-12));

        let ramp = TactileImage::from_fn(240, 135, Stage::Processed, |c, r| ((c + r) % 5) as f64 / 4.0).unwrap();
        let mean_in = ramp.pixels().iter().sum::<f64>() / ramp.pixels().len() as f64;
        let x = network_input(&ramp, 120, 68);
        let mean_out = x.iter().map(|v| v + 0.5).sum::<f64>() / x.len() as f64;
        assert!((mean_in - mean_out).abs() < 5e-3);
    }

    #[test]
    fn predict_rejects_wrong_size() {
        let net = PoseNet::new(NetworkConfig::desk(), PoseRanges::default()).unwrap();
        let raw = TactileImage::filled(480, 270, Stage::Raw, 0.0).unwrap();
        assert!(matches!(net.predict(&raw), Err(Error::Dimension(_))));
    }

    #[test]
    fn save_load_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        let net = PoseNet::new(NetworkConfig::desk(), PoseRanges::default()).unwrap();
        net.save(&path).unwrap();
        assert_eq!(PoseNet::load(&path).unwrap(), net);
        assert!(matches!(
            PoseNet::load(&dir.path().join("absent.json")),
            Err(Error::MissingArtifact(_))
        ));
    }

    #[test]
    fn untrained_model_predicts_range_midpoints() {
        let net = PoseNet::new(NetworkConfig::desk(), PoseRanges::default()).unwrap();
        let img = TactileImage::from_fn(240, 135, Stage::Processed, |c, r| ((c / 12 + r / 12) % 2) as f64).unwrap();
        let p = net.predict(&img).unwrap().to_array();
        for (v, r) in p.iter().zip(PoseRanges::default().as_array()) {
            assert!((v - r.mid()).abs() < 0.1 * r.width() / 2.0, "{v} vs {}", r.mid());
        }
    }
}
