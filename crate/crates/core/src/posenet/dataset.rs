use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::imaging::{self, process_frame, Stage, TactileImage, PROCESSED_HEIGHT, PROCESSED_WIDTH};
use crate::seed::{self, Stream};
use crate::tactile_sim::{synthesize_contact, EdgePose, PoseRanges, SensorConfig, ShearRanges};

pub const MANIFEST_FILE: &str = "manifest.jsonl";
pub const SPLIT_FILE: &str = "split.json";

/// One labelled contact. The image is stored as 8-bit levels, exactly what
/// the dataset PNG holds.
#[derive(Debug, Clone, PartialEq)]
pub struct LabelledSample {
    pub file: String,
    pub label: EdgePose,
    /// Seed of the pixel noise used when synthesizing this sample.
    pub seed: u64,
    pixels: Vec<u8>,
}

impl LabelledSample {
    pub fn new(file: String, label: EdgePose, seed: u64, image: &TactileImage) -> Result<Self> {
        image.require_stage(Stage::Processed)?;
        Ok(Self {
            file,
            label,
            seed,
            pixels: image.to_u8(),
        })
    }

    /// Processed (thresholded, subsampled) frame.
    pub fn image(&self) -> TactileImage {
        let px = self.pixels.iter().map(|&v| f64::from(v) / 255.0).collect();
        TactileImage::new(PROCESSED_WIDTH, PROCESSED_HEIGHT, Stage::Processed, px)
            .expect("stored samples are processed frames")
    }
}

/// Manifest record: one line per sample.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub file: String,
    pub x: f64,
    pub z: f64,
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
    pub seed: u64,
}

impl From<&LabelledSample> for ManifestRecord {
    fn from(s: &LabelledSample) -> Self {
        Self {
            file: s.file.clone(),
            x: s.label.x,
            z: s.label.z,
            phi: s.label.phi,
            psi: s.label.psi,
            theta: s.label.theta,
            seed: s.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CollectOptions {
    pub ranges: PoseRanges,
    pub shear: ShearRanges,
    pub threshold_window: usize,
    pub threshold_offset: f64,
}

impl Default for CollectOptions {
    fn default() -> Self {
        Self {
            ranges: PoseRanges::default(),
            shear: ShearRanges::default(),
            threshold_window: imaging::DEFAULT_THRESHOLD_WINDOW,
            threshold_offset: 0.0,
        }
    }
}

/// Synthesizes sample `index` of the dataset keyed by `master_seed`. Each
/// sample depends only on `(master_seed, index)`.
pub fn synthesize_sample(
    index: usize,
    master_seed: u64,
    sensor: &SensorConfig,
    opts: &CollectOptions,
) -> Result<LabelledSample> {
    let mut rng = seed::rng(master_seed, Stream::Labels, index as u64);
    let label = opts.ranges.sample(&mut rng);
    let shear = opts.shear.sample(&mut rng);
    let noise_seed = seed::derive(master_seed, Stream::PixelNoise, index as u64);
    let raw = synthesize_contact(&label, &shear, sensor, noise_seed)?;
    let frame = process_frame(&raw, opts.threshold_window, opts.threshold_offset)?;
    LabelledSample::new(format!("sample_{index:05}"), label, noise_seed, &frame.binary)
}

/// Draws `n` independent uniform poses and shear perturbations and
/// synthesizes the processed frame of each. The shear is not recorded.
pub fn collect_dataset(n: usize, master_seed: u64, sensor: &SensorConfig, opts: &CollectOptions) -> Result<Vec<LabelledSample>> {
    if n == 0 {
        return Err(Error::Parameter("dataset size must be >= 1".into()));
    }
    (0..n).map(|i| synthesize_sample(i, master_seed, sensor, opts)).collect()
}

fn image_path(dir: &Path, sample: &LabelledSample) -> String {
    let name = format!("{}_processed_{PROCESSED_WIDTH}x{PROCESSED_HEIGHT}.png", sample.file);
    debug_assert!(dir.join(&name).file_name().is_some());
    name
}

/// Writes `<dir>/<file>.png` per sample plus `manifest.jsonl`.
pub fn write_dataset(dir: &Path, samples: &[LabelledSample]) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let manifest_path = dir.join(MANIFEST_FILE);
    let file = File::create(&manifest_path).map_err(|e| Error::io(&manifest_path, e))?;
    let mut out = BufWriter::new(file);
    for s in samples {
        let name = image_path(dir, s);
        imaging::write_png(&dir.join(&name), &s.image())?;
        let rec = ManifestRecord {
            file: name,
            ..ManifestRecord::from(s)
        };
        serde_json::to_writer(&mut out, &rec)?;
        writeln!(out).map_err(|e| Error::io(&manifest_path, e))?;
    }
    out.flush().map_err(|e| Error::io(&manifest_path, e))
}

pub fn read_manifest(dir: &Path) -> Result<Vec<ManifestRecord>> {
    let path = dir.join(MANIFEST_FILE);
    if !path.exists() {
        return Err(Error::MissingArtifact(path));
    }
    let file = File::open(&path).map_err(|e| Error::io(&path, e))?;
    let mut records = Vec::new();
    for line in BufReader::new(file).lines() {
        let line = line.map_err(|e| Error::io(&path, e))?;
        if !line.trim().is_empty() {
            records.push(serde_json::from_str(&line)?);
        }
    }
    Ok(records)
}

pub fn read_dataset(dir: &Path) -> Result<Vec<LabelledSample>> {
    read_manifest(dir)?
        .into_iter()
        .map(|rec| {
            let path = dir.join(&rec.file);
            if !path.exists() {
                return Err(Error::MissingArtifact(path));
            }
            let img = imaging::read_png(&path, Stage::Processed)?;
            let stem = rec
                .file
                .strip_suffix(&format!("_processed_{PROCESSED_WIDTH}x{PROCESSED_HEIGHT}.png"))
                .unwrap_or(&rec.file)
                .to_string();
            LabelledSample::new(stem, EdgePose::new(rec.x, rec.z, rec.phi, rec.psi, rec.theta), rec.seed, &img)
        })
        .collect()
}

/// Index split into train / validation / test.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded shuffle into 80/10/10.
pub fn split_indices(n: usize, seed: u64) -> Split {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(&mut seed::rng(seed, Stream::Split, 0));
    let n_train = n * 8 / 10;
    let n_val = n / 10;
    let test = idx.split_off(n_train + n_val);
    let validation = idx.split_off(n_train);
    Split {
        train: idx,
        validation,
        test,
    }
}

impl Split {
    pub fn write(&self, dir: &Path) -> Result<()> {
        let path = dir.join(SPLIT_FILE);
        std::fs::write(&path, serde_json::to_string(self)?).map_err(|e| Error::io(&path, e))
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(SPLIT_FILE);
        if !path.exists() {
            return Err(Error::MissingArtifact(path));
        }
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// Samples at `indices`, checking they exist.
    pub fn select(samples: &[LabelledSample], indices: &[usize]) -> Result<Vec<LabelledSample>> {
        indices
            .iter()
            .map(|&i| {
                samples
                    .get(i)
                    .cloned()
                    .ok_or_else(|| Error::Dataset(format!("split index {i} beyond {} samples", samples.len())))
            })
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn split_is_disjoint_and_complete() {
        let s = split_indices(2500, 4);
        assert_eq!((s.train.len(), s.validation.len(), s.test.len()), (2000, 250, 250));
        let mut all: Vec<usize> = s.train.iter().chain(&s.validation).chain(&s.test).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..2500).collect::<Vec<_>>());
        assert_eq!(split_indices(2500, 4), s);
        assert_ne!(split_indices(2500, 5), s);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert!(collect_dataset(0, 1, &SensorConfig::default(), &CollectOptions::default()).is_err());
    }

    #[test]
    fn missing_manifest_names_the_file() {
        let dir = tempfile::tempdir().unwrap();
        match read_dataset(dir.path()) {
            Err(Error::MissingArtifact(p)) => assert!(p.ends_with(MANIFEST_FILE)),
            other => panic!("unexpected {other:?}"),
        }
    }
}
