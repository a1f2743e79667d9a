use serde::{Deserialize, Serialize};

use crate::error::{ensure, Result};
use crate::imaging::{PROCESSED_HEIGHT, PROCESSED_WIDTH};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    Relu,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    /// Mini-batch gradient descent with classical momentum.
    SgdMomentum { momentum: f64 },
    Adam { beta1: f64, beta2: f64, epsilon: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::SgdMomentum { momentum: 0.9 }
    }
}

/// Architecture and training hyperparameters of the pose regressor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkConfig {
    pub n_conv_layers: usize,
    pub n_filters: usize,
    pub kernel_size: usize,
    pub n_dense_layers: usize,
    pub n_dense_units: usize,
    pub activation: Activation,
    pub dropout: f64,
    pub l1: f64,
    pub l2: f64,
    pub batch_size: usize,
    pub learning_rate: f64,
    /// Final learning rate as a fraction of the initial one (cosine schedule).
    pub final_lr_fraction: f64,
    pub epochs: usize,
    pub optimizer: Optimizer,
    /// Restore the weights of the epoch with the lowest validation loss.
    pub keep_best: bool,
    pub seed: u64,
    /// Network input size; processed frames are area-resampled to it.
    pub input_width: usize,
    pub input_height: usize,
}

impl NetworkConfig {
    /// Desk-scale profile: trains in minutes on one CPU core.
    pub fn desk() -> Self {
        Self {
            n_conv_layers: 3,
            n_filters: 32,
            kernel_size: 3,
            n_dense_layers: 1,
            n_dense_units: 64,
            activation: Activation::Relu,
            dropout: 0.02,
            l1: 0.0001,
            l2: 0.0005,
            batch_size: 16,
            learning_rate: 0.01,
            final_lr_fraction: 0.05,
            epochs: 30,
            optimizer: Optimizer::default(),
            keep_best: true,
            seed: 1,
            input_width: 120,
            input_height: 68,
        }
    }

    /// The published architecture at full processed resolution.
    pub fn paper() -> Self {
        Self {
            n_conv_layers: 5,
            n_filters: 256,
            n_dense_layers: 1,
            n_dense_units: 256,
            input_width: PROCESSED_WIDTH,
            input_height: PROCESSED_HEIGHT,
            epochs: 100,
            ..Self::desk()
        }
    }

    pub fn validate(&self) -> Result<()> {
        ensure(self.n_conv_layers >= 1, || "at least one convolution layer is required".into())?;
        ensure(self.n_filters >= 1 && self.n_dense_units >= 1, || "layer widths must be >= 1".into())?;
        ensure(self.kernel_size % 2 == 1, || format!("kernel size {} must be odd", self.kernel_size))?;
        ensure((0.0..1.0).contains(&self.dropout), || format!("dropout {} outside [0, 1)", self.dropout))?;
        ensure(self.l1 >= 0.0 && self.l2 >= 0.0, || "regularization coefficients must be >= 0".into())?;
        ensure(self.batch_size >= 1, || "batch size must be >= 1".into())?;
        ensure(self.learning_rate > 0.0, || "learning rate must be > 0".into())?;
        ensure((0.0..=1.0).contains(&self.final_lr_fraction), || "final_lr_fraction outside [0, 1]".into())?;
        ensure(self.input_width >= 1 && self.input_height >= 1, || "empty network input".into())
    }

    /// Learning rate for a 0-based epoch under the cosine schedule.
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if self.epochs <= 1 {
            return self.learning_rate;
        }
        let progress = epoch as f64 / (self.epochs - 1) as f64;
        let floor = self.final_lr_fraction;
        self.learning_rate * (floor + (1.0 - floor) * 0.5 * (1.0 + (std::f64::consts::PI * progress).cos()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_profile_values() {
        let p = NetworkConfig::paper();
        assert_eq!((p.n_conv_layers, p.n_filters, p.n_dense_layers, p.n_dense_units), (5, 256, 1, 256));
        assert_eq!(p.activation, Activation::Relu);
        assert_eq!((p.dropout, p.l1, p.l2, p.batch_size), (0.02, 0.0001, 0.0005, 16));
    }

    #[test]
    fn profiles_round_trip_through_json_and_toml() {
        for cfg in [NetworkConfig::paper(), NetworkConfig::desk()] {
            let json = serde_json::to_string(&cfg).unwrap();
            assert_eq!(serde_json::from_str::<NetworkConfig>(&json).unwrap(), cfg);
            let text = toml::to_string(&cfg).unwrap();
            assert_eq!(toml::from_str::<NetworkConfig>(&text).unwrap(), cfg);
        }
    }

    #[test]
    fn cosine_schedule_endpoints() {
        let cfg = NetworkConfig::desk();
        assert_eq!(cfg.learning_rate_at(0), cfg.learning_rate);
        let last = cfg.learning_rate_at(cfg.epochs - 1);
        assert!((last - cfg.learning_rate * cfg.final_lr_fraction).abs() < 1e-15);
    }

    #[test]
    fn rejects_invalid() {
        let mut c = NetworkConfig::desk();
        c.kernel_size = 4;
        assert!(c.validate().is_err());
        let mut c = NetworkConfig::desk();
        c.dropout = 1.0;
        assert!(c.validate().is_err());
    }
}
