use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::config::NetworkConfig;
use super::network::{batch_loss_and_grad, validate_arch, OUTPUTS};
use crate::error::Result;
use crate::seed::{self, Stream};

pub const FD_STEP: f64 = 1e-5;
const BATCH: usize = 3;

/// Relative error with a floor on the denominator, so gradients that are zero
/// up to rounding do not count as mismatches.
fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-6)
}

/// Compares backpropagated gradients of the full training loss (data MSE and
/// weight penalties, dropout off) with central differences on a random batch.
/// Parameters are drawn at full He scale, biases included, so every layer
/// carries signal. Returns the maximum relative error over all parameters.
pub fn gradient_check(config: &NetworkConfig, seed: u64) -> Result<f64> {
    let arch = validate_arch(config)?;
    let mut rng = seed::rng(seed, Stream::Init, 1);
    let mut params = vec![0.0; arch.n_params];
    for l in &arch.layers {
        let normal = Normal::new(0.0, (2.0 / l.fan_in() as f64).sqrt()).expect("finite std");
        for p in &mut params[l.w_off..l.b_off + l.b_len] {
            *p = normal.sample(&mut rng);
        }
    }
    let inputs: Vec<Vec<f64>> = (0..BATCH)
        .map(|_| (0..arch.input_len).map(|_| rng.random::<f64>() - 0.5).collect())
        .collect();
    let targets: Vec<[f64; OUTPUTS]> = (0..BATCH)
        .map(|_| std::array::from_fn(|_| rng.random::<f64>() * 2.0 - 1.0))
        .collect();
    let refs: Vec<&[f64]> = inputs.iter().map(Vec::as_slice).collect();
    let mask = arch.weight_mask();
    let loss = |p: &[f64]| batch_loss_and_grad(&arch, p, &mask, &refs, &targets, config.l1, config.l2);

    let (_, analytic) = loss(&params);
    let mut worst: f64 = 0.0;
    for i in 0..params.len() {
        let orig = params[i];
        params[i] = orig + FD_STEP;
        let up = loss(&params).0;
        params[i] = orig - FD_STEP;
        let down = loss(&params).0;
        params[i] = orig;
        let numeric = (up - down) / (2.0 * FD_STEP);
        worst = worst.max(relative_error(analytic[i], numeric));
    }
    Ok(worst)
}

/// Small instance used by the gradient check: 8×8 input, 2 convolution layers
/// of 4 filters, one dense layer.
pub fn gradient_check_config() -> NetworkConfig {
    NetworkConfig {
        n_conv_layers: 2,
        n_filters: 4,
        n_dense_layers: 1,
        n_dense_units: 8,
        input_width: 8,
        input_height: 8,
        ..NetworkConfig::desk()
    }
}
