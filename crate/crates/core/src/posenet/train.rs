use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use rand::seq::SliceRandom;

use super::config::{NetworkConfig, Optimizer};
use super::dataset::LabelledSample;
use super::labels::{LabelScaler, PoseEstimate};
use super::model::{network_input, PoseNet};
use super::network::{add_penalty_grad, mse, penalty, OUTPUTS};
use crate::error::{Error, Result};
use crate::seed::{self, Stream};
use crate::tactile_sim::PoseRanges;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    /// Mean per-sample MSE (normalized units) seen during the epoch, dropout on.
    pub train_loss: f64,
    /// MSE on the validation split with dropout off; `None` without one.
    pub val_loss: Option<f64>,
    pub learning_rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrainingLog {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose weights the model ends with.
    pub selected_epoch: usize,
}

impl TrainingLog {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut out = BufWriter::new(file);
        let mut write = || -> std::io::Result<()> {
            writeln!(out, "epoch,train_loss,val_loss")?;
            for r in &self.epochs {
                let val = r.val_loss.map(|v| v.to_string()).unwrap_or_default();
                writeln!(out, "{},{},{}", r.epoch, r.train_loss, val)?;
            }
            out.flush()
        };
        write().map_err(|e| Error::io(path, e))
    }
}

struct Prepared {
    inputs: Vec<Vec<f64>>,
    targets: Vec<[f64; OUTPUTS]>,
}

fn prepare(samples: &[LabelledSample], cfg: &NetworkConfig, scaler: &LabelScaler) -> Prepared {
    Prepared {
        inputs: samples
            .iter()
            .map(|s| network_input(&s.image(), cfg.input_width, cfg.input_height))
            .collect(),
        targets: samples
            .iter()
            .map(|s| scaler.normalize(PoseEstimate::from(s.label)))
            .collect(),
    }
}

enum OptimizerState {
    Sgd { momentum: f64, velocity: Vec<f64> },
    Adam { beta1: f64, beta2: f64, epsilon: f64, m: Vec<f64>, v: Vec<f64>, t: i32 },
}

impl OptimizerState {
    fn new(opt: Optimizer, n: usize) -> Self {
        match opt {
            Optimizer::SgdMomentum { momentum } => Self::Sgd {
                momentum,
                velocity: vec![0.0; n],
            },
            Optimizer::Adam { beta1, beta2, epsilon } => Self::Adam {
                beta1,
                beta2,
                epsilon,
                m: vec![0.0; n],
                v: vec![0.0; n],
                t: 0,
            },
        }
    }

    fn step(&mut self, params: &mut [f64], grads: &[f64], lr: f64) {
        match self {
            Self::Sgd { momentum, velocity } => {
                for ((p, g), v) in params.iter_mut().zip(grads).zip(velocity.iter_mut()) {
                    *v = *momentum * *v - lr * g;
                    *p += *v;
                }
            }
            Self::Adam { beta1, beta2, epsilon, m, v, t } => {
                *t += 1;
                let c1 = 1.0 - beta1.powi(*t);
                let c2 = 1.0 - beta2.powi(*t);
                for i in 0..params.len() {
                    let g = grads[i];
                    m[i] = *beta1 * m[i] + (1.0 - *beta1) * g;
                    v[i] = *beta2 * v[i] + (1.0 - *beta2) * g * g;
                    params[i] -= lr * (m[i] / c1) / ((v[i] / c2).sqrt() + *epsilon);
                }
            }
        }
    }
}

fn mean_loss(net: &PoseNet, data: &Prepared) -> f64 {
    let total: f64 = data
        .inputs
        .iter()
        .zip(&data.targets)
        .map(|(x, t)| mse(&net.forward_normalized(x), t).0)
        .sum();
    total / data.inputs.len() as f64
}

/// Trains a fresh network on `train`, selecting weights on `validation` when
/// `keep_best` is set. Deterministic given the inputs.
pub fn train(
    train: &[LabelledSample],
    validation: &[LabelledSample],
    config: &NetworkConfig,
    ranges: PoseRanges,
) -> Result<(PoseNet, TrainingLog)> {
    train_with_progress(train, validation, config, ranges, |_| {})
}

pub fn train_with_progress(
    train: &[LabelledSample],
    validation: &[LabelledSample],
    config: &NetworkConfig,
    ranges: PoseRanges,
    mut on_epoch: impl FnMut(&EpochRecord),
) -> Result<(PoseNet, TrainingLog)> {
    let mut net = PoseNet::new(*config, ranges)?;
    if train.len() < config.batch_size {
        return Err(Error::Dataset(format!(
            "{} training samples is smaller than one batch of {}",
            train.len(),
            config.batch_size
        )));
    }
    if let Some(s) = train.iter().chain(validation).find(|s| !ranges.contains(&s.label)) {
        return Err(Error::Dataset(format!("label of {} lies outside the pose ranges", s.file)));
    }
    let scaler = net.scaler();
    let train_data = prepare(train, config, &scaler);
    let val_data = prepare(validation, config, &scaler);
    let mask = net.arch.weight_mask();
    let mut opt = OptimizerState::new(config.optimizer, net.n_params());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = TrainingLog::default();
    let mut best: Option<(f64, Vec<f64>)> = None;

    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut seed::rng(config.seed, Stream::Shuffle, epoch as u64));
        let mut dropout_rng = seed::rng(config.seed, Stream::Dropout, epoch as u64);
        let mut epoch_loss = 0.0;
        // Trailing samples that do not fill a batch are left for the next shuffle.
        for batch in order.chunks_exact(config.batch_size) {
            let mut grads = vec![0.0; net.n_params()];
            let scale = 1.0 / batch.len() as f64;
            for &i in batch {
                let (out, trace) = net.forward_train(&train_data.inputs[i], &mut dropout_rng);
                let (loss, mut g) = mse(&out, &train_data.targets[i]);
                epoch_loss += loss;
                g.iter_mut().for_each(|v| *v *= scale);
                net.arch.backward(&net.params, &trace, &g, &mut grads);
            }
            add_penalty_grad(&net.params, &mask, config.l1, config.l2, &mut grads);
            opt.step(&mut net.params, &grads, lr);
        }
        let seen = train.len() / config.batch_size * config.batch_size;
        let record = EpochRecord {
            epoch: epoch + 1,
            train_loss: epoch_loss / seen as f64,
            val_loss: (!validation.is_empty()).then(|| mean_loss(&net, &val_data)),
            learning_rate: lr,
        };
        if !record.train_loss.is_finite() {
            return Err(Error::Parameter(format!(
                "training diverged at epoch {} (learning rate {lr})",
                record.epoch
            )));
        }
        on_epoch(&record);
        log.epochs.push(record);
        let score = record.val_loss.unwrap_or(record.train_loss);
        if !config.keep_best {
            log.selected_epoch = record.epoch;
        } else if best.as_ref().is_none_or(|(b, _)| score < *b) {
            best = Some((score, net.params.clone()));
            log.selected_epoch = record.epoch;
        }
    }
    if let Some((_, params)) = best {
        net.params = params;
    }
    Ok((net, log))
}

/// Mean per-sample MSE in normalized units with dropout off, plus the weight
/// penalty of the model.
pub fn dataset_loss(net: &PoseNet, samples: &[LabelledSample]) -> (f64, f64) {
    let data = prepare(samples, net.config(), &net.scaler());
    let mask = net.arch.weight_mask();
    (mean_loss(net, &data), penalty(&net.params, &mask, net.config().l1, net.config().l2))
}
