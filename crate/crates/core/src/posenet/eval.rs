use std::fmt;

use serde::{Deserialize, Serialize};

use super::dataset::LabelledSample;
use super::labels::{PoseEstimate, COMPONENT_NAMES, COMPONENT_UNITS};
use super::model::PoseNet;
use super::network::OUTPUTS;
use crate::error::{Error, Result};
use crate::tactile_sim::PoseRanges;

/// Per-component mean absolute error, in mm for x and z and degrees for the
/// angles, with the label range alongside.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub mae: [f64; OUTPUTS],
    pub range: [f64; OUTPUTS],
    pub n_test: usize,
}

impl EvalReport {
    /// MAE of one component by name (`x`, `z`, `phi`, `psi`, `theta`).
    pub fn mae_of(&self, name: &str) -> Option<f64> {
        COMPONENT_NAMES.iter().position(|&n| n == name).map(|i| self.mae[i])
    }
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<8}{:>10}{:>10}  unit   (n_test = {})", "pose", "range", "MAE", self.n_test)?;
        for i in 0..OUTPUTS {
            writeln!(
                f,
                "{:<8}{:>10.2}{:>10.3}  {}",
                COMPONENT_NAMES[i], self.range[i], self.mae[i], COMPONENT_UNITS[i]
            )?;
        }
        Ok(())
    }
}

/// MAE of arbitrary predictions against labels.
pub fn evaluate_predictions(predictions: &[PoseEstimate], labels: &[PoseEstimate], ranges: &PoseRanges) -> Result<EvalReport> {
    if labels.is_empty() {
        return Err(Error::Dataset("cannot evaluate on an empty test set".into()));
    }
    if predictions.len() != labels.len() {
        return Err(Error::Dimension(format!(
            "{} predictions for {} labels",
            predictions.len(),
            labels.len()
        )));
    }
    let mut mae = [0.0; OUTPUTS];
    for (p, l) in predictions.iter().zip(labels) {
        let (p, l) = (p.to_array(), l.to_array());
        for i in 0..OUTPUTS {
            mae[i] += (p[i] - l[i]).abs();
        }
    }
    mae.iter_mut().for_each(|m| *m /= labels.len() as f64);
    Ok(EvalReport {
        mae,
        range: ranges.as_array().map(|r| r.width()),
        n_test: labels.len(),
    })
}

pub fn evaluate(model: &PoseNet, testset: &[LabelledSample]) -> Result<EvalReport> {
    if testset.is_empty() {
        return Err(Error::Dataset("cannot evaluate on an empty test set".into()));
    }
    let preds = testset
        .iter()
        .map(|s| model.predict(&s.image()))
        .collect::<Result<Vec<_>>>()?;
    let labels: Vec<PoseEstimate> = testset.iter().map(|s| s.label.into()).collect();
    evaluate_predictions(&preds, &labels, model.ranges())
}
