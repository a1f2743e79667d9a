use std::path::Path;

use serde::Serialize;

use super::analysis::{
    actuator_in_range, convergence, gate_respected, motor_means_increasing, plateaus, saturation, Check, Convergence,
    ConvergenceCriteria, Plateau, Saturation,
};
use super::config::RunConfig;
use super::plot::{write_plot, Panel, Series};
use super::rundir::RunDir;
use crate::control::{
    ActuatorState, ClosedLoop, Controller, ControllerConfig, ObjectId, PlantModel, PlantSensor, TrajectoryLog,
    TrajectoryRow, DEFAULT_U_MAX,
};
use crate::error::{Error, Result};
use crate::posenet::{
    self, collect_dataset, evaluate, evaluate_predictions, read_dataset, split_indices, write_dataset, EvalReport,
    PoseEstimate, PoseNet, Split, TrainingLog, COMPONENT_NAMES,
};
use crate::seed::{self, Stream};

/// Plant-sensor seeds are keyed by experiment so runs do not share noise.
const EXP1_SEED_BASE: u64 = 0;
const EXP3A_SEED: u64 = 100;
const EXP3B_SEED: u64 = 200;

fn plant_sensor(cfg: &RunConfig, index: u64) -> PlantSensor {
    PlantSensor {
        sensor: cfg.sensor,
        threshold_window: cfg.imaging.threshold_window,
        threshold_offset: cfg.imaging.threshold_offset,
        seed: seed::derive(cfg.seed, Stream::Plant, index),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObjectRun {
    pub object: ObjectId,
    pub convergence: Convergence,
    #[serde(skip)]
    pub log: TrajectoryLog,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp1Outcome {
    pub runs: Vec<ObjectRun>,
    pub checks: Vec<Check>,
}

/// SSIM set-point control against every configured object.
pub fn exp1(cfg: &RunConfig) -> Result<Exp1Outcome> {
    let e = &cfg.exp1;
    let criteria = ConvergenceCriteria {
        setpoint: cfg.control.setpoint,
        tolerance: e.tolerance,
        within: e.convergence_cycles,
        hold: e.hold_cycles,
        final_cycles: e.final_cycles,
        max_final_delta_u: e.max_final_delta_u,
    };
    let mut runs = Vec::new();
    let mut checks = Vec::new();
    for (i, &object) in e.objects.iter().enumerate() {
        let plant = PlantModel::for_object(object);
        let actuator = ActuatorState::new(e.u_start, DEFAULT_U_MAX)?;
        let mut lp = ClosedLoop::new(plant, plant_sensor(cfg, EXP1_SEED_BASE + i as u64), actuator, None)?;
        let log = lp.run(Controller::Ssim, e.duration, &cfg.control)?;
        let c = convergence(&log, &criteria);
        checks.push(Check::new(
            format!("converged_{object}"),
            c.converged,
            format!(
                "entered band at {:?}, final e {:.4}, max |du| over last {} cycles {:.3}",
                c.entered_at, c.final_e, e.final_cycles, c.max_final_delta_u
            ),
        ));
        let mut range = actuator_in_range(&log.rows, DEFAULT_U_MAX);
        range.name = format!("actuator_range_{object}");
        checks.push(range);
        runs.push(ObjectRun {
            object,
            convergence: c,
            log,
        });
    }
    Ok(Exp1Outcome { runs, checks })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3aOutcome {
    pub log: TrajectoryLog,
    /// Rows of the SSIM closure preceding the ramp.
    pub closure_rows: usize,
    pub saturation: Saturation,
    pub checks: Vec<Check>,
}

impl Exp3aOutcome {
    pub fn ramp(&self) -> &[TrajectoryRow] {
        &self.log.rows[self.closure_rows..]
    }
}

/// SSIM closure, then an open-loop ramp while logging gated pose estimates.
pub fn exp3a(cfg: &RunConfig, model: &PoseNet) -> Result<Exp3aOutcome> {
    let e = &cfg.exp3a;
    let plant = PlantModel::for_object(e.object);
    let actuator = ActuatorState::new(0.0, DEFAULT_U_MAX)?;
    let mut lp = ClosedLoop::new(plant, plant_sensor(cfg, EXP3A_SEED), actuator, Some(model))?;
    let mut log = lp.run(Controller::Ssim, e.closure, &cfg.control)?;
    let closure_rows = log.len();
    log.extend(lp.ramp(e.ramp_rate, e.ramp_duration, &cfg.control)?);
    let ramp = &log.rows[closure_rows..];
    let sat = saturation(ramp, plant.max_depth);
    let ramp_rising = ramp.windows(2).all(|w| w[1].u > w[0].u || w[1].u == DEFAULT_U_MAX);
    let checks = vec![
        Check::new(
            "ssim_step_decreases_with_depth",
            sat.step_spearman.is_some_and(|r| r < 0.0),
            format!("Spearman {:?} over {} contact rows", sat.step_spearman, sat.contact_rows),
        ),
        Check::new(
            "z_estimate_affine_in_depth",
            sat.z_r_squared.is_some_and(|r2| r2 >= e.min_r_squared),
            format!("R^2 {:?}, slope {:?}, {} rows", sat.z_r_squared, sat.z_slope, sat.pose_rows),
        ),
        gate_respected(&log.rows, cfg.control.reliability_gate),
        Check::new("ramp_increasing", ramp_rising, "u strictly increasing until the clamp"),
        actuator_in_range(&log.rows, DEFAULT_U_MAX),
    ];
    Ok(Exp3aOutcome {
        log,
        closure_rows,
        saturation: sat,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Exp3bOutcome {
    pub log: TrajectoryLog,
    pub closure_rows: usize,
    pub plateaus: Vec<Plateau>,
    pub checks: Vec<Check>,
}

/// SSIM closure, then depth control through the set-point schedule.
pub fn exp3b(cfg: &RunConfig, model: &PoseNet) -> Result<Exp3bOutcome> {
    let e = &cfg.exp3b;
    let plant = PlantModel::for_object(e.object);
    let actuator = ActuatorState::new(0.0, DEFAULT_U_MAX)?;
    let mut lp = ClosedLoop::new(plant, plant_sensor(cfg, EXP3B_SEED), actuator, Some(model))?;
    let mut log = lp.run(Controller::Ssim, e.closure, &cfg.control)?;
    let closure_rows = log.len();
    for &r_z in &e.setpoints {
        let seg_cfg = ControllerConfig {
            setpoint_z: r_z,
            ..cfg.control
        };
        log.extend(lp.run(Controller::Pose(model), e.segment, &seg_cfg)?);
    }
    let segment_rows = cfg.control.cycles_in(e.segment);
    let plats = plateaus(&log.rows[closure_rows..], &e.setpoints, segment_rows, e.tail_fraction, e.tolerance);
    let mut checks: Vec<Check> = plats
        .iter()
        .map(|p| {
            Check::new(
                format!("plateau_{}mm", p.setpoint),
                p.within_tolerance,
                format!("mean z_hat {:?} (std {:?}), mean u {:.1}", p.z_mean, p.z_std, p.u_mean),
            )
        })
        .collect();
    checks.push(Check::new(
        "motor_plateaus_increasing",
        motor_means_increasing(&plats),
        format!("{:?}", plats.iter().map(|p| p.u_mean.round()).collect::<Vec<_>>()),
    ));
    checks.push(actuator_in_range(&log.rows, DEFAULT_U_MAX));
    Ok(Exp3bOutcome {
        log,
        closure_rows,
        plateaus: plats,
        checks,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CollectSummary {
    pub n: usize,
    pub n_train: usize,
    pub n_validation: usize,
    pub n_test: usize,
    /// Mean of each label component (x, z, phi, psi, theta).
    pub label_means: [f64; 5],
}

/// Synthesizes the dataset and its split into `dir`.
pub fn exp2_collect(cfg: &RunConfig, dir: &Path) -> Result<CollectSummary> {
    let n = cfg.posenet.dataset_size;
    let samples = collect_dataset(n, cfg.seed, &cfg.sensor, &cfg.collect_options())?;
    write_dataset(dir, &samples)?;
    let split = split_indices(n, cfg.seed);
    split.write(dir)?;
    let mut label_means = [0.0; 5];
    for s in &samples {
        let a = PoseEstimate::from(s.label).to_array();
        label_means.iter_mut().zip(a).for_each(|(m, v)| *m += v / n as f64);
    }
    Ok(CollectSummary {
        n,
        n_train: split.train.len(),
        n_validation: split.validation.len(),
        n_test: split.test.len(),
        label_means,
    })
}

fn require_dir(dir: &Path) -> Result<()> {
    let manifest = dir.join(posenet::MANIFEST_FILE);
    if manifest.exists() {
        Ok(())
    } else {
        Err(Error::MissingArtifact(manifest))
    }
}

/// Trains on the dataset's train split, selecting on its validation split.
pub fn exp2_train(cfg: &RunConfig, dataset: &Path, on_epoch: impl FnMut(&posenet::EpochRecord)) -> Result<(PoseNet, TrainingLog)> {
    require_dir(dataset)?;
    let split = Split::read(dataset)?;
    let samples = read_dataset(dataset)?;
    let train = Split::select(&samples, &split.train)?;
    let val = Split::select(&samples, &split.validation)?;
    posenet::train_with_progress(&train, &val, &cfg.posenet.network, cfg.posenet.ranges, on_epoch)
}

/// Evaluates on the dataset's test split. In oracle mode the labels are fed
/// back as predictions and no model is needed.
pub fn exp2_eval(cfg: &RunConfig, dataset: &Path, model: Option<&Path>, oracle: bool) -> Result<(EvalReport, Vec<Check>)> {
    require_dir(dataset)?;
    let split = Split::read(dataset)?;
    let samples = read_dataset(dataset)?;
    let test = Split::select(&samples, &split.test)?;
    let report = if oracle {
        let labels: Vec<PoseEstimate> = test.iter().map(|s| s.label.into()).collect();
        evaluate_predictions(&labels, &labels, &cfg.posenet.ranges)?
    } else {
        let path = model.ok_or_else(|| Error::Config("evaluation needs a model (or oracle mode)".into()))?;
        if !path.exists() {
            return Err(Error::MissingArtifact(path.to_path_buf()));
        }
        evaluate(&PoseNet::load(path)?, &test)?
    };
    let checks = (0..5)
        .map(|i| {
            let bound = cfg.posenet.max_mae[i];
            Check::new(
                format!("mae_{}", COMPONENT_NAMES[i]),
                report.mae[i] <= bound,
                format!("{:.3} (bound {bound})", report.mae[i]),
            )
        })
        .collect();
    Ok((report, checks))
}

pub fn load_model(path: &Path) -> Result<PoseNet> {
    if !path.exists() {
        return Err(Error::MissingArtifact(path.to_path_buf()));
    }
    PoseNet::load(path)
}

fn series(rows: &[TrajectoryRow], f: impl Fn(&TrajectoryRow) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter().map(|r| (r.t, f(r).unwrap_or(f64::NAN))).collect()
}

/// Time series of command, deformation and (when logged) the pose estimate.
pub fn trajectory_panels(log: &TrajectoryLog, with_pose: bool) -> Vec<Panel> {
    let rows = &log.rows;
    let mut panels = vec![
        Panel::new("MOTOR U", vec![Series::new("U", series(rows, |r| Some(r.u)))]),
        Panel::new("1-SSIM", vec![Series::new("E", series(rows, |r| Some(r.e_ssim)))]),
    ];
    if with_pose {
        panels.push(Panel::new(
            "DEPTH MM",
            vec![
                Series::new("Z_HAT", series(rows, |r| r.pose.map(|p| p.z))),
                Series::new("TRUE", series(rows, |r| Some(r.depth))),
            ],
        ));
        panels.push(Panel::new("X MM", vec![Series::new("X_HAT", series(rows, |r| r.pose.map(|p| p.x)))]));
        panels.push(Panel::new(
            "ANGLES DEG",
            vec![
                Series::new("PHI", series(rows, |r| r.pose.map(|p| p.phi))),
                Series::new("PSI", series(rows, |r| r.pose.map(|p| p.psi))),
                Series::new("THETA", series(rows, |r| r.pose.map(|p| p.theta))),
            ],
        ));
    }
    panels
}

pub fn training_panels(log: &TrainingLog) -> Vec<Panel> {
    let train = log.epochs.iter().map(|r| (r.epoch as f64, r.train_loss)).collect();
    let val = log
        .epochs
        .iter()
        .map(|r| (r.epoch as f64, r.val_loss.unwrap_or(f64::NAN)))
        .collect();
    vec![Panel::new("LOSS", vec![Series::new("TRAIN", train), Series::new("VAL", val)])]
}

/// Writes one trajectory as CSV and plot.
pub fn write_trajectory(dir: &RunDir, stem: &str, log: &TrajectoryLog, with_pose: bool) -> Result<()> {
    log.write_csv(&dir.file(&format!("{stem}.csv")))?;
    write_plot(&dir.file(&format!("{stem}.png")), &trajectory_panels(log, with_pose))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::Profile;

    #[test]
    fn zero_gain_is_flagged_non_convergent() {
        let mut cfg = RunConfig::for_profile(Profile::Desk);
        cfg.control.gain = 0.0;
        cfg.exp1.objects = vec![ObjectId::Prism40];
        cfg.exp1.duration = 3.0;
        let out = exp1(&cfg).unwrap();
        assert!(out.runs[0].log.rows.iter().all(|r| r.u == 0.0));
        assert!(!out.checks[0].passed);
    }

    #[test]
    fn eval_without_dataset_names_the_missing_file() {
        let cfg = RunConfig::for_profile(Profile::Desk);
        let dir = tempfile::tempdir().unwrap();
        match exp2_eval(&cfg, dir.path(), None, true) {
            Err(Error::MissingArtifact(p)) => assert!(p.ends_with(posenet::MANIFEST_FILE)),
            other => panic!("unexpected {other:?}"),
        }
        assert!(matches!(load_model(&dir.path().join("model.json")), Err(Error::MissingArtifact(_))));
    }
}
