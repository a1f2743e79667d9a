//! Property checks over trajectory logs.

use serde::Serialize;

use super::stats::{linear_fit, mean, spearman, std_dev};
use crate::control::{TrajectoryLog, TrajectoryRow};

/// A named pass/fail property evaluated during a run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: impl Into<String>, passed: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            passed,
            detail: detail.into(),
        }
    }
}

pub fn all_passed(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.passed)
}

/// Every logged command lies in `[0, u_max]`.
pub fn actuator_in_range(rows: &[TrajectoryRow], u_max: f64) -> Check {
    let bad = rows.iter().filter(|r| !(0.0..=u_max).contains(&r.u)).count();
    let (lo, hi) = rows
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), r| (lo.min(r.u), hi.max(r.u)));
    Check::new("actuator_range", bad == 0, format!("u in [{lo}, {hi}], {bad} rows outside [0, {u_max}]"))
}

/// Pose columns are empty exactly when the gate is closed.
pub fn gate_respected(rows: &[TrajectoryRow], gate: f64) -> Check {
    let leaks = rows.iter().filter(|r| r.e_ssim <= gate && r.pose.is_some()).count();
    let closed = rows.iter().filter(|r| r.e_ssim <= gate).count();
    Check::new(
        "reliability_gate",
        leaks == 0,
        format!("{closed} rows at or below the gate, {leaks} of them with a pose"),
    )
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConvergenceCriteria {
    pub setpoint: f64,
    pub tolerance: f64,
    /// Latest cycle at which the band may be entered.
    pub within: usize,
    /// Cycles the deformation must then stay in the band.
    pub hold: usize,
    pub final_cycles: usize,
    pub max_final_delta_u: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Convergence {
    /// First cycle from which the deformation stays in the band for the hold
    /// period.
    pub entered_at: Option<usize>,
    pub final_e: f64,
    pub final_u: f64,
    pub max_final_delta_u: f64,
    pub converged: bool,
}

pub fn convergence(log: &TrajectoryLog, c: &ConvergenceCriteria) -> Convergence {
    let rows = &log.rows;
    let inside = |r: &TrajectoryRow| (r.e_ssim - c.setpoint).abs() < c.tolerance;
    let entered_at = (0..rows.len().min(c.within + 1))
        .find(|&k| k + c.hold < rows.len() && rows[k..=k + c.hold].iter().all(inside));
    let tail = &rows[rows.len().saturating_sub(c.final_cycles)..];
    let max_final_delta_u = tail.iter().map(|r| r.delta_u.abs()).fold(0.0, f64::max);
    let last = rows.last();
    Convergence {
        entered_at,
        final_e: last.map_or(f64::NAN, |r| r.e_ssim),
        final_u: log.final_u,
        max_final_delta_u,
        converged: entered_at.is_some()
            && last.is_some_and(inside)
            && tail.len() == c.final_cycles
            && max_final_delta_u < c.max_final_delta_u,
    }
}

/// Ramp statistics contrasting the deformation measure with the depth estimate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Saturation {
    /// Ramp rows with the plant between first contact and its depth stop.
    pub contact_rows: usize,
    /// Spearman correlation of per-step |Δe| against depth.
    pub step_spearman: Option<f64>,
    /// Linear fit of estimated depth against true depth.
    pub z_slope: Option<f64>,
    pub z_r_squared: Option<f64>,
    pub pose_rows: usize,
}

/// `ramp` must be the ramp segment alone; `max_depth` is the plant's stop.
pub fn saturation(ramp: &[TrajectoryRow], max_depth: f64) -> Saturation {
    let in_contact = |r: &TrajectoryRow| r.depth > 0.0 && r.depth < max_depth;
    let mut depth = Vec::new();
    let mut step = Vec::new();
    for w in ramp.windows(2) {
        if in_contact(&w[0]) && in_contact(&w[1]) {
            depth.push(w[1].depth);
            step.push((w[1].e_ssim - w[0].e_ssim).abs());
        }
    }
    let (true_z, est_z): (Vec<f64>, Vec<f64>) = ramp
        .iter()
        .filter(|r| in_contact(r))
        .filter_map(|r| r.pose.map(|p| (r.depth, p.z)))
        .unzip();
    let fit = linear_fit(&true_z, &est_z);
    Saturation {
        contact_rows: ramp.iter().filter(|r| in_contact(r)).count(),
        step_spearman: spearman(&depth, &step),
        z_slope: fit.map(|f| f.slope),
        z_r_squared: fit.map(|f| f.r_squared),
        pose_rows: true_z.len(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Plateau {
    pub setpoint: f64,
    /// Mean estimated depth over the steady-state tail.
    pub z_mean: Option<f64>,
    pub z_std: Option<f64>,
    pub u_mean: f64,
    pub tail_rows: usize,
    pub within_tolerance: bool,
}

/// Splits `rows` into consecutive segments of `segment_rows` and summarizes
/// the trailing `tail_fraction` of each.
pub fn plateaus(rows: &[TrajectoryRow], setpoints: &[f64], segment_rows: usize, tail_fraction: f64, tolerance: f64) -> Vec<Plateau> {
    setpoints
        .iter()
        .enumerate()
        .map(|(i, &r)| {
            let seg = &rows[(i * segment_rows).min(rows.len())..((i + 1) * segment_rows).min(rows.len())];
            let n_tail = ((seg.len() as f64 * tail_fraction).ceil() as usize).clamp(1, seg.len().max(1));
            let tail = &seg[seg.len().saturating_sub(n_tail)..];
            let z: Vec<f64> = tail.iter().filter_map(|r| r.pose.map(|p| p.z)).collect();
            let u: Vec<f64> = tail.iter().map(|r| r.u).collect();
            let z_mean = mean(&z);
            Plateau {
                setpoint: r,
                z_mean,
                z_std: std_dev(&z),
                u_mean: mean(&u).unwrap_or(f64::NAN),
                tail_rows: tail.len(),
                // Every tail row must carry an estimate for the mean to count.
                within_tolerance: z.len() == tail.len() && z_mean.is_some_and(|m| (m - r).abs() < tolerance),
            }
        })
        .collect()
}

/// Plateau motor means strictly increase with the set point.
pub fn motor_means_increasing(plateaus: &[Plateau]) -> bool {
    let mut sorted: Vec<&Plateau> = plateaus.iter().collect();
    sorted.sort_by(|a, b| a.setpoint.total_cmp(&b.setpoint));
    sorted.windows(2).all(|w| w[1].u_mean > w[0].u_mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::posenet::PoseEstimate;

    fn row(k: usize, u: f64, e: f64, depth: f64, z: Option<f64>) -> TrajectoryRow {
        TrajectoryRow {
            t: k as f64 * 0.15,
            u,
            e_ssim: e,
            pose: z.map(|z| PoseEstimate::from_array([0.0, z, 0.0, 0.0, 0.0])),
            gated: e <= 0.45,
            depth,
            delta_u: 0.0,
            setpoint: None,
        }
    }

    fn criteria() -> ConvergenceCriteria {
        ConvergenceCriteria {
            setpoint: 0.7,
            tolerance: 0.05,
            within: 200,
            hold: 50,
            final_cycles: 10,
            max_final_delta_u: 1.0,
        }
    }

    #[test]
    fn convergence_needs_entry_hold_and_quiet_tail() {
        let mut rows: Vec<TrajectoryRow> = (0..300).map(|k| row(k, 0.0, if k < 120 { 0.1 } else { 0.69 }, 0.0, None)).collect();
        let log = TrajectoryLog { rows: rows.clone(), final_u: 0.0 };
        let c = convergence(&log, &criteria());
        assert_eq!(c.entered_at, Some(120));
        assert!(c.converged);

        rows[295].delta_u = 5.0;
        assert!(!convergence(&TrajectoryLog { rows: rows.clone(), final_u: 0.0 }, &criteria()).converged);

        let late: Vec<TrajectoryRow> = (0..300).map(|k| row(k, 0.0, if k < 230 { 0.1 } else { 0.7 }, 0.0, None)).collect();
        assert_eq!(convergence(&TrajectoryLog { rows: late, final_u: 0.0 }, &criteria()).entered_at, None);
    }

    #[test]
    fn saturating_measure_against_linear_estimate() {
        // e = 1 - exp(-d) saturates; z_hat = d is affine.
        let ramp: Vec<TrajectoryRow> = (0..100)
            .map(|k| {
                let d = (k as f64 * 0.04 - 0.4).clamp(0.0, 3.0);
                let e = 1.0 - (-d).exp();
                row(k, k as f64, e, d, (e > 0.45).then_some(d))
            })
            .collect();
        let s = saturation(&ramp, 3.0);
        assert!(s.step_spearman.unwrap() < -0.99, "{s:?}");
        assert!((s.z_r_squared.unwrap() - 1.0).abs() < 1e-12);
        assert!(gate_respected(&ramp, 0.45).passed);
        assert!(s.contact_rows > 0 && s.pose_rows < s.contact_rows);
    }

    #[test]
    fn plateau_summary() {
        let rows: Vec<TrajectoryRow> = (0..40)
            .map(|k| {
                let r = if k < 20 { 1.0 } else { 2.0 };
                row(k, 100.0 * r + (k % 20) as f64, 0.7, r, Some(r + 0.1))
            })
            .collect();
        let p = plateaus(&rows, &[1.0, 2.0], 20, 0.25, 0.25);
        assert_eq!(p.len(), 2);
        assert_eq!(p[0].tail_rows, 5);
        assert!((p[0].z_mean.unwrap() - 1.1).abs() < 1e-12);
        assert!((p[0].u_mean - 117.0).abs() < 1e-12);
        assert!(p.iter().all(|q| q.within_tolerance));
        assert!(motor_means_increasing(&p));
    }

    #[test]
    fn out_of_range_command_is_flagged() {
        let rows = vec![row(0, 0.0, 0.0, 0.0, None), row(1, 19000.5, 0.0, 0.0, None)];
        assert!(!actuator_in_range(&rows, 19000.0).passed);
        assert!(actuator_in_range(&rows[..1], 19000.0).passed);
    }
}
