use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::posenet::PoseEstimate;

pub const CSV_HEADER: &str = "t,u,e_ssim,z_hat,x_hat,phi_hat,psi_hat,theta_hat,gated";

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrajectoryRow {
    /// Virtual time (s).
    pub t: f64,
    /// Motor command after this cycle's actuation.
    pub u: f64,
    pub e_ssim: f64,
    /// Present only when a model ran and the gate was open.
    pub pose: Option<PoseEstimate>,
    /// `1 - SSIM` was at or below the reliability gate.
    pub gated: bool,
    /// Plant depth when the frame was taken (not written to CSV).
    pub depth: f64,
    /// Increment applied this cycle (not written to CSV).
    pub delta_u: f64,
    /// Active set point, in the units of the running controller.
    pub setpoint: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct TrajectoryLog {
    pub rows: Vec<TrajectoryRow>,
    /// Command the actuator holds after the last cycle.
    pub final_u: f64,
}

impl TrajectoryLog {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Concatenates a later segment.
    pub fn extend(&mut self, later: TrajectoryLog) {
        self.rows.extend(later.rows);
        self.final_u = later.final_u;
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(CSV_HEADER);
        s.push('\n');
        for r in &self.rows {
            write!(s, "{},{},{}", r.t, r.u, r.e_ssim).unwrap();
            match r.pose {
                Some(p) => write!(s, ",{},{},{},{},{}", p.z, p.x, p.phi, p.psi, p.theta).unwrap(),
                None => s.push_str(",,,,,"),
            }
            writeln!(s, ",{}", r.gated).unwrap();
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(t: f64, pose: Option<PoseEstimate>) -> TrajectoryRow {
        TrajectoryRow {
            t,
            u: 100.0,
            e_ssim: 0.5,
            pose,
            gated: pose.is_none(),
            depth: 0.0,
            delta_u: 0.0,
            setpoint: None,
        }
    }

    #[test]
    fn csv_layout() {
        let p = PoseEstimate::from_array([1.0, 2.0, 3.0, 4.0, 5.0]);
        let log = TrajectoryLog {
            rows: vec![row(0.0, None), row(0.15, Some(p))],
            final_u: 100.0,
        };
        assert_eq!(
            log.to_csv(),
            format!("{CSV_HEADER}\n0,100,0.5,,,,,,true\n0.15,100,0.5,2,1,3,4,5,false\n")
        );
    }
}
