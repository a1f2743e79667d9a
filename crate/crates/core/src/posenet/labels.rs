use serde::{Deserialize, Serialize};

use super::network::OUTPUTS;
use crate::tactile_sim::{EdgePose, PoseRanges};

pub const COMPONENT_NAMES: [&str; OUTPUTS] = ["x", "z", "phi", "psi", "theta"];
pub const COMPONENT_UNITS: [&str; OUTPUTS] = ["mm", "mm", "deg", "deg", "deg"];

/// Regressed pose: every [`EdgePose`] component except the unobservable `y`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct PoseEstimate {
    pub x: f64,
    pub z: f64,
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
}

impl PoseEstimate {
    pub fn to_array(self) -> [f64; OUTPUTS] {
        [self.x, self.z, self.phi, self.psi, self.theta]
    }

    pub fn from_array(v: [f64; OUTPUTS]) -> Self {
        Self {
            x: v[0],
            z: v[1],
            phi: v[2],
            psi: v[3],
            theta: v[4],
        }
    }
}

impl From<EdgePose> for PoseEstimate {
    fn from(p: EdgePose) -> Self {
        Self {
            x: p.x,
            z: p.z,
            phi: p.phi,
            psi: p.psi,
            theta: p.theta,
        }
    }
}

/// Affine map of each label range onto `[-1, 1]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LabelScaler {
    ranges: PoseRanges,
}

impl LabelScaler {
    pub fn new(ranges: PoseRanges) -> Self {
        Self { ranges }
    }

    pub fn normalize(&self, pose: PoseEstimate) -> [f64; OUTPUTS] {
        let v = pose.to_array();
        let r = self.ranges.as_array();
        std::array::from_fn(|i| 2.0 * (v[i] - r[i].lo) / r[i].width() - 1.0)
    }

    pub fn denormalize(&self, v: [f64; OUTPUTS]) -> PoseEstimate {
        let r = self.ranges.as_array();
        PoseEstimate::from_array(std::array::from_fn(|i| r[i].lo + (v[i] + 1.0) * 0.5 * r[i].width()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn range_ends_map_to_unit_interval() {
        let s = LabelScaler::new(PoseRanges::default());
        let lo = PoseEstimate::from_array([-6.0, 0.0, -5.0, -10.0, -45.0]);
        let hi = PoseEstimate::from_array([6.0, 3.0, 5.0, 10.0, 45.0]);
        assert_eq!(s.normalize(lo), [-1.0; 5]);
        assert_eq!(s.normalize(hi), [1.0; 5]);
        assert_eq!(s.normalize(PoseEstimate::from_array([0.0, 1.5, 0.0, 0.0, 0.0])), [0.0; 5]);
    }

    proptest! {
        #[test]
        fn normalization_round_trips(
            x in -6.0f64..6.0, z in 0.0f64..3.0, phi in -5.0f64..5.0,
            psi in -10.0f64..10.0, theta in -45.0f64..45.0,
        ) {
            let s = LabelScaler::new(PoseRanges::default());
            let p = PoseEstimate { x, z, phi, psi, theta };
            let back = s.denormalize(s.normalize(p)).to_array();
            for (a, b) in back.iter().zip(p.to_array()) {
                prop_assert!((a - b).abs() <= 1e-12);
            }
        }
    }
}
