use rand::Rng;
use serde::{Deserialize, Serialize};

/// Pose of a straight edge stimulus relative to the fingertip.
///
/// `x` is across the edge, `y` along it (never labelled), `z` the indentation
/// depth with 0 at first contact. Angles are in degrees: `phi` roll about the
/// edge direction, `psi` pitch about the across-edge axis, `theta` yaw of the
/// edge in the sensor plane.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EdgePose {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub phi: f64,
    pub psi: f64,
    pub theta: f64,
}

impl EdgePose {
    pub fn new(x: f64, z: f64, phi: f64, psi: f64, theta: f64) -> Self {
        Self {
            x,
            y: 0.0,
            z,
            phi,
            psi,
            theta,
        }
    }

    /// Reflection across the sensor's vertical axis.
    pub fn mirrored(&self) -> Self {
        Self {
            x: -self.x,
            phi: -self.phi,
            theta: -self.theta,
            ..*self
        }
    }
}

/// Unlabelled contact perturbation applied during data collection.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ShearPerturbation {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    pub dphi: f64,
    pub dpsi: f64,
    pub dtheta: f64,
}

impl ShearPerturbation {
    pub const NONE: Self = Self {
        dx: 0.0,
        dy: 0.0,
        dz: 0.0,
        dphi: 0.0,
        dpsi: 0.0,
        dtheta: 0.0,
    };

    pub fn is_zero(&self) -> bool {
        *self == Self::NONE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn contains(&self, v: f64) -> bool {
        (self.lo..=self.hi).contains(&v)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        if self.hi > self.lo {
            rng.random_range(self.lo..=self.hi)
        } else {
            self.lo
        }
    }
}

/// Label ranges for the five regressed components.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PoseRanges {
    pub x: Interval,
    pub z: Interval,
    pub phi: Interval,
    pub psi: Interval,
    pub theta: Interval,
}

impl Default for PoseRanges {
    fn default() -> Self {
        Self {
            x: Interval::new(-6.0, 6.0),
            z: Interval::new(0.0, 3.0),
            phi: Interval::new(-5.0, 5.0),
            psi: Interval::new(-10.0, 10.0),
            theta: Interval::new(-45.0, 45.0),
        }
    }
}

impl PoseRanges {
    /// Ranges in label order `[x, z, phi, psi, theta]`.
    pub fn as_array(&self) -> [Interval; 5] {
        [self.x, self.z, self.phi, self.psi, self.theta]
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> EdgePose {
        EdgePose::new(
            self.x.sample(rng),
            self.z.sample(rng),
            self.phi.sample(rng),
            self.psi.sample(rng),
            self.theta.sample(rng),
        )
    }

    pub fn contains(&self, pose: &EdgePose) -> bool {
        self.x.contains(pose.x)
            && self.z.contains(pose.z)
            && self.phi.contains(pose.phi)
            && self.psi.contains(pose.psi)
            && self.theta.contains(pose.theta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ShearRanges {
    pub dx: Interval,
    pub dy: Interval,
    pub dz: Interval,
    pub dphi: Interval,
    pub dpsi: Interval,
    pub dtheta: Interval,
}

impl Default for ShearRanges {
    fn default() -> Self {
        Self {
            dx: Interval::new(-2.0, 2.0),
            dy: Interval::new(-2.0, 2.0),
            dz: Interval::new(-1.0, 1.0),
            dphi: Interval::new(-2.0, 2.0),
            dpsi: Interval::new(-2.0, 2.0),
            dtheta: Interval::new(-2.0, 2.0),
        }
    }
}

impl ShearRanges {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ShearPerturbation {
        ShearPerturbation {
            dx: self.dx.sample(rng),
            dy: self.dy.sample(rng),
            dz: self.dz.sample(rng),
            dphi: self.dphi.sample(rng),
            dpsi: self.dpsi.sample(rng),
            dtheta: self.dtheta.sample(rng),
        }
    }

    pub fn contains(&self, s: &ShearPerturbation) -> bool {
        self.dx.contains(s.dx)
            && self.dy.contains(s.dy)
            && self.dz.contains(s.dz)
            && self.dphi.contains(s.dphi)
            && self.dpsi.contains(s.dpsi)
            && self.dtheta.contains(s.dtheta)
    }
}
