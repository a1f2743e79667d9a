use serde::{Deserialize, Serialize};

use super::pose::{EdgePose, ShearPerturbation};
use crate::error::{ensure, Result};

pub const PIN_ROWS: usize = 5;
pub const PIN_COLS: usize = 9;
pub const PIN_COUNT: usize = PIN_ROWS * PIN_COLS;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(&self, other: &Point2) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Marker-pin array, row-major (`PIN_ROWS` rows of `PIN_COLS` pins).
///
/// Positions are in millimetres in the sensor plane, origin at the array
/// center, `x` along the rows. `lift` is each pin tip's displacement toward
/// the camera.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PinField {
    pub pitch: f64,
    pub pin_radius: f64,
    pub rest: Vec<Point2>,
    pub displaced: Vec<Point2>,
    pub lift: Vec<f64>,
}

impl PinField {
    pub fn index(row: usize, col: usize) -> usize {
        row * PIN_COLS + col
    }

    /// Per-pin in-plane displacement vectors.
    pub fn displacements(&self) -> impl Iterator<Item = Point2> + '_ {
        self.rest
            .iter()
            .zip(&self.displaced)
            .map(|(r, d)| Point2::new(d.x - r.x, d.y - r.y))
    }

    pub fn is_at_rest(&self) -> bool {
        self.rest == self.displaced && self.lift.iter().all(|&h| h == 0.0)
    }
}

/// Builds the undeformed 5×9 lattice centred on the origin.
pub fn rest_pin_field(pitch: f64, pin_radius: f64) -> Result<PinField> {
    ensure(pitch > 0.0 && pitch.is_finite(), || format!("pin pitch {pitch} must be positive"))?;
    ensure(pin_radius > 0.0 && pin_radius.is_finite(), || {
        format!("pin radius {pin_radius} must be positive")
    })?;
    let rest: Vec<Point2> = (0..PIN_ROWS)
        .flat_map(|r| {
            (0..PIN_COLS).map(move |c| {
                Point2::new(
                    (c as f64 - (PIN_COLS - 1) as f64 / 2.0) * pitch,
                    (r as f64 - (PIN_ROWS - 1) as f64 / 2.0) * pitch,
                )
            })
        })
        .collect();
    Ok(PinField {
        pitch,
        pin_radius,
        displaced: rest.clone(),
        lift: vec![0.0; rest.len()],
        rest,
    })
}

/// Membrane response parameters.
///
/// Only `pad_depth` and `max_depth` have physical grounding; the rest shape the
/// synthetic contact law.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MembraneParams {
    /// Width of the cosine taper outside the contact band (mm).
    pub falloff_radius: f64,
    /// Indentation beyond which `z` is clamped (mm).
    pub max_depth: f64,
    /// Fraction of the shear offset transmitted to fully engaged pins.
    pub shear_coupling: f64,
    /// Camera-to-pin-tip distance (mm).
    pub pad_depth: f64,
    /// Half-width of the contact band per mm of local indentation.
    pub contact_spread: f64,
    /// In-plane splay of a pin per mm of lift.
    pub lateral_gain: f64,
    /// Length scale over which roll/pitch tilt modulates local indentation (mm).
    pub tilt_length: f64,
    /// Local indentation at which a pin is fully engaged for shear (mm).
    pub engage_depth: f64,
}

impl Default for MembraneParams {
    fn default() -> Self {
        Self {
            falloff_radius: 8.0,
            max_depth: 3.0,
            shear_coupling: 0.25,
            pad_depth: 10.0,
            contact_spread: 1.0,
            lateral_gain: 0.4,
            tilt_length: 1.0,
            engage_depth: 0.25,
        }
    }
}

impl MembraneParams {
    pub fn validate(&self) -> Result<()> {
        ensure(self.falloff_radius > 0.0, || format!("falloff_radius {} must be > 0", self.falloff_radius))?;
        ensure(self.max_depth > 0.0, || format!("max_depth {} must be > 0", self.max_depth))?;
        ensure((0.0..=1.0).contains(&self.shear_coupling), || {
            format!("shear_coupling {} outside [0, 1]", self.shear_coupling)
        })?;
        ensure(self.pad_depth >= 10.0, || {
            format!("pad_depth {} below the 10 mm field-of-view limit", self.pad_depth)
        })?;
        ensure(self.contact_spread >= 0.0, || "contact_spread must be >= 0".into())?;
        ensure(self.lateral_gain >= 0.0, || "lateral_gain must be >= 0".into())?;
        ensure(self.tilt_length > 0.0, || "tilt_length must be > 0".into())?;
        ensure(self.engage_depth > 0.0, || "engage_depth must be > 0".into())
    }
}

/// Result of deforming a pin field.
#[derive(Debug, Clone, PartialEq)]
pub struct Deformation {
    pub field: PinField,
    /// Set when `pose.z` exceeded `max_depth` and was clamped.
    pub depth_clamped: bool,
}

/// Contact profile of an edge stimulus, evaluated at any sensor-plane point.
#[derive(Debug, Clone, Copy)]
pub(crate) struct EdgeContact {
    normal: Point2,
    tangent: Point2,
    offset: f64,
    along_offset: f64,
    depth: f64,
    tan_roll: f64,
    tan_pitch: f64,
    params: MembraneParams,
}

/// Pin-level response at one point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) struct LocalResponse {
    /// Signed distance to the edge line (mm).
    pub distance: f64,
    /// Contact weight in `[0, 1]`.
    pub weight: f64,
    /// Displacement toward the camera (mm).
    pub lift: f64,
    /// In-plane displacement (mm).
    pub shift: Point2,
}

/// Smoothing length of the splay direction across the edge line (mm).
const SPLAY_SOFTENING: f64 = 0.5;

impl EdgeContact {
    pub(crate) fn new(pose: &EdgePose, params: &MembraneParams) -> Self {
        let (s, c) = pose.theta.to_radians().sin_cos();
        Self {
            normal: Point2::new(c, s),
            tangent: Point2::new(-s, c),
            offset: pose.x,
            along_offset: pose.y,
            depth: pose.z.clamp(0.0, params.max_depth),
            tan_roll: pose.phi.to_radians().tan(),
            tan_pitch: pose.psi.to_radians().tan(),
            params: *params,
        }
    }

    /// Weight that is 1 within `half_width` of the edge line and falls to 0 with
    /// a raised-cosine taper over `falloff_radius`.
    fn taper(&self, distance: f64, half_width: f64) -> f64 {
        let r = distance.abs() - half_width;
        let falloff = self.params.falloff_radius;
        if r <= 0.0 {
            1.0
        } else if r >= falloff {
            0.0
        } else {
            0.5 * (1.0 + (std::f64::consts::PI * r / falloff).cos())
        }
    }

    pub(crate) fn response(&self, p: Point2, shear: &ShearPerturbation) -> LocalResponse {
        let n = self.normal;
        let t = self.tangent;
        let d = p.x * n.x + p.y * n.y - self.offset;
        let s = p.x * t.x + p.y * t.y - self.along_offset;
        let p_ = &self.params;

        // Roll tilts the indenter across the edge, pitch along it.
        let tilt = (1.0 + (d * self.tan_roll + s * self.tan_pitch) / p_.tilt_length).max(0.0);
        let local_depth = self.depth * tilt;
        let weight = self.taper(d, p_.contact_spread * local_depth);
        let lift = local_depth * weight;

        let splay = p_.lateral_gain * lift * d / (d * d + SPLAY_SOFTENING * SPLAY_SOFTENING).sqrt();
        let engaged = weight * (local_depth / p_.engage_depth).min(1.0);
        let sh = p_.shear_coupling * engaged;
        let shift = Point2::new(
            splay * n.x + sh * (shear.dx * n.x + shear.dy * t.x),
            splay * n.y + sh * (shear.dx * n.y + shear.dy * t.y),
        );
        LocalResponse {
            distance: d,
            weight,
            lift,
            shift,
        }
    }
}

/// Displaces every pin of `field` under an edge stimulus at `pose`.
///
/// Lift is `z_local · w(d)`, where `d` is the pin's distance to the edge line and
/// `w` is 1 inside the contact band and cosine-tapered to 0 over
/// `falloff_radius`. Pins splay away from the edge line in proportion to their
/// lift, and the tangential shear offset `(dx, dy)` is added scaled by
/// `shear_coupling` and the local contact weight.
pub fn deform_pins(
    field: &PinField,
    pose: &EdgePose,
    shear: &ShearPerturbation,
    params: &MembraneParams,
) -> Result<Deformation> {
    params.validate()?;
    ensure(pose.z >= 0.0, || format!("indentation z = {} must be >= 0", pose.z))?;
    let depth_clamped = pose.z > params.max_depth;
    let contact = EdgeContact::new(pose, params);

    let mut out = field.clone();
    for ((rest, displaced), lift) in field.rest.iter().zip(&mut out.displaced).zip(&mut out.lift) {
        let r = contact.response(*rest, shear);
        // Exact zero response leaves the pin bit-identical.
        if r.lift != 0.0 || r.shift != Point2::default() {
            displaced.x += r.shift.x;
            displaced.y += r.shift.y;
            *lift += r.lift;
        }
    }
    Ok(Deformation {
        field: out,
        depth_clamped,
    })
}
