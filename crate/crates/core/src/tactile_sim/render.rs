use serde::{Deserialize, Serialize};

use super::pins::{PinField, PIN_COLS, PIN_ROWS};
use crate::error::{ensure, Result};
use crate::imaging::{Stage, TactileImage};

/// Pinhole camera looking at the pin tips from `focal_distance` mm, plus the
/// appearance of markers and membrane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Camera {
    pub width: usize,
    pub height: usize,
    /// Image scale at the rest plane of the pin tips.
    pub px_per_mm: f64,
    /// Distance from the pinhole to the rest plane (the pad depth, mm).
    pub focal_distance: f64,
    /// Membrane intensity with no contact.
    pub background: f64,
    /// Marker intensity.
    pub marker: f64,
    /// Maximum brightening of the membrane where it is pressed toward the
    /// camera and lighting.
    pub shading_amplitude: f64,
    /// Lift at which shading reaches `1 − 1/e` of its amplitude (mm).
    pub shading_depth: f64,
}

impl Default for Camera {
    fn default() -> Self {
        Self {
            width: 480,
            height: 270,
            px_per_mm: 24.0,
            focal_distance: 10.0,
            background: 0.05,
            marker: 0.9,
            shading_amplitude: 0.4,
            shading_depth: 0.15,
        }
    }
}

impl Camera {
    pub fn validate(&self) -> Result<()> {
        ensure(self.width > 0 && self.height > 0, || {
            format!("render resolution {}x{} must be positive", self.width, self.height)
        })?;
        ensure(self.px_per_mm > 0.0, || "px_per_mm must be > 0".into())?;
        ensure(self.focal_distance > 0.0, || "focal_distance must be > 0".into())?;
        for (name, v) in [
            ("background", self.background),
            ("marker", self.marker),
            ("shading_amplitude", self.shading_amplitude),
        ] {
            ensure((0.0..=1.0).contains(&v), || format!("{name} {v} outside [0, 1]"))?;
        }
        ensure(self.shading_depth > 0.0, || "shading_depth must be > 0".into())
    }

    fn center(&self) -> (f64, f64) {
        (self.width as f64 / 2.0, self.height as f64 / 2.0)
    }

    /// Pixel coordinates of a point on the rest plane.
    pub fn project(&self, x: f64, y: f64) -> (f64, f64) {
        let (cx, cy) = self.center();
        (cx + x * self.px_per_mm, cy + y * self.px_per_mm)
    }

    /// Pixels per mm at a given lift.
    pub fn magnification(&self, lift: f64) -> f64 {
        // Pins cannot pass the pinhole; keep at least 10% of the distance.
        let dist = (self.focal_distance - lift).max(0.1 * self.focal_distance);
        self.px_per_mm * self.focal_distance / dist
    }
}

/// Separable Gaussian splat of per-pin lift onto the image grid. On the
/// lattice interior the weights form an approximate partition of unity.
fn membrane_lift(field: &PinField, camera: &Camera) -> Vec<f64> {
    let (w, h) = (camera.width, camera.height);
    if field.lift.iter().all(|&l| l == 0.0) {
        return vec![0.0; w * h];
    }
    let sigma = 0.7 * field.pitch;
    let norm = field.pitch / (sigma * (2.0 * std::f64::consts::PI).sqrt());
    let (cx, cy) = camera.center();
    let kern = |d: f64| norm * (-d * d / (2.0 * sigma * sigma)).exp();

    let col_x: Vec<f64> = (0..PIN_COLS).map(|c| field.rest[c].x).collect();
    let row_y: Vec<f64> = (0..PIN_ROWS).map(|r| field.rest[r * PIN_COLS].y).collect();
    let gx: Vec<[f64; PIN_COLS]> = (0..w)
        .map(|u| {
            let x = (u as f64 + 0.5 - cx) / camera.px_per_mm;
            std::array::from_fn(|c| kern(x - col_x[c]))
        })
        .collect();

    let mut out = vec![0.0; w * h];
    for v in 0..h {
        let y = (v as f64 + 0.5 - cy) / camera.px_per_mm;
        let gy: [f64; PIN_ROWS] = std::array::from_fn(|r| kern(y - row_y[r]));
        // Collapse rows first: per-column lift weighted along y.
        let col_lift: [f64; PIN_COLS] =
            std::array::from_fn(|c| (0..PIN_ROWS).map(|r| gy[r] * field.lift[r * PIN_COLS + c]).sum());
        for (u, o) in out[v * w..(v + 1) * w].iter_mut().enumerate() {
            *o = gx[u].iter().zip(&col_lift).map(|(a, b)| a * b).sum();
        }
    }
    out
}

/// Renders the internal camera view: a dark membrane that brightens where it
/// is lifted toward the camera, with one anti-aliased bright disc per pin
/// marker projected through the pinhole. Pins outside the frame are clipped.
pub fn render_image(field: &PinField, camera: &Camera) -> Result<TactileImage> {
    camera.validate()?;
    let (w, h) = (camera.width, camera.height);
    let lift = membrane_lift(field, camera);
    let mut pixels: Vec<f64> = lift
        .iter()
        .map(|&l| {
            let shade = camera.shading_amplitude * (1.0 - (-l.max(0.0) / camera.shading_depth).exp());
            (camera.background + shade).min(1.0)
        })
        .collect();

    for (p, &pin_lift) in field.displaced.iter().zip(&field.lift) {
        // Centres go through the rest-plane projection. Scaling them with lift
        // pushes markers onto their neighbours' rest spots and makes the
        // deformation score dip at deep contact; only the disc size follows
        // the lift.
        let (px, py) = camera.project(p.x, p.y);
        let radius = field.pin_radius * camera.magnification(pin_lift);
        let reach = radius + 1.0;
        let u0 = (px - reach).floor().max(0.0) as usize;
        let v0 = (py - reach).floor().max(0.0) as usize;
        let u1 = ((px + reach).ceil().max(0.0) as usize).min(w);
        let v1 = ((py + reach).ceil().max(0.0) as usize).min(h);
        for v in v0..v1 {
            for u in u0..u1 {
                let d = (u as f64 + 0.5 - px).hypot(v as f64 + 0.5 - py);
                let coverage = (radius - d + 0.5).clamp(0.0, 1.0);
                if coverage > 0.0 {
                    let px_ref = &mut pixels[v * w + u];
                    let lit = *px_ref + (camera.marker - *px_ref) * coverage;
                    *px_ref = px_ref.max(lit);
                }
            }
        }
    }
    TactileImage::new(w, h, Stage::Raw, pixels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tactile_sim::pins::rest_pin_field;

    /// Intensity-weighted centroid of above-background pixels in a box.
    fn blob_centroid(img: &TactileImage, cx: f64, cy: f64, half: f64, bg: f64) -> (f64, f64) {
        let (mut sx, mut sy, mut sw) = (0.0, 0.0, 0.0);
        let u0 = (cx - half).max(0.0) as usize;
        let v0 = (cy - half).max(0.0) as usize;
        for v in v0..((cy + half) as usize).min(img.height()) {
            for u in u0..((cx + half) as usize).min(img.width()) {
                let wgt = img.get(u, v) - bg;
                if wgt > 1e-12 {
                    sx += wgt * (u as f64 + 0.5);
                    sy += wgt * (v as f64 + 0.5);
                    sw += wgt;
                }
            }
        }
        (sx / sw, sy / sw)
    }

    #[test]
    fn rest_render_has_a_regular_grid_of_blobs() {
        let cam = Camera::default();
        let field = rest_pin_field(2.0, 0.375).unwrap();
        let img = render_image(&field, &cam).unwrap();
        for p in &field.rest {
            let (px, py) = cam.project(p.x, p.y);
            let (gx, gy) = blob_centroid(&img, px, py, 20.0, cam.background);
            assert!((gx - px).abs() < 1e-6 && (gy - py).abs() < 1e-6, "blob at ({gx},{gy}) vs ({px},{py})");
        }
        // Background away from the pins is untouched.
        assert_eq!(img.get(0, 0), cam.background);
    }

    #[test]
    fn rendering_is_deterministic() {
        let cam = Camera::default();
        let field = rest_pin_field(2.0, 0.375).unwrap();
        assert_eq!(render_image(&field, &cam).unwrap(), render_image(&field, &cam).unwrap());
    }

    #[test]
    fn displaced_pin_shifts_by_projection_scale() {
        let cam = Camera::default();
        let field = rest_pin_field(2.0, 0.375).unwrap();
        let mut moved = field.clone();
        let k = PinField::index(2, 4);
        moved.displaced[k].x += 2.0;

        let before = render_image(&field, &cam).unwrap();
        let after = render_image(&moved, &cam).unwrap();
        let (px, py) = cam.project(field.rest[k].x, field.rest[k].y);
        // Box of half-width 10 px only sees this pin in each image.
        let (x0, _) = blob_centroid(&before, px, py, 10.0, cam.background);
        let (x1, y1) = blob_centroid(&after, px + 2.0 * cam.px_per_mm, py, 10.0, cam.background);
        assert!((x1 - x0 - 2.0 * cam.px_per_mm).abs() < 1e-9);
        assert!((y1 - py).abs() < 1e-9);
    }

    #[test]
    fn lifted_pins_grow_and_brighten_the_membrane() {
        let cam = Camera::default();
        let field = rest_pin_field(2.0, 0.375).unwrap();
        let mut lifted = field.clone();
        lifted.lift.iter_mut().for_each(|l| *l = 1.0);
        let img = render_image(&lifted, &cam).unwrap();
        let rest = render_image(&field, &cam).unwrap();
        let lit = |i: &TactileImage| i.pixels().iter().filter(|&&v| v > 0.5).count();
        assert!(lit(&img) > lit(&rest));
        let (cx, cy) = (cam.width / 2, cam.height / 2);
        // Midway between the central pins the membrane is brighter.
        assert!(img.get(cx + 24, cy + 24) > rest.get(cx + 24, cy + 24));
    }

    #[test]
    fn out_of_frame_pins_are_clipped() {
        let cam = Camera::default();
        let mut field = rest_pin_field(2.0, 0.375).unwrap();
        field.displaced[0].x -= 100.0;
        field.displaced[1].y += 100.0;
        assert!(render_image(&field, &cam).is_ok());
    }

    #[test]
    fn rejects_empty_resolution() {
        let cam = Camera { width: 0, ..Camera::default() };
        assert!(render_image(&rest_pin_field(2.0, 0.375).unwrap(), &cam).is_err());
    }
}
