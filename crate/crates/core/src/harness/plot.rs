//! Minimal raster time-series plots: stacked panels, one or more line series
//! per panel, written as RGB PNG.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::{Error, Result};

const PANEL_W: usize = 800;
const PANEL_H: usize = 180;
const MARGIN_L: usize = 70;
const MARGIN_R: usize = 16;
const MARGIN_T: usize = 22;
const MARGIN_B: usize = 14;
const SCALE: usize = 2;

const PALETTE: [[u8; 3]; 5] = [[31, 119, 180], [214, 39, 40], [44, 160, 44], [148, 103, 189], [255, 127, 14]];

/// 3×5 glyphs, one string per row, `#` lit.
fn glyph(c: char) -> [&'static str; 5] {
    match c.to_ascii_uppercase() {
        '0' => ["###", "#.#", "#.#", "#.#", "###"],
        '1' => [".#.", "##.", ".#.", ".#.", "###"],
        '2' => ["###", "..#", "###", "#..", "###"],
        '3' => ["###", "..#", ".##", "..#", "###"],
        '4' => ["#.#", "#.#", "###", "..#", "..#"],
        '5' => ["###", "#..", "###", "..#", "###"],
        '6' => ["###", "#..", "###", "#.#", "###"],
        '7' => ["###", "..#", ".#.", ".#.", ".#."],
        '8' => ["###", "#.#", "###", "#.#", "###"],
        '9' => ["###", "#.#", "###", "..#", "###"],
        'A' => [".#.", "#.#", "###", "#.#", "#.#"],
        'B' => ["##.", "#.#", "##.", "#.#", "##."],
        'C' => [".##", "#..", "#..", "#..", ".##"],
        'D' => ["##.", "#.#", "#.#", "#.#", "##."],
        'E' => ["###", "#..", "##.", "#..", "###"],
        'F' => ["###", "#..", "##.", "#..", "#.."],
        'G' => [".##", "#..", "#.#", "#.#", ".##"],
        'H' => ["#.#", "#.#", "###", "#.#", "#.#"],
        'I' => ["###", ".#.", ".#.", ".#.", "###"],
        'J' => ["..#", "..#", "..#", "#.#", ".#."],
        'K' => ["#.#", "#.#", "##.", "#.#", "#.#"],
        'L' => ["#..", "#..", "#..", "#..", "###"],
        'M' => ["#.#", "###", "###", "#.#", "#.#"],
        'N' => ["##.", "#.#", "#.#", "#.#", "#.#"],
        'O' => [".#.", "#.#", "#.#", "#.#", ".#."],
        'P' => ["##.", "#.#", "##.", "#..", "#.."],
        'Q' => [".#.", "#.#", "#.#", "##.", ".##"],
        'R' => ["##.", "#.#", "##.", "#.#", "#.#"],
        'S' => [".##", "#..", ".#.", "..#", "##."],
        'T' => ["###", ".#.", ".#.", ".#.", ".#."],
        'U' => ["#.#", "#.#", "#.#", "#.#", "###"],
        'V' => ["#.#", "#.#", "#.#", "#.#", ".#."],
        'W' => ["#.#", "#.#", "###", "###", "#.#"],
        'X' => ["#.#", "#.#", ".#.", "#.#", "#.#"],
        'Y' => ["#.#", "#.#", ".#.", ".#.", ".#."],
        'Z' => ["###", "..#", ".#.", "#..", "###"],
        '.' => ["...", "...", "...", "...", ".#."],
        '-' => ["...", "...", "###", "...", "..."],
        '_' => ["...", "...", "...", "...", "###"],
        ':' => ["...", ".#.", "...", ".#.", "..."],
        '/' => ["..#", "..#", ".#.", "#..", "#.."],
        '(' => [".#.", "#..", "#..", "#..", ".#."],
        ')' => [".#.", "..#", "..#", "..#", ".#."],
        '=' => ["...", "###", "...", "###", "..."],
        _ => ["...", "...", "...", "...", "..."],
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Series {
    pub label: String,
    /// `NaN` entries are gaps.
    pub points: Vec<(f64, f64)>,
}

impl Series {
    pub fn new(label: impl Into<String>, points: Vec<(f64, f64)>) -> Self {
        Self {
            label: label.into(),
            points,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Panel {
    pub title: String,
    pub series: Vec<Series>,
}

impl Panel {
    pub fn new(title: impl Into<String>, series: Vec<Series>) -> Self {
        Self {
            title: title.into(),
            series,
        }
    }
}

struct Canvas {
    w: usize,
    h: usize,
    rgb: Vec<u8>,
}

impl Canvas {
    fn new(w: usize, h: usize) -> Self {
        Self { w, h, rgb: vec![255; w * h * 3] }
    }

    fn put(&mut self, x: i64, y: i64, c: [u8; 3]) {
        if x >= 0 && y >= 0 && (x as usize) < self.w && (y as usize) < self.h {
            let i = (y as usize * self.w + x as usize) * 3;
            self.rgb[i..i + 3].copy_from_slice(&c);
        }
    }

    fn line(&mut self, (x0, y0): (f64, f64), (x1, y1): (f64, f64), c: [u8; 3]) {
        let steps = (x1 - x0).abs().max((y1 - y0).abs()).ceil().max(1.0) as usize;
        for s in 0..=steps {
            let f = s as f64 / steps as f64;
            self.put((x0 + f * (x1 - x0)).round() as i64, (y0 + f * (y1 - y0)).round() as i64, c);
        }
    }

    fn text(&mut self, x: usize, y: usize, s: &str, c: [u8; 3]) {
        for (i, ch) in s.chars().enumerate() {
            for (row, bits) in glyph(ch).iter().enumerate() {
                for (col, b) in bits.bytes().enumerate() {
                    if b == b'#' {
                        for dy in 0..SCALE {
                            for dx in 0..SCALE {
                                let px = x + (i * 4 + col) * SCALE + dx;
                                let py = y + row * SCALE + dy;
                                self.put(px as i64, py as i64, c);
                            }
                        }
                    }
                }
            }
        }
    }
}

fn fmt_tick(v: f64) -> String {
    if v.abs() >= 1000.0 {
        format!("{v:.0}")
    } else if v.abs() >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

fn bounds(values: impl Iterator<Item = f64>) -> Option<(f64, f64)> {
    let (lo, hi) = values
        .filter(|v| v.is_finite())
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    if !lo.is_finite() {
        return None;
    }
    let pad = if hi > lo { 0.05 * (hi - lo) } else { 0.5_f64.max(lo.abs() * 0.05) };
    Some((lo - pad, hi + pad))
}

/// Renders stacked panels sharing the x axis.
pub fn render(panels: &[Panel]) -> (usize, usize, Vec<u8>) {
    let h = PANEL_H * panels.len().max(1);
    let mut canvas = Canvas::new(PANEL_W, h);
    let all_x = panels.iter().flat_map(|p| p.series.iter().flat_map(|s| s.points.iter().map(|p| p.0)));
    let (x_lo, x_hi) = bounds(all_x).unwrap_or((0.0, 1.0));
    let axis = [90, 90, 90];
    for (k, panel) in panels.iter().enumerate() {
        let top = k * PANEL_H + MARGIN_T;
        let bottom = (k + 1) * PANEL_H - MARGIN_B;
        let (left, right) = (MARGIN_L, PANEL_W - MARGIN_R);
        canvas.text(left, k * PANEL_H + 6, &panel.title, [0, 0, 0]);
        let mut label_x = left + (panel.title.len() + 2) * 4 * SCALE;
        for (i, s) in panel.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            canvas.text(label_x, k * PANEL_H + 6, &s.label, c);
            label_x += (s.label.len() + 2) * 4 * SCALE;
        }
        for x in left..=right {
            canvas.put(x as i64, bottom as i64, axis);
        }
        for y in top..=bottom {
            canvas.put(left as i64, y as i64, axis);
        }
        let Some((y_lo, y_hi)) = bounds(panel.series.iter().flat_map(|s| s.points.iter().map(|p| p.1))) else {
            continue;
        };
        canvas.text(4, top, &fmt_tick(y_hi), axis);
        canvas.text(4, bottom - 5 * SCALE, &fmt_tick(y_lo), axis);
        let sx = |x: f64| left as f64 + (x - x_lo) / (x_hi - x_lo) * (right - left) as f64;
        let sy = |y: f64| bottom as f64 - (y - y_lo) / (y_hi - y_lo) * (bottom - top) as f64;
        for (i, s) in panel.series.iter().enumerate() {
            let c = PALETTE[i % PALETTE.len()];
            for w in s.points.windows(2) {
                let (a, b) = (w[0], w[1]);
                if a.1.is_finite() && b.1.is_finite() {
                    canvas.line((sx(a.0), sy(a.1)), (sx(b.0), sy(b.1)), c);
                }
            }
            if s.points.len() == 1 && s.points[0].1.is_finite() {
                canvas.put(sx(s.points[0].0) as i64, sy(s.points[0].1) as i64, c);
            }
        }
    }
    if let Some(last) = panels.len().checked_sub(1) {
        let y = (last + 1) * PANEL_H - MARGIN_B + 2;
        canvas.text(MARGIN_L, y, &fmt_tick(x_lo), axis);
        let hi = fmt_tick(x_hi);
        canvas.text(PANEL_W - MARGIN_R - hi.len() * 4 * SCALE, y, &hi, axis);
    }
    (PANEL_W, h, canvas.rgb)
}

pub fn write_plot(path: &Path, panels: &[Panel]) -> Result<()> {
    let (w, h, rgb) = render(panels);
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut enc = png::Encoder::new(BufWriter::new(file), w as u32, h as u32);
    enc.set_color(png::ColorType::Rgb);
    enc.set_depth(png::BitDepth::Eight);
    enc.write_header()?.write_image_data(&rgb)?;
    Ok(())
}
