//! Sensor simulation through the image pipeline.

use std::collections::VecDeque;

use proptest::prelude::*;
use tactile_hand::imaging::{
    adaptive_threshold, deformation, process_frame, rms_intensity_change, ssim, subsample_crop, Stage, TactileImage,
    DEFAULT_THRESHOLD_WINDOW,
};
use tactile_hand::seed::{self, Stream};
use tactile_hand::tactile_sim::{
    deform_pins, synthesize_contact, EdgePose, MembraneParams, PoseRanges, SensorConfig, ShearPerturbation, PIN_COUNT,
};

fn noise_free() -> SensorConfig {
    SensorConfig::default().noise_free()
}

fn processed(pose: EdgePose, sensor: &SensorConfig, noise_seed: u64) -> TactileImage {
    let raw = synthesize_contact(&pose, &ShearPerturbation::NONE, sensor, noise_seed).unwrap();
    subsample_crop(&raw).unwrap()
}

/// 4-connected components of pixels equal to 1.
fn count_components(img: &TactileImage) -> usize {
    let (w, h) = img.dims();
    let mut seen = vec![false; w * h];
    let mut count = 0;
    for start in 0..w * h {
        if seen[start] || img.pixels()[start] != 1.0 {
            continue;
        }
        count += 1;
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            let (x, y) = (i % w, i / w);
            let mut visit = |j: usize| {
                if !seen[j] && img.pixels()[j] == 1.0 {
                    seen[j] = true;
                    queue.push_back(j);
                }
            };
            if x > 0 {
                visit(i - 1);
            }
            if x + 1 < w {
                visit(i + 1);
            }
            if y > 0 {
                visit(i - w);
            }
            if y + 1 < h {
                visit(i + w);
            }
        }
    }
    count
}

#[test]
fn thresholded_rest_render_has_one_component_per_pin() {
    let rest = noise_free().rest_image().unwrap();
    let binary = adaptive_threshold(&rest, DEFAULT_THRESHOLD_WINDOW, 0.0).unwrap();
    assert_eq!(count_components(&binary), PIN_COUNT);
}

#[test]
fn total_displacement_is_non_decreasing_in_depth() {
    let sensor = noise_free();
    let field = sensor.rest_field().unwrap();
    let params = MembraneParams::default();
    for (x, phi, psi, theta) in [(0.0, 0.0, 0.0, 0.0), (2.5, 3.0, -6.0, 30.0), (-4.0, -5.0, 10.0, -45.0)] {
        let mut previous = 0.0;
        for k in 0..=6 {
            let pose = EdgePose::new(x, 0.5 * k as f64, phi, psi, theta);
            let d = deform_pins(&field, &pose, &ShearPerturbation::NONE, &params).unwrap();
            // Per-pin 3D displacement: in-plane shift plus lift off the rest plane.
            let total: f64 = d
                .field
                .displacements()
                .zip(&d.field.lift)
                .map(|(v, l)| (v.x * v.x + v.y * v.y + l * l).sqrt())
                .sum();
            assert!(total >= previous, "x {x}: z {} total {total} < {previous}", 0.5 * k as f64);
            previous = total;
        }
    }
}

#[test]
fn deeper_contact_reads_as_larger_deformation() {
    let sensor = noise_free();
    let reference = processed(EdgePose::default(), &sensor, 0);
    let shallow = deformation(&processed(EdgePose::new(0.0, 0.5, 0.0, 0.0, 0.0), &sensor, 0), &reference).unwrap();
    let deep = deformation(&processed(EdgePose::new(0.0, 2.5, 0.0, 0.0, 0.0), &sensor, 0), &reference).unwrap();
    assert!(deep.value() > shallow.value(), "{deep:?} vs {shallow:?}");
}

#[test]
fn deformation_is_mostly_monotone_along_a_ramp() {
    let sensor = noise_free();
    let reference = processed(EdgePose::default(), &sensor, 0);
    let e: Vec<f64> = (0..=30)
        .map(|k| {
            let img = processed(EdgePose::new(0.0, 0.1 * k as f64, 0.0, 0.0, 0.0), &sensor, 0);
            deformation(&img, &reference).unwrap().value()
        })
        .collect();
    let rising = e.windows(2).filter(|w| w[1] >= w[0]).count();
    assert!(rising >= 28, "{rising}/30 non-decreasing steps: {e:?}");
}

#[test]
fn rms_change_saturates_with_depth() {
    let sensor = noise_free();
    let reference = processed(EdgePose::default(), &sensor, 0);
    let rms = |z: f64| rms_intensity_change(&processed(EdgePose::new(0.0, z, 0.0, 0.0, 0.0), &sensor, 0), &reference).unwrap();
    let low = rms(1.0) - rms(0.0);
    let high = rms(3.0) - rms(2.0);
    assert!(high < low, "slope over [2,3] {high} vs [0,1] {low}");
}

#[test]
fn label_draws_stay_in_range() {
    let ranges = PoseRanges::default();
    let mut lo = [f64::INFINITY; 5];
    let mut hi = [f64::NEG_INFINITY; 5];
    for i in 0..10_000 {
        let p = ranges.sample(&mut seed::rng(5, Stream::Labels, i));
        for (k, v) in [p.x, p.z, p.phi, p.psi, p.theta].into_iter().enumerate() {
            lo[k] = lo[k].min(v);
            hi[k] = hi[k].max(v);
        }
    }
    for (k, r) in ranges.as_array().iter().enumerate() {
        assert!(lo[k] >= r.lo && hi[k] <= r.hi, "component {k}: [{}, {}]", lo[k], hi[k]);
        // 10,000 uniform draws come within 1% of both ends.
        assert!(lo[k] < r.lo + 0.01 * r.width() && hi[k] > r.hi - 0.01 * r.width());
    }
}

#[test]
fn pipeline_is_deterministic() {
    let sensor = SensorConfig::default();
    let pose = EdgePose::new(1.0, 1.2, 2.0, -3.0, 20.0);
    let a = synthesize_contact(&pose, &ShearPerturbation::NONE, &sensor, 9).unwrap();
    let b = synthesize_contact(&pose, &ShearPerturbation::NONE, &sensor, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(process_frame(&a, 39, 0.0).unwrap(), process_frame(&b, 39, 0.0).unwrap());
}

fn random_processed_pair(seed_a: u64, seed_b: u64) -> (TactileImage, TactileImage) {
    use rand::Rng;
    let mut ra = seed::rng(seed_a, Stream::PixelNoise, 0);
    let mut rb = seed::rng(seed_b, Stream::PixelNoise, 1);
    let a = TactileImage::from_fn(240, 135, Stage::Processed, |_, _| ra.random()).unwrap();
    let b = TactileImage::from_fn(240, 135, Stage::Processed, |_, _| rb.random()).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn ssim_identity_symmetry_and_range(sa in any::<u64>(), sb in any::<u64>()) {
        let (a, b) = random_processed_pair(sa, sb);
        let ab = ssim(&a, &b).unwrap();
        prop_assert!((-1.0..=1.0).contains(&ab));
        prop_assert!((ab - ssim(&b, &a).unwrap()).abs() <= 1e-12);
        prop_assert_eq!(ssim(&a, &a).unwrap(), 1.0);
        let e = deformation(&a, &b).unwrap().value();
        prop_assert!((0.0..=2.0).contains(&e));
    }
}
