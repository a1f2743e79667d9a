//! Dataset generation, training and evaluation end to end on small data.

use tactile_hand::posenet::{
    collect_dataset, dataset_loss, evaluate, read_dataset, train, write_dataset, CollectOptions, NetworkConfig,
    MANIFEST_FILE,
};
use tactile_hand::tactile_sim::{PoseRanges, SensorConfig};

fn sensor() -> SensorConfig {
    SensorConfig::default()
}

#[test]
fn same_seed_gives_identical_manifests_and_images() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let opts = CollectOptions::default();
    write_dataset(a.path(), &collect_dataset(12, 42, &sensor(), &opts).unwrap()).unwrap();
    write_dataset(b.path(), &collect_dataset(12, 42, &sensor(), &opts).unwrap()).unwrap();
    let ma = std::fs::read(a.path().join(MANIFEST_FILE)).unwrap();
    assert_eq!(ma, std::fs::read(b.path().join(MANIFEST_FILE)).unwrap());
    assert_eq!(String::from_utf8(ma).unwrap().lines().count(), 12);
    assert_eq!(read_dataset(a.path()).unwrap(), read_dataset(b.path()).unwrap());
}

#[test]
fn dataset_survives_a_disk_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let samples = collect_dataset(6, 3, &sensor(), &CollectOptions::default()).unwrap();
    write_dataset(dir.path(), &samples).unwrap();
    assert_eq!(read_dataset(dir.path()).unwrap(), samples);
}

#[test]
fn label_means_sit_near_range_midpoints() {
    let samples = collect_dataset(1000, 8, &sensor(), &CollectOptions::default()).unwrap();
    let ranges = PoseRanges::default();
    for (k, r) in ranges.as_array().iter().enumerate() {
        let mean = samples
            .iter()
            .map(|s| [s.label.x, s.label.z, s.label.phi, s.label.psi, s.label.theta][k])
            .sum::<f64>()
            / 1000.0;
        // Standard error of the mean is width / sqrt(12 * 1000) ~ 0.009 width.
        assert!((mean - r.mid()).abs() < 0.05 * r.width(), "component {k}: mean {mean}");
    }
    assert!(samples.iter().all(|s| ranges.contains(&s.label)));
}

#[test]
fn desk_network_memorizes_fifty_samples() {
    let samples = collect_dataset(50, 11, &sensor(), &CollectOptions::default()).unwrap();
    let cfg = NetworkConfig {
        epochs: 200,
        ..NetworkConfig::desk()
    };
    let (net, log) = train(&samples, &[], &cfg, PoseRanges::default()).unwrap();
    let (mse, _) = dataset_loss(&net, &samples);
    assert!(mse < 0.01, "training MSE {mse} (selected epoch {})", log.selected_epoch);
    // Inference is a pure function of (model, image).
    let img = samples[0].image();
    assert_eq!(net.predict(&img).unwrap(), net.predict(&img).unwrap());
    assert_eq!(evaluate(&net, &samples).unwrap().n_test, 50);
}

#[test]
fn training_loss_falls_over_the_run() {
    let mut first = 0.0;
    let mut last = 0.0;
    for seed in 1..=3 {
        let samples = collect_dataset(160, 100 + seed, &sensor(), &CollectOptions::default()).unwrap();
        let cfg = NetworkConfig {
            epochs: 5,
            seed,
            ..NetworkConfig::desk()
        };
        let (_, log) = train(&samples, &[], &cfg, PoseRanges::default()).unwrap();
        first += log.epochs[0].train_loss / 3.0;
        last += log.epochs.last().unwrap().train_loss / 3.0;
    }
    assert!(last <= first, "mean loss epoch 1 {first}, epoch 5 {last}");
}
