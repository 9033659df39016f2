//! File formats and the experiment runner's reproducibility guarantees.

use proptest::prelude::*;

use soco::io::{
    decode_dataset, decode_maps, encode_dataset, encode_maps, read_dataset, read_maps_for, read_plot_json,
    run_experiment, write_dataset, write_maps, ExperimentConfig, MapFile,
};
use soco::synthetic::{generate_synthetic, ground_truth_maps, SyntheticSpec};
use soco::{AttributionMap, Dataset, Error, FormatError, Sample, Shape};

fn grid_data(values: &[f64]) -> Dataset {
    let shape = Shape::Grid { height: 2, width: 2, channels: 1 };
    let samples = values.chunks(4).enumerate().map(|(i, c)| Sample::new(100 + i as u64, shape, c.to_vec()).unwrap()).collect::<Vec<_>>();
    let labels = (0..samples.len()).map(|i| i % 3).collect();
    Dataset::new(samples, labels, 3).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 128, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn datasets_round_trip_bit_exactly(values in prop::collection::vec(prop_oneof![-1e6..1e6f64, Just(0.5), Just(-0.0)], 4..40)) {
        let n = values.len() / 4 * 4;
        prop_assume!(n > 0);
        let ds = grid_data(&values[..n]);
        let back = decode_dataset(&encode_dataset(&ds)).unwrap();
        prop_assert_eq!(back.labels(), ds.labels());
        for (a, b) in back.samples().iter().zip(ds.samples()) {
            prop_assert_eq!(a.id(), b.id());
            prop_assert_eq!(a.shape(), b.shape());
            let bits = |s: &Sample| s.features().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            prop_assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn maps_round_trip_bit_exactly(values in prop::collection::vec(0.0..1.0f64, 8..40)) {
        let n = values.len() / 4 * 4;
        let ds = grid_data(&values[..n]);
        let maps: Vec<AttributionMap> = values[..n].chunks(4).map(|c| AttributionMap::new(Shape::Grid { height: 2, width: 2, channels: 1 }, c.to_vec()).unwrap()).collect();
        let file = MapFile::new(&ds, maps).unwrap();
        let back = decode_maps(&encode_maps(&file).unwrap()).unwrap();
        prop_assert_eq!(&back, &file);
    }
}

#[test]
fn files_round_trip_in_both_encodings() {
    let dir = tempfile::tempdir().unwrap();
    let ds = generate_synthetic(&SyntheticSpec { n_samples: 25, n_features: 7, seed: 3 }).unwrap();
    let maps = ground_truth_maps(&ds).unwrap();
    for ext in ["soco", "json"] {
        let data = dir.path().join(format!("d.{ext}"));
        let m = dir.path().join(format!("m.{ext}"));
        write_dataset(&ds, &data).unwrap();
        write_maps(&ds, &maps, &m).unwrap();
        let back = read_dataset(&data).unwrap();
        assert_eq!(back, ds, "{ext}");
        assert_eq!(read_maps_for(&m, &back).unwrap(), maps, "{ext}");
    }
}

#[test]
fn damaged_containers_are_rejected() {
    let ds = generate_synthetic(&SyntheticSpec { n_samples: 4, n_features: 3, seed: 0 }).unwrap();
    let bytes = encode_dataset(&ds);

    let err = decode_dataset(&bytes[..bytes.len() - 3]).unwrap_err();
    assert!(matches!(err, Error::Format(FormatError::Truncated { .. })), "{err}");

    let mut bad = bytes.clone();
    bad[0] = b'X';
    assert!(matches!(decode_dataset(&bad).unwrap_err(), Error::Format(FormatError::BadMagic(_))));

    let mut newer = bytes.clone();
    newer[4] = 9;
    assert!(matches!(decode_dataset(&newer).unwrap_err(), Error::Format(FormatError::VersionMismatch { found: 9, .. })));

    let maps = encode_maps(&MapFile::new(&ds, ground_truth_maps(&ds).unwrap()).unwrap()).unwrap();
    assert!(matches!(decode_dataset(&maps).unwrap_err(), Error::Format(FormatError::WrongKind(2))));
}

#[test]
fn maps_written_for_another_dataset_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    let a = generate_synthetic(&SyntheticSpec { n_samples: 6, n_features: 3, seed: 1 }).unwrap();
    let b = generate_synthetic(&SyntheticSpec { n_samples: 6, n_features: 3, seed: 2 }).unwrap();
    let path = dir.path().join("m.soco");
    write_maps(&a, &ground_truth_maps(&a).unwrap(), &path).unwrap();
    let err = read_maps_for(&path, &b).unwrap_err();
    assert!(matches!(err, Error::Format(FormatError::Misaligned(_))), "{err}");
}

fn config(dir: &std::path::Path, metrics: &str, seed: u64) -> ExperimentConfig {
    let text = format!(
        r#"{{"seed": {seed}, "dataset": {{"synthetic": {{"n_samples": 150, "n_features": 16}}}}, "model": "linear_step",
            "variants": [{{"label": "rm", "scheme": {{"kind": "synth_remove", "fraction": 0.5}}}}],
            "metrics": {metrics}, "output_dir": {:?}, "format": "json"}}"#,
        dir
    );
    ExperimentConfig::from_json(&text).unwrap()
}

#[test]
fn adding_a_metric_leaves_other_metrics_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let only = config(&a, r#"{"completeness": {}, "road": {}}"#, 7);
    let more = config(&b, r#"{"soundness": {}, "completeness": {}, "road": {}, "insertion": {}}"#, 7);
    run_experiment(&only).unwrap();
    run_experiment(&more).unwrap();
    for name in ["original_completeness.json", "rm_completeness.json", "original_road.json", "rm_road.json"] {
        let (x, y) = (read_plot_json(&a.join(name)).unwrap(), read_plot_json(&b.join(name)).unwrap());
        assert_eq!((&x.x, &x.y), (&y.x, &y.y), "{name}");
        assert_ne!(x.config_digest, y.config_digest);
    }
}

#[test]
fn every_output_embeds_the_config_digest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(dir.path(), r#"{"deletion": {}, "completeness": {}}"#, 1);
    let manifest = run_experiment(&cfg).unwrap();
    assert_eq!(manifest.config_digest, cfg.digest());
    for o in &manifest.outputs {
        assert_eq!(read_plot_json(&dir.path().join(&o.path)).unwrap().config_digest, cfg.digest());
    }
    assert_ne!(config(dir.path(), r#"{"deletion": {}, "completeness": {}}"#, 2).digest(), cfg.digest());
}
