//! Property tests of the invariants that hold for every input.

use proptest::prelude::*;

use soco::analysis::{aggregate_trials, hausdorff, min_pairwise_hausdorff};
use soco::metrics::{order_based_curve, soundness_curve, OrderConfig, SoundnessConfig};
use soco::modify::{craft_pooling, modify_constant, modify_partial, modify_random, synth_remove, Direction};
use soco::perturb::Imputer;
use soco::synthetic::{generate_synthetic, ground_truth_maps, oracle_infos, LinearStepModel, SyntheticSpec};
use soco::{accuracy, normalize_attribution, AttributionMap, Dataset, EvalCurve, Exec, MetricKind, SeedStream, Shape, XAxis};

fn raw_values() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(prop_oneof![Just(0.0), -1.0..3.0f64], 1..40)
}

fn normalized_map() -> impl Strategy<Value = AttributionMap> {
    raw_values().prop_map(|v| normalize_attribution(Shape::Flat(v.len()), &v).unwrap())
}

fn dataset(n: usize, d: usize, seed: u64) -> Dataset {
    generate_synthetic(&SyntheticSpec { n_samples: n, n_features: d, seed }).unwrap()
}

fn curve(points: Vec<(f64, f64)>) -> EvalCurve {
    let mut pts = points;
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    pts.dedup_by(|a, b| a.0 == b.0);
    EvalCurve::new(MetricKind::Deletion, XAxis::RemovedFraction, pts).unwrap()
}

fn curve_strategy() -> impl Strategy<Value = EvalCurve> {
    prop::collection::vec((0.0..1.0f64, -1.0..1.0f64), 1..8).prop_map(curve)
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 256, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn normalize_is_idempotent(raw in raw_values()) {
        let once = normalize_attribution(Shape::Flat(raw.len()), &raw).unwrap();
        let twice = normalize_attribution(Shape::Flat(raw.len()), once.values()).unwrap();
        prop_assert_eq!(once.values(), twice.values());
    }

    #[test]
    fn normalize_keeps_the_order_of_positive_entries(raw in raw_values()) {
        let m = normalize_attribution(Shape::Flat(raw.len()), &raw).unwrap();
        for i in 0..raw.len() {
            for j in 0..raw.len() {
                if raw[i] > 0.0 && raw[j] > 0.0 && raw[i] < raw[j] {
                    prop_assert!(m.values()[i] <= m.values()[j]);
                }
            }
        }
        prop_assert!(m.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn accuracy_ignores_sample_order(seed in any::<u64>(), rot in 0usize..30) {
        let ds = dataset(30, 5, seed);
        let mut samples = ds.samples().to_vec();
        let mut labels: Vec<usize> = ds.labels().iter().map(|&y| 1 - y).collect();
        labels[0] = ds.labels()[0];
        let before = accuracy(&LinearStepModel, &samples, &labels).unwrap();
        samples.rotate_left(rot);
        labels.rotate_left(rot);
        prop_assert_eq!(before, accuracy(&LinearStepModel, &samples, &labels).unwrap());
    }

    #[test]
    fn ground_truth_agrees_with_the_oracle(seed in any::<u64>()) {
        let ds = dataset(20, 12, seed);
        let maps = ground_truth_maps(&ds).unwrap();
        for (m, info) in maps.iter().zip(oracle_infos(&ds).unwrap()) {
            prop_assert_eq!(m.support().collect::<Vec<_>>(), info.predictive_set().collect::<Vec<_>>());
            prop_assert_eq!(info.soundness(m), 1.0);
            prop_assert_eq!(info.completeness(m), 1.0);
        }
    }

    #[test]
    fn constant_shift_keeps_inner_order(m in normalized_map(), delta in 0.0..1.0f64, up in any::<bool>()) {
        let dir = if up { Direction::Introduce } else { Direction::Remove };
        let out = modify_constant(&m, delta, dir).unwrap();
        let (a, b) = (m.values(), out.values());
        for i in 0..a.len() {
            prop_assert!((0.0..=1.0).contains(&b[i]));
            let moved_right_way = if up { b[i] >= a[i] } else { b[i] <= a[i] };
            prop_assert!(moved_right_way);
            for j in 0..a.len() {
                let inner = |v: f64| v > 0.0 && v < 1.0;
                if inner(b[i]) && inner(b[j]) && a[i] < a[j] {
                    prop_assert!(b[i] < b[j]);
                }
            }
        }
    }

    #[test]
    fn random_shift_respects_direction(m in normalized_map(), hi in 0.0..0.6f64, seed in any::<u64>()) {
        let down = modify_random(&m, -hi, 0.0, SeedStream::new(seed)).unwrap();
        let up = modify_random(&m, 0.0, hi, SeedStream::new(seed)).unwrap();
        for i in 0..m.len() {
            prop_assert!(down.values()[i] <= m.values()[i]);
            prop_assert!(up.values()[i] >= m.values()[i]);
            prop_assert!((0.0..=1.0).contains(&up.values()[i]));
        }
    }

    #[test]
    fn partial_schemes_respect_direction(m in normalized_map()) {
        prop_assume!(m.len() >= 5);
        let removed = modify_partial(&m, Direction::Remove).unwrap();
        let raised = modify_partial(&m, Direction::Introduce).unwrap();
        for i in 0..m.len() {
            prop_assert!(removed.values()[i] <= m.values()[i]);
            prop_assert!(raised.values()[i] >= m.values()[i]);
        }
    }

    #[test]
    fn synth_remove_only_shrinks_the_support(m in normalized_map(), fraction in 0.0..0.9f64, seed in any::<u64>()) {
        let support: Vec<usize> = m.support().collect();
        let k = (fraction * support.len() as f64).round() as usize;
        prop_assume!(k < support.len());
        let out = synth_remove(&m, fraction, SeedStream::new(seed)).unwrap();
        prop_assert!(out.support().all(|i| support.contains(&i)));
        prop_assert!(out.values().iter().all(|&v| (0.0..=1.0).contains(&v)));
    }

    #[test]
    fn pooling_is_idempotent(h in 1usize..12, w in 1usize..6, bands in 1usize..12, vals in prop::collection::vec(0.0..1.0f64, 72)) {
        prop_assume!(bands <= h);
        let shape = Shape::Grid { height: h, width: w, channels: 1 };
        let m = AttributionMap::new(shape, vals[..h * w].to_vec()).unwrap();
        let once = craft_pooling(&m, bands).unwrap();
        let twice = craft_pooling(&once, bands).unwrap();
        for (a, b) in once.values().iter().zip(twice.values()) {
            prop_assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn hausdorff_minimum_is_a_lower_bound(curves in prop::collection::vec(curve_strategy(), 2..5)) {
        let labelled: Vec<(String, EvalCurve)> = curves.iter().enumerate().map(|(i, c)| (i.to_string(), c.clone())).collect();
        let min = min_pairwise_hausdorff(&labelled).unwrap().distance;
        for i in 0..curves.len() {
            for j in i + 1..curves.len() {
                prop_assert!(min <= hausdorff(&curves[i], &curves[j]).unwrap());
            }
        }
    }

    #[test]
    fn aggregation_ignores_trial_order(curves in prop::collection::vec(curve_strategy(), 1..6), rot in 0usize..6) {
        let grid: Vec<f64> = (0..=10).map(|k| k as f64 / 10.0).collect();
        let a = aggregate_trials(&curves, &grid).unwrap();
        let mut shuffled = curves.clone();
        let n = shuffled.len();
        shuffled.rotate_left(rot % n);
        shuffled.reverse();
        let b = aggregate_trials(&shuffled, &grid).unwrap();
        prop_assert_eq!(&a.count, &b.count);
        for (x, y) in a.mean.iter().zip(&b.mean) {
            match (x, y) {
                (Some(x), Some(y)) => prop_assert!((x - y).abs() < 1e-12),
                (None, None) => {}
                _ => prop_assert!(false, "coverage differs"),
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 32, failure_persistence: None, ..ProptestConfig::default() })]

    #[test]
    fn order_curves_depend_on_ranks_only(seed in any::<u64>(), power in 0.2..5.0f64) {
        let ds = dataset(60, 10, seed);
        let maps = ground_truth_maps(&ds).unwrap();
        let warped: Vec<AttributionMap> = maps
            .iter()
            .map(|m| {
                let v: Vec<f64> = m.values().iter().map(|x| x.powf(power)).collect();
                normalize_attribution(m.shape(), &v).unwrap()
            })
            .collect();
        for cfg in [OrderConfig::deletion(), OrderConfig::insertion(), OrderConfig::road(ds.shape())] {
            let a = order_based_curve(&LinearStepModel, &ds, &maps, &cfg).unwrap();
            let b = order_based_curve(&LinearStepModel, &ds, &warped, &cfg).unwrap();
            prop_assert_eq!(a.points(), b.points());
        }
    }

    #[test]
    fn soundness_stays_in_the_unit_interval(seed in any::<u64>(), noise in prop::collection::vec(0.0..1.0f64, 60 * 8)) {
        let ds = dataset(60, 8, seed);
        let maps: Vec<AttributionMap> = noise.chunks(8).map(|c| AttributionMap::new(Shape::Flat(8), c.to_vec()).unwrap().normalize()).collect();
        let cfg = SoundnessConfig { imputer: Some(Imputer::zero()), halt_fraction: None, exec: Exec::new(1, 16), ..SoundnessConfig::default() };
        let rep = soundness_curve(&LinearStepModel, &ds, &maps, &cfg).unwrap();
        prop_assert!(rep.curve.ys().all(|q| (0.0..=1.0).contains(&q)));
        prop_assert!(rep.trace.iter().filter_map(|s| s.mean_share).all(|q| (0.0..=1.0).contains(&q)));
    }
}

#[test]
fn classes_are_balanced_on_large_datasets() {
    for seed in 0..5 {
        let ds = dataset(1000, 50, seed);
        let ones = ds.labels().iter().filter(|&&y| y == 1).count() as f64 / 1000.0;
        assert!((0.4..=0.6).contains(&ones), "seed {seed}: {ones}");
    }
}
