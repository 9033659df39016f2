//! Shifting every attribution value by a constant barely moves the feature
//! ranking, so deletion and ROAD curves hardly change, while soundness and
//! completeness react to the values themselves.
//!
//! cargo run --release --example order_blindness

use soco::analysis::min_pairwise_hausdorff;
use soco::metrics::{auc, completeness_curve, order_based_curve, soundness_curve, CompletenessConfig, OrderConfig, SoundnessConfig};
use soco::modify::{modify_constant, Direction};
use soco::perturb::{Imputer, ImputerKind, NoiseScale};
use soco::synthetic::{generate_synthetic, ground_truth_maps, LinearStepModel, SyntheticSpec};
use soco::{AttributionMap, Dataset, EvalCurve, MetricKind};

fn curve(kind: MetricKind, ds: &Dataset, maps: &[AttributionMap]) -> soco::Result<EvalCurve> {
    let imputer = Some(Imputer::new(ImputerKind::Mean, NoiseScale::Std(1.0)));
    match kind {
        MetricKind::Deletion => order_based_curve(&LinearStepModel, ds, maps, &OrderConfig::deletion()),
        MetricKind::Insertion => order_based_curve(&LinearStepModel, ds, maps, &OrderConfig::insertion()),
        MetricKind::Road => order_based_curve(&LinearStepModel, ds, maps, &OrderConfig::road(ds.shape())),
        MetricKind::Soundness => {
            Ok(soundness_curve(&LinearStepModel, ds, maps, &SoundnessConfig { imputer, ..SoundnessConfig::default() })?.curve)
        }
        MetricKind::Completeness => {
            completeness_curve(&LinearStepModel, ds, maps, &CompletenessConfig { imputer, ..CompletenessConfig::default() })
        }
    }
}

fn main() -> soco::Result<()> {
    let ds = generate_synthetic(&SyntheticSpec::default())?;
    let gt = ground_truth_maps(&ds)?;
    let shift = |dir| gt.iter().map(|m| modify_constant(m, 0.6, dir)).collect::<soco::Result<Vec<_>>>();
    let sets = [("original", gt.clone()), ("remove", shift(Direction::Remove)?), ("introduce", shift(Direction::Introduce)?)];

    println!("{:<13}{:>10}{:>10}{:>10}   min pairwise Hausdorff", "metric", "original", "remove", "introduce");
    for kind in [MetricKind::Deletion, MetricKind::Insertion, MetricKind::Road, MetricKind::Soundness, MetricKind::Completeness] {
        let curves: Vec<(String, EvalCurve)> =
            sets.iter().map(|(l, maps)| Ok((l.to_string(), curve(kind, &ds, maps)?))).collect::<soco::Result<_>>()?;
        print!("{:<13}", kind.name());
        for (_, c) in &curves {
            match auc(c) {
                Ok(a) => print!("{a:>10.3}"),
                Err(_) => print!("{:>10}", "-"),
            }
        }
        let best = min_pairwise_hausdorff(&curves)?;
        println!("   {:.4} ({} vs {})", best.distance, best.first, best.second);
    }
    println!("\ncolumns show the area under each curve divided by its x span");
    Ok(())
}
