//! Crafted maps on image-shaped data: a map is replaced by a solid rectangle
//! at its attribution-weighted centre, or by horizontal band averages. Also
//! shows how to plug in a custom [`Model`].
//!
//! cargo run --release --example crafted_maps

use rand::Rng;
use soco::metrics::{auc, completeness_curve, order_based_curve, CompletenessConfig, OrderConfig};
use soco::modify::{centroid, craft_pooling, craft_rect};
use soco::{AttributionMap, Dataset, Model, Sample, SeedStream, Shape};

const SIDE: usize = 16;

/// Class 1 when the 4x4 patch at rows 3..7, columns 9..13 is brighter than
/// the image average.
struct PatchModel;

impl Model for PatchModel {
    fn n_classes(&self) -> usize {
        2
    }

    fn predict_probs(&self, samples: &[Sample]) -> soco::Result<Vec<Vec<f64>>> {
        Ok(samples
            .iter()
            .map(|s| {
                let v = s.features();
                let patch: f64 = (3..7).flat_map(|r| (9..13).map(move |c| v[r * SIDE + c])).sum::<f64>() / 16.0;
                let mean = v.iter().sum::<f64>() / v.len() as f64;
                let z = 8.0 * (patch - mean);
                let p1 = 1.0 / (1.0 + (-z).exp());
                vec![1.0 - p1, p1]
            })
            .collect())
    }
}

fn main() -> soco::Result<()> {
    let shape = Shape::Grid { height: SIDE, width: SIDE, channels: 1 };
    let mut rng = SeedStream::new(3).named("images").rng();
    let samples: Vec<Sample> = (0..300)
        .map(|i| {
            let bright = rng.random_bool(0.5);
            let v = (0..SIDE * SIDE)
                .map(|p| {
                    let (r, c) = (p / SIDE, p % SIDE);
                    let inside = (3..7).contains(&r) && (9..13).contains(&c);
                    rng.random_range(0.0..0.6) + if inside && bright { 0.4 } else { 0.0 }
                })
                .collect();
            Sample::new(i, shape, v)
        })
        .collect::<soco::Result<_>>()?;
    let labels = PatchModel.predict_probs(&samples)?.iter().map(|p| soco::argmax(p)).collect();
    let ds = Dataset::new(samples, labels, 2)?;

    // a blurry map peaking on the patch, as a gradient method might give
    let base: Vec<AttributionMap> = ds
        .samples()
        .iter()
        .map(|_| {
            let v = (0..SIDE * SIDE)
                .map(|p| {
                    let (r, c) = ((p / SIDE) as f64, (p % SIDE) as f64);
                    (-((r - 4.5).powi(2) + (c - 10.5).powi(2)) / 10.0).exp() + rng.random_range(0.0..0.2)
                })
                .collect();
            Ok(AttributionMap::new(shape, v)?.normalize())
        })
        .collect::<soco::Result<_>>()?;
    let (cr, cc) = centroid(&base[0])?;
    println!("weighted centre of the first map: row {cr:.2}, column {cc:.2}");

    let rect: Vec<AttributionMap> = base.iter().map(|m| craft_rect(m, 4, 4)).collect::<soco::Result<_>>()?;
    let bands: Vec<AttributionMap> = base.iter().map(|m| craft_pooling(m, 4)).collect::<soco::Result<_>>()?;

    println!("\n{:<8}{:>14}{:>14}", "map", "deletion AUC", "complete. AUC");
    for (label, maps) in [("base", &base), ("rect", &rect), ("bands", &bands)] {
        let del = order_based_curve(&PatchModel, &ds, maps, &OrderConfig::deletion())?;
        let comp = completeness_curve(&PatchModel, &ds, maps, &CompletenessConfig::default())?;
        println!("{label:<8}{:>14.3}{:>14.3}", auc(&del)?, auc(&comp)?);
    }
    println!("\nlower deletion AUC and higher completeness AUC mean the map hits what the model uses");
    Ok(())
}
