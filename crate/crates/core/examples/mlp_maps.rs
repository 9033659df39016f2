//! Scoring your own attribution maps for an MLP: occlusion maps against random
//! maps, on every metric. The data and maps are also written to disk so the
//! command-line tool can re-evaluate them.
//!
//! cargo run --release --example mlp_maps -- [output_dir]

use std::path::PathBuf;

use rand::Rng;
use soco::io::{write_dataset, write_maps};
use soco::metrics::{auc, completeness_curve, order_based_curve, soundness_curve, CompletenessConfig, OrderConfig, SoundnessConfig};
use soco::models::{MlpModel, MlpWeights};
use soco::synthetic::{generate_synthetic, SyntheticSpec};
use soco::{argmax, AttributionMap, Dataset, Model, SeedStream};

const D: usize = 8;

/// Two hidden units that fire on the first and on the last four features.
fn weights() -> soco::Result<MlpWeights> {
    let hidden: Vec<Vec<f64>> = vec![
        (0..D).map(|j| if j < 4 { 1.0 } else { 0.0 }).collect(),
        (0..D).map(|j| if j >= 4 { 0.5 } else { 0.0 }).collect(),
    ];
    let json = serde_json::json!({
        "layers": [
            {"weights": hidden, "bias": [0.0, 0.0], "activation": "relu"},
            {"weights": [[-2.0, -1.0], [2.0, 1.0]], "bias": [0.5, -0.5], "activation": "identity"}
        ]
    });
    MlpWeights::from_json(&json.to_string())
}

/// Drop in the predicted class probability when a feature is set to zero.
fn occlusion(model: &dyn Model, ds: &Dataset) -> soco::Result<Vec<AttributionMap>> {
    ds.samples()
        .iter()
        .map(|x| {
            let base = model.predict_probs(std::slice::from_ref(x))?.remove(0);
            let class = argmax(&base);
            let occluded = (0..x.len())
                .map(|j| {
                    let mut f = x.features().to_vec();
                    f[j] = 0.0;
                    x.with_features(f)
                })
                .collect::<soco::Result<Vec<_>>>()?;
            let probs = model.predict_probs(&occluded)?;
            let raw: Vec<f64> = probs.iter().map(|p| base[class] - p[class]).collect();
            soco::normalize_attribution(x.shape(), &raw)
        })
        .collect()
}

fn main() -> soco::Result<()> {
    let model = MlpModel::new(weights()?)?;
    let data = generate_synthetic(&SyntheticSpec { n_samples: 600, n_features: D, seed: 5 })?;
    // relabel with the model so clean accuracy is 1
    let labels = model.predict_probs(data.samples())?.iter().map(|p| argmax(p)).collect();
    let ds = Dataset::new(data.samples().to_vec(), labels, 2)?;

    let occ = occlusion(&model, &ds)?;
    let mut rng = SeedStream::new(8).named("random maps").rng();
    let random: Vec<AttributionMap> = ds
        .samples()
        .iter()
        .map(|x| AttributionMap::new(x.shape(), (0..D).map(|_| rng.random::<f64>()).collect()).map(|m| m.normalize()))
        .collect::<soco::Result<_>>()?;

    println!("{:<10}{:>11}{:>11}{:>11}{:>11}", "maps", "deletion", "insertion", "road", "complete.");
    for (label, maps) in [("occlusion", &occ), ("random", &random)] {
        let d = auc(&order_based_curve(&model, &ds, maps, &OrderConfig::deletion())?)?;
        let i = auc(&order_based_curve(&model, &ds, maps, &OrderConfig::insertion())?)?;
        let r = auc(&order_based_curve(&model, &ds, maps, &OrderConfig::road(ds.shape()))?)?;
        let c = auc(&completeness_curve(&model, &ds, maps, &CompletenessConfig::default())?)?;
        println!("{label:<10}{d:>11.3}{i:>11.3}{r:>11.3}{c:>11.3}");
        let s = soundness_curve(&model, &ds, maps, &SoundnessConfig::default())?;
        let pts: Vec<String> = s.curve.points().iter().map(|p| format!("({:.2}, {:.2})", p.x, p.y)).collect();
        println!("{:<10}soundness {}", "", pts.join(" "));
    }

    let dir = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "target/soco-example-mlp".into()));
    std::fs::create_dir_all(&dir).map_err(|e| soco::Error::io(&dir, e))?;
    write_dataset(&ds, &dir.join("data.soco"))?;
    write_maps(&ds, &occ, &dir.join("occlusion.soco"))?;
    std::fs::write(dir.join("mlp.json"), serde_json::to_string_pretty(model.weights()).expect("weights serialize"))
        .map_err(|e| soco::Error::io(&dir, e))?;
    println!(
        "\nre-run from the shell:\n  soco eval --metric deletion --data {0}/data.soco --maps {0}/occlusion.soco --mlp {0}/mlp.json --out {0}/deletion.json",
        dir.display()
    );
    Ok(())
}
