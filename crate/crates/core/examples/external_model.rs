//! Evaluating a model that lives in another process. The child reads one JSON
//! request per line on stdin and answers with class probabilities on stdout:
//!
//!   -> {"id": 7, "inputs": [[0.1, 0.2, ...], ...]}
//!   <- {"id": 7, "probs": [[0.3, 0.7], ...]}
//!
//! Without arguments a small Python model is started; otherwise the
//! arguments are the command to run, e.g.
//!
//! cargo run --example external_model -- target/debug/soco model-server

use soco::metrics::{auc, order_based_curve, OrderConfig};
use soco::models::{ExternalModel, ExternalModelSpec};
use soco::synthetic::{generate_synthetic, ground_truth_maps, SyntheticSpec};
use soco::accuracy;

const PYTHON_MODEL: &str = r#"
import json, math, sys
for line in sys.stdin:
    req = json.loads(line)
    probs = []
    for x in req["inputs"]:
        p = 1.0 / (1.0 + math.exp(-4.0 * sum(x)))
        probs.append([1.0 - p, p])
    sys.stdout.write(json.dumps({"id": req["id"], "probs": probs}) + "\n")
    sys.stdout.flush()
"#;

fn main() -> soco::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let command = if args.is_empty() { vec!["python3".into(), "-c".into(), PYTHON_MODEL.into()] } else { args };
    let mut spec = ExternalModelSpec::new(command, 2);
    spec.max_batch = 128;
    spec.timeout_ms = 10_000;
    let model = ExternalModel::new(spec)?;

    let ds = generate_synthetic(&SyntheticSpec { n_samples: 400, n_features: 50, seed: 2 })?;
    let maps = ground_truth_maps(&ds)?;
    println!("clean accuracy through the bridge: {:.3}", accuracy(&model, ds.samples(), ds.labels())?);

    for (name, cfg) in [("deletion", OrderConfig::deletion()), ("insertion", OrderConfig::insertion())] {
        let curve = order_based_curve(&model, &ds, &maps, &cfg)?;
        let ys: Vec<String> = curve.ys().map(|y| format!("{y:.2}")).collect();
        println!("{name:<10} AUC {:.3}  [{}]", auc(&curve)?, ys.join(" "));
    }
    Ok(())
}
