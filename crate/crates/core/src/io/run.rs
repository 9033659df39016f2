//! End-to-end experiment runner.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::Instant;

use log::info;
use serde::{Deserialize, Serialize};

use super::config::{DatasetSource, ExperimentConfig, MapSource, ModelSource};
use super::container::{read_dataset, read_maps_for};
use super::plot::{emit_plot_data, PlotData, PlotFile};
use super::write_atomic;
use crate::analysis::aggregate_trials;
use crate::error::{Error, Result};
use crate::metrics::{completeness_curve, default_thresholds, order_based_curve, soundness_curve};
use crate::model::Model;
use crate::models::{ExternalModel, MlpModel, MlpWeights};
use crate::modify::ModScheme;
use crate::rng::SeedStream;
use crate::synthetic::{generate_synthetic, ground_truth_maps, oracle_infos, LinearStepModel, OracleInfo, SyntheticSpec};
use crate::types::{AttributionMap, Dataset, EvalCurve, MetricKind};

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub variant: String,
    pub metric: MetricKind,
    /// "curve", "summary" or "trials".
    pub kind: String,
    /// Relative to the output directory.
    pub path: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub config_digest: String,
    pub seed: u64,
    pub trials: usize,
    pub outputs: Vec<OutputEntry>,
    /// Wall-clock milliseconds per `variant/metric`, summed over trials.
    pub timings_ms: BTreeMap<String, u64>,
    /// Samples with all-zero maps per `variant/metric`, summed over trials.
    pub skipped_samples: BTreeMap<String, usize>,
}

pub fn build_model(source: &ModelSource) -> Result<Box<dyn Model>> {
    Ok(match source {
        ModelSource::LinearStep => Box::new(LinearStepModel),
        ModelSource::Mlp(path) => Box::new(MlpModel::new(MlpWeights::load(path)?)?),
        ModelSource::External(spec) => Box::new(ExternalModel::new(spec.clone())?),
    })
}

/// Seed of the synthetic dataset for `trial`.
pub fn trial_data_seed(master: u64, trial: u64) -> u64 {
    SeedStream::new(master).named("data").child(trial).to_seed()
}

/// Seed handed to every metric of `trial`; shared by all map variants.
pub fn trial_noise_seed(master: u64, trial: u64) -> u64 {
    SeedStream::new(master).named("noise").child(trial).to_seed()
}

/// Stream for modifying the map of `sample_id` under `variant` in `trial`.
pub fn modify_stream(master: u64, trial: u64, variant: &str, sample_id: u64) -> SeedStream {
    SeedStream::new(master).named("modify").child(trial).named(variant).child(sample_id)
}

struct Trial {
    dataset: Dataset,
    variants: Vec<(String, Vec<AttributionMap>)>,
}

fn prepare_trial(cfg: &ExperimentConfig, trial: u64, file_data: Option<&Dataset>) -> Result<Trial> {
    let dataset = match (&cfg.dataset, file_data) {
        (DatasetSource::Synthetic(spec), _) => {
            generate_synthetic(&SyntheticSpec { seed: trial_data_seed(cfg.seed, trial), ..*spec })?
        }
        (DatasetSource::File(_), Some(ds)) => ds.clone(),
        (DatasetSource::File(p), None) => read_dataset(p)?,
    };
    let base = match &cfg.maps {
        MapSource::GroundTruth => ground_truth_maps(&dataset)?,
        MapSource::File(p) => read_maps_for(p, &dataset)?,
    };
    let needs_info = cfg.variants.iter().any(|v| matches!(v.scheme, ModScheme::SynthIntroduce { .. }));
    let infos: Option<Vec<OracleInfo>> = if needs_info { Some(oracle_infos(&dataset)?) } else { None };
    let mut variants = vec![("original".to_string(), base.clone())];
    for v in &cfg.variants {
        let maps = base
            .iter()
            .zip(dataset.samples())
            .enumerate()
            .map(|(i, (m, x))| {
                let info = infos.as_ref().map(|inf| &inf[i]);
                v.scheme.apply(m, info, modify_stream(cfg.seed, trial, &v.label, x.id()))
            })
            .collect::<Result<Vec<_>>>()?;
        variants.push((v.label.clone(), maps));
    }
    Ok(Trial { dataset, variants })
}

/// Runs one metric on one map variant.
fn run_metric(
    cfg: &ExperimentConfig,
    kind: MetricKind,
    model: &dyn Model,
    dataset: &Dataset,
    maps: &[AttributionMap],
    seed: u64,
) -> Result<(EvalCurve, usize)> {
    let exec = cfg.exec;
    match kind {
        MetricKind::Soundness => {
            let mut c = cfg.metrics.soundness.clone().expect("selected");
            c.seed = seed;
            c.exec = exec;
            let rep = soundness_curve(model, dataset, maps, &c)?;
            Ok((rep.curve, rep.empty_maps))
        }
        MetricKind::Completeness => {
            let mut c = cfg.metrics.completeness.clone().expect("selected");
            c.seed = seed;
            c.exec = exec;
            Ok((completeness_curve(model, dataset, maps, &c)?, 0))
        }
        order_kind => {
            let settings = cfg
                .order_metrics()
                .find(|(k, _)| *k == order_kind)
                .map(|(_, s)| s)
                .expect("selected");
            let mut c = settings.build(order_kind, dataset.shape())?;
            c.seed = seed;
            c.exec = exec;
            Ok((order_based_curve(model, dataset, maps, &c)?, 0))
        }
    }
}

fn selected_metrics(cfg: &ExperimentConfig) -> Vec<MetricKind> {
    let m = &cfg.metrics;
    let mut kinds = Vec::new();
    if m.soundness.is_some() {
        kinds.push(MetricKind::Soundness);
    }
    if m.completeness.is_some() {
        kinds.push(MetricKind::Completeness);
    }
    kinds.extend(cfg.order_metrics().map(|(k, _)| k));
    kinds
}

/// x grid used to aggregate a metric over trials.
fn summary_grid(cfg: &ExperimentConfig, kind: MetricKind) -> Vec<f64> {
    match kind {
        MetricKind::Soundness => (0..=100).map(|k| k as f64 / 100.0).collect(),
        MetricKind::Completeness => {
            let mut t = cfg.metrics.completeness.as_ref().map_or_else(default_thresholds, |c| c.thresholds.clone());
            t.reverse();
            t
        }
        order_kind => cfg
            .order_metrics()
            .find(|(k, _)| *k == order_kind)
            .map(|(_, s)| s.fractions.clone())
            .unwrap_or_default(),
    }
}

/// Executes every selected metric on every map variant for every trial,
/// writes the curve files and finally the manifest.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<RunManifest> {
    cfg.validate()?;
    cfg.check_files()?;
    let digest = cfg.digest();
    let out_dir = &cfg.output_dir;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;

    let model = build_model(&cfg.model)?;
    let file_data = match &cfg.dataset {
        DatasetSource::File(p) => Some(read_dataset(p)?),
        DatasetSource::Synthetic(_) => None,
    };
    let kinds = selected_metrics(cfg);

    let mut curves: BTreeMap<(usize, MetricKind), Vec<EvalCurve>> = BTreeMap::new();
    let mut labels: Vec<String> = Vec::new();
    let mut timings: BTreeMap<String, u64> = BTreeMap::new();
    let mut skipped: BTreeMap<String, usize> = BTreeMap::new();

    for trial in 0..cfg.trials as u64 {
        let t = prepare_trial(cfg, trial, file_data.as_ref())?;
        if labels.is_empty() {
            labels = t.variants.iter().map(|(l, _)| l.clone()).collect();
        }
        let seed = trial_noise_seed(cfg.seed, trial);
        for (vi, (label, maps)) in t.variants.iter().enumerate() {
            for &kind in &kinds {
                let start = Instant::now();
                let (curve, empty) = run_metric(cfg, kind, model.as_ref(), &t.dataset, maps, seed)?;
                let key = format!("{label}/{kind}");
                *timings.entry(key.clone()).or_default() += start.elapsed().as_millis() as u64;
                *skipped.entry(key).or_default() += empty;
                curves.entry((vi, kind)).or_default().push(curve.with_digest(digest.clone()));
            }
        }
        info!("trial {} of {} done", trial + 1, cfg.trials);
    }

    let ext = cfg.format.extension();
    let mut outputs = Vec::new();
    for ((vi, kind), cs) in &curves {
        let label = &labels[*vi];
        if cs.len() == 1 {
            let name = format!("{label}_{kind}.{ext}");
            emit_plot_data(PlotData::Curve(&cs[0]), Some(cfg.seed), &out_dir.join(&name), cfg.format)?;
            outputs.push(OutputEntry { variant: label.clone(), metric: *kind, kind: "curve".into(), path: name });
        } else {
            let summary = aggregate_trials(cs, &summary_grid(cfg, *kind))?;
            let name = format!("{label}_{kind}_summary.{ext}");
            emit_plot_data(PlotData::Summary(&summary), Some(cfg.seed), &out_dir.join(&name), cfg.format)?;
            outputs.push(OutputEntry { variant: label.clone(), metric: *kind, kind: "summary".into(), path: name });

            let all: Vec<PlotFile> = cs.iter().map(|c| PlotFile::new(PlotData::Curve(c), Some(cfg.seed))).collect();
            let name = format!("{label}_{kind}_trials.json");
            let mut text = serde_json::to_string(&all).expect("curves serialize");
            text.push('\n');
            write_atomic(&out_dir.join(&name), text.as_bytes())?;
            outputs.push(OutputEntry { variant: label.clone(), metric: *kind, kind: "trials".into(), path: name });
        }
    }

    let manifest = RunManifest {
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        config_digest: digest,
        seed: cfg.seed,
        trials: cfg.trials,
        outputs,
        timings_ms: timings,
        skipped_samples: skipped,
    };
    write_manifest(&manifest, out_dir)?;
    Ok(manifest)
}

pub fn write_manifest(manifest: &RunManifest, dir: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    write_atomic(&dir.join("manifest.json"), text.as_bytes())
}
