//! Experiment configuration: a single JSON document, hashed after
//! canonicalization so every output can name the exact config it came from.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::metrics::{default_fractions, CompletenessConfig, NoiseKeying, OrderConfig, SoundnessConfig};
use crate::model::Exec;
use crate::perturb::{Imputer, Order};
use crate::types::{MetricKind, Shape};
use crate::models::ExternalModelSpec;
use crate::modify::ModScheme;
use crate::synthetic::SyntheticSpec;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetSource {
    /// Generated per trial; the spec's `seed` is replaced by one derived from the master seed.
    Synthetic(SyntheticSpec),
    File(PathBuf),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelSource {
    LinearStep,
    Mlp(PathBuf),
    External(ExternalModelSpec),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MapSource {
    /// Ground-truth maps of the synthetic world (linear step model only).
    GroundTruth,
    File(PathBuf),
}

/// A modified copy of the base maps, evaluated alongside the originals.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variant {
    pub label: String,
    pub scheme: ModScheme,
}

/// Settings of one order-based metric; the mode and the default imputer
/// follow from the metric it is listed under.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderSettings {
    pub order: Order,
    pub imputer: Option<Imputer>,
    pub fractions: Vec<f64>,
    pub noise_keying: NoiseKeying,
}

impl Default for OrderSettings {
    fn default() -> Self {
        OrderSettings { order: Order::MoRF, imputer: None, fractions: default_fractions(), noise_keying: NoiseKeying::Shared }
    }
}

impl OrderSettings {
    pub fn build(&self, kind: MetricKind, shape: Shape) -> Result<OrderConfig> {
        let base = match kind {
            MetricKind::Deletion => OrderConfig::deletion(),
            MetricKind::Insertion => OrderConfig::insertion(),
            MetricKind::Road => OrderConfig::road(shape),
            other => return Err(Error::Config(format!("{other} is not an order-based metric"))),
        };
        let cfg = OrderConfig {
            order: self.order,
            imputer: self.imputer.unwrap_or(base.imputer),
            fractions: self.fractions.clone(),
            noise_keying: self.noise_keying,
            ..base
        };
        if cfg.metric_kind() != kind {
            return Err(Error::Config(format!("imputer {:?} turns {kind} into {}", cfg.imputer.kind, cfg.metric_kind())));
        }
        cfg.validate().map_err(|e| Error::Config(format!("{kind}: {e}")))?;
        Ok(cfg)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricSelection {
    pub soundness: Option<SoundnessConfig>,
    pub completeness: Option<CompletenessConfig>,
    pub deletion: Option<OrderSettings>,
    pub insertion: Option<OrderSettings>,
    pub road: Option<OrderSettings>,
}

impl MetricSelection {
    pub fn is_empty(&self) -> bool {
        self.soundness.is_none()
            && self.completeness.is_none()
            && self.deletion.is_none()
            && self.insertion.is_none()
            && self.road.is_none()
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

impl OutputFormat {
    pub fn extension(&self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Json => "json",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub seed: u64,
    #[serde(default = "one")]
    pub trials: usize,
    pub dataset: DatasetSource,
    pub model: ModelSource,
    #[serde(default = "ground_truth")]
    pub maps: MapSource,
    /// Modified map sets; the unmodified maps always run under the label "original".
    #[serde(default)]
    pub variants: Vec<Variant>,
    pub metrics: MetricSelection,
    /// Overrides the per-metric execution settings.
    #[serde(default)]
    pub exec: Exec,
    pub output_dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

fn one() -> usize {
    1
}

fn ground_truth() -> MapSource {
    MapSource::GroundTruth
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file; relative paths inside it resolve against the file's directory.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let mut cfg = ExperimentConfig::from_json(&text)?;
        if let Some(base) = path.parent() {
            cfg.resolve_paths(base);
        }
        cfg.check_files()?;
        Ok(cfg)
    }

    fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        if let DatasetSource::File(p) = &mut self.dataset {
            fix(p);
        }
        if let ModelSource::Mlp(p) = &mut self.model {
            fix(p);
        }
        if let MapSource::File(p) = &mut self.maps {
            fix(p);
        }
        fix(&mut self.output_dir);
    }

    /// Every referenced input file must exist.
    pub fn check_files(&self) -> Result<()> {
        let mut files = Vec::new();
        if let DatasetSource::File(p) = &self.dataset {
            files.push(p);
        }
        if let ModelSource::Mlp(p) = &self.model {
            files.push(p);
        }
        if let MapSource::File(p) = &self.maps {
            files.push(p);
        }
        match files.into_iter().find(|p| !p.is_file()) {
            Some(p) => Err(Error::Config(format!("referenced file {} does not exist", p.display()))),
            None => Ok(()),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.metrics.is_empty() {
            return Err(Error::NothingToRun);
        }
        if self.trials == 0 {
            return Err(Error::Config("trials must be positive".into()));
        }
        if self.exec.workers == 0 || self.exec.batch_size == 0 {
            return Err(Error::Config("workers and batch_size must be positive".into()));
        }
        let mut labels = vec!["original"];
        for v in &self.variants {
            let ok = !v.label.is_empty() && v.label.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-');
            if !ok {
                return Err(Error::Config(format!("variant label {:?} must be non-empty [A-Za-z0-9_-]", v.label)));
            }
            if labels.contains(&v.label.as_str()) {
                return Err(Error::Config(format!("duplicate variant label {:?}", v.label)));
            }
            labels.push(&v.label);
        }
        let synthetic_truth = matches!(self.model, ModelSource::LinearStep);
        if self.maps == MapSource::GroundTruth && !synthetic_truth {
            return Err(Error::Config("ground-truth maps need the linear_step model".into()));
        }
        let needs_info = self.variants.iter().any(|v| matches!(v.scheme, ModScheme::SynthIntroduce { .. }));
        if needs_info && !synthetic_truth {
            return Err(Error::Config("synth_introduce needs the linear_step model's predictive information".into()));
        }
        if let Some(s) = &self.metrics.soundness {
            s.validate().map_err(|e| Error::Config(format!("soundness: {e}")))?;
        }
        if let Some(c) = &self.metrics.completeness {
            c.validate().map_err(|e| Error::Config(format!("completeness: {e}")))?;
        }
        let shape = match &self.dataset {
            DatasetSource::Synthetic(s) => Shape::Flat(s.n_features),
            // grid datasets only matter for the ROAD default, which is re-checked at run time
            DatasetSource::File(_) => Shape::Flat(1),
        };
        for (kind, o) in self.order_metrics() {
            o.build(kind, shape)?;
        }
        Ok(())
    }

    pub fn order_metrics(&self) -> impl Iterator<Item = (MetricKind, &OrderSettings)> {
        [
            (MetricKind::Deletion, &self.metrics.deletion),
            (MetricKind::Insertion, &self.metrics.insertion),
            (MetricKind::Road, &self.metrics.road),
        ]
        .into_iter()
        .filter_map(|(k, o)| o.as_ref().map(|o| (k, o)))
    }

    /// Compact JSON with keys sorted at every level.
    pub fn canonical_json(&self) -> String {
        let value = serde_json::to_value(self).expect("config serializes");
        serde_json::to_string(&value).expect("value serializes")
    }

    /// Hex SHA-256 of the canonical JSON without `output_dir` and `exec`,
    /// which do not change results.
    pub fn digest(&self) -> String {
        canonical_digest(self, &["output_dir", "exec"])
    }
}

/// Hex sha256 of the compact, key-sorted JSON of `value` without the listed
/// top-level keys.
pub fn canonical_digest<T: Serialize>(value: &T, drop: &[&str]) -> String {
    let mut value = serde_json::to_value(value).expect("config serializes");
    if let Some(obj) = value.as_object_mut() {
        for key in drop {
            obj.remove(*key);
        }
    }
    let text = serde_json::to_string(&value).expect("value serializes");
    hex::encode(Sha256::digest(text.as_bytes()))
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "seed": 3,
        "dataset": {"synthetic": {"n_samples": 10, "n_features": 4}},
        "model": "linear_step",
        "metrics": {"soundness": {}},
        "output_dir": "out"
    }"#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let cfg = ExperimentConfig::from_json(MINIMAL).unwrap();
        assert_eq!(cfg.trials, 1);
        assert_eq!(cfg.maps, MapSource::GroundTruth);
        assert_eq!(cfg.metrics.soundness.as_ref().unwrap().epsilon, 0.01);
    }

    #[test]
    fn digest_ignores_formatting_but_not_content() {
        let a = ExperimentConfig::from_json(MINIMAL).unwrap();
        let reordered = r#"{"output_dir":"out","metrics":{"soundness":{}},"model":"linear_step",
            "dataset":{"synthetic":{"n_features":4,"n_samples":10}},"seed":3}"#;
        let b = ExperimentConfig::from_json(reordered).unwrap();
        assert_eq!(a.digest(), b.digest());
        let c = ExperimentConfig::from_json(&MINIMAL.replace("\"seed\": 3", "\"seed\": 4")).unwrap();
        assert_ne!(a.digest(), c.digest());
        assert_eq!(a.digest().len(), 64);
        let mut moved = a.clone();
        moved.output_dir = "elsewhere".into();
        moved.exec = Exec::new(4, 16);
        assert_eq!(a.digest(), moved.digest());
    }

    #[test]
    fn zero_metrics_is_nothing_to_run() {
        let text = MINIMAL.replace(r#"{"soundness": {}}"#, "{}");
        let err = ExperimentConfig::from_json(&text).unwrap_err();
        assert!(err.to_string().contains("nothing to run"));
    }

    #[test]
    fn missing_files_are_config_errors() {
        let text = MINIMAL.replace(r#"{"synthetic": {"n_samples": 10, "n_features": 4}}"#, r#"{"file": "/nonexistent/data.soco"}"#);
        let cfg = ExperimentConfig::from_json(&text).unwrap();
        assert!(matches!(cfg.check_files(), Err(Error::Config(_))));
    }
}
