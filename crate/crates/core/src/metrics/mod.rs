//! Faithfulness metrics: soundness and completeness, plus the order-based
//! deletion, insertion and ROAD baselines.

mod auc;
mod completeness;
mod order;
mod soundness;

pub use auc::{auc, auc_points};
pub use completeness::{completeness_curve, default_thresholds, CompletenessConfig};
pub use order::{default_fractions, order_based_curve, OrderConfig, OrderMode};
pub use soundness::{
    align_soundness, default_mask_ratios, soundness_curve, SoundnessConfig, SoundnessReport, SoundnessStep,
    SoundnessWeighting,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{Exec, Model};
use crate::perturb::Imputer;
use crate::rng::SeedStream;
use crate::types::{AttributionMap, Dataset, Mask};

/// How imputation noise is keyed across the steps of one metric.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseKeying {
    /// One noise draw per sample, reused at every step.
    #[default]
    Shared,
    /// A fresh draw per sample and step.
    PerStep,
}

pub(crate) fn check_maps(dataset: &Dataset, maps: &[AttributionMap]) -> Result<()> {
    if maps.len() != dataset.len() {
        return Err(Error::ShapeMismatch(format!("{} maps for {} samples", maps.len(), dataset.len())));
    }
    let shape = dataset.shape();
    if let Some(m) = maps.iter().find(|m| m.shape() != shape) {
        return Err(Error::ShapeMismatch(format!("map shape {} differs from sample shape {shape}", m.shape())));
    }
    Ok(())
}

/// Imputes every sample under its mask and measures accuracy.
pub(crate) struct Perturber<'a> {
    pub model: &'a dyn Model,
    pub dataset: &'a Dataset,
    pub imputer: Imputer,
    pub noise_std: f64,
    pub stream: SeedStream,
    pub keying: NoiseKeying,
    pub exec: Exec,
}

impl<'a> Perturber<'a> {
    pub fn new(
        model: &'a dyn Model,
        dataset: &'a Dataset,
        imputer: Imputer,
        metric: &str,
        seed: u64,
        keying: NoiseKeying,
        exec: Exec,
    ) -> Result<Self> {
        imputer.validate(dataset.shape())?;
        exec.validate()?;
        Ok(Perturber {
            model,
            dataset,
            imputer,
            noise_std: imputer.noise_std(dataset),
            stream: SeedStream::new(seed).named("noise").named(metric),
            keying,
            exec,
        })
    }

    pub fn clean_accuracy(&self) -> Result<f64> {
        self.exec.accuracy(self.model, self.dataset.samples(), self.dataset.labels())
    }

    pub fn accuracy(&self, masks: &[Mask], step: u64) -> Result<f64> {
        let means = self.dataset.feature_means();
        let indexed: Vec<usize> = (0..masks.len()).collect();
        let imputed = self.exec.map(&indexed, |&i| {
            let x = &self.dataset.samples()[i];
            let s = self.stream.child(x.id());
            let s = match self.keying {
                NoiseKeying::Shared => s,
                NoiseKeying::PerStep => s.child(step),
            };
            self.imputer.apply(x, &masks[i], means, self.noise_std, s)
        })?;
        self.exec.accuracy(self.model, &imputed, self.dataset.labels())
    }
}

pub(crate) fn check_open_unit_descending(name: &str, values: &[f64]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::invalid(format!("{name} must not be empty")));
    }
    if values.iter().any(|&v| !(v > 0.0 && v < 1.0)) {
        return Err(Error::invalid(format!("{name} must lie strictly inside (0, 1)")));
    }
    if values.windows(2).any(|w| w[1] >= w[0]) {
        return Err(Error::invalid(format!("{name} must be strictly descending")));
    }
    Ok(())
}
