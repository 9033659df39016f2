//! Synthetic world with a known ground truth: Gaussian features, a linear step
//! classifier on the feature sum, and the attribution that is both sound and
//! complete for it.

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{argmax, Model};
use crate::rng::SeedStream;
use crate::types::{weighted_size, AttributionMap, Dataset, Sample, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec { n_samples: 1000, n_features: 200, seed: 0 }
    }
}

/// Draws `n_samples` vectors from N(0, I) and labels each by the sign of its
/// sum. Values are rounded to f32 so the binary container stores them exactly.
/// A draw whose sum is exactly zero is replaced by a fresh one.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Dataset> {
    if spec.n_samples == 0 {
        return Err(Error::EmptyEvaluationSet);
    }
    if spec.n_features == 0 {
        return Err(Error::invalid("n_features must be positive"));
    }
    let stream = SeedStream::new(spec.seed).named("data");
    let d = spec.n_features;
    let rows: Vec<(Vec<f64>, usize)> = (0..spec.n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream.child(i).rng();
            loop {
                let x: Vec<f64> = (0..d).map(|_| rng.sample::<f64, _>(StandardNormal) as f32 as f64).collect();
                let sum: f64 = x.iter().sum();
                if sum != 0.0 {
                    return (x, usize::from(sum > 0.0));
                }
            }
        })
        .collect();
    let mut samples = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (i, (x, y)) in rows.into_iter().enumerate() {
        samples.push(Sample::new(i as u64, Shape::Flat(d), x)?);
        labels.push(y);
    }
    Dataset::new(samples, labels, 2)
}

/// `[0, 1]` if the feature sum is positive, `[1, 0]` otherwise.
pub fn linear_step_predict(x: &Sample) -> Result<Vec<f64>> {
    if x.shape().is_grid() {
        return Err(Error::TabularModel(x.shape().to_string()));
    }
    let sum: f64 = x.features().iter().sum();
    Ok(if sum > 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
}

/// The step classifier `f(x) = 1[sum(x) > 0]` with hard probabilities.
#[derive(Clone, Copy, Debug, Default)]
pub struct LinearStepModel;

impl Model for LinearStepModel {
    fn n_classes(&self) -> usize {
        2
    }

    fn predict_probs(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
        samples.iter().map(linear_step_predict).collect()
    }
}

fn check_label(x: &Sample, label: usize) -> Result<()> {
    let predicted = argmax(&linear_step_predict(x)?);
    if predicted != label {
        return Err(Error::InconsistentLabel { sample_id: x.id(), label, predicted });
    }
    Ok(())
}

fn signed_part(x: &Sample, label: usize) -> Vec<f64> {
    let sign = if label == 1 { 1.0 } else { -1.0 };
    x.features().iter().map(|&v| (sign * v).max(0.0)).collect()
}

/// Positive features for class 1, negated negative features for class 0,
/// scaled to a maximum of 1.
pub fn ground_truth_attribution(x: &Sample, label: usize) -> Result<AttributionMap> {
    check_label(x, label)?;
    Ok(AttributionMap::new(x.shape(), signed_part(x, label))?.normalize())
}

pub fn ground_truth_maps(dataset: &Dataset) -> Result<Vec<AttributionMap>> {
    dataset.iter().map(|(x, y)| ground_truth_attribution(x, y)).collect()
}

/// Per-feature predictive information for one sample of the synthetic world.
#[derive(Clone, Debug, PartialEq)]
pub struct OracleInfo {
    phi: Vec<f64>,
}

/// Information values before normalization; the predictive set is where they
/// are positive.
pub fn oracle_info(x: &Sample, label: usize) -> Result<OracleInfo> {
    check_label(x, label)?;
    Ok(OracleInfo { phi: signed_part(x, label) })
}

impl OracleInfo {
    pub fn new(phi: Vec<f64>) -> Result<Self> {
        if phi.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("information values must be finite and non-negative"));
        }
        Ok(OracleInfo { phi })
    }

    pub fn phi(&self) -> &[f64] {
        &self.phi
    }

    pub fn predictive_set(&self) -> impl Iterator<Item = usize> + '_ {
        self.phi.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i)
    }

    pub fn is_predictive(&self, i: usize) -> bool {
        self.phi[i] > 0.0
    }

    /// `|A ∩ I|_η / |A|_η` for the attributed set A of `map`; 1 for an empty map.
    pub fn soundness(&self, map: &AttributionMap) -> f64 {
        let eta = map.values();
        let total = weighted_size(eta, map.support());
        if total == 0.0 {
            return 1.0;
        }
        weighted_size(eta, map.support().filter(|&i| self.is_predictive(i))) / total
    }

    /// `|A ∩ I|_φ / |I|_φ`; 1 when nothing is predictive.
    pub fn completeness(&self, map: &AttributionMap) -> f64 {
        let total = weighted_size(&self.phi, self.predictive_set());
        if total == 0.0 {
            return 1.0;
        }
        weighted_size(&self.phi, map.support().filter(|&i| self.is_predictive(i))) / total
    }
}

pub fn oracle_infos(dataset: &Dataset) -> Result<Vec<OracleInfo>> {
    dataset.iter().map(|(x, y)| oracle_info(x, y)).collect()
}
