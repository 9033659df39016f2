use log::warn;
use serde::{Deserialize, Serialize};

use super::{check_maps, check_open_unit_descending, NoiseKeying, Perturber};
use crate::error::{Error, Result};
use crate::model::{Exec, Model};
use crate::perturb::{rank_features, ratio_count, Imputer};
use crate::types::{AttributionMap, Dataset, EvalCurve, Mask, MetricKind, XAxis};

/// Weight used for `|·|` when averaging the unflagged share.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SoundnessWeighting {
    /// Sum of attribution values.
    #[default]
    Attribution,
    /// Plain feature counts.
    Cardinality,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SoundnessConfig {
    /// Masked fractions, strictly descending inside (0, 1).
    pub mask_ratios: Vec<f64>,
    /// Accuracy gain below which newly revealed features are flagged.
    pub epsilon: f64,
    /// `None` picks noisy-linear for grids and mean for tabular data.
    pub imputer: Option<Imputer>,
    /// Stop once accuracy reaches this fraction of the clean accuracy.
    pub halt_fraction: Option<f64>,
    pub weighting: SoundnessWeighting,
    pub noise_keying: NoiseKeying,
    pub seed: u64,
    pub exec: Exec,
}

/// `0.99, 0.98, ..., 0.01`.
pub fn default_mask_ratios() -> Vec<f64> {
    (1..=99).rev().map(|k| k as f64 / 100.0).collect()
}

impl Default for SoundnessConfig {
    fn default() -> Self {
        SoundnessConfig {
            mask_ratios: default_mask_ratios(),
            epsilon: 0.01,
            imputer: None,
            halt_fraction: Some(0.95),
            weighting: SoundnessWeighting::Attribution,
            noise_keying: NoiseKeying::Shared,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl SoundnessConfig {
    pub fn validate(&self) -> Result<()> {
        check_open_unit_descending("mask_ratios", &self.mask_ratios)?;
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(Error::invalid(format!("epsilon {} must be positive", self.epsilon)));
        }
        if let Some(h) = self.halt_fraction {
            if !(h > 0.0 && h <= 1.0) {
                return Err(Error::invalid(format!("halt_fraction {h} outside (0, 1]")));
            }
        }
        Ok(())
    }
}

/// Values observed after one masking step.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SoundnessStep {
    pub mask_ratio: f64,
    pub accuracy: f64,
    /// Mean unflagged share over samples where it is defined.
    pub mean_share: Option<f64>,
    pub defined_samples: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SoundnessReport {
    /// Accuracy level against mean unflagged share, one point per new accuracy record.
    pub curve: EvalCurve,
    /// Every executed step, including the ones not emitted on the curve.
    pub trace: Vec<SoundnessStep>,
    pub clean_accuracy: f64,
    /// Samples whose map attributes nothing.
    pub empty_maps: usize,
}

/// Reveals features from most to least attributed and flags every newly
/// revealed attributed feature whose step raised accuracy by less than
/// `epsilon`. The curve plots the attribution-weighted share of revealed,
/// attributed features that were never flagged.
pub fn soundness_curve(
    model: &dyn Model,
    dataset: &Dataset,
    maps: &[AttributionMap],
    cfg: &SoundnessConfig,
) -> Result<SoundnessReport> {
    cfg.validate()?;
    check_maps(dataset, maps)?;
    let imputer = cfg.imputer.unwrap_or_else(|| Imputer::for_shape(dataset.shape()));
    let perturber = Perturber::new(model, dataset, imputer, "soundness", cfg.seed, cfg.noise_keying, cfg.exec)?;

    let empty_maps = maps.iter().filter(|m| m.is_all_zero()).count();
    if empty_maps > 0 {
        warn!("{empty_maps} samples have all-zero attribution maps and never contribute a share");
    }

    let d = dataset.shape().len();
    let ranks: Vec<Vec<usize>> = maps.iter().map(rank_features).collect();
    let weights: Vec<Vec<f64>> = match cfg.weighting {
        SoundnessWeighting::Attribution => maps.iter().map(|m| m.values().to_vec()).collect(),
        SoundnessWeighting::Cardinality => maps.iter().map(|m| m.values().iter().map(|&v| f64::from(u8::from(v > 0.0))).collect()).collect(),
    };
    let clean = perturber.clean_accuracy()?;

    let n = dataset.len();
    let mut flagged = vec![vec![false; d]; n];
    let mut revealed_before = vec![vec![false; d]; n];
    let mut prev_accuracy = 0.0;
    let mut best = f64::NEG_INFINITY;
    let mut points = Vec::new();
    let mut trace = Vec::new();

    for (step, &ratio) in cfg.mask_ratios.iter().enumerate() {
        let k = ratio_count(ratio, d);
        let masks: Vec<Mask> = ranks.iter().map(|r| Mask::from_indices(d, r[..k].iter().copied())).collect();
        let accuracy = perturber.accuracy(&masks, step as u64)?;
        let flag_new = accuracy - prev_accuracy < cfg.epsilon;

        let mut share_sum = 0.0;
        let mut defined = 0;
        for i in 0..n {
            let eta = maps[i].values();
            let w = &weights[i];
            let mut inc = 0.0;
            let mut hat = 0.0;
            for (j, &masked) in masks[i].as_slice().iter().enumerate() {
                if masked || eta[j] <= 0.0 {
                    continue;
                }
                if flag_new && !revealed_before[i][j] {
                    flagged[i][j] = true;
                }
                revealed_before[i][j] = true;
                inc += w[j];
                if flagged[i][j] {
                    hat += w[j];
                }
            }
            if inc > 0.0 {
                share_sum += (inc - hat) / inc;
                defined += 1;
            }
        }
        let mean_share = (defined > 0).then(|| share_sum / defined as f64);
        trace.push(SoundnessStep { mask_ratio: ratio, accuracy, mean_share, defined_samples: defined });
        if let Some(q) = mean_share {
            if accuracy > best {
                points.push((accuracy, q.clamp(0.0, 1.0)));
                best = accuracy;
            }
        }
        prev_accuracy = accuracy;
        if cfg.halt_fraction.is_some_and(|h| accuracy >= h * clean) {
            break;
        }
    }

    let curve = EvalCurve::new(MetricKind::Soundness, XAxis::AccuracyLevel, points)?;
    Ok(SoundnessReport { curve, trace, clean_accuracy: clean, empty_maps })
}

/// Soundness interpolated linearly at each requested accuracy level; `None`
/// outside the curve's observed range.
pub fn align_soundness(curve: &EvalCurve, levels: &[f64]) -> Vec<(f64, Option<f64>)> {
    levels.iter().map(|&l| (l, curve.interpolate(l))).collect()
}
