use serde::{Deserialize, Serialize};

use super::{check_maps, check_open_unit_descending, NoiseKeying, Perturber};
use crate::error::Result;
use crate::model::{Exec, Model};
use crate::perturb::{mask_by_threshold, Imputer};
use crate::types::{AttributionMap, Dataset, EvalCurve, Mask, MetricKind, XAxis};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct CompletenessConfig {
    /// Attribution thresholds, strictly descending inside (0, 1).
    pub thresholds: Vec<f64>,
    /// `None` picks noisy-linear for grids and mean for tabular data.
    pub imputer: Option<Imputer>,
    pub noise_keying: NoiseKeying,
    pub seed: u64,
    pub exec: Exec,
}

/// `0.9, 0.8, ..., 0.1`.
pub fn default_thresholds() -> Vec<f64> {
    (1..=9).rev().map(|k| k as f64 / 10.0).collect()
}

impl Default for CompletenessConfig {
    fn default() -> Self {
        CompletenessConfig {
            thresholds: default_thresholds(),
            imputer: None,
            noise_keying: NoiseKeying::Shared,
            seed: 0,
            exec: Exec::default(),
        }
    }
}

impl CompletenessConfig {
    pub fn validate(&self) -> crate::error::Result<()> {
        check_open_unit_descending("thresholds", &self.thresholds)
    }
}

/// Accuracy drop `s0 - s_t` after removing every feature attributed above
/// `t`, where `s0` is the clean accuracy. Points are ordered by ascending
/// threshold.
pub fn completeness_curve(
    model: &dyn Model,
    dataset: &Dataset,
    maps: &[AttributionMap],
    cfg: &CompletenessConfig,
) -> Result<EvalCurve> {
    cfg.validate()?;
    check_maps(dataset, maps)?;
    let imputer = cfg.imputer.unwrap_or_else(|| Imputer::for_shape(dataset.shape()));
    let perturber = Perturber::new(model, dataset, imputer, "completeness", cfg.seed, cfg.noise_keying, cfg.exec)?;
    let s0 = perturber.clean_accuracy()?;
    let mut points = Vec::with_capacity(cfg.thresholds.len());
    for (step, &t) in cfg.thresholds.iter().enumerate() {
        let masks: Vec<Mask> = maps.iter().map(|m| mask_by_threshold(m, t)).collect::<Result<_>>()?;
        let s = perturber.accuracy(&masks, step as u64)?;
        points.push((t, s0 - s));
    }
    points.reverse();
    EvalCurve::new(MetricKind::Completeness, XAxis::AttributionThreshold, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::perturb::{ImputerKind, NoiseScale};
    use crate::synthetic::{LinearStepModel};
    use crate::types::{Sample, Shape};

    #[test]
    fn drop_tracks_removed_mass() {
        // label 1, sum 1.5; removing feature 0 (value 2) flips the prediction
        let xs = vec![Sample::flat(0, vec![2.0, -0.5]).unwrap(), Sample::flat(1, vec![0.2, 0.3]).unwrap()];
        let ds = Dataset::new(xs, vec![1, 1], 2).unwrap();
        let maps = vec![
            AttributionMap::new_normalized(Shape::Flat(2), vec![1.0, 0.0]).unwrap(),
            AttributionMap::new_normalized(Shape::Flat(2), vec![0.4, 1.0]).unwrap(),
        ];
        let cfg = CompletenessConfig {
            thresholds: vec![0.5, 0.2],
            imputer: Some(Imputer::new(ImputerKind::Zero, NoiseScale::Std(0.0))),
            ..CompletenessConfig::default()
        };
        let c = completeness_curve(&LinearStepModel, &ds, &maps, &cfg).unwrap();
        let pts: Vec<(f64, f64)> = c.points().iter().map(|p| (p.x, p.y)).collect();
        // t=0.5: sample 0 loses feature 0 (wrong), sample 1 loses feature 1 (0.2 > 0, still right)
        // t=0.2: sample 1 loses both (sum 0, wrong)
        assert_eq!(pts, vec![(0.2, 1.0), (0.5, 0.5)]);
    }
}
