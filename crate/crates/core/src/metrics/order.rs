use serde::{Deserialize, Serialize};

use super::{check_maps, NoiseKeying, Perturber};
use crate::error::{Error, Result};
use crate::model::{Exec, Model};
use crate::perturb::{morf_order, rank_features, ratio_count, Imputer, ImputerKind, Order};
use crate::types::{AttributionMap, Dataset, EvalCurve, Mask, MetricKind, Shape, XAxis};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderMode {
    /// Remove features in order from the intact input.
    Deletion,
    /// Restore features in order onto the fully imputed input.
    Insertion,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OrderConfig {
    pub mode: OrderMode,
    pub order: Order,
    pub imputer: Imputer,
    /// Removed (or restored) fractions, strictly ascending within [0, 1].
    pub fractions: Vec<f64>,
    #[serde(default)]
    pub noise_keying: NoiseKeying,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub exec: Exec,
}

/// `0, 0.1, ..., 1`.
pub fn default_fractions() -> Vec<f64> {
    (0..=10).map(|k| k as f64 / 10.0).collect()
}

impl OrderConfig {
    fn with(mode: OrderMode, imputer: Imputer) -> Self {
        OrderConfig {
            mode,
            order: Order::MoRF,
            imputer,
            fractions: default_fractions(),
            noise_keying: NoiseKeying::Shared,
            seed: 0,
            exec: Exec::default(),
        }
    }

    /// MoRF deletion with zero fill.
    pub fn deletion() -> Self {
        OrderConfig::with(OrderMode::Deletion, Imputer::zero())
    }

    /// MoRF insertion onto an all-zero start.
    pub fn insertion() -> Self {
        OrderConfig::with(OrderMode::Insertion, Imputer::zero())
    }

    /// MoRF deletion with noisy-linear fill for grids and mean fill otherwise.
    pub fn road(shape: Shape) -> Self {
        OrderConfig::with(OrderMode::Deletion, Imputer::for_shape(shape))
    }

    /// Zero-fill deletion is reported as deletion, any other deletion as ROAD.
    pub fn metric_kind(&self) -> MetricKind {
        match (self.mode, self.imputer.kind) {
            (OrderMode::Insertion, _) => MetricKind::Insertion,
            (OrderMode::Deletion, ImputerKind::Zero) => MetricKind::Deletion,
            (OrderMode::Deletion, _) => MetricKind::Road,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.fractions.is_empty() {
            return Err(Error::invalid("fractions must not be empty"));
        }
        if self.fractions.iter().any(|f| !(0.0..=1.0).contains(f)) {
            return Err(Error::invalid("fractions must lie in [0, 1]"));
        }
        if self.fractions.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("fractions must be strictly ascending"));
        }
        Ok(())
    }
}

/// Accuracy after removing (deletion) or restoring (insertion) each fraction
/// of features in MoRF or LeRF order.
pub fn order_based_curve(
    model: &dyn Model,
    dataset: &Dataset,
    maps: &[AttributionMap],
    cfg: &OrderConfig,
) -> Result<EvalCurve> {
    cfg.validate()?;
    check_maps(dataset, maps)?;
    let kind = cfg.metric_kind();
    let perturber = Perturber::new(model, dataset, cfg.imputer, kind.name(), cfg.seed, cfg.noise_keying, cfg.exec)?;
    let d = dataset.shape().len();
    let orders: Vec<Vec<usize>> = match cfg.order {
        Order::MoRF => maps.iter().map(morf_order).collect(),
        Order::LeRF => maps.iter().map(rank_features).collect(),
    };
    let mut points = Vec::with_capacity(cfg.fractions.len());
    for (step, &f) in cfg.fractions.iter().enumerate() {
        let k = ratio_count(f, d);
        let masks: Vec<Mask> = orders
            .iter()
            .map(|o| {
                let first = Mask::from_indices(d, o[..k].iter().copied());
                match cfg.mode {
                    OrderMode::Deletion => first,
                    OrderMode::Insertion => first.complement(),
                }
            })
            .collect();
        points.push((f, perturber.accuracy(&masks, step as u64)?));
    }
    EvalCurve::new(kind, XAxis::RemovedFraction, points)
}
