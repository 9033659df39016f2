use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{AttributionMap, Mask};

/// Feature indices sorted by ascending attribution, ties by ascending index.
pub fn rank_features(map: &AttributionMap) -> Vec<usize> {
    let v = map.values();
    let mut order: Vec<usize> = (0..v.len()).collect();
    // stable sort keeps ascending index order among equal values
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    order
}

/// Most-relevant-first order: the reverse of [`rank_features`].
pub fn morf_order(map: &AttributionMap) -> Vec<usize> {
    let mut order = rank_features(map);
    order.reverse();
    order
}

/// Number of features selected by ratio `m` out of `d`: `m·d` rounded half away from zero.
pub fn ratio_count(m: f64, d: usize) -> usize {
    (m * d as f64).round() as usize
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(Error::invalid(format!("{name} {v} outside [0, 1]")));
    }
    Ok(())
}

/// Masks the `ratio_count(m, d)` lowest-ranked features.
pub fn mask_by_ratio(map: &AttributionMap, m: f64) -> Result<Mask> {
    check_unit("mask ratio", m)?;
    let d = map.len();
    Ok(Mask::from_indices(d, rank_features(map).into_iter().take(ratio_count(m, d))))
}

/// Selects features with attribution strictly above `t`.
pub fn mask_by_threshold(map: &AttributionMap, t: f64) -> Result<Mask> {
    check_unit("threshold", t)?;
    Ok(Mask::new(map.values().iter().map(|&v| v > t).collect()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionKind {
    AreaRatio,
    ValueThreshold,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Order {
    /// Most relevant first.
    #[serde(rename = "morf", alias = "MoRF")]
    MoRF,
    /// Least relevant first.
    #[serde(rename = "lerf", alias = "LeRF")]
    LeRF,
}

/// How a set of features is picked from a map.
///
/// * area ratio, LeRF: the `m·d` lowest-ranked features
/// * area ratio, MoRF: the `m·d` highest-ranked features
/// * value threshold, MoRF: values `> t`
/// * value threshold, LeRF: values `<= t`
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SelectionRule {
    pub kind: SelectionKind,
    pub order: Order,
    pub parameter: f64,
}

impl SelectionRule {
    pub fn select(&self, map: &AttributionMap) -> Result<Mask> {
        match (self.kind, self.order) {
            (SelectionKind::AreaRatio, Order::LeRF) => mask_by_ratio(map, self.parameter),
            (SelectionKind::AreaRatio, Order::MoRF) => {
                check_unit("mask ratio", self.parameter)?;
                let d = map.len();
                Ok(Mask::from_indices(d, morf_order(map).into_iter().take(ratio_count(self.parameter, d))))
            }
            (SelectionKind::ValueThreshold, Order::MoRF) => mask_by_threshold(map, self.parameter),
            (SelectionKind::ValueThreshold, Order::LeRF) => Ok(mask_by_threshold(map, self.parameter)?.complement()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::Shape;

    fn map(v: &[f64]) -> AttributionMap {
        AttributionMap::new(Shape::Flat(v.len()), v.to_vec()).unwrap()
    }

    #[test]
    fn ranking_examples() {
        assert_eq!(rank_features(&map(&[0.3, 0.1, 0.2])), vec![1, 2, 0]);
        assert_eq!(rank_features(&map(&[0.5, 0.5, 0.1])), vec![2, 0, 1]);
        assert_eq!(morf_order(&map(&[0.3, 0.1, 0.2])), vec![0, 2, 1]);
    }

    #[test]
    fn ratio_examples() {
        let m = map(&[0.9, 0.1, 0.5, 0.3]);
        assert_eq!(mask_by_ratio(&m, 0.5).unwrap().indices().collect::<Vec<_>>(), vec![1, 3]);
        assert_eq!(mask_by_ratio(&m, 0.0).unwrap().count(), 0);
        assert_eq!(mask_by_ratio(&m, 1.0).unwrap().count(), 4);
        assert_eq!(ratio_count(0.25, 10), 3);
        assert!(mask_by_ratio(&m, 1.1).is_err());
    }

    #[test]
    fn threshold_is_strict() {
        let m = map(&[0.9, 0.1, 0.5]);
        assert_eq!(mask_by_threshold(&m, 0.5).unwrap().indices().collect::<Vec<_>>(), vec![0]);
        assert!(mask_by_threshold(&m, -0.1).is_err());
    }

    #[test]
    fn selection_rules() {
        let m = map(&[0.9, 0.1, 0.5, 0.3]);
        let top = SelectionRule { kind: SelectionKind::AreaRatio, order: Order::MoRF, parameter: 0.5 };
        assert_eq!(top.select(&m).unwrap().indices().collect::<Vec<_>>(), vec![0, 2]);
        let low = SelectionRule { kind: SelectionKind::ValueThreshold, order: Order::LeRF, parameter: 0.3 };
        assert_eq!(low.select(&m).unwrap().indices().collect::<Vec<_>>(), vec![1, 3]);
    }
}
