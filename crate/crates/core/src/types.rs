//! Domain values shared by every metric: samples, datasets, attribution maps,
//! masks and evaluation curves.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Layout of a sample's features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    /// Tabular vector of `d` features.
    Flat(usize),
    /// Image-like grid, stored row-major with channels last.
    Grid {
        height: usize,
        width: usize,
        channels: usize,
    },
}

impl Shape {
    pub fn len(&self) -> usize {
        match *self {
            Shape::Flat(d) => d,
            Shape::Grid { height, width, channels } => height * width * channels,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn is_grid(&self) -> bool {
        matches!(self, Shape::Grid { .. })
    }

    /// Flat index of pixel `(row, col)` in `channel`.
    pub fn grid_index(&self, row: usize, col: usize, channel: usize) -> usize {
        match *self {
            Shape::Grid { width, channels, .. } => (row * width + col) * channels + channel,
            Shape::Flat(_) => panic!("grid_index on a flat shape"),
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Shape::Flat(d) => write!(f, "flat({d})"),
            Shape::Grid { height, width, channels } => write!(f, "grid({height}x{width}x{channels})"),
        }
    }
}

/// One input to the model.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    id: u64,
    shape: Shape,
    features: Vec<f64>,
}

impl Sample {
    pub fn new(id: u64, shape: Shape, features: Vec<f64>) -> Result<Self> {
        if features.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "sample {id}: {} values for shape {shape}",
                features.len()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteFeature(id));
        }
        Ok(Sample { id, shape, features })
    }

    pub fn flat(id: u64, features: Vec<f64>) -> Result<Self> {
        let d = features.len();
        Sample::new(id, Shape::Flat(d), features)
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn features(&self) -> &[f64] {
        &self.features
    }

    pub fn len(&self) -> usize {
        self.features.len()
    }

    pub fn is_empty(&self) -> bool {
        self.features.is_empty()
    }

    /// Same id and shape, new values. Values are checked for finiteness.
    pub fn with_features(&self, features: Vec<f64>) -> Result<Self> {
        Sample::new(self.id, self.shape, features)
    }
}

/// Labeled samples with cached per-feature means.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    labels: Vec<usize>,
    n_classes: usize,
    feature_means: Vec<f64>,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, labels: Vec<usize>, n_classes: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::EmptyEvaluationSet);
        }
        if samples.len() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} samples but {} labels",
                samples.len(),
                labels.len()
            )));
        }
        if n_classes == 0 {
            return Err(Error::invalid("n_classes must be positive"));
        }
        let shape = samples[0].shape();
        if let Some(bad) = samples.iter().find(|s| s.shape() != shape) {
            return Err(Error::ShapeMismatch(format!(
                "sample {} has shape {}, dataset shape is {shape}",
                bad.id(),
                bad.shape()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::invalid(format!("label {bad} outside [0, {n_classes})")));
        }
        let feature_means = column_means(&samples);
        Ok(Dataset { samples, labels, n_classes, feature_means })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_classes(&self) -> usize {
        self.n_classes
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn shape(&self) -> Shape {
        self.samples[0].shape()
    }

    pub fn feature_means(&self) -> &[f64] {
        &self.feature_means
    }

    /// Recomputes the column means and compares them with the cache.
    pub fn means_consistent(&self) -> bool {
        column_means(&self.samples)
            .iter()
            .zip(&self.feature_means)
            .all(|(a, b)| a.to_bits() == b.to_bits())
    }

    /// Global (min, max) over every feature value.
    pub fn value_range(&self) -> (f64, f64) {
        self.samples
            .iter()
            .flat_map(|s| s.features().iter().copied())
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Sample, usize)> {
        self.samples.iter().zip(self.labels.iter().copied())
    }
}

fn column_means(samples: &[Sample]) -> Vec<f64> {
    let d = samples[0].len();
    let mut sums = vec![0.0; d];
    for s in samples {
        for (acc, v) in sums.iter_mut().zip(s.features()) {
            *acc += v;
        }
    }
    let n = samples.len() as f64;
    sums.into_iter().map(|v| v / n).collect()
}

/// Non-negative per-feature attribution scores. The attributed set is the
/// positive support.
#[derive(Clone, Debug, PartialEq)]
pub struct AttributionMap {
    shape: Shape,
    values: Vec<f64>,
    normalized: bool,
}

impl AttributionMap {
    /// Wraps already non-negative values. Fails on NaN/inf or negative entries.
    pub fn new(shape: Shape, values: Vec<f64>) -> Result<Self> {
        if values.len() != shape.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} attribution values for shape {shape}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFiniteAttribution);
        }
        if let Some(&neg) = values.iter().find(|&&v| v < 0.0) {
            return Err(Error::NegativeAttribution(neg));
        }
        let normalized = false;
        Ok(AttributionMap { shape, values, normalized })
    }

    /// Like [`AttributionMap::new`] but also asserts the normalized flag, which
    /// requires every value to lie in `[0, 1]`.
    pub fn new_normalized(shape: Shape, values: Vec<f64>) -> Result<Self> {
        let mut map = AttributionMap::new(shape, values)?;
        if let Some(&big) = map.values.iter().find(|&&v| v > 1.0) {
            return Err(Error::invalid(format!("normalized map holds value {big} > 1")));
        }
        map.normalized = true;
        Ok(map)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    pub fn is_all_zero(&self) -> bool {
        self.values.iter().all(|&v| v == 0.0)
    }

    /// Indices with strictly positive attribution.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        self.values.iter().enumerate().filter(|(_, &v)| v > 0.0).map(|(i, _)| i)
    }

    /// Divides by the maximum. Maps that are already valid cannot fail here.
    pub fn normalize(&self) -> AttributionMap {
        let max = self.max();
        let values = if max > 0.0 {
            self.values.iter().map(|v| (v / max).min(1.0)).collect()
        } else {
            self.values.clone()
        };
        AttributionMap { shape: self.shape, values, normalized: true }
    }

    pub(crate) fn from_parts_unchecked(shape: Shape, values: Vec<f64>, normalized: bool) -> Self {
        debug_assert!(values.iter().all(|v| v.is_finite() && *v >= 0.0));
        AttributionMap { shape, values, normalized }
    }
}

/// Clips negatives to zero and scales by the maximum.
///
/// All-zero inputs come back unchanged with the flag set.
pub fn normalize_attribution(shape: Shape, raw: &[f64]) -> Result<AttributionMap> {
    if raw.len() != shape.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} attribution values for shape {shape}",
            raw.len()
        )));
    }
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteAttribution);
    }
    let clipped: Vec<f64> = raw.iter().map(|&v| v.max(0.0)).collect();
    Ok(AttributionMap::from_parts_unchecked(shape, clipped, false).normalize())
}

/// `|S|_g`: sum of `g` over the indices in `set`. Empty sets weigh zero.
pub fn weighted_size(g: &[f64], set: impl IntoIterator<Item = usize>) -> f64 {
    set.into_iter().map(|i| g[i]).sum()
}

/// Boolean per-feature selection.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Mask {
    selected: Vec<bool>,
}

impl Mask {
    pub fn new(selected: Vec<bool>) -> Self {
        Mask { selected }
    }

    pub fn none(len: usize) -> Self {
        Mask { selected: vec![false; len] }
    }

    pub fn all(len: usize) -> Self {
        Mask { selected: vec![true; len] }
    }

    pub fn from_indices(len: usize, indices: impl IntoIterator<Item = usize>) -> Self {
        let mut selected = vec![false; len];
        for i in indices {
            selected[i] = true;
        }
        Mask { selected }
    }

    pub fn len(&self) -> usize {
        self.selected.len()
    }

    pub fn is_empty(&self) -> bool {
        self.selected.is_empty()
    }

    pub fn count(&self) -> usize {
        self.selected.iter().filter(|&&b| b).count()
    }

    pub fn is_selected(&self, i: usize) -> bool {
        self.selected[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.selected
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.selected.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    pub fn is_subset_of(&self, other: &Mask) -> bool {
        self.selected.len() == other.selected.len()
            && self.selected.iter().zip(&other.selected).all(|(&a, &b)| !a || b)
    }

    pub fn complement(&self) -> Mask {
        Mask { selected: self.selected.iter().map(|b| !b).collect() }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Soundness,
    Completeness,
    Deletion,
    Insertion,
    Road,
}

impl MetricKind {
    pub fn name(&self) -> &'static str {
        match self {
            MetricKind::Soundness => "soundness",
            MetricKind::Completeness => "completeness",
            MetricKind::Deletion => "deletion",
            MetricKind::Insertion => "insertion",
            MetricKind::Road => "road",
        }
    }
}

impl fmt::Display for MetricKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum XAxis {
    AccuracyLevel,
    AttributionThreshold,
    RemovedFraction,
}

impl XAxis {
    pub fn name(&self) -> &'static str {
        match self {
            XAxis::AccuracyLevel => "accuracy_level",
            XAxis::AttributionThreshold => "attribution_threshold",
            XAxis::RemovedFraction => "removed_fraction",
        }
    }
}

impl fmt::Display for XAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub x: f64,
    pub y: f64,
}

/// Ordered evaluation result, the object compared by Hausdorff distance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalCurve {
    metric_kind: MetricKind,
    x_axis: XAxis,
    points: Vec<CurvePoint>,
    config_digest: String,
}

impl EvalCurve {
    /// Points must be strictly increasing in x with finite coordinates;
    /// soundness values must lie in `[0, 1]`.
    pub fn new(metric_kind: MetricKind, x_axis: XAxis, points: Vec<(f64, f64)>) -> Result<Self> {
        let points: Vec<CurvePoint> = points.into_iter().map(|(x, y)| CurvePoint { x, y }).collect();
        validate_points(metric_kind, &points)?;
        Ok(EvalCurve { metric_kind, x_axis, points, config_digest: String::new() })
    }

    pub fn with_digest(mut self, digest: impl Into<String>) -> Self {
        self.config_digest = digest.into();
        self
    }

    /// Re-checks the invariants, e.g. after deserializing.
    pub fn validate(&self) -> Result<()> {
        validate_points(self.metric_kind, &self.points)
    }

    pub fn metric_kind(&self) -> MetricKind {
        self.metric_kind
    }

    pub fn x_axis(&self) -> XAxis {
        self.x_axis
    }

    pub fn points(&self) -> &[CurvePoint] {
        &self.points
    }

    pub fn config_digest(&self) -> &str {
        &self.config_digest
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn xs(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.x)
    }

    pub fn ys(&self) -> impl Iterator<Item = f64> + '_ {
        self.points.iter().map(|p| p.y)
    }

    /// Piecewise-linear value at `x`; `None` outside the observed x-range.
    pub fn interpolate(&self, x: f64) -> Option<f64> {
        let pts = &self.points;
        let first = pts.first()?;
        let last = pts.last()?;
        if x < first.x || x > last.x {
            return None;
        }
        // partition_point gives the first point with p.x >= x
        let hi = pts.partition_point(|p| p.x < x);
        let b = pts[hi];
        if b.x == x || hi == 0 {
            return Some(b.y);
        }
        let a = pts[hi - 1];
        let w = (x - a.x) / (b.x - a.x);
        Some(a.y + w * (b.y - a.y))
    }
}

fn validate_points(kind: MetricKind, points: &[CurvePoint]) -> Result<()> {
    for p in points {
        if !p.x.is_finite() || !p.y.is_finite() {
            return Err(Error::invalid(format!("non-finite curve point ({}, {})", p.x, p.y)));
        }
        if kind == MetricKind::Soundness && !(0.0..=1.0).contains(&p.y) {
            return Err(Error::invalid(format!("soundness value {} outside [0, 1]", p.y)));
        }
    }
    if let Some(w) = points.windows(2).find(|w| w[1].x <= w[0].x) {
        return Err(Error::invalid(format!(
            "curve x values not strictly increasing: {} then {}",
            w[0].x, w[1].x
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalize_examples() {
        let m = normalize_attribution(Shape::Flat(3), &[0.5, -0.2, 1.0]).unwrap();
        assert_eq!(m.values(), &[0.5, 0.0, 1.0]);
        assert!(m.is_normalized());

        let m = normalize_attribution(Shape::Flat(2), &[2.0, 1.0]).unwrap();
        assert_eq!(m.values(), &[1.0, 0.5]);

        let m = normalize_attribution(Shape::Flat(3), &[0.0; 3]).unwrap();
        assert_eq!(m.values(), &[0.0; 3]);
        assert!(m.is_normalized());
    }

    #[test]
    fn normalize_rejects_non_finite() {
        let err = normalize_attribution(Shape::Flat(2), &[f64::NAN, 1.0]).unwrap_err();
        assert_eq!(err.to_string(), "non-finite attribution");
        assert!(normalize_attribution(Shape::Flat(1), &[f64::INFINITY]).is_err());
    }

    #[test]
    fn map_rejects_negative_values() {
        assert!(matches!(
            AttributionMap::new(Shape::Flat(2), vec![0.1, -0.1]),
            Err(Error::NegativeAttribution(_))
        ));
        assert!(AttributionMap::new_normalized(Shape::Flat(1), vec![1.5]).is_err());
    }

    #[test]
    fn dataset_means_and_invariants() {
        let s = vec![
            Sample::flat(0, vec![1.0, 2.0]).unwrap(),
            Sample::flat(1, vec![3.0, -2.0]).unwrap(),
        ];
        let ds = Dataset::new(s.clone(), vec![0, 1], 2).unwrap();
        assert_eq!(ds.feature_means(), &[2.0, 0.0]);
        assert!(ds.means_consistent());
        assert_eq!(ds.value_range(), (-2.0, 3.0));
        assert!(Dataset::new(s.clone(), vec![0], 2).is_err());
        assert!(Dataset::new(s, vec![0, 2], 2).is_err());
        assert!(matches!(Dataset::new(vec![], vec![], 2), Err(Error::EmptyEvaluationSet)));
    }

    #[test]
    fn dataset_rejects_mixed_shapes() {
        let s = vec![Sample::flat(0, vec![1.0]).unwrap(), Sample::flat(1, vec![1.0, 2.0]).unwrap()];
        assert!(matches!(Dataset::new(s, vec![0, 0], 1), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn curve_requires_strictly_increasing_x() {
        assert!(EvalCurve::new(MetricKind::Deletion, XAxis::RemovedFraction, vec![(0.0, 1.0), (0.0, 0.5)]).is_err());
        assert!(EvalCurve::new(MetricKind::Soundness, XAxis::AccuracyLevel, vec![(0.5, 1.2)]).is_err());
        let c = EvalCurve::new(MetricKind::Deletion, XAxis::RemovedFraction, vec![(0.0, 1.0), (1.0, 0.0)]).unwrap();
        assert_eq!(c.interpolate(0.25), Some(0.75));
        assert_eq!(c.interpolate(1.5), None);
        assert_eq!(c.interpolate(0.0), Some(1.0));
    }

    #[test]
    fn weighted_size_of_empty_set_is_zero() {
        assert_eq!(weighted_size(&[1.0, 2.0], std::iter::empty()), 0.0);
        assert_eq!(weighted_size(&[1.0, 2.0], [1]), 2.0);
    }

    #[test]
    fn mask_set_relations() {
        let a = Mask::from_indices(4, [1]);
        let b = Mask::from_indices(4, [1, 3]);
        assert!(a.is_subset_of(&b));
        assert!(!b.is_subset_of(&a));
        assert_eq!(b.complement().indices().collect::<Vec<_>>(), vec![0, 2]);
    }
}
