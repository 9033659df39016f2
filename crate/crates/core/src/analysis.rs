//! Curve comparison and aggregation across trials.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::{CurvePoint, EvalCurve, MetricKind, XAxis};

/// Per-axis offset and span used to map points into the unit square.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AxisScale {
    pub x_lo: f64,
    pub x_span: f64,
    pub y_lo: f64,
    pub y_span: f64,
}

impl AxisScale {
    /// Range of all given points. Degenerate axes get span 1.
    pub fn fit<'a>(points: impl IntoIterator<Item = &'a CurvePoint>) -> Option<Self> {
        let mut it = points.into_iter().peekable();
        it.peek()?;
        let (mut x0, mut x1, mut y0, mut y1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for p in it {
            x0 = x0.min(p.x);
            x1 = x1.max(p.x);
            y0 = y0.min(p.y);
            y1 = y1.max(p.y);
        }
        let span = |lo: f64, hi: f64| if hi > lo { hi - lo } else { 1.0 };
        Some(AxisScale { x_lo: x0, x_span: span(x0, x1), y_lo: y0, y_span: span(y0, y1) })
    }

    fn distance(&self, a: &CurvePoint, b: &CurvePoint) -> f64 {
        let dx = (a.x - b.x) / self.x_span;
        let dy = (a.y - b.y) / self.y_span;
        dx.hypot(dy)
    }
}

fn directed(p: &[CurvePoint], q: &[CurvePoint], scale: &AxisScale) -> f64 {
    p.iter()
        .map(|a| q.iter().map(|b| scale.distance(a, b)).fold(f64::INFINITY, f64::min))
        .fold(0.0, f64::max)
}

/// Symmetric Hausdorff distance between two point sets under a fixed scale.
pub fn hausdorff_points(p: &[CurvePoint], q: &[CurvePoint], scale: &AxisScale) -> Result<f64> {
    if p.is_empty() || q.is_empty() {
        return Err(Error::invalid("Hausdorff distance of an empty curve"));
    }
    Ok(directed(p, q, scale).max(directed(q, p, scale)))
}

fn check_axes(a: &EvalCurve, b: &EvalCurve) -> Result<()> {
    if a.x_axis() != b.x_axis() {
        return Err(Error::invalid(format!("axis mismatch: {} vs {}", a.x_axis(), b.x_axis())));
    }
    Ok(())
}

/// Hausdorff distance with both axes normalized to the range of the two
/// curves together.
pub fn hausdorff(a: &EvalCurve, b: &EvalCurve) -> Result<f64> {
    check_axes(a, b)?;
    let scale = AxisScale::fit(a.points().iter().chain(b.points()))
        .ok_or_else(|| Error::invalid("Hausdorff distance of an empty curve"))?;
    hausdorff_points(a.points(), b.points(), &scale)
}

/// Hausdorff distance under a caller-supplied scale shared by many curves.
/// This is a metric on point sets, unlike [`hausdorff`] whose scale depends
/// on the pair.
pub fn hausdorff_in(a: &EvalCurve, b: &EvalCurve, scale: &AxisScale) -> Result<f64> {
    check_axes(a, b)?;
    hausdorff_points(a.points(), b.points(), scale)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMin {
    pub distance: f64,
    pub first: String,
    pub second: String,
}

/// Smallest [`hausdorff`] distance over all pairs of labelled curves.
pub fn min_pairwise_hausdorff(curves: &[(String, EvalCurve)]) -> Result<PairwiseMin> {
    if curves.len() < 2 {
        return Err(Error::invalid("pairwise comparison needs at least two curves"));
    }
    let mut best: Option<PairwiseMin> = None;
    for i in 0..curves.len() {
        for j in i + 1..curves.len() {
            let d = hausdorff(&curves[i].1, &curves[j].1)?;
            if best.as_ref().is_none_or(|b| d < b.distance) {
                best = Some(PairwiseMin { distance: d, first: curves[i].0.clone(), second: curves[j].0.clone() });
            }
        }
    }
    Ok(best.expect("at least one pair"))
}

/// Pointwise statistics of several curves on a shared x grid.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub metric_kind: MetricKind,
    pub x_axis: XAxis,
    pub x: Vec<f64>,
    /// `None` where no curve covers the grid point.
    pub mean: Vec<Option<f64>>,
    /// Sample standard deviation; 0 with a single contributing curve.
    pub std: Vec<Option<f64>>,
    pub count: Vec<usize>,
    pub n_trials: usize,
    pub config_digest: String,
}

/// Interpolates each curve onto `grid` and aggregates pointwise. Grid points
/// outside a curve's x-range get no contribution from that curve.
pub fn aggregate_trials(curves: &[EvalCurve], grid: &[f64]) -> Result<TrialSummary> {
    if curves.is_empty() {
        return Err(Error::invalid("no curves to aggregate"));
    }
    if grid.is_empty() {
        return Err(Error::invalid("empty aggregation grid"));
    }
    let kind = curves[0].metric_kind();
    if curves.iter().any(|c| c.metric_kind() != kind) {
        return Err(Error::invalid("curves of different metrics cannot be aggregated"));
    }
    let mut mean = Vec::with_capacity(grid.len());
    let mut std = Vec::with_capacity(grid.len());
    let mut count = Vec::with_capacity(grid.len());
    for &x in grid {
        let ys: Vec<f64> = curves.iter().filter_map(|c| c.interpolate(x)).collect();
        let n = ys.len();
        count.push(n);
        if n == 0 {
            mean.push(None);
            std.push(None);
            continue;
        }
        let m = ys.iter().sum::<f64>() / n as f64;
        let var = if n > 1 { ys.iter().map(|y| (y - m).powi(2)).sum::<f64>() / (n - 1) as f64 } else { 0.0 };
        mean.push(Some(m));
        std.push(Some(var.sqrt()));
    }
    Ok(TrialSummary {
        metric_kind: kind,
        x_axis: curves[0].x_axis(),
        x: grid.to_vec(),
        mean,
        std,
        count,
        n_trials: curves.len(),
        config_digest: curves[0].config_digest().to_string(),
    })
}
