use crate::error::{Error, Result};
use crate::types::EvalCurve;

/// Trapezoidal area divided by the x span.
pub fn auc(curve: &EvalCurve) -> Result<f64> {
    let pts: Vec<(f64, f64)> = curve.points().iter().map(|p| (p.x, p.y)).collect();
    auc_points(&pts)
}

/// [`auc`] on raw points, which are sorted by x first. Duplicate x values are rejected.
pub fn auc_points(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("area under curve needs at least two points"));
    }
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    if let Some(w) = pts.windows(2).find(|w| w[0].0 == w[1].0) {
        return Err(Error::invalid(format!("duplicate x value {}", w[0].0)));
    }
    let area: f64 = pts.windows(2).map(|w| (w[1].0 - w[0].0) * (w[0].1 + w[1].1) / 2.0).sum();
    Ok(area / (pts[pts.len() - 1].0 - pts[0].0))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn examples() {
        assert!((auc_points(&[(0.0, 1.0), (1.0, 0.0)]).unwrap() - 0.5).abs() < 1e-15);
        assert!((auc_points(&[(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)]).unwrap() - 1.0).abs() < 1e-15);
        assert!((auc_points(&[(0.2, 0.0), (0.4, 1.0)]).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn duplicate_x_is_an_error() {
        assert!(auc_points(&[(0.0, 1.0), (0.0, 0.5)]).is_err());
        assert!(auc_points(&[(0.0, 1.0)]).is_err());
    }
}
