//! CSV and JSON exports of curves and trial summaries.
//!
//! CSV files start with a `#` line carrying the metric, axis, config digest
//! and seed, then a header row `<axis>,<metric>[,std,n]`. Missing summary
//! values are left empty.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::config::OutputFormat;
use super::write_atomic;
use crate::analysis::TrialSummary;
use crate::error::{Error, FormatError, Result};
use crate::types::{EvalCurve, MetricKind, XAxis};

#[derive(Clone, Copy, Debug)]
pub enum PlotData<'a> {
    Curve(&'a EvalCurve),
    Summary(&'a TrialSummary),
}

/// The JSON export, also the exchange format of the command-line tool.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlotFile {
    pub metric_kind: MetricKind,
    pub x_axis: XAxis,
    pub config_digest: String,
    pub seed: Option<u64>,
    pub x: Vec<f64>,
    pub y: Vec<Option<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std: Option<Vec<Option<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<Vec<usize>>,
}

impl PlotFile {
    pub fn new(data: PlotData<'_>, seed: Option<u64>) -> Self {
        match data {
            PlotData::Curve(c) => PlotFile {
                metric_kind: c.metric_kind(),
                x_axis: c.x_axis(),
                config_digest: c.config_digest().to_string(),
                seed,
                x: c.xs().collect(),
                y: c.ys().map(Some).collect(),
                std: None,
                n: None,
            },
            PlotData::Summary(s) => PlotFile {
                metric_kind: s.metric_kind,
                x_axis: s.x_axis,
                config_digest: s.config_digest.clone(),
                seed,
                x: s.x.clone(),
                y: s.mean.clone(),
                std: Some(s.std.clone()),
                n: Some(s.count.clone()),
            },
        }
    }

    pub fn is_summary(&self) -> bool {
        self.std.is_some()
    }

    /// Back to a curve; fails for summaries with uncovered grid points.
    pub fn to_curve(&self) -> Result<EvalCurve> {
        let pts = self
            .x
            .iter()
            .zip(&self.y)
            .map(|(&x, y)| y.map(|y| (x, y)).ok_or_else(|| Error::invalid(format!("no value at x = {x}"))))
            .collect::<Result<Vec<_>>>()?;
        Ok(EvalCurve::new(self.metric_kind, self.x_axis, pts)?.with_digest(self.config_digest.clone()))
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let seed = self.seed.map_or_else(String::new, |s| s.to_string());
        writeln!(
            out,
            "# metric={} axis={} digest={} seed={}",
            self.metric_kind, self.x_axis, self.config_digest, seed
        )
        .unwrap();
        let cell = |v: Option<f64>| v.map_or_else(String::new, |v| v.to_string());
        match (&self.std, &self.n) {
            (Some(std), Some(n)) => {
                writeln!(out, "{},{},std,n", self.x_axis, self.metric_kind).unwrap();
                for i in 0..self.x.len() {
                    writeln!(out, "{},{},{},{}", self.x[i], cell(self.y[i]), cell(std[i]), n[i]).unwrap();
                }
            }
            _ => {
                writeln!(out, "{},{}", self.x_axis, self.metric_kind).unwrap();
                for (x, y) in self.x.iter().zip(&self.y) {
                    writeln!(out, "{},{}", x, cell(*y)).unwrap();
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("plot data serializes");
        s.push('\n');
        s
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()).into())
    }
}

pub fn emit_plot_data(data: PlotData<'_>, seed: Option<u64>, path: &Path, format: OutputFormat) -> Result<()> {
    let file = PlotFile::new(data, seed);
    let text = match format {
        OutputFormat::Csv => file.to_csv(),
        OutputFormat::Json => file.to_json(),
    };
    write_atomic(path, text.as_bytes())
}

pub fn read_plot_json(path: &Path) -> Result<PlotFile> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    PlotFile::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::analysis::aggregate_trials;

    fn curve() -> EvalCurve {
        EvalCurve::new(MetricKind::Deletion, XAxis::RemovedFraction, vec![(0.0, 1.0), (0.5, 1.0), (1.0, 1.0)])
            .unwrap()
            .with_digest("abc")
    }

    #[test]
    fn curve_csv_has_two_columns() {
        let csv = PlotFile::new(PlotData::Curve(&curve()), Some(7)).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# metric=deletion axis=removed_fraction digest=abc seed=7");
        assert_eq!(lines[1], "removed_fraction,deletion");
        assert!(lines[2..].iter().all(|l| l.split(',').count() == 2));
    }

    #[test]
    fn summary_csv_has_four_columns() {
        let s = aggregate_trials(&[curve(), curve()], &[0.0, 0.5, 1.0]).unwrap();
        let csv = PlotFile::new(PlotData::Summary(&s), None).to_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[1], "removed_fraction,deletion,std,n");
        assert_eq!(lines[2], "0,1,0,2");
    }

    #[test]
    fn json_round_trip() {
        let f = PlotFile::new(PlotData::Curve(&curve()), Some(1));
        let back = PlotFile::from_json(&f.to_json()).unwrap();
        assert_eq!(back, f);
        assert_eq!(back.to_curve().unwrap(), curve());
    }
}
