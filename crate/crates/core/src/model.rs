//! The model abstraction and batched, parallel accuracy evaluation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::types::Sample;

/// A classifier returning one probability vector per sample.
pub trait Model: Send + Sync {
    fn n_classes(&self) -> usize;

    fn predict_probs(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>>;

    /// Models that wrap a single external process answer one batch at a time.
    fn is_serial(&self) -> bool {
        false
    }
}

/// Index of the largest entry; ties resolve to the lowest index.
pub fn argmax(probs: &[f64]) -> usize {
    let mut best = 0;
    for (i, &p) in probs.iter().enumerate().skip(1) {
        if p > probs[best] {
            best = i;
        }
    }
    best
}

/// Checks that each row is a finite, non-negative vector summing to 1 within `tol`.
pub fn check_probabilities(rows: &[Vec<f64>], n_classes: usize, tol: f64) -> Result<()> {
    for (r, row) in rows.iter().enumerate() {
        if row.len() != n_classes {
            return Err(Error::InvalidProbabilities(format!(
                "row {r} has {} entries, expected {n_classes}",
                row.len()
            )));
        }
        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidProbabilities(format!("row {r} holds a negative or non-finite entry")));
        }
        let sum: f64 = row.iter().sum();
        if (sum - 1.0).abs() > tol {
            return Err(Error::InvalidProbabilities(format!("row {r} sums to {sum}")));
        }
    }
    Ok(())
}

/// Worker count and batch size for model evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct Exec {
    pub workers: usize,
    pub batch_size: usize,
}

impl Default for Exec {
    fn default() -> Self {
        Exec { workers: 1, batch_size: 256 }
    }
}

impl Exec {
    pub fn new(workers: usize, batch_size: usize) -> Self {
        Exec { workers, batch_size }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        if self.workers == 0 || self.batch_size == 0 {
            return Err(Error::invalid("workers and batch_size must be positive"));
        }
        Ok(())
    }

    /// Runs `f` inside a pool of `workers` threads.
    pub fn install<T: Send>(&self, f: impl FnOnce() -> T + Send) -> Result<T> {
        self.validate()?;
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(self.workers)
            .build()
            .map_err(|e| Error::Pool(e.to_string()))?;
        Ok(pool.install(f))
    }

    /// Maps `f` over `items` in parallel, preserving order.
    pub fn map<I: Sync, T: Send>(&self, items: &[I], f: impl Fn(&I) -> Result<T> + Sync + Send) -> Result<Vec<T>> {
        if self.workers == 1 {
            self.validate()?;
            return items.iter().map(f).collect();
        }
        self.install(|| items.par_iter().map(&f).collect::<Result<Vec<T>>>())?
    }

    /// Number of samples whose argmax equals the label. Counting happens in
    /// integers, so the result does not depend on how batches are scheduled.
    pub fn count_correct(&self, model: &dyn Model, samples: &[Sample], labels: &[usize]) -> Result<usize> {
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
        self.validate()?;
        let batch = |(xs, ys): (&[Sample], &[usize])| -> Result<usize> {
            let probs = model.predict_probs(xs)?;
            if probs.len() != xs.len() {
                return Err(Error::InvalidProbabilities(format!(
                    "model returned {} rows for {} samples",
                    probs.len(),
                    xs.len()
                )));
            }
            check_probabilities(&probs, model.n_classes(), 1e-6)?;
            Ok(probs.iter().zip(ys).filter(|(p, &y)| argmax(p) == y).count())
        };
        let chunks: Vec<(&[Sample], &[usize])> =
            samples.chunks(self.batch_size).zip(labels.chunks(self.batch_size)).collect();
        let counts: Vec<usize> = if model.is_serial() || self.workers == 1 {
            chunks.into_iter().map(batch).collect::<Result<_>>()?
        } else {
            self.install(|| chunks.into_par_iter().map(batch).collect::<Result<Vec<usize>>>())??
        };
        Ok(counts.into_iter().sum())
    }

    pub fn accuracy(&self, model: &dyn Model, samples: &[Sample], labels: &[usize]) -> Result<f64> {
        let correct = self.count_correct(model, samples, labels)?;
        Ok(correct as f64 / samples.len() as f64)
    }
}

/// Top-1 accuracy with a single worker.
pub fn accuracy(model: &dyn Model, samples: &[Sample], labels: &[usize]) -> Result<f64> {
    Exec::default().accuracy(model, samples, labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    struct FirstFeature;

    impl Model for FirstFeature {
        fn n_classes(&self) -> usize {
            2
        }

        fn predict_probs(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
            Ok(samples
                .iter()
                .map(|s| if s.features()[0] > 0.0 { vec![0.0, 1.0] } else { vec![1.0, 0.0] })
                .collect())
        }
    }

    #[test]
    fn argmax_ties_go_low() {
        assert_eq!(argmax(&[0.5, 0.5]), 0);
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
    }

    #[test]
    fn accuracy_counts_matches() {
        let xs: Vec<Sample> = (0..10).map(|i| Sample::flat(i, vec![i as f64 - 4.5]).unwrap()).collect();
        let ys: Vec<usize> = (0..10).map(|i| usize::from(i % 2 == 0)).collect();
        let serial = accuracy(&FirstFeature, &xs, &ys).unwrap();
        let par = Exec::new(4, 3).accuracy(&FirstFeature, &xs, &ys).unwrap();
        assert_eq!(serial, 0.4);
        assert_eq!(serial.to_bits(), par.to_bits());
    }

    #[test]
    fn empty_set_is_an_error() {
        assert!(matches!(accuracy(&FirstFeature, &[], &[]), Err(Error::EmptyEvaluationSet)));
    }

    #[test]
    fn probability_checks() {
        assert!(check_probabilities(&[vec![0.5, 0.5]], 2, 1e-6).is_ok());
        assert!(check_probabilities(&[vec![0.5, 0.6]], 2, 1e-6).is_err());
        assert!(check_probabilities(&[vec![1.0]], 2, 1e-6).is_err());
        assert!(check_probabilities(&[vec![-0.1, 1.1]], 2, 1e-6).is_err());
    }
}
