use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, FormatError, Result};
use crate::model::Model;
use crate::types::Sample;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    Relu,
    Identity,
}

/// One dense layer: `act(W x + b)` with `W` stored as `out` rows of `in` columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layer {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub activation: Activation,
}

/// Weights of a fully connected network with a softmax output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MlpWeights {
    pub layers: Vec<Layer>,
}

impl MlpWeights {
    pub fn validate(&self) -> Result<()> {
        if self.layers.is_empty() {
            return Err(Error::invalid("network has no layers"));
        }
        let mut width: Option<usize> = None;
        for (k, layer) in self.layers.iter().enumerate() {
            let out = layer.weights.len();
            if out == 0 || layer.bias.len() != out {
                return Err(Error::ShapeMismatch(format!("layer {k}: {out} rows, {} biases", layer.bias.len())));
            }
            let inp = layer.weights[0].len();
            if layer.weights.iter().any(|row| row.len() != inp) {
                return Err(Error::ShapeMismatch(format!("layer {k}: ragged weight rows")));
            }
            if width.is_some_and(|w| w != inp) {
                return Err(Error::ShapeMismatch(format!("layer {k} expects {inp} inputs, previous layer gives {}", width.unwrap())));
            }
            if layer.weights.iter().flatten().chain(&layer.bias).any(|v| !v.is_finite()) {
                return Err(Error::invalid(format!("layer {k} holds non-finite weights")));
            }
            width = Some(out);
        }
        Ok(())
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights[0].len()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(0, |l| l.weights.len())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let w: MlpWeights = serde_json::from_str(text).map_err(|e| FormatError::Json(e.to_string()))?;
        w.validate()?;
        Ok(w)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        MlpWeights::from_json(&text)
    }
}

/// Numerically stable softmax.
pub fn softmax(z: &[f64]) -> Vec<f64> {
    let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
    let s: f64 = e.iter().sum();
    e.into_iter().map(|v| v / s).collect()
}

/// Forward pass for a single input; each sample is computed independently,
/// so batching never changes the result.
pub fn mlp_forward(weights: &MlpWeights, x: &[f64]) -> Result<Vec<f64>> {
    if x.len() != weights.input_dim() {
        return Err(Error::ShapeMismatch(format!("network expects {} inputs, got {}", weights.input_dim(), x.len())));
    }
    let mut h = x.to_vec();
    for layer in &weights.layers {
        h = layer
            .weights
            .iter()
            .zip(&layer.bias)
            .map(|(row, b)| {
                let z = row.iter().zip(&h).map(|(w, v)| w * v).sum::<f64>() + b;
                match layer.activation {
                    Activation::Relu => z.max(0.0),
                    Activation::Identity => z,
                }
            })
            .collect();
    }
    Ok(softmax(&h))
}

pub fn mlp_predict(weights: &MlpWeights, batch: &[Sample]) -> Result<Vec<Vec<f64>>> {
    batch.iter().map(|s| mlp_forward(weights, s.features())).collect()
}

#[derive(Clone, Debug)]
pub struct MlpModel {
    weights: MlpWeights,
}

impl MlpModel {
    pub fn new(weights: MlpWeights) -> Result<Self> {
        weights.validate()?;
        Ok(MlpModel { weights })
    }

    pub fn weights(&self) -> &MlpWeights {
        &self.weights
    }
}

impl Model for MlpModel {
    fn n_classes(&self) -> usize {
        self.weights.output_dim()
    }

    fn predict_probs(&self, samples: &[Sample]) -> Result<Vec<Vec<f64>>> {
        mlp_predict(&self.weights, samples)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn net() -> MlpWeights {
        MlpWeights {
            layers: vec![
                Layer { weights: vec![vec![1.0, -1.0], vec![-1.0, 1.0]], bias: vec![0.0, 0.0], activation: Activation::Relu },
                Layer { weights: vec![vec![1.0, 0.0], vec![0.0, 1.0]], bias: vec![0.0, 0.0], activation: Activation::Identity },
            ],
        }
    }

    #[test]
    fn forward_matches_hand_computation() {
        let p = mlp_forward(&net(), &[2.0, 1.0]).unwrap();
        // hidden = [1, 0]; softmax([1, 0])
        let e = 1f64.exp();
        assert!((p[0] - e / (e + 1.0)).abs() < 1e-15);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn batching_is_invariant() {
        let m = MlpModel::new(net()).unwrap();
        let xs: Vec<Sample> = (0..5).map(|i| Sample::flat(i, vec![i as f64, 1.0 - i as f64]).unwrap()).collect();
        let all = m.predict_probs(&xs).unwrap();
        let single: Vec<Vec<f64>> = xs.iter().flat_map(|x| m.predict_probs(std::slice::from_ref(x)).unwrap()).collect();
        assert_eq!(all, single);
    }

    #[test]
    fn shape_checks() {
        let mut w = net();
        w.layers[1].weights[0].push(1.0);
        assert!(w.validate().is_err());
        assert!(mlp_forward(&net(), &[1.0]).is_err());
        let json = serde_json::to_string(&net()).unwrap();
        assert_eq!(MlpWeights::from_json(&json).unwrap(), net());
    }
}
