use log::warn;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeedStream;
use crate::types::{Dataset, Mask, Sample, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ImputerKind {
    /// Per-feature dataset mean.
    Mean,
    /// Constant zero.
    Zero,
    /// Weighted average of the 8 grid neighbours, solved jointly.
    NoisyLinear,
}

/// Standard deviation of the Gaussian noise added to imputed features.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseScale {
    Std(f64),
    /// Fraction of the dataset's global value range.
    RangeFraction(f64),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Imputer {
    pub kind: ImputerKind,
    pub noise: NoiseScale,
}

impl Default for Imputer {
    fn default() -> Self {
        Imputer { kind: ImputerKind::Mean, noise: NoiseScale::RangeFraction(0.01) }
    }
}

impl Imputer {
    pub fn new(kind: ImputerKind, noise: NoiseScale) -> Self {
        Imputer { kind, noise }
    }

    /// Noisy-linear for grids, mean otherwise, with 1% range noise.
    pub fn for_shape(shape: Shape) -> Self {
        let kind = if shape.is_grid() { ImputerKind::NoisyLinear } else { ImputerKind::Mean };
        Imputer { kind, noise: NoiseScale::RangeFraction(0.01) }
    }

    /// Zero fill without noise, as used by the plain deletion/insertion metrics.
    pub fn zero() -> Self {
        Imputer { kind: ImputerKind::Zero, noise: NoiseScale::Std(0.0) }
    }

    pub fn validate(&self, shape: Shape) -> Result<()> {
        let s = match self.noise {
            NoiseScale::Std(s) | NoiseScale::RangeFraction(s) => s,
        };
        if !s.is_finite() || s < 0.0 {
            return Err(Error::invalid(format!("noise scale {s} must be finite and non-negative")));
        }
        if self.kind == ImputerKind::NoisyLinear && !shape.is_grid() {
            return Err(Error::invalid("noisy_linear imputation requires grid-shaped samples"));
        }
        Ok(())
    }

    pub fn noise_std(&self, dataset: &Dataset) -> f64 {
        match self.noise {
            NoiseScale::Std(s) => s,
            NoiseScale::RangeFraction(f) => {
                let (lo, hi) = dataset.value_range();
                f * (hi - lo)
            }
        }
    }

    /// Fills the masked features of `x`. Identical inputs and streams give
    /// identical outputs.
    pub fn apply(&self, x: &Sample, mask: &Mask, means: &[f64], noise_std: f64, stream: SeedStream) -> Result<Sample> {
        check_mask(x, mask)?;
        match self.kind {
            ImputerKind::Mean => {
                if means.len() != x.len() {
                    return Err(Error::ShapeMismatch(format!("{} means for {} features", means.len(), x.len())));
                }
                fill(x, mask, |i| means[i], noise_std, stream)
            }
            ImputerKind::Zero => fill(x, mask, |_| 0.0, noise_std, stream),
            ImputerKind::NoisyLinear => impute_grid(x, mask, noise_std, stream),
        }
    }
}

fn check_mask(x: &Sample, mask: &Mask) -> Result<()> {
    if mask.len() != x.len() {
        return Err(Error::ShapeMismatch(format!("mask of {} for {} features", mask.len(), x.len())));
    }
    Ok(())
}

/// One N(0, std²) draw per feature, in feature order. Drawing the full vector
/// keeps the noise of feature `i` independent of which other features are masked.
fn noise_vector(stream: SeedStream, d: usize, std: f64) -> Vec<f64> {
    let mut rng = stream.rng();
    (0..d).map(|_| std * rng.sample::<f64, _>(StandardNormal)).collect()
}

fn fill(x: &Sample, mask: &Mask, base: impl Fn(usize) -> f64, noise_std: f64, stream: SeedStream) -> Result<Sample> {
    let noise = (noise_std > 0.0).then(|| noise_vector(stream, x.len(), noise_std));
    let mut out = x.features().to_vec();
    for i in mask.indices() {
        out[i] = base(i) + noise.as_ref().map_or(0.0, |n| n[i]);
    }
    x.with_features(out)
}

/// Masked features become the feature mean plus Gaussian noise.
pub fn impute_tabular(x: &Sample, mask: &Mask, means: &[f64], noise_std: f64, stream: SeedStream) -> Result<Sample> {
    if x.shape().is_grid() {
        return Err(Error::ShapeMismatch(format!("tabular imputation on {}", x.shape())));
    }
    Imputer::new(ImputerKind::Mean, NoiseScale::Std(noise_std)).apply(x, mask, means, noise_std, stream)
}

const DIRECT: f64 = 1.0 / 6.0;
const DIAGONAL: f64 = 1.0 / 12.0;
const NEIGHBOURS: [(isize, isize, f64); 8] = [
    (-1, 0, DIRECT),
    (1, 0, DIRECT),
    (0, -1, DIRECT),
    (0, 1, DIRECT),
    (-1, -1, DIAGONAL),
    (-1, 1, DIAGONAL),
    (1, -1, DIAGONAL),
    (1, 1, DIAGONAL),
];

/// In-bounds neighbours of `(r, c)` with their weights.
fn grid_neighbours(h: usize, w: usize, r: usize, c: usize) -> impl Iterator<Item = (usize, usize, f64)> {
    NEIGHBOURS.iter().filter_map(move |&(dr, dc, wt)| {
        let nr = r as isize + dr;
        let nc = c as isize + dc;
        (nr >= 0 && nc >= 0 && (nr as usize) < h && (nc as usize) < w).then(|| (nr as usize, nc as usize, wt))
    })
}

/// Each masked pixel becomes the weighted average of its neighbours (1/6
/// direct, 1/12 diagonal, renormalized at borders), solved jointly per
/// channel, plus Gaussian noise on the imputed pixels.
pub fn impute_grid(x: &Sample, mask: &Mask, noise_std: f64, stream: SeedStream) -> Result<Sample> {
    check_mask(x, mask)?;
    let Shape::Grid { height, width, channels } = x.shape() else {
        return Err(Error::invalid("noisy_linear imputation requires grid-shaped samples"));
    };
    let mut out = x.features().to_vec();
    for ch in 0..channels {
        solve_channel(&mut out, mask.as_slice(), height, width, channels, ch)?;
    }
    if noise_std > 0.0 {
        let noise = noise_vector(stream, x.len(), noise_std);
        for i in mask.indices() {
            out[i] += noise[i];
        }
    }
    x.with_features(out)
}

/// Sparse symmetric system for the unknown pixels of one channel:
/// `s_p u_p - Σ w_pq u_q = Σ w_pk v_k`, where `s_p` is the in-bounds weight sum.
struct Laplacian {
    diag: Vec<f64>,
    offsets: Vec<usize>,
    cols: Vec<usize>,
    weights: Vec<f64>,
}

impl Laplacian {
    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (i, o) in out.iter_mut().enumerate() {
            let mut acc = self.diag[i] * v[i];
            for k in self.offsets[i]..self.offsets[i + 1] {
                acc -= self.weights[k] * v[self.cols[k]];
            }
            *o = acc;
        }
    }
}

fn solve_channel(out: &mut [f64], mask: &[bool], h: usize, w: usize, channels: usize, ch: usize) -> Result<()> {
    let idx = |r: usize, c: usize| (r * w + c) * channels + ch;
    let mut slot = vec![usize::MAX; h * w];
    let mut unknown = Vec::new();
    for r in 0..h {
        for c in 0..w {
            if mask[idx(r, c)] {
                slot[r * w + c] = unknown.len();
                unknown.push((r, c));
            }
        }
    }
    if unknown.is_empty() {
        return Ok(());
    }
    if unknown.len() == h * w {
        warn!("channel {ch} is fully masked; imputing zeros");
        for &(r, c) in &unknown {
            out[idx(r, c)] = 0.0;
        }
        return Ok(());
    }

    // solve for deviations from one known pixel so constant fields come back exactly
    let anchor = (0..h * w).find(|&p| slot[p] == usize::MAX).map(|p| out[p * channels + ch]).expect("a known pixel");
    let n = unknown.len();
    let mut sys = Laplacian { diag: vec![0.0; n], offsets: vec![0], cols: Vec::new(), weights: Vec::new() };
    let mut rhs = vec![0.0; n];
    for (i, &(r, c)) in unknown.iter().enumerate() {
        for (nr, nc, wt) in grid_neighbours(h, w, r, c) {
            sys.diag[i] += wt;
            match slot[nr * w + nc] {
                usize::MAX => rhs[i] += wt * (out[idx(nr, nc)] - anchor),
                j => {
                    sys.cols.push(j);
                    sys.weights.push(wt);
                }
            }
        }
        sys.offsets.push(sys.cols.len());
    }

    let u = conjugate_gradient(&sys, &rhs);
    for (&(r, c), v) in unknown.iter().zip(u) {
        out[idx(r, c)] = anchor + v;
    }
    Ok(())
}

/// Jacobi-preconditioned conjugate gradient. The system is symmetric positive
/// definite whenever at least one pixel of the channel is known.
fn conjugate_gradient(sys: &Laplacian, b: &[f64]) -> Vec<f64> {
    let n = b.len();
    // start from the border-weighted average of known neighbours
    let mut x: Vec<f64> = b.iter().zip(&sys.diag).map(|(bi, d)| bi / d).collect();
    let mut ax = vec![0.0; n];
    sys.apply(&x, &mut ax);
    let mut r: Vec<f64> = b.iter().zip(&ax).map(|(bi, a)| bi - a).collect();
    let mut z: Vec<f64> = r.iter().zip(&sys.diag).map(|(ri, d)| ri / d).collect();
    let mut p = z.clone();
    let mut rz: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
    let scale = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(1.0);
    let tol = 1e-14 * scale;
    let mut ap = vec![0.0; n];
    for _ in 0..(20 * n + 200) {
        let rnorm = r.iter().map(|v| v * v).sum::<f64>().sqrt();
        if rnorm <= tol {
            break;
        }
        sys.apply(&p, &mut ap);
        let pap: f64 = p.iter().zip(&ap).map(|(a, b)| a * b).sum();
        if pap <= 0.0 {
            break;
        }
        let alpha = rz / pap;
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        for i in 0..n {
            z[i] = r[i] / sys.diag[i];
        }
        let rz_next: f64 = r.iter().zip(&z).map(|(a, b)| a * b).sum();
        let beta = rz_next / rz;
        rz = rz_next;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    x
}
