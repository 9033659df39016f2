//! Controlled edits of attribution maps: the value shifts used to show that
//! order-based metrics ignore magnitudes, the synthetic remove/introduce edits
//! with a known effect on soundness and completeness, and crafted image maps.

use rand::seq::index::sample as sample_indices;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::perturb::rank_features;
use crate::rng::SeedStream;
use crate::synthetic::OracleInfo;
use crate::types::{AttributionMap, Shape};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    Remove,
    Introduce,
}

/// A map modification, applied per sample with its own random stream.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModScheme {
    /// Shift every value by `delta` (down for remove, up for introduce), then clip to [0, 1].
    Constant { direction: Direction, delta: f64 },
    /// Shift every value by an independent U(lo, hi) draw, then clip to [0, 1].
    Random { lo: f64, hi: f64 },
    /// Zero or raise a fixed band of ranks.
    Partial { direction: Direction },
    /// Zero a random `fraction` of the attributed support.
    SynthRemove {
        #[serde(default = "default_remove_fraction")]
        fraction: f64,
    },
    /// Attribute U(0, magnitude] to a random `fraction` of the features outside
    /// both the attributed and the predictive set.
    SynthIntroduce {
        #[serde(default = "default_introduce_fraction")]
        fraction: f64,
        #[serde(default = "default_introduce_magnitude")]
        magnitude: f64,
    },
}

pub const DEFAULT_REMOVE_FRACTION: f64 = 0.3;
pub const DEFAULT_INTRODUCE_FRACTION: f64 = 0.3;
/// Large enough that introduced values compete with the top ground-truth values.
pub const DEFAULT_INTRODUCE_MAGNITUDE: f64 = 1.0;

fn default_remove_fraction() -> f64 {
    DEFAULT_REMOVE_FRACTION
}

fn default_introduce_fraction() -> f64 {
    DEFAULT_INTRODUCE_FRACTION
}

fn default_introduce_magnitude() -> f64 {
    DEFAULT_INTRODUCE_MAGNITUDE
}

impl ModScheme {
    /// Synthetic remove with the default fraction.
    pub fn synth_remove() -> Self {
        ModScheme::SynthRemove { fraction: DEFAULT_REMOVE_FRACTION }
    }

    /// Synthetic introduce with the default fraction and magnitude.
    pub fn synth_introduce() -> Self {
        ModScheme::SynthIntroduce { fraction: DEFAULT_INTRODUCE_FRACTION, magnitude: DEFAULT_INTRODUCE_MAGNITUDE }
    }

    pub fn name(&self) -> String {
        match self {
            ModScheme::Constant { direction: Direction::Remove, .. } => "constant_remove".into(),
            ModScheme::Constant { direction: Direction::Introduce, .. } => "constant_introduce".into(),
            ModScheme::Random { .. } => "random".into(),
            ModScheme::Partial { direction: Direction::Remove } => "partial_remove".into(),
            ModScheme::Partial { direction: Direction::Introduce } => "partial_introduce".into(),
            ModScheme::SynthRemove { .. } => "synth_remove".into(),
            ModScheme::SynthIntroduce { .. } => "synth_introduce".into(),
        }
    }

    /// `info` is required by the introduce scheme only.
    pub fn apply(&self, map: &AttributionMap, info: Option<&OracleInfo>, stream: SeedStream) -> Result<AttributionMap> {
        match *self {
            ModScheme::Constant { direction, delta } => modify_constant(map, delta, direction),
            ModScheme::Random { lo, hi } => modify_random(map, lo, hi, stream),
            ModScheme::Partial { direction } => modify_partial(map, direction),
            ModScheme::SynthRemove { fraction } => synth_remove(map, fraction, stream),
            ModScheme::SynthIntroduce { fraction, magnitude } => {
                let info = info.ok_or_else(|| Error::invalid("synth_introduce needs predictive information"))?;
                synth_introduce(map, info, fraction, magnitude, stream)
            }
        }
    }
}

fn finite(name: &str, v: f64) -> Result<()> {
    if !v.is_finite() {
        return Err(Error::invalid(format!("{name} must be finite")));
    }
    Ok(())
}

fn clipped(map: &AttributionMap, values: Vec<f64>) -> AttributionMap {
    let values = values.into_iter().map(|v| v.clamp(0.0, 1.0)).collect();
    AttributionMap::from_parts_unchecked(map.shape(), values, true)
}

pub fn modify_constant(map: &AttributionMap, delta: f64, direction: Direction) -> Result<AttributionMap> {
    finite("delta", delta)?;
    if delta < 0.0 {
        return Err(Error::invalid(format!("delta {delta} must be non-negative")));
    }
    let signed = match direction {
        Direction::Remove => -delta,
        Direction::Introduce => delta,
    };
    Ok(clipped(map, map.values().iter().map(|v| v + signed).collect()))
}

pub fn modify_random(map: &AttributionMap, lo: f64, hi: f64, stream: SeedStream) -> Result<AttributionMap> {
    finite("lo", lo)?;
    finite("hi", hi)?;
    if lo > hi {
        return Err(Error::invalid(format!("empty shift range [{lo}, {hi}]")));
    }
    let mut rng = stream.rng();
    let values = map.values().iter().map(|v| v + rng.random_range(lo..=hi)).collect();
    Ok(clipped(map, values))
}

/// `q`-quantile with linear interpolation between order statistics.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Remove zeroes ascending ranks `[0.6N, 0.8N)`; introduce sets ranks
/// `[0, 0.4N)` to the 0.8-quantile of the map.
pub fn modify_partial(map: &AttributionMap, direction: Direction) -> Result<AttributionMap> {
    let n = map.len();
    if n < 5 {
        return Err(Error::MapTooSmall(n));
    }
    let ranks = rank_features(map);
    let at = |f: f64| (f * n as f64).round() as usize;
    let mut values = map.values().to_vec();
    match direction {
        Direction::Remove => {
            for &i in &ranks[at(0.6)..at(0.8)] {
                values[i] = 0.0;
            }
        }
        Direction::Introduce => {
            let q = quantile(map.values(), 0.8);
            for &i in &ranks[..at(0.4)] {
                values[i] = q;
            }
        }
    }
    Ok(AttributionMap::from_parts_unchecked(map.shape(), values, map.is_normalized()))
}

fn check_fraction(fraction: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(Error::invalid(format!("fraction {fraction} outside [0, 1]")));
    }
    Ok(())
}

/// Zeroes `round(fraction·|A|)` uniformly chosen attributed features and
/// renormalizes.
pub fn synth_remove(map: &AttributionMap, fraction: f64, stream: SeedStream) -> Result<AttributionMap> {
    check_fraction(fraction)?;
    let support: Vec<usize> = map.support().collect();
    let k = (fraction * support.len() as f64).round() as usize;
    if k > 0 && k >= support.len() {
        return Err(Error::EmptySupport { removed: k, support: support.len() });
    }
    let mut values = map.values().to_vec();
    let mut rng = stream.rng();
    for pick in sample_indices(&mut rng, support.len(), k) {
        values[support[pick]] = 0.0;
    }
    Ok(AttributionMap::from_parts_unchecked(map.shape(), values, false).normalize())
}

/// Gives `round(fraction·|C|)` uniformly chosen features of
/// `C = complement of (A ∪ I)` a value drawn from U(0, magnitude], then
/// renormalizes.
pub fn synth_introduce(
    map: &AttributionMap,
    info: &OracleInfo,
    fraction: f64,
    magnitude: f64,
    stream: SeedStream,
) -> Result<AttributionMap> {
    check_fraction(fraction)?;
    finite("magnitude", magnitude)?;
    if magnitude <= 0.0 {
        return Err(Error::invalid(format!("magnitude {magnitude} must be positive")));
    }
    if info.phi().len() != map.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} information values for a map of {}",
            info.phi().len(),
            map.len()
        )));
    }
    let candidates: Vec<usize> =
        (0..map.len()).filter(|&i| map.values()[i] == 0.0 && !info.is_predictive(i)).collect();
    let k = (fraction * candidates.len() as f64).round() as usize;
    let mut values = map.values().to_vec();
    let mut rng = stream.rng();
    for pick in sample_indices(&mut rng, candidates.len(), k) {
        // 1 - U[0, 1) lies in (0, 1]
        values[candidates[pick]] = magnitude * (1.0 - rng.random::<f64>());
    }
    Ok(AttributionMap::from_parts_unchecked(map.shape(), values, false).normalize())
}

fn grid_dims(map: &AttributionMap) -> Result<(usize, usize, usize)> {
    match map.shape() {
        Shape::Grid { height, width, channels } => Ok((height, width, channels)),
        s => Err(Error::ShapeMismatch(format!("crafted maps need a grid, got {s}"))),
    }
}

/// Attribution-weighted centroid `(row, col)` over all channels.
pub fn centroid(map: &AttributionMap) -> Result<(f64, f64)> {
    let (h, w, c) = grid_dims(map)?;
    let v = map.values();
    let (mut total, mut rs, mut cs) = (0.0, 0.0, 0.0);
    for r in 0..h {
        for col in 0..w {
            let m: f64 = (0..c).map(|ch| v[(r * w + col) * c + ch]).sum();
            total += m;
            rs += m * r as f64;
            cs += m * col as f64;
        }
    }
    if total <= 0.0 {
        return Err(Error::UndefinedCentroid);
    }
    Ok((rs / total, cs / total))
}

/// A `rect_h × rect_w` block of ones centred on the map's centroid, clipped
/// to the grid, zero elsewhere.
pub fn craft_rect(map: &AttributionMap, rect_h: usize, rect_w: usize) -> Result<AttributionMap> {
    let (h, w, c) = grid_dims(map)?;
    if rect_h == 0 || rect_w == 0 {
        return Err(Error::invalid("rectangle sides must be positive"));
    }
    let (rc, cc) = centroid(map)?;
    let top = (rc - (rect_h as f64 - 1.0) / 2.0).round() as isize;
    let left = (cc - (rect_w as f64 - 1.0) / 2.0).round() as isize;
    let rows = top.max(0) as usize..((top + rect_h as isize).max(0) as usize).min(h);
    let cols = left.max(0) as usize..((left + rect_w as isize).max(0) as usize).min(w);
    let mut values = vec![0.0; h * w * c];
    for r in rows {
        for col in cols.clone() {
            for ch in 0..c {
                values[(r * w + col) * c + ch] = 1.0;
            }
        }
    }
    Ok(AttributionMap::from_parts_unchecked(map.shape(), values, true))
}

/// Splits the rows into `n_regions` horizontal bands of `H / n_regions` rows
/// (the last band takes the remainder) and replaces each band by its mean.
pub fn craft_pooling(map: &AttributionMap, n_regions: usize) -> Result<AttributionMap> {
    let (h, w, c) = grid_dims(map)?;
    if n_regions == 0 || n_regions > h {
        return Err(Error::invalid(format!("{n_regions} regions for {h} rows")));
    }
    let band = h / n_regions;
    let stride = w * c;
    let v = map.values();
    let mut values = vec![0.0; v.len()];
    for b in 0..n_regions {
        let start = b * band * stride;
        let end = if b + 1 == n_regions { h * stride } else { (b + 1) * band * stride };
        let mean = v[start..end].iter().sum::<f64>() / (end - start) as f64;
        values[start..end].fill(mean);
    }
    Ok(AttributionMap::from_parts_unchecked(map.shape(), values, map.is_normalized()))
}
