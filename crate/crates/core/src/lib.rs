//! Faithfulness evaluation for feature attribution maps.
//!
//! The crate measures how well an attribution map reflects what a classifier
//! actually uses:
//!
//! * [`metrics::soundness_curve`] reveals features from most to least
//!   attributed and tracks how much of the attributed mass was revealed
//!   without improving accuracy.
//! * [`metrics::completeness_curve`] removes everything attributed above a
//!   threshold and records the accuracy drop.
//! * [`metrics::order_based_curve`] provides the deletion, insertion and ROAD
//!   baselines, which only look at the rank order of a map.
//!
//! A synthetic world with a known ground truth ([`synthetic`]) and controlled
//! map edits ([`modify`]) make it possible to validate the metrics. Curves are
//! compared with a normalized Hausdorff distance ([`analysis`]), and
//! [`io`] covers the binary container, JSON configs and the experiment runner.

pub mod analysis;
pub mod error;
pub mod io;
pub mod metrics;
pub mod model;
pub mod models;
pub mod modify;
pub mod perturb;
pub mod rng;
pub mod synthetic;
pub mod types;

pub use error::{BridgeError, Error, FormatError, Result};
pub use model::{accuracy, argmax, Exec, Model};
pub use rng::SeedStream;
pub use types::{
    normalize_attribution, weighted_size, AttributionMap, CurvePoint, Dataset, EvalCurve, Mask, MetricKind, Sample,
    Shape, XAxis,
};
