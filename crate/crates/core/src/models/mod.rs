//! Concrete classifiers: an in-process MLP and a bridge to an external process.

mod external;
mod mlp;

pub use external::{external_model_call, ExternalModel, ExternalModelSpec};
pub use mlp::{mlp_forward, mlp_predict, softmax, Activation, Layer, MlpModel, MlpWeights};
