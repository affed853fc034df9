//! Graph learning with a two-branch variational graph network: a GraphConv
//! encoder feeding a variational bottleneck, a recognition head over the
//! mean-pooled latent, and a prediction head over a Set2Set readout.

pub mod autodiff;
pub mod error;
pub mod gradsuite;
pub mod graph;
pub mod layers;
pub mod model;
pub mod synth;
pub mod training;

pub use error::{Error, Result};
