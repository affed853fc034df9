//! Neural building blocks as functions over tape values.

mod dense;
mod dropout;
mod graph_conv;
mod latent;
mod lstm;
mod pool;
mod set2set;

pub use dense::{log_softmax, softmax, Linear};
pub use dropout::dropout;
pub use graph_conv::{adjacency, GraphConv};
pub use latent::{reparameterize, LatentState};
pub use lstm::{LstmCell, GATES};
pub use pool::global_mean_pool;
pub use set2set::{Set2Set, Set2SetOutput};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::autodiff::Tensor;

/// Train mode samples latent noise and applies dropout; eval mode does neither.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

/// Uniform in `±sqrt(6 / (fan_in + fan_out))`.
pub fn glorot_uniform<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> Tensor {
    let bound = (6.0 / (rows + cols) as f64).sqrt();
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(-bound..=bound))
}
