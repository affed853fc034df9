//! `gnet gradcheck`: finite differences against the full model loss.

use std::fs;
use std::io::Write;
use std::path::Path;

use gnet::autodiff::{finite_difference_check_with, GradCheckReport};
use gnet::graph::Graph;
use gnet::layers::Mode;
use gnet::model::{gnet_loss, GNetConfig, GNetModel};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::{CliError, Result};

/// Largest accepted relative error for a passing check.
pub const GRADCHECK_TOLERANCE: f64 = 1e-4;

/// A small model and one sample. Defaults give a 4-node cycle with three
/// node classes and a joint model with three output classes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GradcheckConfig {
    pub node_classes: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub recognition_label: usize,
    pub prediction_label: usize,
    pub classes: usize,
    pub w1: usize,
    pub w2: usize,
    pub d_z: usize,
    pub set2set_steps: usize,
    pub dropout: f64,
    pub recognition: bool,
    pub prediction: bool,
    pub kl_weight: f64,
    /// Eval by default. Train mode draws the latent noise and dropout masks
    /// from `noise_seed` afresh for each evaluation, so they stay fixed.
    pub mode: Mode,
    pub init_seed: u64,
    pub noise_seed: u64,
}

impl Default for GradcheckConfig {
    fn default() -> Self {
        GradcheckConfig {
            node_classes: vec![0, 1, 2, 1],
            edges: vec![(0, 1), (1, 2), (2, 3), (3, 0)],
            recognition_label: 1,
            prediction_label: 2,
            classes: 3,
            w1: 5,
            w2: 4,
            d_z: 3,
            set2set_steps: 3,
            dropout: 0.5,
            recognition: true,
            prediction: true,
            kl_weight: 1.0,
            mode: Mode::Eval,
            init_seed: 0,
            noise_seed: 0,
        }
    }
}

impl GradcheckConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
    }

    pub fn model_config(&self) -> GNetConfig {
        let d_in = self.node_classes.iter().max().map_or(1, |m| m + 1);
        GNetConfig {
            d_in,
            w1: self.w1,
            w2: self.w2,
            d_z: self.d_z,
            num_classes: self.classes,
            set2set_steps: self.set2set_steps,
            dropout: self.dropout,
            recognition: self.recognition,
            prediction: self.prediction,
            kl_weight: self.kl_weight,
        }
    }
}

/// Runs the check and prints the worst entry. `corrupt_backward` scales the
/// ReLU backward pass on the analytic tape; it exists to prove the check can
/// fail.
pub fn cmd_gradcheck(
    config: &GradcheckConfig,
    eps: f64,
    corrupt_backward: Option<f64>,
    out: &mut dyn Write,
) -> Result<GradCheckReport> {
    let graph = Graph::new(config.node_classes.clone(), config.edges.clone())?;
    let model = GNetModel::new(config.model_config(), config.init_seed)?;
    let (y_r, y_p) = (config.recognition_label, config.prediction_label);
    let beta = config.kl_weight;
    let report = finite_difference_check_with(
        &model.params,
        eps,
        |tape| {
            if let Some(scale) = corrupt_backward {
                tape.corrupt_relu_backward(scale);
            }
        },
        |tape, bound| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.noise_seed);
            let out = model.forward(tape, bound, &graph, config.mode, &mut rng)?;
            Ok(gnet_loss(&out, y_r, y_p, beta)?.total)
        },
    )?;
    let worst = report
        .worst
        .as_ref()
        .map_or_else(|| "-".to_string(), |(p, i)| format!("{p}[{i}]"));
    writeln!(
        out,
        "max relative error {:.3e} over {} entries (worst {worst}), tolerance {GRADCHECK_TOLERANCE:e}",
        report.max_relative_error, report.entries_checked
    )
    .map_err(|e| CliError::Io("<stdout>".into(), e))?;
    Ok(report)
}
