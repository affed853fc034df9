//! TOML run configuration for `gnet train`.

use std::fs;
use std::path::{Path, PathBuf};

use gnet::graph::SplitRatios;
use gnet::model::GNetConfig;
use gnet::synth::SynthSpec;
use gnet::training::{AdamConfig, TrainConfig};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Every key, its default and meaning; printed by `gnet train --help`.
pub const CONFIG_HELP: &str = "\
Config file (TOML). Unknown keys are rejected. Defaults in brackets.

  output_dir            directory for checkpoints and reports [\"runs/gnet\"]

  [data]
  kind                  \"sequence\" | \"tu\" | \"synthetic\" [\"sequence\"]
  path                  sequence file, or directory holding the TU files
  name                  TU dataset prefix, e.g. \"MSRC_9\" (tu only)
  window                consecutive frames merged into one graph [4]
  horizon               windows ahead for the prediction label [1]
  split                 train/val/test weights [[10, 3, 2]]
  split_seed            seed of the split shuffle [0]
  per_class             split within each class [true]

  [data.synthetic]      generator settings (kind = \"synthetic\")
  classes [4]  seqs_per_class [10]  frames [8]  strength [1.0]  seed [1]

  [model]
  w1                    first GraphConv output width [672]
  w2                    second/third GraphConv width [672]
  d_z                   latent width [128]
  set2set_steps         Set2Set processing steps [3]
  dropout               dropout on the latent before each head [0.5]
  recognition           enable the recognition branch [true]
  prediction            enable the prediction branch [true]
  kl_weight             weight of the KL term [0.0]
  init_seed             parameter initialization seed [0]

  [train]
  epochs                [200]
  lr                    Adam learning rate [1e-6]
  beta1, beta2, eps     Adam constants [0.9, 0.999, 1e-8]
  seed                  noise, dropout and shuffle seed [0]
  shuffle               reshuffle the training set every epoch [true]
  clip                  global gradient-norm ceiling [none]
  threads               threads for evaluation passes [1]

The node-feature width and the class count are taken from the data.
";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DataKind {
    Sequence,
    Tu,
    Synthetic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub kind: DataKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    pub window: usize,
    pub horizon: usize,
    pub split: [u32; 3],
    pub split_seed: u64,
    pub per_class: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub synthetic: Option<SynthSpecConfig>,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            kind: DataKind::Sequence,
            path: None,
            name: None,
            window: 4,
            horizon: 1,
            split: [10, 3, 2],
            split_seed: 0,
            per_class: true,
            synthetic: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthSpecConfig {
    pub classes: usize,
    pub seqs_per_class: usize,
    pub frames: usize,
    pub strength: f64,
    pub seed: u64,
}

impl Default for SynthSpecConfig {
    fn default() -> Self {
        SynthSpecConfig {
            classes: 4,
            seqs_per_class: 10,
            frames: 8,
            strength: 1.0,
            seed: 1,
        }
    }
}

impl From<&SynthSpecConfig> for SynthSpec {
    fn from(c: &SynthSpecConfig) -> Self {
        SynthSpec {
            classes: c.classes,
            seqs_per_class: c.seqs_per_class,
            frames: c.frames,
            strength: c.strength,
            seed: c.seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub w1: usize,
    pub w2: usize,
    pub d_z: usize,
    pub set2set_steps: usize,
    pub dropout: f64,
    pub recognition: bool,
    pub prediction: bool,
    pub kl_weight: f64,
    pub init_seed: u64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        let g = GNetConfig::maniac();
        ModelConfig {
            w1: g.w1,
            w2: g.w2,
            d_z: g.d_z,
            set2set_steps: g.set2set_steps,
            dropout: g.dropout,
            recognition: g.recognition,
            prediction: g.prediction,
            kl_weight: g.kl_weight,
            init_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn gnet(&self, d_in: usize, num_classes: usize) -> GNetConfig {
        GNetConfig {
            d_in,
            w1: self.w1,
            w2: self.w2,
            d_z: self.d_z,
            num_classes,
            set2set_steps: self.set2set_steps,
            dropout: self.dropout,
            recognition: self.recognition,
            prediction: self.prediction,
            kl_weight: self.kl_weight,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub epochs: usize,
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub seed: u64,
    pub shuffle: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub clip: Option<f64>,
    pub threads: usize,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            epochs: t.epochs,
            lr: t.adam.lr,
            beta1: t.adam.beta1,
            beta2: t.adam.beta2,
            eps: t.adam.eps,
            seed: t.seed,
            shuffle: t.shuffle,
            clip: t.clip,
            threads: t.threads,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            epochs: self.epochs,
            adam: AdamConfig {
                lr: self.lr,
                beta1: self.beta1,
                beta2: self.beta2,
                eps: self.eps,
            },
            seed: self.seed,
            shuffle: self.shuffle,
            clip: self.clip,
            threads: self.threads,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub output_dir: PathBuf,
    pub data: DataConfig,
    pub model: ModelConfig,
    pub train: TrainSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            output_dir: PathBuf::from("runs/gnet"),
            data: DataConfig::default(),
            model: ModelConfig::default(),
            train: TrainSection::default(),
        }
    }
}

fn invalid(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{field}: {message}"))
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        let config: RunConfig = toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Io(path.to_path_buf(), e))?;
        Self::from_toml(&text).map_err(|e| match e {
            CliError::Config(m) => CliError::Config(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// The effective configuration with every default written out.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes")
    }

    /// Field-level checks that do not need the data.
    pub fn validate(&self) -> Result<(), CliError> {
        let d = &self.data;
        match d.kind {
            DataKind::Sequence if d.path.is_none() => {
                return Err(invalid("data.path", "required for kind = \"sequence\""))
            }
            DataKind::Tu if d.path.is_none() || d.name.is_none() => {
                return Err(invalid("data.path/data.name", "both required for kind = \"tu\""))
            }
            _ => {}
        }
        if d.window == 0 {
            return Err(invalid("data.window", "must be at least 1"));
        }
        SplitRatios(d.split)
            .validate()
            .map_err(|e| invalid("data.split", e))?;
        if d.kind == DataKind::Synthetic {
            SynthSpec::from(&d.synthetic.clone().unwrap_or_default())
                .validate()
                .map_err(|e| invalid("data.synthetic", e))?;
        }
        // d_in and class count are placeholders; they come from the data
        self.model
            .gnet(1, 2)
            .validate()
            .map_err(|e| invalid("model", e))?;
        let t = &self.train;
        if !(t.lr > 0.0 && t.lr.is_finite()) {
            return Err(invalid("train.lr", format!("must be positive, got {}", t.lr)));
        }
        if !(0.0..1.0).contains(&t.beta1) || !(0.0..1.0).contains(&t.beta2) {
            return Err(invalid("train.beta1/beta2", "must lie in [0, 1)"));
        }
        if t.eps <= 0.0 {
            return Err(invalid("train.eps", "must be positive"));
        }
        if let Some(c) = t.clip {
            if !(c > 0.0) {
                return Err(invalid("train.clip", format!("must be positive, got {c}")));
            }
        }
        if t.threads == 0 {
            return Err(invalid("train.threads", "must be at least 1"));
        }
        Ok(())
    }
}
