use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::autodiff::{ParamFile, ParamStore};
use crate::model::{GNetConfig, GNetModel};
use crate::error::{Error, Result};

pub const CHECKPOINT_FORMAT: &str = "gnet-checkpoint";
pub const CHECKPOINT_VERSION: u32 = 1;

/// A model snapshot with the seed and epoch that produced it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: GNetModel,
    pub seed: u64,
    /// Number of completed epochs; 0 for an untrained model.
    pub epoch: usize,
    pub val_accuracy: Option<f64>,
    /// Free-form key/value pairs, e.g. the run configuration.
    pub metadata: BTreeMap<String, String>,
}

/// JSON layout: header, config block, bookkeeping, then the parameter file.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct CheckpointFile {
    format: String,
    version: u32,
    config: GNetConfig,
    seed: u64,
    epoch: usize,
    val_accuracy: Option<f64>,
    #[serde(default)]
    metadata: BTreeMap<String, String>,
    params: ParamFile,
}

impl Checkpoint {
    pub fn to_json(&self) -> Result<String> {
        let file = CheckpointFile {
            format: CHECKPOINT_FORMAT.into(),
            version: CHECKPOINT_VERSION,
            config: self.model.config.clone(),
            seed: self.seed,
            epoch: self.epoch,
            val_accuracy: self.val_accuracy,
            metadata: self.metadata.clone(),
            params: self.model.params.to_file(),
        };
        serde_json::to_string(&file).map_err(|e| Error::Checkpoint(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: CheckpointFile =
            serde_json::from_str(text).map_err(|e| Error::Checkpoint(e.to_string()))?;
        if file.format != CHECKPOINT_FORMAT {
            return Err(Error::Checkpoint(format!(
                "expected format `{CHECKPOINT_FORMAT}`, found `{}`",
                file.format
            )));
        }
        if file.version != CHECKPOINT_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported checkpoint version {}",
                file.version
            )));
        }
        let params = ParamStore::from_file(file.params)?;
        Ok(Checkpoint {
            model: GNetModel::from_parts(file.config, params)?,
            seed: file.seed,
            epoch: file.epoch,
            val_accuracy: file.val_accuracy,
            metadata: file.metadata,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }
}
