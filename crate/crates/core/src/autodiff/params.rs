use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tape::{Tape, Var};
use super::tensor::Tensor;
use crate::error::{Error, Result};

pub const PARAMS_FORMAT: &str = "gnet-params";
pub const PARAMS_VERSION: u32 = 1;

/// Learnable tensors keyed by stable dotted paths such as
/// `encoder.conv1.theta1`. Iteration is sorted by path.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ParamStore {
    params: BTreeMap<String, Tensor>,
}

/// Gradients keyed by parameter path.
pub type Grads = BTreeMap<String, Tensor>;

impl ParamStore {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, path: impl Into<String>, value: Tensor) -> Result<()> {
        let path = path.into();
        if self.params.contains_key(&path) {
            return Err(Error::Argument(format!("duplicate parameter path `{path}`")));
        }
        self.params.insert(path, value);
        Ok(())
    }

    pub fn get(&self, path: &str) -> Option<&Tensor> {
        self.params.get(path)
    }

    pub fn get_mut(&mut self, path: &str) -> Option<&mut Tensor> {
        self.params.get_mut(path)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.params.iter().map(|(k, v)| (k.as_str(), v))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&str, &mut Tensor)> {
        self.params.iter_mut().map(|(k, v)| (k.as_str(), v))
    }

    pub fn paths(&self) -> impl Iterator<Item = &str> {
        self.params.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Total number of scalar entries.
    pub fn num_scalars(&self) -> usize {
        self.params.values().map(Tensor::len).sum()
    }

    /// Places every parameter on `tape` as a gradient-receiving leaf.
    pub fn bind<'t>(&self, tape: &'t Tape) -> BoundParams<'t> {
        BoundParams {
            vars: self
                .params
                .iter()
                .map(|(k, v)| (k.clone(), tape.param(v.clone())))
                .collect(),
        }
    }

    pub fn to_file(&self) -> ParamFile {
        ParamFile {
            format: PARAMS_FORMAT.to_string(),
            version: PARAMS_VERSION,
            params: self
                .params
                .iter()
                .map(|(path, t)| ParamEntry {
                    path: path.clone(),
                    rows: t.rows(),
                    cols: t.cols(),
                    data: t.data().to_vec(),
                })
                .collect(),
        }
    }

    pub fn from_file(file: ParamFile) -> Result<Self> {
        if file.format != PARAMS_FORMAT {
            return Err(Error::Checkpoint(format!(
                "expected format `{PARAMS_FORMAT}`, found `{}`",
                file.format
            )));
        }
        if file.version != PARAMS_VERSION {
            return Err(Error::Checkpoint(format!(
                "unsupported parameter file version {}",
                file.version
            )));
        }
        let mut store = ParamStore::new();
        for e in file.params {
            let t = Tensor::from_vec(e.rows, e.cols, e.data)
                .map_err(|err| Error::Checkpoint(format!("{}: {err}", e.path)))?;
            store.insert(e.path, t)?;
        }
        Ok(store)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string(&self.to_file())
            .map_err(|e| Error::Checkpoint(e.to_string()))?;
        fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let file: ParamFile =
            serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))?;
        Self::from_file(file)
    }
}

/// On-disk parameter layout: a versioned header followed by one entry per
/// path, in sorted order, holding the shape and row-major values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamFile {
    pub format: String,
    pub version: u32,
    pub params: Vec<ParamEntry>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamEntry {
    pub path: String,
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

/// Parameters placed on one tape.
#[derive(Debug)]
pub struct BoundParams<'t> {
    vars: BTreeMap<String, Var<'t>>,
}

impl<'t> BoundParams<'t> {
    pub fn get(&self, path: &str) -> Result<Var<'t>> {
        self.vars
            .get(path)
            .copied()
            .ok_or_else(|| Error::Config(format!("missing parameter `{path}`")))
    }

    /// Gradients after backward. Parameters the loss never touched get zeros.
    pub fn grads(&self) -> Grads {
        self.vars
            .iter()
            .map(|(k, v)| {
                let g = v.grad().unwrap_or_else(|| {
                    let (r, c) = v.shape();
                    Tensor::zeros(r, c)
                });
                (k.clone(), g)
            })
            .collect()
    }
}
