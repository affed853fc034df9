use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Architecture and loss settings of a GNet instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GNetConfig {
    /// Node-feature width (number of node classes).
    pub d_in: usize,
    /// Output width of the first GraphConv layer.
    pub w1: usize,
    /// Output width of the second and third GraphConv layers.
    pub w2: usize,
    /// Latent width.
    pub d_z: usize,
    pub num_classes: usize,
    pub set2set_steps: usize,
    /// Dropout applied to the latent before each head.
    pub dropout: f64,
    pub recognition: bool,
    pub prediction: bool,
    /// Weight of the KL term; 0 leaves only the two NLL terms.
    pub kl_weight: f64,
}

impl GNetConfig {
    /// Defaults for a given input width and class count: joint mode,
    /// widths 64, latent 32, three Set2Set steps, dropout 0.5.
    pub fn new(d_in: usize, num_classes: usize) -> Self {
        GNetConfig {
            d_in,
            w1: 64,
            w2: 64,
            d_z: 32,
            num_classes,
            set2set_steps: 3,
            dropout: 0.5,
            recognition: true,
            prediction: true,
            kl_weight: 0.0,
        }
    }

    /// Manipulation scene graphs: 21 object classes, first layer 672 wide,
    /// 8 actions, both branches.
    pub fn maniac() -> Self {
        GNetConfig {
            w1: 672,
            w2: 672,
            d_z: 128,
            ..Self::new(21, 8)
        }
    }

    /// Image-segment graphs: 10 node classes, first layer 1280 wide,
    /// 8 classes, recognition only.
    pub fn msrc9() -> Self {
        GNetConfig {
            w1: 1280,
            w2: 1280,
            d_z: 128,
            prediction: false,
            ..Self::new(10, 8)
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(Error::Config(m));
        if !self.recognition && !self.prediction {
            return fail("at least one of recognition/prediction must be enabled".into());
        }
        if self.d_in < 1 {
            return fail("d_in must be at least 1".into());
        }
        if self.num_classes < 2 {
            return fail(format!("num_classes must be at least 2, got {}", self.num_classes));
        }
        if self.w1 == 0 || self.w2 == 0 || self.d_z == 0 {
            return fail("layer widths must be positive".into());
        }
        if self.set2set_steps == 0 {
            return fail("set2set_steps must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return fail(format!("dropout {} outside [0, 1)", self.dropout));
        }
        if !(self.kl_weight >= 0.0 && self.kl_weight.is_finite()) {
            return fail(format!("kl_weight must be finite and >= 0, got {}", self.kl_weight));
        }
        Ok(())
    }
}
