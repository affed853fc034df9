use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::autodiff::{Grads, ParamStore, Tensor};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        AdamConfig {
            lr: 1e-6,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Bias-corrected Adam with one moment pair per parameter path.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState {
    pub config: AdamConfig,
    pub t: u64,
    m: BTreeMap<String, Tensor>,
    v: BTreeMap<String, Tensor>,
}

impl AdamState {
    pub fn new(params: &ParamStore, config: AdamConfig) -> Self {
        let zeros: BTreeMap<String, Tensor> = params
            .iter()
            .map(|(p, t)| (p.to_string(), Tensor::zeros(t.rows(), t.cols())))
            .collect();
        AdamState {
            config,
            t: 0,
            m: zeros.clone(),
            v: zeros,
        }
    }

    pub fn first_moment(&self, path: &str) -> Option<&Tensor> {
        self.m.get(path)
    }

    pub fn second_moment(&self, path: &str) -> Option<&Tensor> {
        self.v.get(path)
    }

    /// One update of every parameter. Nothing is modified if any gradient is
    /// missing, misshapen or non-finite.
    pub fn step(&mut self, params: &mut ParamStore, grads: &Grads) -> Result<()> {
        for (path, p) in params.iter() {
            let g = grads
                .get(path)
                .ok_or_else(|| Error::Argument(format!("no gradient for `{path}`")))?;
            if g.shape() != p.shape() {
                return Err(Error::Argument(format!(
                    "gradient for `{path}` has shape {:?}, parameter {:?}",
                    g.shape(),
                    p.shape()
                )));
            }
            if !g.is_finite() {
                return Err(Error::Numeric {
                    path: path.to_string(),
                    message: "non-finite gradient".into(),
                });
            }
        }

        let AdamConfig {
            lr,
            beta1,
            beta2,
            eps,
        } = self.config;
        self.t += 1;
        let bc1 = 1.0 - beta1.powi(self.t as i32);
        let bc2 = 1.0 - beta2.powi(self.t as i32);
        for (path, p) in params.iter_mut() {
            let g = &grads[path];
            let m = self.m.get_mut(path).expect("moment per parameter");
            let v = self.v.get_mut(path).expect("moment per parameter");
            let (p, m, v, g) = (p.data_mut(), m.data_mut(), v.data_mut(), g.data());
            for i in 0..p.len() {
                m[i] = beta1 * m[i] + (1.0 - beta1) * g[i];
                v[i] = beta2 * v[i] + (1.0 - beta2) * g[i] * g[i];
                let m_hat = m[i] / bc1;
                let v_hat = v[i] / bc2;
                p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}

/// Rescales all gradients so their joint L2 norm is at most `max_norm`.
/// Returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut Grads, max_norm: f64) -> f64 {
    let norm = grads
        .values()
        .flat_map(|g| g.data().iter())
        .map(|x| x * x)
        .sum::<f64>()
        .sqrt();
    if norm > max_norm && norm > 0.0 {
        let k = max_norm / norm;
        for g in grads.values_mut() {
            *g = g.scale(k);
        }
    }
    norm
}
