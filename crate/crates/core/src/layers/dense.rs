use rand::Rng;

use super::glorot_uniform;
use crate::autodiff::{BoundParams, ParamStore, Tensor, Var};
use crate::error::{Error, Result};

/// Affine map `x W + b`.
#[derive(Clone, Copy, Debug)]
pub struct Linear<'t> {
    pub weight: Var<'t>,
    pub bias: Var<'t>,
}

impl<'t> Linear<'t> {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Result<()> {
        store.insert(format!("{prefix}.weight"), glorot_uniform(d_in, d_out, rng))?;
        store.insert(format!("{prefix}.bias"), Tensor::zeros(1, d_out))
    }

    pub fn bind(params: &BoundParams<'t>, prefix: &str) -> Result<Self> {
        let layer = Linear {
            weight: params.get(&format!("{prefix}.weight"))?,
            bias: params.get(&format!("{prefix}.bias"))?,
        };
        if layer.bias.shape() != (1, layer.weight.shape().1) {
            return Err(Error::Config(format!(
                "{prefix}: weight {:?} and bias {:?} disagree",
                layer.weight.shape(),
                layer.bias.shape()
            )));
        }
        Ok(layer)
    }

    pub fn forward(&self, x: Var<'t>) -> Result<Var<'t>> {
        x.matmul(self.weight)?.add_row(self.bias)
    }
}

/// `x - max(x) - log Σ exp(x - max(x))` over a single row.
pub fn log_softmax(x: Var<'_>) -> Result<Var<'_>> {
    let (rows, cols) = x.shape();
    if rows != 1 || cols == 0 {
        return Err(Error::Shape {
            op: "log_softmax",
            lhs: (rows, cols),
            rhs: (1, cols),
        });
    }
    // The max only shifts the input; it is treated as a constant.
    let m = x.with_value(Tensor::max);
    let shifted = x.add_scalar(-m)?;
    let lse = shifted.exp()?.sum()?.log()?;
    shifted.sub(lse.broadcast(1, cols)?)
}

pub fn softmax(x: Var<'_>) -> Result<Var<'_>> {
    log_softmax(x)?.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn lsm(values: &[f64]) -> Vec<f64> {
        let tape = Tape::new();
        log_softmax(tape.constant(Tensor::row_vector(values)))
            .unwrap()
            .value()
            .into_data()
    }

    #[test]
    fn uniform() {
        for v in lsm(&[0.0, 0.0, 0.0]) {
            assert!((v - (1.0f64 / 3.0).ln()).abs() < 1e-15);
        }
    }

    #[test]
    fn one_two_three() {
        // ln(e + e^2 + e^3) = 3.40760596444438, evaluated at high precision
        let expected = [-2.40760596444438, -1.40760596444438, -0.40760596444438];
        for (a, b) in lsm(&[1.0, 2.0, 3.0]).iter().zip(expected) {
            assert!((a - b).abs() < 1e-12, "{a} vs {b}");
        }
    }

    #[test]
    fn shift_invariant() {
        let a = lsm(&[0.3, -1.2, 4.0, 0.0]);
        let b = lsm(&[100.3, 98.8, 104.0, 100.0]);
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_matrix() {
        let tape = Tape::new();
        assert!(log_softmax(tape.constant(Tensor::zeros(2, 2))).is_err());
    }

    #[test]
    fn linear_forward() {
        let tape = Tape::new();
        let layer = Linear {
            weight: tape.param(Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]])),
            bias: tape.param(Tensor::row_vector(&[0.5, -0.5])),
        };
        let out = layer.forward(tape.constant(Tensor::row_vector(&[1.0, 1.0]))).unwrap();
        assert_eq!(out.value(), Tensor::row_vector(&[4.5, 5.5]));
    }
}
