use rand::Rng;

use super::glorot_uniform;
use crate::autodiff::{BoundParams, ParamStore, Tensor, Var};
use crate::error::{Error, Result};

/// Neighbourhood-sum graph convolution:
/// `x'_i = x_i θ1 + (Σ_{j ∈ N(i)} x_j) θ2 + b`, edges undirected with weight 1.
#[derive(Clone, Copy, Debug)]
pub struct GraphConv<'t> {
    pub theta1: Var<'t>,
    pub theta2: Var<'t>,
    pub bias: Var<'t>,
}

impl<'t> GraphConv<'t> {
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        d_in: usize,
        d_out: usize,
        rng: &mut R,
    ) -> Result<()> {
        store.insert(format!("{prefix}.theta1"), glorot_uniform(d_in, d_out, rng))?;
        store.insert(format!("{prefix}.theta2"), glorot_uniform(d_in, d_out, rng))?;
        store.insert(format!("{prefix}.bias"), Tensor::zeros(1, d_out))
    }

    pub fn bind(params: &BoundParams<'t>, prefix: &str) -> Result<Self> {
        let layer = GraphConv {
            theta1: params.get(&format!("{prefix}.theta1"))?,
            theta2: params.get(&format!("{prefix}.theta2"))?,
            bias: params.get(&format!("{prefix}.bias"))?,
        };
        let (d_in, d_out) = layer.theta1.shape();
        if layer.theta2.shape() != (d_in, d_out) || layer.bias.shape() != (1, d_out) {
            return Err(Error::Config(format!(
                "{prefix}: theta1 {:?}, theta2 {:?}, bias {:?} are inconsistent",
                layer.theta1.shape(),
                layer.theta2.shape(),
                layer.bias.shape()
            )));
        }
        Ok(layer)
    }

    pub fn forward(&self, x: Var<'t>, edges: &[(usize, usize)]) -> Result<Var<'t>> {
        let (n, d) = x.shape();
        let d_in = self.theta1.shape().0;
        if d != d_in {
            return Err(Error::Shape {
                op: "graph_conv",
                lhs: (n, d),
                rhs: self.theta1.shape(),
            });
        }
        let adj = x.tape().constant(adjacency(n, edges)?);
        let own = x.matmul(self.theta1)?;
        let neighbours = adj.matmul(x)?.matmul(self.theta2)?;
        own.add(neighbours)?.add_row(self.bias)
    }
}

/// Symmetric 0/1 adjacency matrix of an undirected edge list.
pub fn adjacency(n: usize, edges: &[(usize, usize)]) -> Result<Tensor> {
    let mut a = Tensor::zeros(n, n);
    for &(i, j) in edges {
        if i >= n || j >= n {
            return Err(Error::Argument(format!(
                "edge ({i}, {j}) outside a graph of {n} nodes"
            )));
        }
        a.set(i, j, 1.0);
        a.set(j, i, 1.0);
    }
    Ok(a)
}
