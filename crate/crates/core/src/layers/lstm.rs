use rand::Rng;

use super::glorot_uniform;
use crate::autodiff::{BoundParams, ParamStore, Tensor, Var};
use crate::error::{Error, Result};

/// Gate order: input, forget, cell candidate, output.
pub const GATES: [&str; 4] = ["input", "forget", "cell", "output"];

#[derive(Clone, Copy, Debug)]
struct Gate<'t> {
    w_x: Var<'t>,
    w_h: Var<'t>,
    b: Var<'t>,
}

/// Standard LSTM cell with one affine map of `(x, h)` per gate.
#[derive(Clone, Copy, Debug)]
pub struct LstmCell<'t> {
    gates: [Gate<'t>; 4],
}

impl<'t> LstmCell<'t> {
    /// Weights uniform, biases zero except the forget gate, which starts at 1.
    pub fn init<R: Rng + ?Sized>(
        store: &mut ParamStore,
        prefix: &str,
        input_size: usize,
        hidden_size: usize,
        rng: &mut R,
    ) -> Result<()> {
        for gate in GATES {
            store.insert(
                format!("{prefix}.{gate}.w_x"),
                glorot_uniform(input_size, hidden_size, rng),
            )?;
            store.insert(
                format!("{prefix}.{gate}.w_h"),
                glorot_uniform(hidden_size, hidden_size, rng),
            )?;
            let bias = if gate == "forget" { 1.0 } else { 0.0 };
            store.insert(format!("{prefix}.{gate}.b"), Tensor::filled(1, hidden_size, bias))?;
        }
        Ok(())
    }

    pub fn bind(params: &BoundParams<'t>, prefix: &str) -> Result<Self> {
        let gate = |name: &str| -> Result<Gate<'t>> {
            Ok(Gate {
                w_x: params.get(&format!("{prefix}.{name}.w_x"))?,
                w_h: params.get(&format!("{prefix}.{name}.w_h"))?,
                b: params.get(&format!("{prefix}.{name}.b"))?,
            })
        };
        let cell = LstmCell {
            gates: [gate(GATES[0])?, gate(GATES[1])?, gate(GATES[2])?, gate(GATES[3])?],
        };
        let (d_in, h) = cell.gates[0].w_x.shape();
        for (g, name) in cell.gates.iter().zip(GATES) {
            if g.w_x.shape() != (d_in, h) || g.w_h.shape() != (h, h) || g.b.shape() != (1, h) {
                return Err(Error::Config(format!(
                    "{prefix}.{name}: w_x {:?}, w_h {:?}, b {:?} inconsistent with input {d_in}, hidden {h}",
                    g.w_x.shape(),
                    g.w_h.shape(),
                    g.b.shape()
                )));
            }
        }
        Ok(cell)
    }

    pub fn input_size(&self) -> usize {
        self.gates[0].w_x.shape().0
    }

    pub fn hidden_size(&self) -> usize {
        self.gates[0].w_h.shape().0
    }

    /// One step: returns `(h', c')`.
    pub fn forward(&self, x: Var<'t>, h: Var<'t>, c: Var<'t>) -> Result<(Var<'t>, Var<'t>)> {
        let hs = self.hidden_size();
        if x.shape() != (1, self.input_size()) {
            return Err(Error::Shape {
                op: "lstm_cell",
                lhs: x.shape(),
                rhs: (1, self.input_size()),
            });
        }
        for v in [h, c] {
            if v.shape() != (1, hs) {
                return Err(Error::Shape {
                    op: "lstm_cell",
                    lhs: v.shape(),
                    rhs: (1, hs),
                });
            }
        }
        let pre = |g: &Gate<'t>| -> Result<Var<'t>> { x.matmul(g.w_x)?.add(h.matmul(g.w_h)?)?.add(g.b) };
        let i = pre(&self.gates[0])?.sigmoid()?;
        let f = pre(&self.gates[1])?.sigmoid()?;
        let g = pre(&self.gates[2])?.tanh()?;
        let o = pre(&self.gates[3])?.sigmoid()?;
        let c_next = f.mul(c)?.add(i.mul(g)?)?;
        let h_next = o.mul(c_next.tanh()?)?;
        Ok((h_next, c_next))
    }
}
