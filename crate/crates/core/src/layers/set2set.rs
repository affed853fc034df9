use rand::Rng;

use super::dense::softmax;
use super::lstm::LstmCell;
use crate::autodiff::{BoundParams, ParamStore, Tensor, Var};
use crate::error::{Error, Result};

/// Order-invariant attention readout over a node set.
///
/// Each step feeds the previous readout `q*` (width `2d`) to an LSTM whose
/// hidden state `q` (width `d`) scores every node by `x_i · q`. The softmax
/// of those scores weights the node sum `r`, and `q* = q ∥ r`.
#[derive(Clone, Copy, Debug)]
pub struct Set2Set<'t> {
    lstm: LstmCell<'t>,
    steps: usize,
}

#[derive(Debug)]
pub struct Set2SetOutput<'t> {
    /// `1 x 2d` readout after the last step.
    pub q_star: Var<'t>,
    /// Attention weights over nodes, `1 x N`, one per step.
    pub attention: Vec<Tensor>,
    /// Attention readout `r_t`, `1 x d`, one per step.
    pub readouts: Vec<Tensor>,
}

impl<'t> Set2Set<'t> {
    pub fn init<R: Rng + ?Sized>(store: &mut ParamStore, prefix: &str, d: usize, rng: &mut R) -> Result<()> {
        LstmCell::init(store, &format!("{prefix}.lstm"), 2 * d, d, rng)
    }

    pub fn bind(params: &BoundParams<'t>, prefix: &str, steps: usize) -> Result<Self> {
        Self::new(LstmCell::bind(params, &format!("{prefix}.lstm"))?, steps)
    }

    pub fn new(lstm: LstmCell<'t>, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(Error::Config("Set2Set needs at least one step".into()));
        }
        if lstm.input_size() != 2 * lstm.hidden_size() {
            return Err(Error::Config(format!(
                "Set2Set LSTM input {} must be twice its hidden size {}",
                lstm.input_size(),
                lstm.hidden_size()
            )));
        }
        Ok(Set2Set { lstm, steps })
    }

    pub fn forward(&self, x: Var<'t>) -> Result<Set2SetOutput<'t>> {
        let (n, d) = x.shape();
        if d != self.lstm.hidden_size() {
            return Err(Error::Config(format!(
                "Set2Set hidden size {} does not match feature width {d}",
                self.lstm.hidden_size()
            )));
        }
        if n == 0 {
            return Err(Error::Argument("Set2Set over an empty node set".into()));
        }
        let tape = x.tape();
        let mut q_star = tape.constant(Tensor::zeros(1, 2 * d));
        let mut h = tape.constant(Tensor::zeros(1, d));
        let mut c = tape.constant(Tensor::zeros(1, d));
        let mut attention = Vec::with_capacity(self.steps);
        let mut readouts = Vec::with_capacity(self.steps);
        for _ in 0..self.steps {
            (h, c) = self.lstm.forward(q_star, h, c)?;
            let scores = x.matmul(h.t()?)?.t()?;
            let alpha = softmax(scores)?;
            let r = alpha.matmul(x)?;
            attention.push(alpha.value());
            readouts.push(r.value());
            q_star = h.concat_cols(r)?;
        }
        Ok(Set2SetOutput {
            q_star,
            attention,
            readouts,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use crate::layers::glorot_uniform;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn setup(d: usize, seed: u64) -> ParamStore {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut store = ParamStore::new();
        Set2Set::init(&mut store, "s2s", d, &mut rng).unwrap();
        store
    }

    #[test]
    fn single_node_reads_itself() {
        let store = setup(3, 1);
        let tape = Tape::new();
        let s2s = Set2Set::bind(&store.bind(&tape), "s2s", 3).unwrap();
        let v = Tensor::row_vector(&[0.4, -1.0, 2.5]);
        let out = s2s.forward(tape.constant(v.clone())).unwrap();
        for (a, r) in out.attention.iter().zip(&out.readouts) {
            assert_eq!(a, &Tensor::scalar(1.0));
            assert_eq!(r, &v);
        }
        assert_eq!(out.q_star.value().data()[3..], *v.data());
    }

    #[test]
    fn identical_rows_split_attention() {
        let store = setup(2, 2);
        let tape = Tape::new();
        let s2s = Set2Set::bind(&store.bind(&tape), "s2s", 4).unwrap();
        let x = Tensor::from_rows(&[[1.0, -0.5], [1.0, -0.5]]);
        let out = s2s.forward(tape.constant(x)).unwrap();
        for (a, r) in out.attention.iter().zip(&out.readouts) {
            assert_eq!(a, &Tensor::row_vector(&[0.5, 0.5]));
            assert_eq!(r, &Tensor::row_vector(&[1.0, -0.5]));
        }
    }

    #[test]
    fn output_width_doubles() {
        for (n, d, t) in [(1, 1, 1), (5, 3, 2), (7, 4, 5)] {
            let store = setup(d, 3);
            let tape = Tape::new();
            let s2s = Set2Set::bind(&store.bind(&tape), "s2s", t).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(9);
            let out = s2s.forward(tape.constant(glorot_uniform(n, d, &mut rng))).unwrap();
            assert_eq!(out.q_star.shape(), (1, 2 * d));
            assert_eq!(out.attention.len(), t);
        }
    }

    #[test]
    fn hidden_size_must_match_features() {
        let store = setup(3, 4);
        let tape = Tape::new();
        let s2s = Set2Set::bind(&store.bind(&tape), "s2s", 2).unwrap();
        let err = s2s.forward(tape.constant(Tensor::zeros(2, 4))).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn zero_steps_rejected() {
        let store = setup(2, 5);
        let tape = Tape::new();
        assert!(Set2Set::bind(&store.bind(&tape), "s2s", 0).is_err());
    }
}
