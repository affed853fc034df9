use std::cell::{Cell, Ref, RefCell};
use std::fmt;

use super::tensor::Tensor;
use crate::error::{Error, Result};

/// Inputs to `log` are clamped to this floor.
pub const LOG_FLOOR: f64 = 1e-12;

/// Every differentiable primitive the tape knows how to record.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum OpKind {
    MatMul,
    Add,
    Sub,
    Mul,
    Relu,
    Tanh,
    Sigmoid,
    Exp,
    Log,
    Sum,
    Mean,
    ConcatCols,
    RowSelect(usize),
    ScalarMul(f64),
    AddScalar(f64),
    BroadcastAddRow,
    /// Expands a 1x1 value to the given shape.
    BroadcastScalar { rows: usize, cols: usize },
    Transpose,
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Sub => "sub",
            OpKind::Mul => "elementwise-mul",
            OpKind::Relu => "relu",
            OpKind::Tanh => "tanh",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Exp => "exp",
            OpKind::Log => "log",
            OpKind::Sum => "sum",
            OpKind::Mean => "mean",
            OpKind::ConcatCols => "concat-cols",
            OpKind::RowSelect(_) => "row-select",
            OpKind::ScalarMul(_) => "scalar-mul",
            OpKind::AddScalar(_) => "add-scalar",
            OpKind::BroadcastAddRow => "broadcast-add-row",
            OpKind::BroadcastScalar { .. } => "broadcast-scalar",
            OpKind::Transpose => "transpose",
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            OpKind::MatMul
            | OpKind::Add
            | OpKind::Sub
            | OpKind::Mul
            | OpKind::ConcatCols
            | OpKind::BroadcastAddRow => 2,
            _ => 1,
        }
    }
}

struct Node {
    value: Tensor,
    grad: Option<Tensor>,
    op: Option<(OpKind, [usize; 2])>,
    requires_grad: bool,
}

/// A dynamically built computation graph.
///
/// Nodes are appended in construction order, which is also a valid
/// topological order; `backward` walks it in reverse.
pub struct Tape {
    nodes: RefCell<Vec<Node>>,
    relu_grad_scale: Cell<f64>,
}

impl Default for Tape {
    fn default() -> Self {
        Self::new()
    }
}

impl fmt::Debug for Tape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Tape").field("len", &self.len()).finish()
    }
}

/// Handle to a node on a [`Tape`].
#[derive(Clone, Copy)]
pub struct Var<'t> {
    tape: &'t Tape,
    id: usize,
}

impl fmt::Debug for Var<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Var")
            .field("id", &self.id)
            .field("shape", &self.shape())
            .finish()
    }
}

fn shape_err(kind: OpKind, lhs: (usize, usize), rhs: (usize, usize)) -> Error {
    Error::Shape {
        op: kind.name(),
        lhs,
        rhs,
    }
}

fn accumulate(slot: &mut Option<Tensor>, contribution: Tensor) {
    match slot {
        Some(existing) => existing.add_assign(&contribution),
        None => *slot = Some(contribution),
    }
}

fn forward(kind: OpKind, a: &Tensor, b: Option<&Tensor>) -> Result<Tensor> {
    let rhs = b.map_or((0, 0), Tensor::shape);
    let out = match kind {
        OpKind::MatMul => {
            let b = b.expect("binary");
            if a.cols() != b.rows() {
                return Err(shape_err(kind, a.shape(), rhs));
            }
            a.matmul(b)
        }
        OpKind::Add | OpKind::Sub | OpKind::Mul => {
            let b = b.expect("binary");
            if a.shape() != b.shape() {
                return Err(shape_err(kind, a.shape(), rhs));
            }
            match kind {
                OpKind::Add => a.zip_map(b, |x, y| x + y),
                OpKind::Sub => a.zip_map(b, |x, y| x - y),
                _ => a.zip_map(b, |x, y| x * y),
            }
        }
        OpKind::Relu => a.map(|x| x.max(0.0)),
        OpKind::Tanh => a.map(f64::tanh),
        OpKind::Sigmoid => a.map(sigmoid),
        OpKind::Exp => a.map(f64::exp),
        OpKind::Log => a.map(|x| x.max(LOG_FLOOR).ln()),
        OpKind::Sum => Tensor::scalar(a.sum()),
        OpKind::Mean => {
            if a.is_empty() {
                return Err(shape_err(kind, a.shape(), rhs));
            }
            Tensor::scalar(a.sum() / a.len() as f64)
        }
        OpKind::ConcatCols => {
            let b = b.expect("binary");
            if a.rows() != b.rows() {
                return Err(shape_err(kind, a.shape(), rhs));
            }
            let cols = a.cols() + b.cols();
            Tensor::from_fn(a.rows(), cols, |r, c| {
                if c < a.cols() {
                    a.get(r, c)
                } else {
                    b.get(r, c - a.cols())
                }
            })
        }
        OpKind::RowSelect(row) => {
            if row >= a.rows() {
                return Err(shape_err(kind, a.shape(), (row, 0)));
            }
            Tensor::row_vector(a.row(row))
        }
        OpKind::ScalarMul(k) => a.scale(k),
        OpKind::AddScalar(k) => a.map(|x| x + k),
        OpKind::BroadcastAddRow => {
            let b = b.expect("binary");
            if b.rows() != 1 || b.cols() != a.cols() {
                return Err(shape_err(kind, a.shape(), rhs));
            }
            Tensor::from_fn(a.rows(), a.cols(), |r, c| a.get(r, c) + b.get(0, c))
        }
        OpKind::BroadcastScalar { rows, cols } => {
            if a.shape() != (1, 1) {
                return Err(shape_err(kind, a.shape(), (rows, cols)));
            }
            Tensor::filled(rows, cols, a.item())
        }
        OpKind::Transpose => a.transpose(),
    };
    Ok(out)
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tape {
    pub fn new() -> Self {
        Tape {
            nodes: RefCell::new(Vec::new()),
            relu_grad_scale: Cell::new(1.0),
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn push(&self, value: Tensor, op: Option<(OpKind, [usize; 2])>, requires_grad: bool) -> Var<'_> {
        let mut nodes = self.nodes.borrow_mut();
        nodes.push(Node {
            value,
            grad: None,
            op,
            requires_grad,
        });
        Var {
            tape: self,
            id: nodes.len() - 1,
        }
    }

    /// A leaf that receives gradients.
    pub fn param(&self, value: Tensor) -> Var<'_> {
        self.push(value, None, true)
    }

    /// A leaf that does not receive gradients.
    pub fn constant(&self, value: Tensor) -> Var<'_> {
        self.push(value, None, false)
    }

    /// Records `kind` applied to `inputs`.
    pub fn apply<'t>(&'t self, kind: OpKind, inputs: &[Var<'t>]) -> Result<Var<'t>> {
        if inputs.len() != kind.arity() {
            return Err(Error::Argument(format!(
                "{} takes {} inputs, got {}",
                kind.name(),
                kind.arity(),
                inputs.len()
            )));
        }
        for v in inputs {
            if !std::ptr::eq(v.tape, self) {
                return Err(Error::Argument(format!(
                    "{} input belongs to another tape",
                    kind.name()
                )));
            }
        }
        let a = inputs[0].id;
        let b = inputs.get(1).map_or(a, |v| v.id);
        let (value, requires_grad) = {
            let nodes = self.nodes.borrow();
            let value = forward(
                kind,
                &nodes[a].value,
                (kind.arity() == 2).then(|| &nodes[b].value),
            )?;
            (value, nodes[a].requires_grad || nodes[b].requires_grad)
        };
        Ok(self.push(value, Some((kind, [a, b])), requires_grad))
    }

    /// Reverse-mode sweep from a 1x1 `root`.
    ///
    /// Gradients are added to each node's accumulator, so two calls without
    /// [`Tape::zero_grad`] in between double every gradient.
    pub fn backward(&self, root: Var<'_>) -> Result<()> {
        if root.shape() != (1, 1) {
            return Err(Error::Argument(format!(
                "backward needs a scalar root, got shape {:?}",
                root.shape()
            )));
        }
        let relu_scale = self.relu_grad_scale.get();
        let mut local: Vec<Option<Tensor>> = Vec::new();
        {
            let nodes = self.nodes.borrow();
            local.resize_with(root.id + 1, || None);
            local[root.id] = Some(Tensor::scalar(1.0));
            for id in (0..=root.id).rev() {
                let (lower, upper) = local.split_at_mut(id);
                let Some(g) = upper[0].as_ref() else {
                    continue;
                };
                let node = &nodes[id];
                let Some((kind, [ia, ib])) = node.op else {
                    continue;
                };
                if !node.requires_grad {
                    continue;
                }
                let a = &nodes[ia];
                let b = &nodes[ib];
                let (ga, gb) = backward_rule(kind, g, a, b, &node.value, relu_scale);
                if let Some(ga) = ga {
                    if a.requires_grad {
                        accumulate(&mut lower[ia], ga);
                    }
                }
                if let Some(gb) = gb {
                    if b.requires_grad {
                        accumulate(&mut lower[ib], gb);
                    }
                }
            }
        }
        let mut nodes = self.nodes.borrow_mut();
        for (id, g) in local.into_iter().enumerate() {
            if let Some(g) = g {
                if nodes[id].requires_grad || id == root.id {
                    accumulate(&mut nodes[id].grad, g);
                }
            }
        }
        Ok(())
    }

    pub fn zero_grad(&self) {
        for node in self.nodes.borrow_mut().iter_mut() {
            node.grad = None;
        }
    }

    /// Test hook: multiplies the ReLU backward rule by `scale`.
    #[doc(hidden)]
    pub fn corrupt_relu_backward(&self, scale: f64) {
        self.relu_grad_scale.set(scale);
    }
}

fn backward_rule(
    kind: OpKind,
    g: &Tensor,
    a: &Node,
    b: &Node,
    out: &Tensor,
    relu_scale: f64,
) -> (Option<Tensor>, Option<Tensor>) {
    let x = &a.value;
    match kind {
        OpKind::MatMul => (Some(g.matmul_t(&b.value)), Some(x.t_matmul(g))),
        OpKind::Add => (Some(g.clone()), Some(g.clone())),
        OpKind::Sub => (Some(g.clone()), Some(g.scale(-1.0))),
        OpKind::Mul => (
            Some(g.zip_map(&b.value, |g, y| g * y)),
            Some(g.zip_map(x, |g, x| g * x)),
        ),
        OpKind::Relu => (
            Some(g.zip_map(x, |g, x| if x > 0.0 { g * relu_scale } else { 0.0 })),
            None,
        ),
        OpKind::Tanh => (Some(g.zip_map(out, |g, y| g * (1.0 - y * y))), None),
        OpKind::Sigmoid => (Some(g.zip_map(out, |g, y| g * y * (1.0 - y))), None),
        OpKind::Exp => (Some(g.zip_map(out, |g, y| g * y)), None),
        OpKind::Log => (
            Some(g.zip_map(x, |g, x| if x > LOG_FLOOR { g / x } else { 0.0 })),
            None,
        ),
        OpKind::Sum => (Some(Tensor::filled(x.rows(), x.cols(), g.item())), None),
        OpKind::Mean => (
            Some(Tensor::filled(
                x.rows(),
                x.cols(),
                g.item() / x.len() as f64,
            )),
            None,
        ),
        OpKind::ConcatCols => {
            let split = x.cols();
            let ga = Tensor::from_fn(x.rows(), split, |r, c| g.get(r, c));
            let gb = Tensor::from_fn(x.rows(), g.cols() - split, |r, c| g.get(r, c + split));
            (Some(ga), Some(gb))
        }
        OpKind::RowSelect(row) => {
            let mut ga = Tensor::zeros(x.rows(), x.cols());
            for c in 0..x.cols() {
                ga.set(row, c, g.get(0, c));
            }
            (Some(ga), None)
        }
        OpKind::ScalarMul(k) => (Some(g.scale(k)), None),
        OpKind::AddScalar(_) => (Some(g.clone()), None),
        OpKind::BroadcastAddRow => {
            let mut gb = Tensor::zeros(1, g.cols());
            for r in 0..g.rows() {
                for c in 0..g.cols() {
                    gb.data_mut()[c] += g.get(r, c);
                }
            }
            (Some(g.clone()), Some(gb))
        }
        OpKind::BroadcastScalar { .. } => (Some(Tensor::scalar(g.sum())), None),
        OpKind::Transpose => (Some(g.transpose()), None),
    }
}

impl<'t> Var<'t> {
    pub fn tape(&self) -> &'t Tape {
        self.tape
    }

    pub fn id(&self) -> usize {
        self.id
    }

    fn node(&self) -> Ref<'t, Node> {
        Ref::map(self.tape.nodes.borrow(), |n| &n[self.id])
    }

    pub fn shape(&self) -> (usize, usize) {
        self.node().value.shape()
    }

    pub fn requires_grad(&self) -> bool {
        self.node().requires_grad
    }

    /// Copy of the forward value.
    pub fn value(&self) -> Tensor {
        self.node().value.clone()
    }

    pub fn with_value<R>(&self, f: impl FnOnce(&Tensor) -> R) -> R {
        f(&self.node().value)
    }

    /// The value of a 1x1 node.
    pub fn item(&self) -> f64 {
        self.node().value.get(0, 0)
    }

    /// Accumulated gradient, `None` if backward never reached this node.
    pub fn grad(&self) -> Option<Tensor> {
        self.node().grad.clone()
    }

    fn unary(self, kind: OpKind) -> Result<Var<'t>> {
        self.tape.apply(kind, &[self])
    }

    fn binary(self, kind: OpKind, other: Var<'t>) -> Result<Var<'t>> {
        self.tape.apply(kind, &[self, other])
    }

    pub fn matmul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::MatMul, other)
    }

    pub fn add(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::Add, other)
    }

    pub fn sub(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::Sub, other)
    }

    pub fn mul(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::Mul, other)
    }

    pub fn relu(self) -> Result<Var<'t>> {
        self.unary(OpKind::Relu)
    }

    pub fn tanh(self) -> Result<Var<'t>> {
        self.unary(OpKind::Tanh)
    }

    pub fn sigmoid(self) -> Result<Var<'t>> {
        self.unary(OpKind::Sigmoid)
    }

    pub fn exp(self) -> Result<Var<'t>> {
        self.unary(OpKind::Exp)
    }

    /// Natural log of `max(x, LOG_FLOOR)`.
    pub fn log(self) -> Result<Var<'t>> {
        self.unary(OpKind::Log)
    }

    pub fn sum(self) -> Result<Var<'t>> {
        self.unary(OpKind::Sum)
    }

    pub fn mean(self) -> Result<Var<'t>> {
        self.unary(OpKind::Mean)
    }

    pub fn concat_cols(self, other: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::ConcatCols, other)
    }

    pub fn row(self, row: usize) -> Result<Var<'t>> {
        self.unary(OpKind::RowSelect(row))
    }

    pub fn scale(self, k: f64) -> Result<Var<'t>> {
        self.unary(OpKind::ScalarMul(k))
    }

    pub fn add_scalar(self, k: f64) -> Result<Var<'t>> {
        self.unary(OpKind::AddScalar(k))
    }

    /// Adds the 1xC `row` to every row of `self`.
    pub fn add_row(self, row: Var<'t>) -> Result<Var<'t>> {
        self.binary(OpKind::BroadcastAddRow, row)
    }

    pub fn broadcast(self, rows: usize, cols: usize) -> Result<Var<'t>> {
        self.unary(OpKind::BroadcastScalar { rows, cols })
    }

    pub fn t(self) -> Result<Var<'t>> {
        self.unary(OpKind::Transpose)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matmul_dot_product() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::from_rows(&[[1.0, 2.0]]));
        let b = tape.constant(Tensor::from_rows(&[[3.0], [4.0]]));
        assert_eq!(a.matmul(b).unwrap().value(), Tensor::scalar(11.0));
    }

    #[test]
    fn relu_forward() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::row_vector(&[-1.0, 0.0, 2.0]));
        assert_eq!(x.relu().unwrap().value(), Tensor::row_vector(&[0.0, 0.0, 2.0]));
    }

    #[test]
    fn concat_doubles_width() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::zeros(1, 5));
        let b = tape.constant(Tensor::ones(1, 5));
        assert_eq!(a.concat_cols(b).unwrap().shape(), (1, 10));
    }

    #[test]
    fn shape_error_names_op_and_shapes() {
        let tape = Tape::new();
        let a = tape.constant(Tensor::zeros(2, 3));
        let b = tape.constant(Tensor::zeros(2, 3));
        let err = a.matmul(b).unwrap_err();
        match err {
            Error::Shape { op, lhs, rhs } => {
                assert_eq!(op, "matmul");
                assert_eq!(lhs, (2, 3));
                assert_eq!(rhs, (2, 3));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sum_gives_all_ones_grad() {
        let tape = Tape::new();
        let x = tape.param(Tensor::from_rows(&[[1.0, -2.0], [3.0, 4.0]]));
        let y = x.sum().unwrap();
        tape.backward(y).unwrap();
        assert_eq!(x.grad().unwrap(), Tensor::ones(2, 2));
        assert_eq!(y.grad().unwrap(), Tensor::scalar(1.0));
    }

    #[test]
    fn square_grad() {
        let tape = Tape::new();
        let x = tape.param(Tensor::scalar(3.0));
        let y = x.mul(x).unwrap().sum().unwrap();
        tape.backward(y).unwrap();
        assert_eq!(x.grad().unwrap(), Tensor::scalar(6.0));
    }

    #[test]
    fn backward_rejects_non_scalar_root() {
        let tape = Tape::new();
        let x = tape.param(Tensor::zeros(1, 2));
        assert!(matches!(tape.backward(x), Err(Error::Argument(_))));
    }

    #[test]
    fn repeated_backward_accumulates() {
        let tape = Tape::new();
        let x = tape.param(Tensor::scalar(2.0));
        let y = x.scale(3.0).unwrap();
        tape.backward(y).unwrap();
        tape.backward(y).unwrap();
        assert_eq!(x.grad().unwrap(), Tensor::scalar(6.0));
        tape.zero_grad();
        assert!(x.grad().is_none());
    }

    #[test]
    fn constants_receive_no_grad() {
        let tape = Tape::new();
        let c = tape.constant(Tensor::scalar(2.0));
        let x = tape.param(Tensor::scalar(5.0));
        let y = c.mul(x).unwrap();
        tape.backward(y).unwrap();
        assert!(c.grad().is_none());
        assert_eq!(x.grad().unwrap(), Tensor::scalar(2.0));
    }

    #[test]
    fn log_is_guarded_at_zero() {
        let tape = Tape::new();
        let x = tape.param(Tensor::scalar(0.0));
        let y = x.log().unwrap();
        assert_eq!(y.item(), LOG_FLOOR.ln());
        tape.backward(y).unwrap();
        assert_eq!(x.grad().unwrap().item(), 0.0);
    }

    #[test]
    fn fan_out_accumulates() {
        let tape = Tape::new();
        let x = tape.param(Tensor::row_vector(&[1.0, 2.0]));
        let s = x.tanh().unwrap();
        let y = s.add(s).unwrap().sum().unwrap();
        tape.backward(y).unwrap();
        let g = x.grad().unwrap();
        for (i, &v) in [1.0f64, 2.0].iter().enumerate() {
            let t = v.tanh();
            assert!((g.data()[i] - 2.0 * (1.0 - t * t)).abs() < 1e-15);
        }
    }
}
