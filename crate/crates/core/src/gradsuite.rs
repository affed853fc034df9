//! Randomized finite-difference suites, one per tape op and per layer.
//!
//! Every instance draws fresh shapes (up to 5x5) and values, reduces the
//! op's output to a scalar through a fixed weighting, and compares the
//! backward pass with central differences. Inputs to `relu` stay away from
//! its kink and inputs to `log` stay positive, so the check measures the
//! backward code rather than non-smoothness.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::autodiff::{finite_difference_check, BoundParams, ParamStore, Tape, Tensor, Var};
use crate::error::Result;
use crate::layers::{
    dropout, global_mean_pool, log_softmax, reparameterize, softmax, GraphConv, Linear, LstmCell, Mode,
    Set2Set,
};
use crate::model::{kl_divergence, nll};

/// Step used by the suites.
pub const SUITE_EPS: f64 = 1e-4;

/// Worst relative error seen for one op over all its instances.
#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub instances: usize,
    pub max_relative_error: f64,
}

type CaseFn = fn(&mut ChaCha8Rng) -> Result<f64>;

/// Names of every suite, in the order [`run_suites`] reports them. Op
/// suites use the op's own name.
pub fn suite_names() -> Vec<&'static str> {
    CASES.iter().map(|(n, _)| *n).collect()
}

/// Runs `instances` random instances of every suite.
pub fn run_suites(instances: usize, seed: u64) -> Result<Vec<SuiteResult>> {
    CASES
        .iter()
        .enumerate()
        .map(|(k, (name, case))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(1000).wrapping_add(k as u64));
            let mut worst: f64 = 0.0;
            for _ in 0..instances {
                worst = worst.max(case(&mut rng)?);
            }
            Ok(SuiteResult {
                name,
                instances,
                max_relative_error: worst,
            })
        })
        .collect()
}

const CASES: &[(&str, CaseFn)] = &[
    ("matmul", matmul),
    ("add", add),
    ("sub", sub),
    ("elementwise-mul", mul),
    ("relu", relu),
    ("tanh", tanh),
    ("sigmoid", sigmoid),
    ("exp", exp),
    ("log", log),
    ("sum", sum),
    ("mean", mean),
    ("concat-cols", concat_cols),
    ("row-select", row),
    ("scalar-mul", scale),
    ("add-scalar", add_scalar),
    ("broadcast-add-row", add_row),
    ("broadcast-scalar", broadcast),
    ("transpose", transpose),
    ("linear", linear),
    ("log_softmax", log_softmax_case),
    ("softmax", softmax_case),
    ("graph_conv", graph_conv),
    ("global_mean_pool", pool),
    ("lstm_cell", lstm_cell),
    ("set2set", set2set),
    ("reparameterize", reparam),
    ("dropout", dropout_case),
    ("kl_divergence", kl),
    ("nll", nll_case),
];

fn dim(rng: &mut ChaCha8Rng) -> usize {
    rng.gen_range(1..=5)
}

fn uniform(rng: &mut ChaCha8Rng, rows: usize, cols: usize, lo: f64, hi: f64) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| rng.gen_range(lo..hi))
}

// magnitudes in [0.2, 1) with random sign
fn off_zero(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> Tensor {
    Tensor::from_fn(rows, cols, |_, _| {
        let m = rng.gen_range(0.2..1.0);
        if rng.gen_bool(0.5) {
            m
        } else {
            -m
        }
    })
}

fn store(entries: Vec<(&str, Tensor)>) -> ParamStore {
    let mut s = ParamStore::new();
    for (path, t) in entries {
        s.insert(path, t).expect("distinct paths");
    }
    s
}

/// Scalar `sum(v * W)` with a fixed, shape-dependent weighting.
fn project<'t>(v: Var<'t>) -> Result<Var<'t>> {
    let (r, c) = v.shape();
    let w = Tensor::from_fn(r, c, |i, j| (1.3 * i as f64 + 0.7 * j as f64 + 0.4).sin());
    v.mul(v.tape().constant(w))?.sum()
}

fn check<F>(params: ParamStore, loss: F) -> Result<f64>
where
    F: for<'t> Fn(&'t Tape, &BoundParams<'t>) -> Result<Var<'t>>,
{
    Ok(finite_difference_check(&params, SUITE_EPS, loss)?.max_relative_error)
}

fn unary(x: Tensor, f: for<'t> fn(Var<'t>) -> Result<Var<'t>>) -> Result<f64> {
    check(store(vec![("a", x)]), move |_, p| project(f(p.get("a")?)?))
}

fn binary(rng: &mut ChaCha8Rng, f: for<'t> fn(Var<'t>, Var<'t>) -> Result<Var<'t>>) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let a = uniform(rng, r, c, -1.0, 1.0);
    let b = uniform(rng, r, c, -1.0, 1.0);
    check(store(vec![("a", a), ("b", b)]), move |_, p| {
        project(f(p.get("a")?, p.get("b")?)?)
    })
}

fn matmul(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, k, c) = (dim(rng), dim(rng), dim(rng));
    let a = uniform(rng, r, k, -1.0, 1.0);
    let b = uniform(rng, k, c, -1.0, 1.0);
    check(store(vec![("a", a), ("b", b)]), |_, p| {
        project(p.get("a")?.matmul(p.get("b")?)?)
    })
}

fn add(rng: &mut ChaCha8Rng) -> Result<f64> {
    binary(rng, |a, b| a.add(b))
}

fn sub(rng: &mut ChaCha8Rng) -> Result<f64> {
    binary(rng, |a, b| a.sub(b))
}

fn mul(rng: &mut ChaCha8Rng) -> Result<f64> {
    binary(rng, |a, b| a.mul(b))
}

fn relu(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = off_zero(rng, r, c);
    unary(x, |a| a.relu())
}

fn tanh(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -2.0, 2.0);
    unary(x, |a| a.tanh())
}

fn sigmoid(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -3.0, 3.0);
    unary(x, |a| a.sigmoid())
}

fn exp(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -1.0, 1.0);
    unary(x, |a| a.exp())
}

fn log(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, 0.5, 2.0);
    unary(x, |a| a.log())
}

fn sum(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -1.0, 1.0);
    unary(x, |a| a.sum())
}

fn mean(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -1.0, 1.0);
    unary(x, |a| a.mean())
}

fn transpose(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let x = uniform(rng, r, c, -1.0, 1.0);
    unary(x, |a| a.t())
}

fn concat_cols(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c1, c2) = (dim(rng), dim(rng), dim(rng));
    let a = uniform(rng, r, c1, -1.0, 1.0);
    let b = uniform(rng, r, c2, -1.0, 1.0);
    check(store(vec![("a", a), ("b", b)]), |_, p| {
        project(p.get("a")?.concat_cols(p.get("b")?)?)
    })
}

fn row(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let k = rng.gen_range(0..r);
    let a = uniform(rng, r, c, -1.0, 1.0);
    check(store(vec![("a", a)]), move |_, p| project(p.get("a")?.row(k)?))
}

fn scale(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let k = rng.gen_range(-2.0..2.0);
    let a = uniform(rng, r, c, -1.0, 1.0);
    check(store(vec![("a", a)]), move |_, p| project(p.get("a")?.scale(k)?))
}

fn add_scalar(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let k = rng.gen_range(-2.0..2.0);
    let a = uniform(rng, r, c, -1.0, 1.0);
    check(store(vec![("a", a)]), move |_, p| {
        // squared so the upstream gradient depends on the shift
        let y = p.get("a")?.add_scalar(k)?;
        project(y.mul(y)?)
    })
}

fn add_row(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let a = uniform(rng, r, c, -1.0, 1.0);
    let b = uniform(rng, 1, c, -1.0, 1.0);
    check(store(vec![("a", a), ("b", b)]), |_, p| {
        project(p.get("a")?.add_row(p.get("b")?)?)
    })
}

fn broadcast(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let a = uniform(rng, 1, 1, -1.0, 1.0);
    check(store(vec![("a", a)]), move |_, p| project(p.get("a")?.broadcast(r, c)?))
}

fn linear(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (n, d_in, d_out) = (dim(rng), dim(rng), dim(rng));
    let mut s = store(vec![("x", uniform(rng, n, d_in, -1.0, 1.0))]);
    Linear::init(&mut s, "lin", d_in, d_out, rng)?;
    randomize(&mut s, rng);
    check(s, |_, p| project(Linear::bind(p, "lin")?.forward(p.get("x")?)?))
}

fn log_softmax_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let c = dim(rng);
    let x = uniform(rng, 1, c, -3.0, 3.0);
    unary(x, log_softmax)
}

fn softmax_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let c = dim(rng);
    let x = uniform(rng, 1, c, -3.0, 3.0);
    unary(x, softmax)
}

fn random_edges(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.5) {
                edges.push((i, j));
            }
        }
    }
    edges
}

// biases start at zero; give them values so their paths are exercised
fn randomize(s: &mut ParamStore, rng: &mut ChaCha8Rng) {
    for (_, t) in s.iter_mut() {
        for v in t.data_mut() {
            *v = rng.gen_range(-1.0..1.0);
        }
    }
}

fn graph_conv(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (n, d_in, d_out) = (dim(rng), dim(rng), dim(rng));
    let edges = random_edges(rng, n);
    let mut s = store(vec![("x", uniform(rng, n, d_in, -1.0, 1.0))]);
    GraphConv::init(&mut s, "gc", d_in, d_out, rng)?;
    randomize(&mut s, rng);
    check(s, move |_, p| {
        project(GraphConv::bind(p, "gc")?.forward(p.get("x")?, &edges)?)
    })
}

fn pool(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (n, d) = (dim(rng), dim(rng));
    let g = rng.gen_range(1..=n);
    // the first g nodes cover every group
    let groups: Vec<usize> = (0..n).map(|i| if i < g { i } else { rng.gen_range(0..g) }).collect();
    let x = uniform(rng, n, d, -1.0, 1.0);
    check(store(vec![("x", x)]), move |_, p| {
        project(global_mean_pool(p.get("x")?, &groups)?)
    })
}

fn lstm_cell(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (d_in, d_h) = (dim(rng), dim(rng));
    let mut s = store(vec![
        ("x", Tensor::zeros(1, d_in)),
        ("h", Tensor::zeros(1, d_h)),
        ("c", Tensor::zeros(1, d_h)),
    ]);
    LstmCell::init(&mut s, "lstm", d_in, d_h, rng)?;
    randomize(&mut s, rng);
    check(s, |_, p| {
        let cell = LstmCell::bind(p, "lstm")?;
        let (h, c) = cell.forward(p.get("x")?, p.get("h")?, p.get("c")?)?;
        project(h.concat_cols(c)?)
    })
}

fn set2set(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (n, d) = (dim(rng), dim(rng));
    let steps = rng.gen_range(1..=3);
    let mut s = store(vec![("x", Tensor::zeros(n, d))]);
    Set2Set::init(&mut s, "s2s", d, rng)?;
    randomize(&mut s, rng);
    check(s, move |_, p| {
        project(Set2Set::bind(p, "s2s", steps)?.forward(p.get("x")?)?.q_star)
    })
}

fn reparam(rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = dim(rng);
    let seed: u64 = rng.gen();
    let mu = uniform(rng, 1, d, -1.0, 1.0);
    let logvar = uniform(rng, 1, d, -1.0, 1.0);
    check(store(vec![("mu", mu), ("logvar", logvar)]), move |_, p| {
        let mut noise = ChaCha8Rng::seed_from_u64(seed);
        project(reparameterize(p.get("mu")?, p.get("logvar")?, Mode::Train, &mut noise)?)
    })
}

fn dropout_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let (r, c) = (dim(rng), dim(rng));
    let seed: u64 = rng.gen();
    let prob = rng.gen_range(0.0..0.9);
    let x = uniform(rng, r, c, -1.0, 1.0);
    check(store(vec![("x", x)]), move |_, p| {
        let mut masks = ChaCha8Rng::seed_from_u64(seed);
        project(dropout(p.get("x")?, prob, Mode::Train, &mut masks)?)
    })
}

fn kl(rng: &mut ChaCha8Rng) -> Result<f64> {
    let d = dim(rng);
    let mu = uniform(rng, 1, d, -1.0, 1.0);
    let logvar = uniform(rng, 1, d, -1.0, 1.0);
    check(store(vec![("mu", mu), ("logvar", logvar)]), |_, p| {
        kl_divergence(p.get("mu")?, p.get("logvar")?)
    })
}

fn nll_case(rng: &mut ChaCha8Rng) -> Result<f64> {
    let c = dim(rng);
    let y = rng.gen_range(0..c);
    let x = uniform(rng, 1, c, -3.0, 3.0);
    check(store(vec![("x", x)]), move |_, p| nll(log_softmax(p.get("x")?)?, y))
}
