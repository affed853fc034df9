use gnet::autodiff::{ParamStore, Tape, Tensor};
use gnet::layers::{global_mean_pool, log_softmax, GraphConv, Set2Set};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_graph(rng: &mut ChaCha8Rng, n: usize) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            if rng.gen_bool(0.4) {
                edges.push((i, j));
            }
        }
    }
    edges
}

fn permutation(rng: &mut ChaCha8Rng, n: usize) -> Vec<usize> {
    let mut p: Vec<usize> = (0..n).collect();
    p.shuffle(rng);
    p
}

/// Row `i` of `x` moves to row `perm[i]`.
fn permute_rows(x: &Tensor, perm: &[usize]) -> Tensor {
    let mut out = Tensor::zeros(x.rows(), x.cols());
    for (i, &pi) in perm.iter().enumerate() {
        for c in 0..x.cols() {
            out.set(pi, c, x.get(i, c));
        }
    }
    out
}

fn permute_edges(edges: &[(usize, usize)], perm: &[usize]) -> Vec<(usize, usize)> {
    edges.iter().map(|&(a, b)| (perm[a], perm[b])).collect()
}

fn conv_store(rng: &mut ChaCha8Rng, d_in: usize, d_out: usize, dyadic: bool) -> ParamStore {
    let mut s = ParamStore::new();
    GraphConv::init(&mut s, "gc", d_in, d_out, rng).unwrap();
    for (_, t) in s.iter_mut() {
        for v in t.data_mut() {
            *v = value(rng, dyadic);
        }
    }
    s
}

// multiples of 1/8 in [-2, 2] keep every product and sum exact
fn value(rng: &mut ChaCha8Rng, dyadic: bool) -> f64 {
    if dyadic {
        f64::from(rng.gen_range(-16i32..=16)) / 8.0
    } else {
        rng.gen_range(-1.0..1.0)
    }
}

fn conv_case(seed: u64, dyadic: bool) -> (Tensor, Tensor, Vec<usize>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (n, d_in, d_out) = (rng.gen_range(1..=8), rng.gen_range(1..=5), rng.gen_range(1..=5));
    let edges = random_graph(&mut rng, n);
    let x = Tensor::from_fn(n, d_in, |_, _| value(&mut rng, dyadic));
    let store = conv_store(&mut rng, d_in, d_out, dyadic);
    let perm = permutation(&mut rng, n);
    let run = |x: &Tensor, edges: &[(usize, usize)]| {
        let tape = Tape::new();
        let p = store.bind(&tape);
        GraphConv::bind(&p, "gc")
            .unwrap()
            .forward(tape.constant(x.clone()), edges)
            .unwrap()
            .value()
    };
    let base = run(&x, &edges);
    let moved = run(&permute_rows(&x, &perm), &permute_edges(&edges, &perm));
    (base, moved, perm)
}

#[test]
fn graph_conv_equivariance_exact_on_dyadic_values() {
    for seed in 0..100 {
        let (base, moved, perm) = conv_case(seed, true);
        assert_eq!(permute_rows(&base, &perm), moved, "seed {seed}");
    }
}

#[test]
fn graph_conv_equivariance_on_reals() {
    for seed in 0..100 {
        let (base, moved, perm) = conv_case(seed, false);
        let expected = permute_rows(&base, &perm);
        for (a, b) in expected.data().iter().zip(moved.data()) {
            assert!((a - b).abs() < 1e-12, "seed {seed}: {a} vs {b}");
        }
    }
}

fn set2set_store(rng: &mut ChaCha8Rng, d: usize) -> ParamStore {
    let mut s = ParamStore::new();
    Set2Set::init(&mut s, "s2s", d, rng).unwrap();
    s
}

#[test]
fn pool_and_set2set_ignore_node_order() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let (n, d, steps) = (rng.gen_range(1..=9), rng.gen_range(1..=6), rng.gen_range(1..=4));
        let x = Tensor::from_fn(n, d, |_, _| rng.gen_range(-1.0..1.0));
        let perm = permutation(&mut rng, n);
        let store = set2set_store(&mut rng, d);
        let run = |x: &Tensor| {
            let tape = Tape::new();
            let p = store.bind(&tape);
            let xv = tape.constant(x.clone());
            let pooled = global_mean_pool(xv, &vec![0; n]).unwrap().value();
            let q = Set2Set::bind(&p, "s2s", steps).unwrap().forward(xv).unwrap().q_star.value();
            (pooled, q)
        };
        let (p0, q0) = run(&x);
        let (p1, q1) = run(&permute_rows(&x, &perm));
        for (a, b) in p0.data().iter().chain(q0.data()).zip(p1.data().iter().chain(q1.data())) {
            assert!((a - b).abs() < 1e-9, "{a} vs {b}");
        }
    }
}

#[test]
fn set2set_contract() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for n in [1, 2, 5, 12] {
        for d in [1, 3, 8] {
            for steps in [1, 2, 3, 5] {
                let x = Tensor::from_fn(n, d, |_, _| rng.gen_range(-2.0..2.0));
                let store = set2set_store(&mut rng, d);
                let tape = Tape::new();
                let p = store.bind(&tape);
                let out = Set2Set::bind(&p, "s2s", steps)
                    .unwrap()
                    .forward(tape.constant(x.clone()))
                    .unwrap();
                assert_eq!(out.q_star.shape(), (1, 2 * d));
                assert_eq!(out.attention.len(), steps);
                for a in &out.attention {
                    assert_eq!(a.len(), n);
                    assert!((a.sum() - 1.0).abs() < 1e-12, "sum {}", a.sum());
                }
                if n == 1 {
                    for r in &out.readouts {
                        assert_eq!(r.data(), x.data());
                    }
                }
            }
        }
    }
}

proptest! {
    #[test]
    fn log_softmax_normalizes(v in prop::collection::vec(-30.0f64..30.0, 1..12)) {
        let tape = Tape::new();
        let lp = log_softmax(tape.constant(Tensor::row_vector(&v))).unwrap().value();
        let total: f64 = lp.data().iter().map(|l| l.exp()).sum();
        prop_assert!((total - 1.0).abs() < 1e-12, "{}", total);
    }
}
