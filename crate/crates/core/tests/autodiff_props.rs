use gnet::autodiff::{Tape, Tensor};
use proptest::prelude::*;

fn tensor(rows: usize, cols: usize) -> impl Strategy<Value = Tensor> {
    prop::collection::vec(-2.0f64..2.0, rows * cols)
        .prop_map(move |v| Tensor::from_vec(rows, cols, v).unwrap())
}

fn shaped() -> impl Strategy<Value = Tensor> {
    (1usize..=5, 1usize..=5).prop_flat_map(|(r, c)| tensor(r, c))
}

proptest! {
    #[test]
    fn concat_grad_splits_by_block(
        (a, b, w) in (1usize..=5, 1usize..=5, 1usize..=5).prop_flat_map(|(r, c1, c2)| {
            (tensor(r, c1), tensor(r, c2), tensor(r, c1 + c2))
        })
    ) {
        let tape = Tape::new();
        let va = tape.param(a.clone());
        let vb = tape.param(b.clone());
        let loss = va.concat_cols(vb).unwrap().mul(tape.constant(w.clone())).unwrap().sum().unwrap();
        tape.backward(loss).unwrap();
        let (ga, gb) = (va.grad().unwrap(), vb.grad().unwrap());
        let c1 = a.cols();
        for r in 0..a.rows() {
            for c in 0..c1 {
                prop_assert_eq!(ga.get(r, c), w.get(r, c));
            }
            for c in 0..b.cols() {
                prop_assert_eq!(gb.get(r, c), w.get(r, c1 + c));
            }
        }
    }

    #[test]
    fn mean_grad_is_sum_grad_over_n(x in shaped()) {
        let grad = |use_mean: bool| {
            let tape = Tape::new();
            let v = tape.param(x.clone());
            let sq = v.mul(v).unwrap();
            let loss = if use_mean { sq.mean() } else { sq.sum() }.unwrap();
            tape.backward(loss).unwrap();
            v.grad().unwrap()
        };
        let n = x.len() as f64;
        let (gm, gs) = (grad(true), grad(false));
        for (m, s) in gm.data().iter().zip(gs.data()) {
            prop_assert!((m - s / n).abs() <= 1e-15 * s.abs().max(1.0));
        }
    }

    #[test]
    fn shared_subexpression_matches_unrolled_tree(x in shaped()) {
        // one leaf read by three consumers, against three separate copies
        // whose gradients are summed in reverse consumer order
        fn consumers<'t>(vs: [gnet::autodiff::Var<'t>; 3]) -> gnet::autodiff::Var<'t> {
            let a = vs[0].tanh().unwrap().sum().unwrap();
            let b = vs[1].sigmoid().unwrap().scale(0.5).unwrap().sum().unwrap();
            let c = vs[2].exp().unwrap().mean().unwrap();
            a.add(b).unwrap().add(c).unwrap()
        }
        let dag = {
            let tape = Tape::new();
            let v = tape.param(x.clone());
            let loss = consumers([v, v, v]);
            tape.backward(loss).unwrap();
            v.grad().unwrap()
        };
        let tree = {
            let tape = Tape::new();
            let copies = [tape.param(x.clone()), tape.param(x.clone()), tape.param(x.clone())];
            let loss = consumers(copies);
            tape.backward(loss).unwrap();
            let g: Vec<Tensor> = copies.iter().map(|c| c.grad().unwrap()).collect();
            let mut total = g[2].clone();
            total.add_assign(&g[1]);
            total.add_assign(&g[0]);
            total
        };
        for (d, t) in dag.data().iter().zip(tree.data()) {
            prop_assert_eq!(d.to_bits(), t.to_bits());
        }
    }
}

#[test]
fn backward_twice_accumulates() {
    let tape = Tape::new();
    let v = tape.param(Tensor::row_vector(&[1.0, -2.0]));
    let loss = v.mul(v).unwrap().sum().unwrap();
    tape.backward(loss).unwrap();
    tape.backward(loss).unwrap();
    assert_eq!(v.grad().unwrap().data(), &[4.0, -8.0]);
    tape.zero_grad();
    tape.backward(loss).unwrap();
    assert_eq!(v.grad().unwrap().data(), &[2.0, -4.0]);
}
