use crate::autodiff::{Tensor, Var};
use crate::error::{Error, Result};

/// Row `g` of the result is the mean of the rows of `x` assigned to group `g`.
pub fn global_mean_pool<'t>(x: Var<'t>, groups: &[usize]) -> Result<Var<'t>> {
    let (n, _) = x.shape();
    if groups.len() != n {
        return Err(Error::Argument(format!(
            "{} group assignments for {n} nodes",
            groups.len()
        )));
    }
    let num_groups = groups.iter().max().map_or(0, |m| m + 1);
    let mut sizes = vec![0usize; num_groups];
    for &g in groups {
        sizes[g] += 1;
    }
    if num_groups == 0 {
        return Err(Error::Argument("cannot pool an empty node set".into()));
    }
    if let Some(g) = sizes.iter().position(|&s| s == 0) {
        return Err(Error::Argument(format!("pooling group {g} is empty")));
    }
    let mut weights = Tensor::zeros(num_groups, n);
    for (i, &g) in groups.iter().enumerate() {
        weights.set(g, i, 1.0 / sizes[g] as f64);
    }
    x.tape().constant(weights).matmul(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;

    fn pool(rows: &[&[f64]], groups: &[usize]) -> Result<Tensor> {
        let tape = Tape::new();
        let x = tape.constant(Tensor::from_rows(rows));
        global_mean_pool(x, groups).map(|v| v.value())
    }

    #[test]
    fn single_node() {
        assert_eq!(pool(&[&[1.5, -2.0]], &[0]).unwrap(), Tensor::row_vector(&[1.5, -2.0]));
    }

    #[test]
    fn symmetric_pair() {
        assert_eq!(
            pool(&[&[0.0, 2.0], &[2.0, 0.0]], &[0, 0]).unwrap(),
            Tensor::row_vector(&[1.0, 1.0])
        );
    }

    #[test]
    fn mean_of_three() {
        assert_eq!(pool(&[&[1.0], &[2.0], &[3.0]], &[0, 0, 0]).unwrap(), Tensor::scalar(2.0));
    }

    #[test]
    fn multiple_groups() {
        let out = pool(&[&[1.0], &[4.0], &[3.0]], &[1, 0, 1]).unwrap();
        assert_eq!(out, Tensor::from_rows(&[[4.0], [2.0]]));
    }

    #[test]
    fn empty_group_is_error() {
        assert!(pool(&[&[1.0], &[2.0]], &[0, 2]).is_err());
    }
}
