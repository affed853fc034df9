use rand::Rng;

use super::Mode;
use crate::autodiff::{Tensor, Var};
use crate::error::{Error, Result};

/// Inverted dropout: in train mode each entry is zeroed with probability `p`
/// and survivors are scaled by `1 / (1 - p)`.
pub fn dropout<'t, R: Rng + ?Sized>(x: Var<'t>, p: f64, mode: Mode, rng: &mut R) -> Result<Var<'t>> {
    if !(0.0..1.0).contains(&p) {
        return Err(Error::Argument(format!("dropout probability {p} outside [0, 1)")));
    }
    if mode == Mode::Eval || p == 0.0 {
        return Ok(x);
    }
    let (r, c) = x.shape();
    let keep = 1.0 / (1.0 - p);
    let mask = Tensor::from_fn(r, c, |_, _| if rng.gen::<f64>() < p { 0.0 } else { keep });
    x.mul(x.tape().constant(mask))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_and_zero_p_are_identity() {
        let tape = Tape::new();
        let x = tape.param(Tensor::row_vector(&[1.0, -2.0, 3.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = dropout(x, 0.5, Mode::Eval, &mut rng).unwrap();
        let b = dropout(x, 0.0, Mode::Train, &mut rng).unwrap();
        assert_eq!(a.value(), x.value());
        assert_eq!(b.value(), x.value());
    }

    #[test]
    fn expectation_preserved() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::ones(1, 10_000));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let y = dropout(x, 0.5, Mode::Train, &mut rng).unwrap().value();
        let mean = y.sum() / y.len() as f64;
        assert!((mean - 1.0).abs() < 0.05, "{mean}");
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 2.0));
    }

    #[test]
    fn bad_probability() {
        let tape = Tape::new();
        let x = tape.constant(Tensor::ones(1, 2));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(dropout(x, 1.0, Mode::Train, &mut rng).is_err());
        assert!(dropout(x, -0.1, Mode::Train, &mut rng).is_err());
    }
}
