use rand::Rng;
use rand_distr::StandardNormal;

use super::Mode;
use crate::autodiff::{Tensor, Var};
use crate::error::{Error, Result};

/// Variational bottleneck values for one sample.
#[derive(Clone, Copy, Debug)]
pub struct LatentState<'t> {
    pub mu: Var<'t>,
    pub logvar: Var<'t>,
    pub z: Var<'t>,
}

/// `z = mu + exp(logvar / 2) ⊙ ε`, `ε ~ N(0, I)` in train mode; `z = mu` in eval mode.
pub fn reparameterize<'t, R: Rng + ?Sized>(
    mu: Var<'t>,
    logvar: Var<'t>,
    mode: Mode,
    rng: &mut R,
) -> Result<Var<'t>> {
    if mu.shape() != logvar.shape() {
        return Err(Error::Shape {
            op: "reparameterize",
            lhs: mu.shape(),
            rhs: logvar.shape(),
        });
    }
    match mode {
        Mode::Eval => Ok(mu),
        Mode::Train => {
            let (r, c) = mu.shape();
            let noise = Tensor::from_fn(r, c, |_, _| rng.sample(StandardNormal));
            let std = logvar.scale(0.5)?.exp()?;
            mu.add(std.mul(mu.tape().constant(noise))?)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::Tape;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn eval_returns_mu() {
        let tape = Tape::new();
        let mu = tape.param(Tensor::row_vector(&[0.3, -2.0]));
        let lv = tape.param(Tensor::row_vector(&[1.0, 1.0]));
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let z = reparameterize(mu, lv, Mode::Eval, &mut rng).unwrap();
        assert_eq!(z.value(), mu.value());
    }

    #[test]
    fn vanishing_variance_collapses_to_mu() {
        let tape = Tape::new();
        let mu = tape.param(Tensor::row_vector(&[0.3, -2.0, 5.0]));
        let lv = tape.param(Tensor::filled(1, 3, -60.0));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let z = reparameterize(mu, lv, Mode::Train, &mut rng).unwrap();
        for (a, b) in z.value().data().iter().zip(mu.value().data()) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn seeded_noise_is_reproducible() {
        let draw = || {
            let tape = Tape::new();
            let mu = tape.param(Tensor::zeros(1, 4));
            let lv = tape.param(Tensor::zeros(1, 4));
            let mut rng = ChaCha8Rng::seed_from_u64(42);
            reparameterize(mu, lv, Mode::Train, &mut rng).unwrap().value()
        };
        let a = draw();
        assert_eq!(a, draw());
        assert_ne!(a, Tensor::zeros(1, 4));
    }
}
