use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::GNetModel;
use crate::autodiff::Tape;
use crate::graph::Graph;
use crate::layers::Mode;
use crate::error::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct BranchPrediction {
    pub label: usize,
    /// Probability of the winning class.
    pub confidence: f64,
    pub log_probs: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub recognition: Option<BranchPrediction>,
    pub prediction: Option<BranchPrediction>,
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}

fn branch(log_probs: Vec<f64>) -> BranchPrediction {
    let label = argmax(&log_probs);
    BranchPrediction {
        label,
        confidence: log_probs[label].exp(),
        log_probs,
    }
}

/// Eval-mode labels and confidences for one graph.
pub fn predict(model: &GNetModel, graph: &Graph) -> Result<Prediction> {
    let tape = Tape::new();
    let params = model.params.bind(&tape);
    // eval mode draws nothing from the rng
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = model.forward(&tape, &params, graph, Mode::Eval, &mut rng)?;
    Ok(Prediction {
        recognition: out.logp_r.map(|v| branch(v.value().into_data())),
        prediction: out.logp_p.map(|v| branch(v.value().into_data())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_largest() {
        let b = branch(vec![0.7f64.ln(), 0.2f64.ln(), 0.1f64.ln()]);
        assert_eq!(b.label, 0);
        assert!((b.confidence - 0.7).abs() < 1e-15);
    }

    #[test]
    fn ties_go_low() {
        assert_eq!(argmax(&[0.1, 0.45, 0.45]), 1);
        assert_eq!(argmax(&[-1.0, -1.0]), 0);
    }

    #[test]
    fn shift_does_not_change_label() {
        let v = [0.3, -2.0, 1.7, 1.2];
        let shifted: Vec<f64> = v.iter().map(|x| x + 123.0).collect();
        assert_eq!(argmax(&v), argmax(&shifted));
    }
}
