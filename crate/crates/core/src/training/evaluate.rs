use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::metrics::{BranchMetrics, ConfusionMatrix, Metrics};
use crate::autodiff::Tape;
use crate::graph::{Dataset, Sample};
use crate::layers::Mode;
use crate::model::{argmax, gnet_loss, GNetModel};
use crate::error::{Error, Result};

struct Outcome {
    loss: f64,
    recognition: Option<usize>,
    prediction: Option<usize>,
}

fn evaluate_sample(model: &GNetModel, sample: &Sample) -> Result<Outcome> {
    let tape = Tape::new();
    let params = model.params.bind(&tape);
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let out = model.forward(&tape, &params, &sample.graph, Mode::Eval, &mut rng)?;
    let loss = gnet_loss(
        &out,
        sample.recognition_label,
        sample.prediction_label,
        model.config.kl_weight,
    )?;
    Ok(Outcome {
        loss: loss.total.item(),
        recognition: out.logp_r.map(|v| v.with_value(|t| argmax(t.data()))),
        prediction: out.logp_p.map(|v| v.with_value(|t| argmax(t.data()))),
    })
}

/// Eval-mode accuracy, confusion matrices and mean loss.
///
/// With `threads > 1` samples are spread over scoped threads, each building
/// its own tapes; results are combined in sample order, so the output does
/// not depend on the thread count.
pub fn evaluate(model: &GNetModel, dataset: &Dataset, threads: usize) -> Result<Metrics> {
    if dataset.is_empty() {
        return Err(Error::Argument(format!("dataset `{}` is empty", dataset.name)));
    }
    model.check_dataset(dataset)?;
    let samples = &dataset.samples;
    let threads = threads.clamp(1, samples.len());
    let outcomes: Vec<Outcome> = if threads == 1 {
        samples
            .iter()
            .map(|s| evaluate_sample(model, s))
            .collect::<Result<_>>()?
    } else {
        let chunk = samples.len().div_ceil(threads);
        std::thread::scope(|scope| {
            let handles: Vec<_> = samples
                .chunks(chunk)
                .map(|part| {
                    scope.spawn(move || {
                        part.iter()
                            .map(|s| evaluate_sample(model, s))
                            .collect::<Result<Vec<_>>>()
                    })
                })
                .collect();
            let mut all = Vec::with_capacity(samples.len());
            for h in handles {
                all.extend(h.join().expect("evaluation thread panicked")?);
            }
            Ok::<_, Error>(all)
        })?
    };

    let classes = model.config.num_classes;
    let mut cm_r = model.config.recognition.then(|| ConfusionMatrix::new(classes));
    let mut cm_p = model.config.prediction.then(|| ConfusionMatrix::new(classes));
    let mut loss = 0.0;
    for (s, o) in samples.iter().zip(&outcomes) {
        loss += o.loss;
        if let (Some(cm), Some(p)) = (cm_r.as_mut(), o.recognition) {
            cm.add(s.recognition_label, p);
        }
        if let (Some(cm), Some(p)) = (cm_p.as_mut(), o.prediction) {
            cm.add(s.prediction_label, p);
        }
    }
    let branch = |cm: ConfusionMatrix| BranchMetrics {
        accuracy: cm.accuracy(),
        confusion: cm,
    };
    Ok(Metrics {
        samples: samples.len(),
        loss: loss / samples.len() as f64,
        recognition: cm_r.map(branch),
        prediction: cm_p.map(branch),
    })
}
