use std::collections::BTreeMap;
use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::{clip_grad_norm, AdamConfig, AdamState};
use super::checkpoint::Checkpoint;
use super::evaluate::evaluate;
use super::metrics::{EpochRecord, Metrics};
use crate::autodiff::{Grads, Tape};
use crate::graph::{Dataset, Sample};
use crate::layers::Mode;
use crate::model::{gnet_loss, GNetModel};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub adam: AdamConfig,
    /// Seeds latent noise, dropout masks and (offset by the epoch) shuffling.
    pub seed: u64,
    pub shuffle: bool,
    /// Global gradient-norm ceiling; `None` disables clipping.
    pub clip: Option<f64>,
    /// Threads used for validation passes.
    pub threads: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 200,
            adam: AdamConfig::default(),
            seed: 0,
            shuffle: true,
            clip: None,
            threads: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct TrainOutcome {
    /// Highest validation recognition accuracy (prediction accuracy when
    /// recognition is disabled); earliest epoch on ties.
    pub best: Checkpoint,
    pub last: Checkpoint,
    pub history: Vec<EpochRecord>,
    pub epoch_seconds: Vec<f64>,
    pub best_val: Option<Metrics>,
    pub last_val: Option<Metrics>,
}

/// Forward, loss and gradients for one sample in train mode.
pub fn sample_gradients(
    model: &GNetModel,
    sample: &Sample,
    rng: &mut ChaCha8Rng,
) -> Result<(f64, Grads)> {
    let tape = Tape::new();
    let params = model.params.bind(&tape);
    let out = model.forward(&tape, &params, &sample.graph, Mode::Train, rng)?;
    let loss = gnet_loss(
        &out,
        sample.recognition_label,
        sample.prediction_label,
        model.config.kl_weight,
    )?;
    let value = loss.total.item();
    tape.backward(loss.total)?;
    Ok((value, params.grads()))
}

fn selection_accuracy(m: &Metrics) -> f64 {
    m.recognition
        .as_ref()
        .or(m.prediction.as_ref())
        .map_or(0.0, |b| b.accuracy)
}

/// Batch-size-1 training with per-epoch validation.
///
/// `on_epoch` sees each history record and the epoch's wall-clock seconds.
pub fn train(
    model: GNetModel,
    train_set: &Dataset,
    val_set: &Dataset,
    config: &TrainConfig,
    mut on_epoch: impl FnMut(&EpochRecord, f64),
) -> Result<TrainOutcome> {
    if train_set.is_empty() || val_set.is_empty() {
        return Err(Error::Argument("training and validation sets must be nonempty".into()));
    }
    model.check_dataset(train_set)?;
    model.check_dataset(val_set)?;

    let snapshot = |model: &GNetModel, epoch, val: Option<f64>| Checkpoint {
        model: model.clone(),
        seed: config.seed,
        epoch,
        val_accuracy: val,
        metadata: BTreeMap::new(),
    };

    let mut model = model;
    let mut adam = AdamState::new(&model.params, config.adam);
    let mut noise_rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut history = Vec::with_capacity(config.epochs);
    let mut epoch_seconds = Vec::with_capacity(config.epochs);
    let mut best = snapshot(&model, 0, None);
    let mut best_val: Option<Metrics> = None;
    let mut last_val = None;

    for epoch in 1..=config.epochs {
        let started = Instant::now();
        if config.shuffle {
            order.sort_unstable();
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(epoch as u64));
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for (k, &i) in order.iter().enumerate() {
            let fail = |message: String| Error::Training {
                epoch,
                sample: i,
                message,
            };
            let (loss, mut grads) = sample_gradients(&model, &train_set.samples[i], &mut noise_rng)
                .map_err(|e| fail(e.to_string()))?;
            if !loss.is_finite() {
                return Err(fail(format!("loss became {loss} (step {k})")));
            }
            if let Some(c) = config.clip {
                clip_grad_norm(&mut grads, c);
            }
            adam.step(&mut model.params, &grads)
                .map_err(|e| fail(e.to_string()))?;
            total += loss;
        }

        let val = evaluate(&model, val_set, config.threads)?;
        let record = EpochRecord {
            epoch,
            train_loss: total / train_set.len() as f64,
            val_loss: val.loss,
            acc_r: val.recognition.as_ref().map(|b| b.accuracy),
            acc_p: val.prediction.as_ref().map(|b| b.accuracy),
        };
        let acc = selection_accuracy(&val);
        if best_val.as_ref().map_or(true, |b| acc > selection_accuracy(b)) {
            best = snapshot(&model, epoch, Some(acc));
            best_val = Some(val.clone());
        }
        let seconds = started.elapsed().as_secs_f64();
        on_epoch(&record, seconds);
        history.push(record);
        epoch_seconds.push(seconds);
        last_val = Some(val);
    }

    let last_acc = last_val.as_ref().map(selection_accuracy);
    Ok(TrainOutcome {
        last: snapshot(&model, config.epochs, last_acc),
        best,
        history,
        epoch_seconds,
        best_val,
        last_val,
    })
}
