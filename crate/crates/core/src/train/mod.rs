//! Loss, optimizer, learning-rate schedule, and the training loop.

mod checkpoint;
mod optim;
mod schedule;

use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use checkpoint::{
    load_checkpoint, save_checkpoint, Checkpoint, CheckpointMeta, DatasetInfo, Manifest, TensorEntry, TensorGroup,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use optim::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use schedule::{noam_cyclic_lr, LrSchedule};

use crate::data::{derive_seed, SplitData};
use crate::error::{Error, Result};
use crate::eval::roc_auc;
use crate::layers::Mode;
use crate::model::IetNet;
use crate::tensor::{Graph, Scalar, Tensor};

/// Mean over the batch of `-ln max(p[label], 1e-12)`.
pub fn cross_entropy_loss<S: Scalar>(probs: &Tensor<S>, labels: &[usize]) -> Result<f64> {
    let mut g = Graph::new();
    let p = g.constant(probs.clone());
    let loss = g.cross_entropy(p, labels)?;
    Ok(g.value(loss).data()[0].as_f64())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub batch_size: usize,
    /// Samples per forward/backward pass; gradients of a batch are summed
    /// over its micro-batches, which only bounds memory.
    pub micro_batch: usize,
    pub max_epochs: usize,
    /// Epochs without a new best validation loss before stopping.
    pub patience: usize,
    /// Drives shuffling and dropout (model initialization takes its own seed).
    pub seed: u64,
    pub lr: LrSchedule,
    /// Samples per inference pass during validation.
    pub eval_chunk: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            batch_size: 32,
            micro_batch: 4,
            max_epochs: 200,
            patience: 20,
            seed: 0,
            lr: LrSchedule::default(),
            eval_chunk: 16,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.batch_size == 0 || self.micro_batch == 0 || self.max_epochs == 0 || self.eval_chunk == 0 {
            return Err(Error::Config(
                "batch_size, micro_batch, max_epochs and eval_chunk must be positive".into(),
            ));
        }
        self.lr.validate()
    }
}

/// One line of the training log, written after every epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub epoch: usize,
    /// Optimizer steps so far.
    pub step: u64,
    /// Learning rate of the epoch's last step.
    pub lr: f64,
    pub train_loss: f64,
    pub val_loss: f64,
    pub val_auc: Option<f64>,
    pub val_accuracy: f64,
    pub best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitOutcome {
    /// Weights of the epoch with the lowest validation loss.
    pub best: Checkpoint,
    pub log: Vec<LogRecord>,
    /// Whether patience ran out before `max_epochs`.
    pub early_stopped: bool,
}

/// Validation loss, AUC (binary tasks), and accuracy.
pub fn validation_metrics(model: &IetNet<f32>, val: &SplitData, chunk: usize) -> Result<(f64, Option<f64>, f64)> {
    let pred = model.predict(&val.x, chunk)?;
    let loss = cross_entropy_loss(&pred.probs, &val.y)?;
    let auc = if model.config.n_classes == 2 {
        let scores: Vec<f64> = pred.probs.data().chunks_exact(2).map(|r| r[1] as f64).collect();
        roc_auc(&scores, &val.y).ok().map(|r| r.auc)
    } else {
        None
    };
    let predicted = pred.predicted_classes();
    let correct = predicted.iter().zip(&val.y).filter(|(p, y)| p == y).count();
    Ok((loss, auc, correct as f64 / val.len() as f64))
}

/// Summed gradients of one batch, aligned with the store, and its mean loss.
fn batch_gradients(
    model: &IetNet<f32>,
    data: &SplitData,
    rows: &[usize],
    micro: usize,
    rng: &mut ChaCha8Rng,
) -> Result<(Vec<Tensor<f32>>, f64)> {
    let mut acc: Vec<Option<Tensor<f32>>> = vec![None; model.store.len()];
    let mut loss_sum = 0.0;
    for part in rows.chunks(micro) {
        let (x, y) = data.batch(part)?;
        let mut g = Graph::new();
        let xn = g.constant(x);
        let out = model.forward(&mut g, xn, &mut Mode::Training(rng))?;
        let loss = g.cross_entropy(out.probs, &y)?;
        loss_sum += g.value(loss).data()[0] as f64 * part.len() as f64;
        // weight so that the accumulated gradient is of the batch mean
        let weighted = g.scale(loss, part.len() as f64 / rows.len() as f64)?;
        let grads = g.backward(weighted)?;
        for (id, t) in grads.params() {
            match &mut acc[id.index()] {
                Some(a) => a.add_assign(t),
                slot => *slot = Some(t.clone()),
            }
        }
    }
    let grads = acc
        .into_iter()
        .zip(model.store.iter())
        .map(|(g, (_, _, p))| g.map_or_else(|| Tensor::zeros(p.shape()), Ok))
        .collect::<Result<Vec<_>>>()?;
    Ok((grads, loss_sum / rows.len() as f64))
}

/// Trains `model` with Adam under the noam schedule, validating after every
/// epoch and keeping the weights with the lowest validation loss.
///
/// `on_epoch` sees every log record as soon as it is produced. A non-finite
/// loss or gradient aborts with [`Error::Diverged`] carrying the best
/// checkpoint so far.
pub fn fit(
    model: IetNet<f32>,
    train: &SplitData,
    val: &SplitData,
    cfg: &TrainConfig,
    mut on_epoch: impl FnMut(&LogRecord),
) -> Result<FitOutcome> {
    cfg.validate()?;
    if train.is_empty() || val.is_empty() {
        return Err(Error::Dataset("training and validation splits must be non-empty".into()));
    }
    for (name, s) in [("train", train), ("val", val)] {
        let shape = s.x.shape();
        if shape[1] != model.config.n_channels || shape[2] != model.config.seq_len {
            return Err(Error::Dimension {
                op: if name == "train" { "fit (train split)" } else { "fit (val split)" },
                lhs: shape.to_vec(),
                rhs: vec![model.config.n_channels, model.config.seq_len],
            });
        }
    }
    let mut model = model;
    let mut adam = AdamState::new(&model.store)?;
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 0));
    let mut dropout_rng = ChaCha8Rng::seed_from_u64(derive_seed(cfg.seed, 1));
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut log = Vec::new();
    let mut best: Option<Checkpoint> = None;
    let mut since_best = 0;
    let mut lr = cfg.lr.lr_min;

    for epoch in 1..=cfg.max_epochs {
        let started = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for rows in order.chunks(cfg.batch_size) {
            let diverged = |best: &Option<Checkpoint>, step| Error::Diverged {
                epoch,
                step: step as usize,
                last_good: best.clone().map(Box::new),
            };
            let (grads, loss) = match batch_gradients(&model, train, rows, cfg.micro_batch, &mut dropout_rng) {
                Ok(v) => v,
                Err(Error::NonFinite(what)) => {
                    log::error!("non-finite value in {what}");
                    return Err(diverged(&best, adam.t + 1));
                }
                Err(e) => return Err(e),
            };
            if !loss.is_finite() {
                return Err(diverged(&best, adam.t + 1));
            }
            lr = noam_cyclic_lr(adam.t + 1, &cfg.lr);
            match adam_step(&mut model.store, &grads, &mut adam, lr) {
                Ok(()) => {}
                Err(Error::NonFinite(what)) => {
                    log::error!("non-finite {what}");
                    return Err(diverged(&best, adam.t + 1));
                }
                Err(e) => return Err(e),
            }
            loss_sum += loss * rows.len() as f64;
        }
        let train_loss = loss_sum / train.len() as f64;
        let (val_loss, val_auc, val_accuracy) = validation_metrics(&model, val, cfg.eval_chunk)?;
        let improved = best.as_ref().is_none_or(|b| val_loss < b.meta.val_loss);
        if improved {
            since_best = 0;
            best = Some(Checkpoint {
                config: model.config.clone(),
                params: model.store.clone(),
                optimizer: adam.clone(),
                meta: CheckpointMeta {
                    epoch,
                    step: adam.t,
                    train_loss,
                    val_loss,
                    val_auc,
                    val_accuracy,
                    seed: cfg.seed,
                    train_config: cfg.clone(),
                    dataset: None,
                },
            });
        } else {
            since_best += 1;
        }
        let record = LogRecord {
            epoch,
            step: adam.t,
            lr,
            train_loss,
            val_loss,
            val_auc,
            val_accuracy,
            best: improved,
        };
        log::info!(
            "epoch {epoch}: train_loss {train_loss:.4} val_loss {val_loss:.4} val_acc {val_accuracy:.3} ({:.1}s)",
            started.elapsed().as_secs_f64()
        );
        on_epoch(&record);
        log.push(record);
        if since_best > cfg.patience {
            return Ok(FitOutcome {
                best: best.expect("an epoch completed"),
                log,
                early_stopped: true,
            });
        }
    }
    Ok(FitOutcome {
        best: best.expect("max_epochs >= 1"),
        log,
        early_stopped: false,
    })
}
