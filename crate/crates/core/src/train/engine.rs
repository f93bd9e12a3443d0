use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::config::{lr_at_step, TrainConfig};
use super::TrainError;
use crate::autodiff::{adam_step, AdamConfig, AdamState, Grads, Real};
use crate::eval::{confusion, metrics, EvalReport};
use crate::labels::LabelSet;
use crate::model::{forward_batch, Hsan};
use crate::parallel::{map_ordered, parallelism, Execution};
use crate::text::EncodedUser;

/// One line of the training log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogRecord {
    pub step: u64,
    pub epoch: usize,
    pub lr: f64,
    pub train_loss: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_accuracy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dev_macro_f1: Option<f64>,
    pub checkpoint_saved: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub stage: Option<String>,
}

/// Global step range covered by a named stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageMarker {
    pub name: String,
    pub first_step: u64,
    pub last_step: u64,
}

/// Best-so-far selection by dev accuracy; the earlier step wins ties.
#[derive(Debug, Clone, Default)]
pub struct BestTracker {
    best: Option<(f64, u64)>,
}

impl BestTracker {
    /// Records an evaluation and reports whether it is the new best.
    pub fn offer(&mut self, accuracy: f64, step: u64) -> bool {
        match self.best {
            Some((b, _)) if accuracy <= b => false,
            _ => {
                self.best = Some((accuracy, step));
                true
            }
        }
    }

    pub fn best(&self) -> Option<(f64, u64)> {
        self.best
    }
}

/// Where log records go besides the returned list.
#[derive(Default)]
pub struct TrainOptions<'a> {
    pub exec: Execution,
    pub log_sink: Option<&'a mut dyn FnMut(&LogRecord)>,
}

impl<'a> TrainOptions<'a> {
    pub fn new(exec: Execution) -> Self {
        Self {
            exec,
            log_sink: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome<F> {
    /// Parameters from the best dev evaluation.
    pub best: Hsan<F>,
    /// Parameters after the last step.
    pub last: Hsan<F>,
    pub best_dev_accuracy: f64,
    pub best_dev_macro_f1: f64,
    pub best_step: u64,
    pub log: Vec<LogRecord>,
    pub stages: Vec<StageMarker>,
}

/// Mixes seed components into one 64-bit seed (splitmix64 finalizer).
pub fn derive_seed(parts: &[u64]) -> u64 {
    let mut h: u64 = 0x9E37_79B9_7F4A_7C15;
    for &p in parts {
        let mut z = h ^ p.wrapping_add(0x9E37_79B9_7F4A_7C15);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        h = z ^ (z >> 31);
    }
    h
}

const SHUFFLE_TAG: u64 = 1;
const DROPOUT_TAG: u64 = 2;

/// Mean loss and gradient over a batch. Each user gets its own dropout
/// stream derived from `(seed, step, position)`, and per-user gradients are
/// summed in batch order, so the result does not depend on `exec`.
pub fn batch_gradient<F: Real>(
    model: &Hsan<F>,
    batch: &[&EncodedUser],
    seed: u64,
    step: u64,
    exec: Execution,
) -> Result<(F, Grads<F>), TrainError> {
    let mut total = Grads::empty(model.params.len());
    let mut loss = F::zero();
    let step_seed = derive_seed(&[seed, DROPOUT_TAG, step]);
    let width = parallelism(exec);
    let mut offset = 0;
    for chunk in batch.chunks(width) {
        let results = map_ordered(exec, chunk, |i, u| {
            let mut rng = ChaCha8Rng::seed_from_u64(step_seed);
            rng.set_stream((offset + i) as u64);
            model.loss_and_grad(u, Some(rng))
        });
        for r in results {
            let (l, g) = r?;
            loss += l;
            total.add_assign(&g);
        }
        offset += chunk.len();
    }
    let inv = F::one() / F::of(batch.len() as f64);
    total.scale(inv);
    Ok((loss * inv, total))
}

/// Evaluation-mode predictions and metrics.
pub fn evaluate<F: Real>(
    model: &Hsan<F>,
    labels: &LabelSet,
    users: &[EncodedUser],
    exec: Execution,
) -> Result<(Vec<usize>, EvalReport), TrainError> {
    let outs = forward_batch(model, users, exec)?;
    let preds: Vec<usize> = outs.iter().map(|o| o.predicted()).collect();
    let golds: Vec<usize> = users.iter().map(|u| u.label_id).collect();
    let report = metrics(&confusion(&preds, &golds, labels)?)?;
    Ok((preds, report))
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum LrPlan {
    Constant(f64),
    Scheduled,
}

pub(crate) struct Stage<'n> {
    pub name: Option<&'n str>,
    pub epochs: usize,
    pub lr: LrPlan,
    pub head_only: bool,
    /// Evaluate on dev and track the best parameters.
    pub select: bool,
    pub tag: u64,
}

/// Mutable state shared by consecutive stages of one run.
pub(crate) struct RunState<F> {
    pub step: u64,
    pub log: Vec<LogRecord>,
    pub stages: Vec<StageMarker>,
    pub tracker: BestTracker,
    pub best: Option<(Hsan<F>, f64)>,
}

impl<F> RunState<F> {
    pub fn new() -> Self {
        Self {
            step: 0,
            log: Vec::new(),
            stages: Vec::new(),
            tracker: BestTracker::default(),
            best: None,
        }
    }
}

#[allow(clippy::too_many_arguments)]
pub(crate) fn run_stage<F: Real>(
    model: &mut Hsan<F>,
    labels: &LabelSet,
    train: &[EncodedUser],
    dev: &[EncodedUser],
    cfg: &TrainConfig,
    stage: &Stage<'_>,
    state: &mut RunState<F>,
    opts: &mut TrainOptions<'_>,
) -> Result<(), TrainError> {
    let per_epoch = cfg.steps_per_epoch(train.len()) as u64;
    let total = per_epoch * stage.epochs as u64;
    let first_step = state.step + 1;
    let mut adam = AdamState::new(model.params.len(), AdamConfig::default());
    let mut order: Vec<usize> = (0..train.len()).collect();
    let mut local = 0u64;
    for epoch in 1..=stage.epochs {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[
            cfg.seed,
            SHUFFLE_TAG,
            stage.tag,
            epoch as u64,
        ]));
        order.sort_unstable();
        order.shuffle(&mut rng);
        let batches: Vec<&[usize]> = order.chunks(cfg.batch_size).collect();
        let last_batch = batches.len();
        for (b, idx) in batches.into_iter().enumerate() {
            local += 1;
            state.step += 1;
            let step = state.step;
            let lr = match stage.lr {
                LrPlan::Constant(lr) => lr,
                LrPlan::Scheduled => lr_at_step(local, total, cfg),
            };
            let batch: Vec<&EncodedUser> = idx.iter().map(|&i| &train[i]).collect();
            let (loss, mut grads) = batch_gradient(model, &batch, cfg.seed, step, opts.exec)?;
            if !loss.is_finite() || !grads.all_finite() {
                return Err(TrainError::NonFinite { step, lr });
            }
            if stage.head_only {
                let ids = model.ids().clone();
                grads.retain(|id| ids.is_classifier(id));
            }
            if let Some(c) = cfg.clip_norm {
                grads.clip_global_norm(F::of(c));
            }
            adam_step(&mut model.params, &grads, &mut adam, F::of(lr))?;
            let mut rec = LogRecord {
                step,
                epoch,
                lr,
                train_loss: loss.as_f64(),
                dev_accuracy: None,
                dev_macro_f1: None,
                checkpoint_saved: false,
                stage: stage.name.map(String::from),
            };
            let epoch_end = b + 1 == last_batch;
            if stage.select && (local.is_multiple_of(cfg.eval_every as u64) || epoch_end) {
                let (_, report) = evaluate(model, labels, dev, opts.exec)?;
                rec.dev_accuracy = Some(report.accuracy);
                rec.dev_macro_f1 = Some(report.macro_f1);
                if state.tracker.offer(report.accuracy, step) {
                    state.best = Some((model.clone(), report.macro_f1));
                    rec.checkpoint_saved = true;
                }
            }
            log::debug!(
                "step {step} epoch {epoch} lr {lr:e} loss {:.5}{}",
                rec.train_loss,
                rec.dev_accuracy
                    .map(|a| format!(" dev_acc {a:.4}"))
                    .unwrap_or_default()
            );
            if let Some(sink) = opts.log_sink.as_mut() {
                sink(&rec);
            }
            state.log.push(rec);
        }
    }
    state.stages.push(StageMarker {
        name: stage.name.unwrap_or("train").to_string(),
        first_step,
        last_step: state.step,
    });
    Ok(())
}

pub(crate) fn finish<F: Real>(model: Hsan<F>, state: RunState<F>) -> Result<TrainOutcome<F>, TrainError> {
    let (best_dev_accuracy, best_step) = state
        .tracker
        .best()
        .ok_or_else(|| TrainError::Config("no dev evaluation took place".into()))?;
    let (best, best_dev_macro_f1) = state.best.expect("tracked alongside the best step");
    Ok(TrainOutcome {
        best,
        last: model,
        best_dev_accuracy,
        best_dev_macro_f1,
        best_step,
        log: state.log,
        stages: state.stages,
    })
}

pub(crate) fn check_inputs(
    train: &[EncodedUser],
    dev: &[EncodedUser],
    cfg: &TrainConfig,
) -> Result<(), TrainError> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(TrainError::Config("training set is empty".into()));
    }
    if dev.is_empty() {
        return Err(TrainError::Config("dev set is empty".into()));
    }
    Ok(())
}

/// Mini-batch Adam training with the step-wise schedule, periodic dev
/// evaluation and best-accuracy selection.
pub fn train<F: Real>(
    model: Hsan<F>,
    labels: &LabelSet,
    train: &[EncodedUser],
    dev: &[EncodedUser],
    cfg: &TrainConfig,
    opts: &mut TrainOptions<'_>,
) -> Result<TrainOutcome<F>, TrainError> {
    check_inputs(train, dev, cfg)?;
    check_labels(&model, labels)?;
    let mut model = model;
    let mut state = RunState::new();
    let stage = Stage {
        name: None,
        epochs: cfg.epochs,
        lr: LrPlan::Scheduled,
        head_only: false,
        select: true,
        tag: 0,
    };
    run_stage(&mut model, labels, train, dev, cfg, &stage, &mut state, opts)?;
    finish(model, state)
}

pub(crate) fn check_labels<F: Real>(model: &Hsan<F>, labels: &LabelSet) -> Result<(), TrainError> {
    if model.config.num_classes != labels.len() {
        return Err(TrainError::Config(format!(
            "model has {} classes but the label set has {}",
            model.config.num_classes,
            labels.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn selection_keeps_first_maximum() {
        let mut t = BestTracker::default();
        let saved: Vec<bool> = [(0.5, 100), (0.7, 200), (0.6, 300), (0.7, 400)]
            .iter()
            .map(|&(a, s)| t.offer(a, s))
            .collect();
        assert_eq!(saved, vec![true, true, false, false]);
        assert_eq!(t.best(), Some((0.7, 200)));
    }

    #[test]
    fn derived_seeds_differ() {
        assert_ne!(derive_seed(&[1, 2]), derive_seed(&[2, 1]));
        assert_eq!(derive_seed(&[7, 7]), derive_seed(&[7, 7]));
    }
}
