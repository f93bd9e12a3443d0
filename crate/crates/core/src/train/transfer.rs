use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::engine::{
    check_inputs, check_labels, finish, run_stage, LogRecord, LrPlan, RunState, Stage,
    TrainOptions, TrainOutcome,
};
use super::{Checkpoint, TrainConfig, TrainError};
use crate::autodiff::{ParamStore, Real, Tensor};
use crate::labels::LabelSet;
use crate::model::{xavier, Hsan, ModelConfig, CLASSIFIER_BIAS, CLASSIFIER_WEIGHT};
use crate::text::{EncodedUser, Vocab};

/// Binary public-figure pretraining. `exclude_ids` holds the ids of the
/// identity corpus; any overlap with the pretraining data is an error.
pub fn pretrain_public_figure<F: Real>(
    model: Hsan<F>,
    labels: &LabelSet,
    train: &[EncodedUser],
    dev: &[EncodedUser],
    cfg: &TrainConfig,
    exclude_ids: &HashSet<String>,
    opts: &mut TrainOptions<'_>,
) -> Result<TrainOutcome<F>, TrainError> {
    if !labels.is_binary() {
        return Err(TrainError::Config(format!(
            "pretraining needs a binary label set, got {} labels",
            labels.len()
        )));
    }
    if let Some(u) = train.iter().chain(dev).find(|u| exclude_ids.contains(&u.id)) {
        return Err(TrainError::Overlap(u.id.clone()));
    }
    super::train(model, labels, train, dev, cfg, opts)
}

/// First differing top-level field of two serialized configs.
fn config_difference(a: &ModelConfig, b: &ModelConfig) -> Option<String> {
    let a = serde_json::to_value(a).expect("config serializes");
    let b = serde_json::to_value(b).expect("config serializes");
    let (a, b) = (a.as_object()?, b.as_object()?);
    a.iter()
        .filter(|(k, _)| k.as_str() != "num_classes")
        .find(|(k, v)| b.get(k.as_str()) != Some(v))
        .map(|(k, _)| k.clone())
}

/// Copies every pretrained parameter except the classifier, which is freshly
/// initialized for `new_labels`.
pub fn init_from_pretrained<F: Real>(
    ckpt: &Checkpoint<F>,
    target: &ModelConfig,
    new_labels: &LabelSet,
    vocab: &Vocab,
    seed: u64,
) -> Result<Hsan<F>, TrainError> {
    if ckpt.vocab.fingerprint() != vocab.fingerprint() {
        return Err(TrainError::Mismatch {
            field: "vocab".into(),
            detail: "pretrained vocabulary differs from the target vocabulary".into(),
        });
    }
    if let Some(field) = config_difference(&ckpt.model.config, target) {
        return Err(TrainError::Mismatch {
            detail: format!("pretrained and target configs differ in `{field}`"),
            field,
        });
    }
    if target.num_classes != new_labels.len() {
        return Err(TrainError::Mismatch {
            field: "num_classes".into(),
            detail: format!(
                "target config has {} classes but the label set has {}",
                target.num_classes,
                new_labels.len()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let width = 2 * target.dim;
    let mut params = ParamStore::new();
    for (_, name, t) in ckpt.model.params.iter() {
        let value = match name {
            CLASSIFIER_WEIGHT => xavier(&mut rng, new_labels.len(), width),
            CLASSIFIER_BIAS => Tensor::vector(vec![F::zero(); new_labels.len()]),
            _ => t.clone(),
        };
        params.add(name, value)?;
    }
    Ok(Hsan::from_params(target.clone(), ckpt.model.encoding, params)?)
}

/// Result of the classifier-only warm-up.
pub struct HeadWarmup<F> {
    pub model: Hsan<F>,
    pub log: Vec<LogRecord>,
}

/// Trains only the classifier for `head_warmup_epochs` at `head_lr`, with
/// no dev selection.
pub fn warm_up_head<F: Real>(
    model: Hsan<F>,
    labels: &LabelSet,
    train: &[EncodedUser],
    cfg: &TrainConfig,
    opts: &mut TrainOptions<'_>,
) -> Result<HeadWarmup<F>, TrainError> {
    cfg.validate()?;
    check_labels(&model, labels)?;
    let mut model = model;
    let mut state = RunState::new();
    head_stage(&mut model, labels, train, cfg, &mut state, opts)?;
    Ok(HeadWarmup {
        model,
        log: state.log,
    })
}

fn head_stage<F: Real>(
    model: &mut Hsan<F>,
    labels: &LabelSet,
    train: &[EncodedUser],
    cfg: &TrainConfig,
    state: &mut RunState<F>,
    opts: &mut TrainOptions<'_>,
) -> Result<(), TrainError> {
    if cfg.head_warmup_epochs == 0 {
        return Ok(());
    }
    let stage = Stage {
        name: Some("head"),
        epochs: cfg.head_warmup_epochs,
        lr: LrPlan::Constant(cfg.head_lr),
        head_only: true,
        select: false,
        tag: 1,
    };
    run_stage(model, labels, train, &[], cfg, &stage, state, opts)
}

/// Two-stage fine-tuning: classifier warm-up, then the full training
/// procedure. Log records carry the stage name and the outcome lists the
/// step range of each stage.
pub fn finetune<F: Real>(
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
    head_stage(&mut model, labels, train, cfg, &mut state, opts)?;
    let full = Stage {
        name: Some("full"),
        epochs: cfg.epochs,
        lr: LrPlan::Scheduled,
        head_only: false,
        select: true,
        tag: 2,
    };
    run_stage(&mut model, labels, train, dev, cfg, &full, &mut state, opts)?;
    finish(model, state)
}
