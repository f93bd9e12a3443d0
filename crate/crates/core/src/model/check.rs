use serde::Serialize;

use super::{Ablation, Hsan, ModelConfig, ModelError};
use crate::autodiff::{grad_check, ClosureLoss, GradCheckError, GradCheckReport, ParamStore};
use crate::text::{EncodedUser, EncodingConfig};

/// Moves every char-conv bias up by 0.1. With zero biases, windows made only
/// of padding characters sit exactly on the relu kink, where central
/// differences disagree with any one-sided derivative.
pub fn shift_off_kinks(params: &mut ParamStore<f64>) {
    let ids: Vec<_> = params.ids().collect();
    for id in ids {
        let name = params.name(id);
        if name.starts_with("char_conv.") && name.ends_with(".bias") {
            for x in params.get_mut(id).data_mut() {
                *x += 0.1;
            }
        }
    }
}

/// Finite-difference check of the exact (unfrozen) gradient of one user's
/// loss, taken at `model`'s parameters shifted off the conv kinks.
pub fn check_network(
    model: &Hsan<f64>,
    user: &EncodedUser,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, GradCheckError> {
    let mut params = model.params.clone();
    shift_off_kinks(&mut params);
    let (cfg, enc) = (model.config.clone(), model.encoding);
    let build = |p: &ParamStore<f64>| Hsan::from_params(cfg.clone(), enc, p.clone());
    let loss = ClosureLoss {
        value: |p: &ParamStore<f64>| {
            build(p)
                .and_then(|m| m.loss(user))
                .unwrap_or(f64::NAN)
        },
        value_and_grad: |p: &ParamStore<f64>| {
            build(p)
                .and_then(|m| m.loss_and_exact_grad(user, None))
                .expect("parameters keep their shapes")
        },
    };
    grad_check(&loss, &params, eps, tol)
}

#[derive(Debug, Clone, Serialize)]
pub struct AblationCheck {
    pub ablation: Ablation,
    pub label: String,
    pub passed: bool,
    pub max_rel_error: f64,
    pub report: GradCheckReport,
}

#[derive(Debug, thiserror::Error)]
pub enum CheckError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("{label}: {source}")]
    Grad {
        label: String,
        #[source]
        source: GradCheckError,
    },
}

/// Runs [`check_network`] for every valid switch combination, each with a
/// fresh model initialized from `seed`.
pub fn check_every_ablation(
    base: &ModelConfig,
    enc: EncodingConfig,
    user: &EncodedUser,
    seed: u64,
    eps: f64,
    tol: f64,
) -> Result<Vec<AblationCheck>, CheckError> {
    let mut out = Vec::new();
    for ablation in Ablation::all_combinations().into_iter().filter(|a| a.is_valid()) {
        let cfg = ModelConfig {
            ablation,
            ..base.clone()
        };
        let model = Hsan::<f64>::new(cfg, enc, None, seed)?;
        let label = ablation.label();
        let report = check_network(&model, user, eps, tol).map_err(|source| CheckError::Grad {
            label: label.clone(),
            source,
        })?;
        out.push(AblationCheck {
            ablation,
            label,
            passed: report.passed(),
            max_rel_error: report.max_rel_error(),
            report,
        });
    }
    Ok(out)
}
