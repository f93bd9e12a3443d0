use serde::Serialize;
use thiserror::Error;

use super::params::{Grads, ParamStore};

/// Scalar objective over a parameter set, evaluated in 64-bit precision.
pub trait LossFn {
    fn value(&self, params: &ParamStore<f64>) -> f64;

    fn value_and_grad(&self, params: &ParamStore<f64>) -> (f64, Grads<f64>);
}

/// Adapts a pair of closures into a [`LossFn`].
pub struct ClosureLoss<V, G> {
    pub value: V,
    pub value_and_grad: G,
}

impl<V, G> LossFn for ClosureLoss<V, G>
where
    V: Fn(&ParamStore<f64>) -> f64,
    G: Fn(&ParamStore<f64>) -> (f64, Grads<f64>),
{
    fn value(&self, params: &ParamStore<f64>) -> f64 {
        (self.value)(params)
    }

    fn value_and_grad(&self, params: &ParamStore<f64>) -> (f64, Grads<f64>) {
        (self.value_and_grad)(params)
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GradCheckError {
    #[error("loss is not finite at the base point")]
    NonFiniteBase,
    #[error("loss is not finite after perturbing `{param}`[{index}] by {delta:+e}")]
    NonFinite {
        param: String,
        index: usize,
        delta: f64,
    },
}

#[derive(Debug, Clone, Serialize)]
pub struct ParamCheck {
    pub name: String,
    pub size: usize,
    pub max_rel_error: f64,
    pub worst_index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub eps: f64,
    pub tol: f64,
    pub loss: f64,
    pub params: Vec<ParamCheck>,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.params.iter().all(|p| p.max_rel_error <= self.tol)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ParamCheck> {
        self.params.iter().filter(|p| p.max_rel_error > self.tol)
    }

    pub fn max_rel_error(&self) -> f64 {
        self.params
            .iter()
            .map(|p| p.max_rel_error)
            .fold(0.0, f64::max)
    }
}

/// Relative error floor used in the denominator.
const REL_FLOOR: f64 = 1e-8;

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_FLOOR)
}

/// Compares analytic gradients against central finite differences
/// `(L(p+eps) − L(p−eps)) / 2eps` for every scalar of every parameter.
pub fn grad_check(
    loss_fn: &impl LossFn,
    params: &ParamStore<f64>,
    eps: f64,
    tol: f64,
) -> Result<GradCheckReport, GradCheckError> {
    let (loss, analytic) = loss_fn.value_and_grad(params);
    if !loss.is_finite() {
        return Err(GradCheckError::NonFiniteBase);
    }
    let mut work = params.clone();
    let mut checks = Vec::with_capacity(params.len());
    for (id, name, tensor) in params.iter() {
        let zeros;
        let ga = match analytic.get(id) {
            Some(g) => g,
            None => {
                zeros = vec![0.0; tensor.len()];
                &zeros
            }
        };
        let mut check = ParamCheck {
            name: name.to_string(),
            size: tensor.len(),
            max_rel_error: 0.0,
            worst_index: 0,
            analytic: 0.0,
            numeric: 0.0,
        };
        for (i, &orig) in tensor.data().iter().enumerate() {
            let mut eval_at = |delta: f64| -> Result<f64, GradCheckError> {
                work.get_mut(id).data_mut()[i] = orig + delta;
                let v = loss_fn.value(&work);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(GradCheckError::NonFinite {
                        param: name.to_string(),
                        index: i,
                        delta,
                    })
                }
            };
            let plus = eval_at(eps)?;
            let minus = eval_at(-eps)?;
            work.get_mut(id).data_mut()[i] = orig;
            let numeric = (plus - minus) / (2.0 * eps);
            let err = relative_error(ga[i], numeric);
            if err > check.max_rel_error || i == 0 {
                check.max_rel_error = err;
                check.worst_index = i;
                check.analytic = ga[i];
                check.numeric = numeric;
            }
        }
        checks.push(check);
    }
    Ok(GradCheckReport {
        eps,
        tol,
        loss,
        params: checks,
    })
}
