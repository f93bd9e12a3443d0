use serde::{Deserialize, Serialize};

use super::params::{Grads, ParamError, ParamStore};
use super::real::Real;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

/// Per-parameter first and second moments plus the shared step count.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    m: Vec<Option<Vec<F>>>,
    v: Vec<Option<Vec<F>>>,
    t: u64,
}

impl<F: Real> AdamState<F> {
    pub fn new(num_params: usize, config: AdamConfig) -> Self {
        Self {
            config,
            m: vec![None; num_params],
            v: vec![None; num_params],
            t: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.t
    }
}

/// One bias-corrected Adam update over every parameter that has a gradient.
/// Parameters without a gradient are left untouched along with their moments.
pub fn adam_step<F: Real>(
    params: &mut ParamStore<F>,
    grads: &Grads<F>,
    state: &mut AdamState<F>,
    lr: F,
) -> Result<(), ParamError> {
    assert!(lr > F::zero(), "learning rate must be positive");
    assert_eq!(grads.len(), params.len(), "gradient set does not match params");
    for id in params.ids() {
        if let Some(g) = grads.get(id) {
            let p = params.get(id);
            if g.len() != p.len() {
                return Err(ParamError::ShapeMismatch {
                    name: params.name(id).to_string(),
                    expected: p.shape().to_vec(),
                    actual: vec![g.len()],
                });
            }
        }
    }

    state.t += 1;
    let b1 = F::of(state.config.beta1);
    let b2 = F::of(state.config.beta2);
    let eps = F::of(state.config.epsilon);
    let t = state.t as i32;
    let bc1 = F::one() - b1.powi(t);
    let bc2 = F::one() - b2.powi(t);

    for id in params.ids() {
        let Some(g) = grads.get(id) else { continue };
        let n = g.len();
        let m = state.m[id.index()].get_or_insert_with(|| vec![F::zero(); n]);
        let v = state.v[id.index()].get_or_insert_with(|| vec![F::zero(); n]);
        let p = params.get_mut(id).data_mut();
        for i in 0..n {
            m[i] = b1 * m[i] + (F::one() - b1) * g[i];
            v[i] = b2 * v[i] + (F::one() - b2) * g[i] * g[i];
            let m_hat = m[i] / bc1;
            let v_hat = v[i] / bc2;
            p[i] -= lr * m_hat / (v_hat.sqrt() + eps);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::autodiff::{ParamId, Tensor};

    fn scalar_store(x: f64) -> ParamStore<f64> {
        let mut p = ParamStore::new();
        p.add("p", Tensor::scalar(x)).unwrap();
        p
    }

    fn grad(g: f64) -> Grads<f64> {
        let mut gs = Grads::empty(1);
        gs.insert(ParamId(0), vec![g]);
        gs
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(
            1,
            AdamConfig {
                epsilon: 0.0,
                ..Default::default()
            },
        );
        adam_step(&mut p, &grad(0.1), &mut st, 1e-4).unwrap();
        assert!((p.get(ParamId(0)).data()[0] - (1.0 - 1e-4)).abs() < 1e-15);
        assert_eq!(st.step_count(), 1);
    }

    #[test]
    fn zero_gradient_keeps_params() {
        let mut p = scalar_store(0.3);
        let mut st = AdamState::new(1, AdamConfig::default());
        adam_step(&mut p, &grad(0.0), &mut st, 1e-3).unwrap();
        assert_eq!(p.get(ParamId(0)).data()[0], 0.3);
    }

    /// Hand-rolled scalar Adam.
    fn oracle(p0: f64, gs: &[f64], lr: f64) -> f64 {
        let (b1, b2, eps) = (0.9f64, 0.999f64, 1e-8f64);
        let (mut m, mut v, mut p) = (0.0, 0.0, p0);
        for (k, &g) in gs.iter().enumerate() {
            let t = (k + 1) as i32;
            m = b1 * m + (1.0 - b1) * g;
            v = b2 * v + (1.0 - b2) * g * g;
            let mh = m / (1.0 - b1.powi(t));
            let vh = v / (1.0 - b2.powi(t));
            p -= lr * mh / (vh.sqrt() + eps);
        }
        p
    }

    #[test]
    fn two_steps_match_oracle() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(1, AdamConfig::default());
        adam_step(&mut p, &grad(0.1), &mut st, 1e-2).unwrap();
        adam_step(&mut p, &grad(-0.1), &mut st, 1e-2).unwrap();
        let expected = oracle(1.0, &[0.1, -0.1], 1e-2);
        assert!((p.get(ParamId(0)).data()[0] - expected).abs() < 1e-12);
    }

    #[test]
    fn shape_mismatch_rejected() {
        let mut p = scalar_store(1.0);
        let mut st = AdamState::new(1, AdamConfig::default());
        let mut g = Grads::empty(1);
        g.insert(ParamId(0), vec![0.1, 0.2]);
        assert!(matches!(
            adam_step(&mut p, &g, &mut st, 1e-3),
            Err(ParamError::ShapeMismatch { .. })
        ));
        assert_eq!(st.step_count(), 0);
    }

    #[test]
    fn deterministic_bitwise() {
        let run = || {
            let mut p = scalar_store(0.7);
            let mut st = AdamState::new(1, AdamConfig::default());
            for g in [0.3, -0.2, 0.05] {
                adam_step(&mut p, &grad(g), &mut st, 1e-3).unwrap();
            }
            p.get(ParamId(0)).data()[0].to_bits()
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn skips_params_without_gradient() {
        let mut p = ParamStore::<f64>::new();
        p.add("a", Tensor::scalar(1.0)).unwrap();
        p.add("b", Tensor::scalar(2.0)).unwrap();
        let mut g = Grads::empty(2);
        g.insert(ParamId(1), vec![1.0]);
        let mut st = AdamState::new(2, AdamConfig::default());
        adam_step(&mut p, &g, &mut st, 0.1).unwrap();
        assert_eq!(p.get(ParamId(0)).data()[0], 1.0);
        assert!(p.get(ParamId(1)).data()[0] < 2.0);
    }
}
