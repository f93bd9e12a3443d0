use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{argmax, check_labels, BaselineError, SparseMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Crammer–Singer multi-class hinge loss with an L2 penalty.
    Hinge,
    /// Softmax cross-entropy.
    Softmax,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinearConfig {
    pub objective: Objective,
    pub epochs: usize,
    /// Initial step size; decays linearly to zero over training.
    pub lr: f64,
    /// Penalty `C`; the L2 strength is `1 / (C·n)`, none when absent.
    pub c_penalty: Option<f64>,
    pub seed: u64,
}

impl LinearConfig {
    pub fn svm() -> Self {
        Self {
            objective: Objective::Hinge,
            epochs: 10,
            lr: 0.1,
            c_penalty: Some(100.0),
            seed: 42,
        }
    }

    pub fn fasttext() -> Self {
        Self {
            objective: Objective::Softmax,
            epochs: 10,
            lr: 1.0,
            c_penalty: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel {
    pub objective: Objective,
    pub num_classes: usize,
    pub num_features: usize,
    /// `classes × features`, row-major.
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
    pub l2: f64,
}

impl LinearModel {
    pub fn zeros(objective: Objective, num_classes: usize, num_features: usize, l2: f64) -> Self {
        Self {
            objective,
            num_classes,
            num_features,
            weight: vec![0.0; num_classes * num_features],
            bias: vec![0.0; num_classes],
            l2,
        }
    }

    pub fn scores(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let f = self.num_features;
        (0..self.num_classes)
            .map(|c| {
                self.bias[c]
                    + row
                        .iter()
                        .map(|&(j, v)| v * self.weight[c * f + j])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<Vec<f64>> {
        x.rows.iter().map(|r| softmax(&self.scores(r))).collect()
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        x.rows.iter().map(|r| argmax(&self.scores(r))).collect()
    }

    /// One SGD step on a single example: `w ← w − lr·(l2·w + g)` with `g`
    /// the (sub)gradient of the objective at the current weights. The bias
    /// is not penalized.
    pub fn sgd_step(&mut self, row: &[(usize, f64)], label: usize, lr: f64) {
        let f = self.num_features;
        let s = self.scores(row);
        // coefficient of x in the gradient for each class
        let mut coef = vec![0.0; self.num_classes];
        match self.objective {
            Objective::Hinge => {
                let rival = (0..self.num_classes)
                    .filter(|&c| c != label)
                    .fold(None, |best: Option<usize>, c| match best {
                        Some(b) if s[b] >= s[c] => Some(b),
                        _ => Some(c),
                    })
                    .expect("at least two classes");
                if 1.0 + s[rival] - s[label] > 0.0 {
                    coef[label] = -1.0;
                    coef[rival] = 1.0;
                }
            }
            Objective::Softmax => {
                let p = softmax(&s);
                for c in 0..self.num_classes {
                    coef[c] = p[c] - if c == label { 1.0 } else { 0.0 };
                }
            }
        }
        if self.l2 > 0.0 {
            let decay = 1.0 - lr * self.l2;
            self.weight.iter_mut().for_each(|w| *w *= decay);
        }
        for (c, &g) in coef.iter().enumerate() {
            if g == 0.0 {
                continue;
            }
            for &(j, v) in row {
                self.weight[c * f + j] -= lr * g * v;
            }
            self.bias[c] -= lr * g;
        }
    }

    pub fn fit(x: &SparseMatrix, y: &[usize], num_classes: usize, cfg: &LinearConfig) -> Result<Self, BaselineError> {
        if !(cfg.lr > 0.0 && cfg.lr.is_finite()) {
            return Err(BaselineError::Invalid(format!("lr must be positive, got {}", cfg.lr)));
        }
        if cfg.epochs == 0 {
            return Err(BaselineError::Invalid("epochs must be at least 1".into()));
        }
        if cfg.c_penalty.is_some_and(|c| c <= 0.0) {
            return Err(BaselineError::Invalid("penalty C must be positive".into()));
        }
        let counts = check_labels(x, y, num_classes)?;
        if counts.iter().filter(|&&k| k > 0).count() < 2 {
            return Err(BaselineError::SingleClass);
        }
        let n = y.len();
        let l2 = cfg.c_penalty.map_or(0.0, |c| 1.0 / (c * n as f64));
        let mut model = Self::zeros(cfg.objective, num_classes, x.cols, l2);
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut order: Vec<usize> = (0..n).collect();
        let total = (cfg.epochs * n) as f64;
        let mut t = 0usize;
        for _ in 0..cfg.epochs {
            order.shuffle(&mut rng);
            for &i in &order {
                let lr = cfg.lr * (1.0 - t as f64 / total);
                model.sgd_step(&x.rows[i], y[i], lr);
                t += 1;
            }
        }
        if !model.weight.iter().chain(&model.bias).all(|v| v.is_finite()) {
            return Err(BaselineError::Invalid("training diverged".into()));
        }
        Ok(model)
    }
}

fn softmax(s: &[f64]) -> Vec<f64> {
    let m = s.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = s.iter().map(|v| (v - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.iter().map(|v| v / z).collect()
}

pub fn linear_fit(
    x: &SparseMatrix,
    y: &[usize],
    num_classes: usize,
    cfg: &LinearConfig,
) -> Result<LinearModel, BaselineError> {
    LinearModel::fit(x, y, num_classes, cfg)
}

pub fn linear_predict(model: &LinearModel, x: &SparseMatrix) -> Vec<usize> {
    model.predict(x)
}
