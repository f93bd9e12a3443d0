use serde::{Deserialize, Serialize};

use super::{argmax, check_labels, BaselineError, SparseMatrix};

/// Multinomial naive Bayes over nonnegative (possibly fractional) feature
/// masses with additive smoothing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MnbModel {
    pub alpha: f64,
    pub log_prior: Vec<f64>,
    /// `classes × features`, row-major.
    pub log_lik: Vec<f64>,
    pub num_features: usize,
}

impl MnbModel {
    pub fn num_classes(&self) -> usize {
        self.log_prior.len()
    }

    pub fn fit(
        x: &SparseMatrix,
        y: &[usize],
        num_classes: usize,
        alpha: f64,
    ) -> Result<Self, BaselineError> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(BaselineError::Invalid(format!("alpha must be positive, got {alpha}")));
        }
        let class_counts = check_labels(x, y, num_classes)?;
        if let Some(c) = class_counts.iter().position(|&n| n == 0) {
            return Err(BaselineError::MissingClass(c));
        }
        let f = x.cols;
        let mut mass = vec![0.0; num_classes * f];
        for (row, &c) in x.rows.iter().zip(y) {
            for &(j, v) in row {
                if v < 0.0 {
                    return Err(BaselineError::Invalid("features must be nonnegative".into()));
                }
                mass[c * f + j] += v;
            }
        }
        let n = y.len() as f64;
        let log_prior = class_counts.iter().map(|&k| (k as f64 / n).ln()).collect();
        let mut log_lik = vec![0.0; num_classes * f];
        for c in 0..num_classes {
            let row = &mass[c * f..(c + 1) * f];
            let total: f64 = row.iter().sum::<f64>() + alpha * f as f64;
            for j in 0..f {
                log_lik[c * f + j] = ((row[j] + alpha) / total).ln();
            }
        }
        Ok(Self {
            alpha,
            log_prior,
            log_lik,
            num_features: f,
        })
    }

    /// Unnormalized log joint `log P(c) + Σ_j x_j log P(j | c)` per class.
    pub fn joint_log_likelihood(&self, row: &[(usize, f64)]) -> Vec<f64> {
        let f = self.num_features;
        (0..self.num_classes())
            .map(|c| {
                self.log_prior[c]
                    + row
                        .iter()
                        .map(|&(j, v)| v * self.log_lik[c * f + j])
                        .sum::<f64>()
            })
            .collect()
    }

    pub fn predict_proba(&self, x: &SparseMatrix) -> Vec<Vec<f64>> {
        x.rows
            .iter()
            .map(|r| {
                let j = self.joint_log_likelihood(r);
                let m = j.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let lse = m + j.iter().map(|v| (v - m).exp()).sum::<f64>().ln();
                j.iter().map(|v| (v - lse).exp()).collect()
            })
            .collect()
    }

    pub fn predict(&self, x: &SparseMatrix) -> Vec<usize> {
        x.rows
            .iter()
            .map(|r| argmax(&self.joint_log_likelihood(r)))
            .collect()
    }
}

pub fn mnb_fit(
    x: &SparseMatrix,
    y: &[usize],
    num_classes: usize,
    alpha: f64,
) -> Result<MnbModel, BaselineError> {
    MnbModel::fit(x, y, num_classes, alpha)
}

pub fn mnb_predict(model: &MnbModel, x: &SparseMatrix) -> Vec<usize> {
    model.predict(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_row_predicts_prior_argmax() {
        let x = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0], vec![0.0, 2.0]]);
        let m = MnbModel::fit(&x, &[0, 1, 1], 2, 1e-4).unwrap();
        let z = SparseMatrix {
            cols: 2,
            rows: vec![vec![]],
        };
        assert_eq!(m.predict(&z), vec![1]);
        let s: f64 = m.log_prior.iter().map(|v| v.exp()).sum();
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn disjoint_vocabularies_are_separable() {
        let x = SparseMatrix::from_dense(&[
            vec![1.0, 2.0, 0.0, 0.0],
            vec![0.5, 0.0, 0.0, 0.0],
            vec![0.0, 0.0, 3.0, 1.0],
            vec![0.0, 0.0, 0.0, 1.0],
        ]);
        let y = [0, 0, 1, 1];
        let m = MnbModel::fit(&x, &y, 2, 1e-4).unwrap();
        assert_eq!(m.predict(&x), y);
    }

    #[test]
    fn missing_class_is_an_error() {
        let x = SparseMatrix::from_dense(&[vec![1.0], vec![1.0]]);
        assert!(matches!(
            MnbModel::fit(&x, &[0, 0], 3, 1e-4),
            Err(BaselineError::MissingClass(1))
        ));
    }

    #[test]
    fn ties_go_to_lowest_class() {
        let x = SparseMatrix::from_dense(&[vec![1.0, 0.0], vec![0.0, 1.0]]);
        let m = MnbModel::fit(&x, &[0, 1], 2, 1.0).unwrap();
        let z = SparseMatrix {
            cols: 2,
            rows: vec![vec![(0, 1.0), (1, 1.0)]],
        };
        assert_eq!(m.predict(&z), vec![0]);
    }
}
