use serde::{Deserialize, Serialize};

use super::EvalError;
use crate::labels::LabelSet;

/// Counts indexed `[truth][prediction]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub labels: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(labels: &LabelSet) -> Self {
        let n = labels.len();
        Self {
            labels: labels.names().to_vec(),
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(labels: &LabelSet, counts: Vec<Vec<u64>>) -> Result<Self, EvalError> {
        let n = labels.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(EvalError::Shape(format!(
                "expected a {n}×{n} matrix for {n} labels"
            )));
        }
        Ok(Self {
            labels: labels.names().to_vec(),
            counts,
        })
    }

    pub fn num_classes(&self) -> usize {
        self.labels.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|i| self.counts[i][i]).sum()
    }

    pub fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn col_sums(&self) -> Vec<u64> {
        (0..self.num_classes())
            .map(|j| self.counts.iter().map(|r| r[j]).sum())
            .collect()
    }

    /// Formatted table with truth rows and prediction columns.
    pub fn to_text(&self) -> String {
        let w = self
            .labels
            .iter()
            .map(|l| l.len())
            .max()
            .unwrap_or(0)
            .max(6);
        let mut s = format!("{:>w$}", "truth\\pred");
        for l in &self.labels {
            s.push_str(&format!(" {l:>w$}"));
        }
        s.push('\n');
        for (l, row) in self.labels.iter().zip(&self.counts) {
            s.push_str(&format!("{l:>w$}"));
            for c in row {
                s.push_str(&format!(" {c:>w$}"));
            }
            s.push('\n');
        }
        s
    }
}

pub fn confusion(
    preds: &[usize],
    golds: &[usize],
    labels: &LabelSet,
) -> Result<ConfusionMatrix, EvalError> {
    if preds.len() != golds.len() {
        return Err(EvalError::Shape(format!(
            "{} predictions but {} gold labels",
            preds.len(),
            golds.len()
        )));
    }
    let mut m = ConfusionMatrix::zeros(labels);
    let n = labels.len();
    for (&p, &g) in preds.iter().zip(golds) {
        if p >= n || g >= n {
            return Err(EvalError::UnknownLabel(p.max(g).to_string()));
        }
        m.counts[g][p] += 1;
    }
    Ok(m)
}

/// Same as [`confusion`] over label names.
pub fn confusion_by_name(
    preds: &[&str],
    golds: &[&str],
    labels: &LabelSet,
) -> Result<ConfusionMatrix, EvalError> {
    let ids = |xs: &[&str]| -> Result<Vec<usize>, EvalError> {
        xs.iter()
            .map(|x| labels.id(x).map_err(|_| EvalError::UnknownLabel(x.to_string())))
            .collect()
    };
    confusion(&ids(preds)?, &ids(golds)?, labels)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub accuracy: f64,
    pub macro_f1: f64,
    pub per_class: Vec<ClassScores>,
    pub matrix: ConfusionMatrix,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy, per-class precision/recall/F1 and macro-F1. Any zero
/// denominator yields 0.
pub fn metrics(matrix: &ConfusionMatrix) -> Result<EvalReport, EvalError> {
    let total = matrix.total();
    if total == 0 {
        return Err(EvalError::Empty);
    }
    let rows = matrix.row_sums();
    let cols = matrix.col_sums();
    let per_class: Vec<ClassScores> = (0..matrix.num_classes())
        .map(|i| {
            let tp = matrix.counts[i][i];
            let precision = ratio(tp, cols[i]);
            let recall = ratio(tp, rows[i]);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassScores {
                label: matrix.labels[i].clone(),
                precision,
                recall,
                f1,
                support: rows[i],
            }
        })
        .collect();
    let macro_f1 = per_class.iter().map(|c| c.f1).sum::<f64>() / per_class.len() as f64;
    Ok(EvalReport {
        accuracy: ratio(matrix.trace(), total),
        macro_f1,
        per_class,
        matrix: matrix.clone(),
    })
}

impl EvalReport {
    pub fn to_text(&self) -> String {
        let mut s = format!(
            "accuracy  {:.4}\nmacro-F1  {:.4}\n\n{:>12} {:>9} {:>9} {:>9} {:>8}\n",
            self.accuracy, self.macro_f1, "class", "precision", "recall", "f1", "support"
        );
        for c in &self.per_class {
            s.push_str(&format!(
                "{:>12} {:>9.4} {:>9.4} {:>9.4} {:>8}\n",
                c.label, c.precision, c.recall, c.f1, c.support
            ));
        }
        s.push('\n');
        s.push_str(&self.matrix.to_text());
        s
    }
}
