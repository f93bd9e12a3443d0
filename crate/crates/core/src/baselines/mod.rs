//! Classical bag-of-words baselines over the concatenated description and
//! tweets of each user.

mod linear;
mod mnb;
mod tfidf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use linear::{linear_fit, linear_predict, LinearConfig, LinearModel, Objective};
pub use mnb::{mnb_fit, mnb_predict, MnbModel};
pub use tfidf::{ngrams, tfidf_fit_transform, SparseMatrix, TfidfModel};

use crate::autodiff::{Precision, Tensor};
use crate::labels::{LabelError, LabelSet};
use crate::model::{CheckpointError, CheckpointFile, CheckpointKind};
use crate::text::{tokenize, UserRecord};

#[derive(Debug, Error)]
pub enum BaselineError {
    #[error("empty corpus")]
    EmptyCorpus,
    #[error("class {0} has no training examples")]
    MissingClass(usize),
    #[error("training labels contain a single class")]
    SingleClass,
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Label(#[from] LabelError),
    #[error(transparent)]
    Checkpoint(#[from] CheckpointError),
}

/// Index of the largest value; ties go to the lowest index.
pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Validates labels against the matrix and returns per-class counts.
pub(crate) fn check_labels(
    x: &SparseMatrix,
    y: &[usize],
    num_classes: usize,
) -> Result<Vec<usize>, BaselineError> {
    if y.is_empty() {
        return Err(BaselineError::EmptyCorpus);
    }
    if x.len() != y.len() {
        return Err(BaselineError::Invalid(format!(
            "{} rows but {} labels",
            x.len(),
            y.len()
        )));
    }
    let mut counts = vec![0; num_classes];
    for &c in y {
        if c >= num_classes {
            return Err(BaselineError::Invalid(format!(
                "label {c} out of range for {num_classes} classes"
            )));
        }
        counts[c] += 1;
    }
    Ok(counts)
}

/// Description followed by every tweet, as one token sequence.
pub fn user_document(user: &UserRecord) -> Vec<String> {
    let mut doc = tokenize(&user.description);
    for t in &user.tweets {
        doc.extend(tokenize(t));
    }
    doc
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BaselineKind {
    /// Multinomial naive Bayes on TF-IDF unigrams and bigrams.
    Mnb,
    /// Linear hinge-loss SGD on TF-IDF unigrams (SVM stand-in).
    Svm,
    /// Softmax SGD on averaged bag-of-words unigrams and bigrams
    /// (fastText stand-in).
    Fasttext,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 3] = [BaselineKind::Mnb, BaselineKind::Svm, BaselineKind::Fasttext];

    pub fn name(self) -> &'static str {
        match self {
            BaselineKind::Mnb => "mnb",
            BaselineKind::Svm => "svm",
            BaselineKind::Fasttext => "fasttext",
        }
    }

    /// Whether reports should flag the model as an approximation of the
    /// original tool.
    pub fn is_approximation(self) -> bool {
        !matches!(self, BaselineKind::Mnb)
    }
}

impl std::str::FromStr for BaselineKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "mnb" => Ok(BaselineKind::Mnb),
            "svm" => Ok(BaselineKind::Svm),
            "fasttext" => Ok(BaselineKind::Fasttext),
            other => Err(format!("unknown baseline `{other}` (mnb, svm, fasttext)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BaselineConfig {
    pub alpha: f64,
    pub svm: LinearConfig,
    pub fasttext: LinearConfig,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            alpha: 1e-4,
            svm: LinearConfig::svm(),
            fasttext: LinearConfig::fasttext(),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    Mnb(MnbModel),
    Linear(LinearModel),
}

/// A fitted baseline: featurizer plus classifier.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineModel {
    pub kind: BaselineKind,
    pub labels: LabelSet,
    pub tfidf: TfidfModel,
    pub classifier: Classifier,
}

#[derive(Serialize, Deserialize)]
struct Meta {
    baseline: BaselineKind,
    labels: LabelSet,
    terms: Vec<String>,
    ngram_max: usize,
    norm: bool,
    alpha: Option<f64>,
    objective: Option<Objective>,
    l2: Option<f64>,
}

impl BaselineModel {
    fn features(kind: BaselineKind, tfidf: &TfidfModel, docs: &[Vec<String>]) -> SparseMatrix {
        match kind {
            BaselineKind::Mnb | BaselineKind::Svm => tfidf.transform(docs),
            BaselineKind::Fasttext => tfidf.mean_bow(docs),
        }
    }

    pub fn fit(
        kind: BaselineKind,
        users: &[UserRecord],
        labels: &LabelSet,
        cfg: &BaselineConfig,
    ) -> Result<Self, BaselineError> {
        let docs: Vec<Vec<String>> = users.iter().map(user_document).collect();
        let y = users
            .iter()
            .map(|u| labels.id(&u.label))
            .collect::<Result<Vec<_>, _>>()?;
        let ngram_max = match kind {
            BaselineKind::Svm => 1,
            _ => 2,
        };
        let tfidf = TfidfModel::fit(&docs, ngram_max)?;
        let x = Self::features(kind, &tfidf, &docs);
        let c = labels.len();
        let classifier = match kind {
            BaselineKind::Mnb => Classifier::Mnb(MnbModel::fit(&x, &y, c, cfg.alpha)?),
            BaselineKind::Svm => Classifier::Linear(LinearModel::fit(&x, &y, c, &cfg.svm)?),
            BaselineKind::Fasttext => {
                Classifier::Linear(LinearModel::fit(&x, &y, c, &cfg.fasttext)?)
            }
        };
        Ok(Self {
            kind,
            labels: labels.clone(),
            tfidf,
            classifier,
        })
    }

    pub fn predict(&self, users: &[UserRecord]) -> Vec<usize> {
        let docs: Vec<Vec<String>> = users.iter().map(user_document).collect();
        let x = Self::features(self.kind, &self.tfidf, &docs);
        match &self.classifier {
            Classifier::Mnb(m) => m.predict(&x),
            Classifier::Linear(m) => m.predict(&x),
        }
    }

    pub fn to_checkpoint(&self, config: &BaselineConfig) -> CheckpointFile {
        let (ckind, alpha, objective, l2) = match &self.classifier {
            Classifier::Mnb(m) => (CheckpointKind::Mnb, Some(m.alpha), None, None),
            Classifier::Linear(m) => (CheckpointKind::Linear, None, Some(m.objective), Some(m.l2)),
        };
        let meta = Meta {
            baseline: self.kind,
            labels: self.labels.clone(),
            terms: self.tfidf.terms.clone(),
            ngram_max: self.tfidf.ngram_max,
            norm: self.tfidf.norm,
            alpha,
            objective,
            l2,
        };
        let mut ck = CheckpointFile::new(
            ckind,
            Precision::F64,
            serde_json::to_value(config).expect("config serializes"),
            serde_json::to_value(meta).expect("meta serializes"),
        );
        ck.push("tfidf.idf", Tensor::vector(self.tfidf.idf.clone()));
        let c = self.labels.len();
        let f = self.tfidf.num_features();
        match &self.classifier {
            Classifier::Mnb(m) => {
                ck.push("mnb.log_prior", Tensor::vector(m.log_prior.clone()));
                ck.push("mnb.log_lik", Tensor::from_rows(c, f, m.log_lik.clone()));
            }
            Classifier::Linear(m) => {
                ck.push("linear.weight", Tensor::from_rows(c, f, m.weight.clone()));
                ck.push("linear.bias", Tensor::vector(m.bias.clone()));
            }
        }
        ck
    }

    pub fn from_checkpoint(ck: &CheckpointFile) -> Result<Self, BaselineError> {
        let meta: Meta = serde_json::from_value(ck.meta.clone())
            .map_err(|e| CheckpointError::Header(e.to_string()))?;
        let idf = ck.array("tfidf.idf")?.data().to_vec();
        let tfidf = TfidfModel::from_parts(meta.terms, idf, meta.ngram_max, meta.norm)?;
        let f = tfidf.num_features();
        let c = meta.labels.len();
        let shape_err = |name: &str| BaselineError::Invalid(format!("array `{name}` has the wrong size"));
        let classifier = match ck.kind {
            CheckpointKind::Mnb => {
                let log_prior = ck.array("mnb.log_prior")?.data().to_vec();
                let log_lik = ck.array("mnb.log_lik")?.data().to_vec();
                if log_prior.len() != c || log_lik.len() != c * f {
                    return Err(shape_err("mnb"));
                }
                Classifier::Mnb(MnbModel {
                    alpha: meta.alpha.unwrap_or(1e-4),
                    log_prior,
                    log_lik,
                    num_features: f,
                })
            }
            CheckpointKind::Linear => {
                let weight = ck.array("linear.weight")?.data().to_vec();
                let bias = ck.array("linear.bias")?.data().to_vec();
                if bias.len() != c || weight.len() != c * f {
                    return Err(shape_err("linear"));
                }
                Classifier::Linear(LinearModel {
                    objective: meta.objective.unwrap_or(Objective::Softmax),
                    num_classes: c,
                    num_features: f,
                    weight,
                    bias,
                    l2: meta.l2.unwrap_or(0.0),
                })
            }
            CheckpointKind::Hsan => {
                return Err(BaselineError::Invalid(
                    "checkpoint holds a network, not a baseline".into(),
                ))
            }
        };
        Ok(Self {
            kind: meta.baseline,
            labels: meta.labels,
            tfidf,
            classifier,
        })
    }
}
