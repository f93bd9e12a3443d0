use std::collections::{BTreeMap, HashMap};

use serde::{Deserialize, Serialize};

use super::BaselineError;

/// Sparse row-major matrix; each row holds `(column, value)` pairs in
/// ascending column order.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseMatrix {
    pub cols: usize,
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl SparseMatrix {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn from_dense(rows: &[Vec<f64>]) -> Self {
        let cols = rows.first().map_or(0, |r| r.len());
        Self {
            cols,
            rows: rows
                .iter()
                .map(|r| {
                    r.iter()
                        .enumerate()
                        .filter(|(_, &v)| v != 0.0)
                        .map(|(j, &v)| (j, v))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        self.rows
            .iter()
            .map(|r| {
                let mut d = vec![0.0; self.cols];
                for &(j, v) in r {
                    d[j] = v;
                }
                d
            })
            .collect()
    }
}

/// Unigrams, plus space-joined bigrams when `ngram_max` is 2.
pub fn ngrams(tokens: &[String], ngram_max: usize) -> Vec<String> {
    let mut out: Vec<String> = tokens.to_vec();
    if ngram_max >= 2 {
        out.extend(tokens.windows(2).map(|w| format!("{} {}", w[0], w[1])));
    }
    out
}

fn counts(tokens: &[String], ngram_max: usize) -> BTreeMap<String, f64> {
    let mut c = BTreeMap::new();
    for g in ngrams(tokens, ngram_max) {
        *c.entry(g).or_insert(0.0) += 1.0;
    }
    c
}

/// Fitted TF-IDF vectorizer: raw term counts times smoothed idf
/// `ln((1 + n) / (1 + df)) + 1`, rows optionally L2-normalized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    /// Terms in column order (lexicographic).
    pub terms: Vec<String>,
    pub idf: Vec<f64>,
    pub ngram_max: usize,
    pub norm: bool,
    #[serde(skip)]
    index: HashMap<String, usize>,
}

impl TfidfModel {
    pub fn from_parts(
        terms: Vec<String>,
        idf: Vec<f64>,
        ngram_max: usize,
        norm: bool,
    ) -> Result<Self, BaselineError> {
        if terms.len() != idf.len() {
            return Err(BaselineError::Invalid(format!(
                "{} terms but {} idf values",
                terms.len(),
                idf.len()
            )));
        }
        if !(1..=2).contains(&ngram_max) {
            return Err(BaselineError::Invalid(format!(
                "ngram_max must be 1 or 2, got {ngram_max}"
            )));
        }
        let index = terms
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Ok(Self {
            terms,
            idf,
            ngram_max,
            norm,
            index,
        })
    }

    pub fn fit(docs: &[Vec<String>], ngram_max: usize) -> Result<Self, BaselineError> {
        if docs.is_empty() {
            return Err(BaselineError::EmptyCorpus);
        }
        let mut df: BTreeMap<String, usize> = BTreeMap::new();
        for d in docs {
            for term in counts(d, ngram_max).into_keys() {
                *df.entry(term).or_insert(0) += 1;
            }
        }
        let n = docs.len() as f64;
        let (terms, idf): (Vec<String>, Vec<f64>) = df
            .into_iter()
            .map(|(t, d)| (t, ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0))
            .unzip();
        Self::from_parts(terms, idf, ngram_max, true)
    }

    pub fn num_features(&self) -> usize {
        self.terms.len()
    }

    pub fn term_index(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    fn raw_counts(&self, doc: &[String]) -> Vec<(usize, f64)> {
        let mut row: Vec<(usize, f64)> = counts(doc, self.ngram_max)
            .into_iter()
            .filter_map(|(t, c)| self.term_index(&t).map(|j| (j, c)))
            .collect();
        row.sort_by_key(|&(j, _)| j);
        row
    }

    /// TF-IDF rows. Terms unseen during fitting are ignored.
    pub fn transform(&self, docs: &[Vec<String>]) -> SparseMatrix {
        let rows = docs
            .iter()
            .map(|d| {
                let mut row: Vec<(usize, f64)> = self
                    .raw_counts(d)
                    .into_iter()
                    .map(|(j, c)| (j, c * self.idf[j]))
                    .collect();
                if self.norm {
                    let n = row.iter().map(|(_, v)| v * v).sum::<f64>().sqrt();
                    if n > 0.0 {
                        row.iter_mut().for_each(|(_, v)| *v /= n);
                    }
                }
                row
            })
            .collect();
        SparseMatrix {
            cols: self.num_features(),
            rows,
        }
    }

    /// Bag-of-words rows averaged over the document's known n-grams, the
    /// input representation of the fastText-style model.
    pub fn mean_bow(&self, docs: &[Vec<String>]) -> SparseMatrix {
        let rows = docs
            .iter()
            .map(|d| {
                let mut row = self.raw_counts(d);
                let total: f64 = row.iter().map(|(_, c)| c).sum();
                if total > 0.0 {
                    row.iter_mut().for_each(|(_, v)| *v /= total);
                }
                row
            })
            .collect();
        SparseMatrix {
            cols: self.num_features(),
            rows,
        }
    }
}

pub fn tfidf_fit_transform(
    docs: &[Vec<String>],
    ngram_max: usize,
) -> Result<(TfidfModel, SparseMatrix), BaselineError> {
    let model = TfidfModel::fit(docs, ngram_max)?;
    let x = model.transform(docs);
    Ok((model, x))
}
