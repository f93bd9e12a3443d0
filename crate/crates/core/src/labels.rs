use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LabelError {
    #[error("label set is empty")]
    Empty,
    #[error("duplicate label `{0}`")]
    Duplicate(String),
    #[error("unknown label `{0}`")]
    Unknown(String),
}

/// Ordered class names. The order fixes class indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<String>", into = "Vec<String>")]
pub struct LabelSet {
    names: Vec<String>,
    index: HashMap<String, usize>,
}

impl LabelSet {
    pub fn new<S: Into<String>>(names: impl IntoIterator<Item = S>) -> Result<Self, LabelError> {
        let names: Vec<String> = names.into_iter().map(Into::into).collect();
        if names.is_empty() {
            return Err(LabelError::Empty);
        }
        let mut index = HashMap::with_capacity(names.len());
        for (i, n) in names.iter().enumerate() {
            if index.insert(n.clone(), i).is_some() {
                return Err(LabelError::Duplicate(n.clone()));
            }
        }
        Ok(Self { names, index })
    }

    /// The seven role classes of the fine-grained identity task.
    pub fn identity() -> Self {
        Self::new([
            "regular",
            "media",
            "celebrity",
            "sport",
            "company",
            "government",
            "reporter",
        ])
        .expect("static labels")
    }

    /// The binary public-figure task.
    pub fn public_figure() -> Self {
        Self::new(["verified", "unverified"]).expect("static labels")
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn id(&self, name: &str) -> Result<usize, LabelError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| LabelError::Unknown(name.to_string()))
    }

    pub fn name(&self, id: usize) -> &str {
        &self.names[id]
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn is_binary(&self) -> bool {
        self.names.len() == 2
    }
}

impl TryFrom<Vec<String>> for LabelSet {
    type Error = LabelError;

    fn try_from(v: Vec<String>) -> Result<Self, Self::Error> {
        Self::new(v)
    }
}

impl From<LabelSet> for Vec<String> {
    fn from(l: LabelSet) -> Self {
        l.names
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn order_fixes_indices() {
        let l = LabelSet::new(["b", "a"]).unwrap();
        assert_eq!(l.id("b").unwrap(), 0);
        assert_eq!(l.name(1), "a");
        assert_eq!(l.id("c"), Err(LabelError::Unknown("c".into())));
    }

    #[test]
    fn rejects_duplicates() {
        assert!(matches!(
            LabelSet::new(["x", "x"]),
            Err(LabelError::Duplicate(_))
        ));
        assert_eq!(LabelSet::new(Vec::<String>::new()), Err(LabelError::Empty));
    }

    #[test]
    fn serde_roundtrip_keeps_order() {
        let l = LabelSet::identity();
        let s = serde_json::to_string(&l).unwrap();
        let back: LabelSet = serde_json::from_str(&s).unwrap();
        assert_eq!(back, l);
        assert_eq!(l.len(), 7);
    }
}
