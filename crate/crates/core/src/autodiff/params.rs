use std::collections::HashMap;

use thiserror::Error;

use super::real::Real;
use super::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ParamId(pub(crate) usize);

impl ParamId {
    pub fn index(self) -> usize {
        self.0
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("duplicate parameter name `{0}`")]
    Duplicate(String),
    #[error("unknown parameter `{0}`")]
    Unknown(String),
    #[error("parameter `{name}` has shape {expected:?} but gradient has shape {actual:?}")]
    ShapeMismatch {
        name: String,
        expected: Vec<usize>,
        actual: Vec<usize>,
    },
}

/// Named learnable arrays in insertion order. Names are stable keys for
/// checkpointing and transfer.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamStore<F> {
    names: Vec<String>,
    tensors: Vec<Tensor<F>>,
    index: HashMap<String, ParamId>,
}

impl<F: Real> Default for ParamStore<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: Real> ParamStore<F> {
    pub fn new() -> Self {
        Self {
            names: Vec::new(),
            tensors: Vec::new(),
            index: HashMap::new(),
        }
    }

    pub fn add(&mut self, name: impl Into<String>, value: Tensor<F>) -> Result<ParamId, ParamError> {
        let name = name.into();
        if self.index.contains_key(&name) {
            return Err(ParamError::Duplicate(name));
        }
        let id = ParamId(self.tensors.len());
        self.index.insert(name.clone(), id);
        self.names.push(name);
        self.tensors.push(value);
        Ok(id)
    }

    pub fn id(&self, name: &str) -> Result<ParamId, ParamError> {
        self.index
            .get(name)
            .copied()
            .ok_or_else(|| ParamError::Unknown(name.to_string()))
    }

    pub fn get(&self, id: ParamId) -> &Tensor<F> {
        &self.tensors[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut Tensor<F> {
        &mut self.tensors[id.0]
    }

    pub fn by_name(&self, name: &str) -> Option<&Tensor<F>> {
        self.index.get(name).map(|id| &self.tensors[id.0])
    }

    pub fn name(&self, id: ParamId) -> &str {
        &self.names[id.0]
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn ids(&self) -> impl Iterator<Item = ParamId> {
        (0..self.tensors.len()).map(ParamId)
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &str, &Tensor<F>)> {
        self.names
            .iter()
            .zip(&self.tensors)
            .enumerate()
            .map(|(i, (n, t))| (ParamId(i), n.as_str(), t))
    }

    /// Replaces the array for `id`; the new value must keep the shape.
    pub fn set(&mut self, id: ParamId, value: Tensor<F>) -> Result<(), ParamError> {
        let cur = &self.tensors[id.0];
        if cur.shape() != value.shape() {
            return Err(ParamError::ShapeMismatch {
                name: self.names[id.0].clone(),
                expected: cur.shape().to_vec(),
                actual: value.shape().to_vec(),
            });
        }
        self.tensors[id.0] = value;
        Ok(())
    }

    pub fn num_scalars(&self) -> usize {
        self.tensors.iter().map(Tensor::len).sum()
    }

    pub fn all_finite(&self) -> bool {
        self.tensors.iter().all(Tensor::is_finite)
    }

    pub fn cast<G: Real>(&self) -> ParamStore<G> {
        ParamStore {
            names: self.names.clone(),
            tensors: self.tensors.iter().map(Tensor::cast).collect(),
            index: self.index.clone(),
        }
    }
}

/// Gradient set keyed by parameter. `None` means no gradient flowed into the
/// parameter (it is skipped by the optimizer).
#[derive(Debug, Clone, PartialEq)]
pub struct Grads<F> {
    slots: Vec<Option<Vec<F>>>,
}

impl<F: Real> Grads<F> {
    pub fn empty(num_params: usize) -> Self {
        Self {
            slots: vec![None; num_params],
        }
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.iter().all(Option::is_none)
    }

    pub fn get(&self, id: ParamId) -> Option<&[F]> {
        self.slots[id.0].as_deref()
    }

    pub fn get_mut(&mut self, id: ParamId) -> Option<&mut [F]> {
        self.slots[id.0].as_deref_mut()
    }

    pub(crate) fn slot_mut(&mut self, id: ParamId, size: usize) -> &mut [F] {
        self.slots[id.0].get_or_insert_with(|| vec![F::zero(); size])
    }

    /// Sets a dense gradient for `id`.
    pub fn insert(&mut self, id: ParamId, grad: Vec<F>) {
        self.slots[id.0] = Some(grad);
    }

    pub fn remove(&mut self, id: ParamId) -> Option<Vec<F>> {
        self.slots[id.0].take()
    }

    /// Keeps only the gradients whose parameter passes `keep`.
    pub fn retain(&mut self, mut keep: impl FnMut(ParamId) -> bool) {
        for (i, s) in self.slots.iter_mut().enumerate() {
            if !keep(ParamId(i)) {
                *s = None;
            }
        }
    }

    /// Elementwise accumulation in slot order.
    pub fn add_assign(&mut self, other: &Grads<F>) {
        assert_eq!(self.slots.len(), other.slots.len(), "gradient set size");
        for (mine, theirs) in self.slots.iter_mut().zip(&other.slots) {
            if let Some(t) = theirs {
                match mine {
                    Some(m) => {
                        for (a, &b) in m.iter_mut().zip(t) {
                            *a += b;
                        }
                    }
                    None => *mine = Some(t.clone()),
                }
            }
        }
    }

    pub fn scale(&mut self, s: F) {
        for g in self.slots.iter_mut().flatten() {
            for x in g.iter_mut() {
                *x *= s;
            }
        }
    }

    pub fn global_norm(&self) -> F {
        self.slots
            .iter()
            .flatten()
            .flat_map(|g| g.iter())
            .map(|&x| x * x)
            .sum::<F>()
            .sqrt()
    }

    /// Rescales so the global L2 norm is at most `max_norm`; returns the norm
    /// before clipping.
    pub fn clip_global_norm(&mut self, max_norm: F) -> F {
        let norm = self.global_norm();
        if norm > max_norm && norm > F::zero() {
            self.scale(max_norm / norm);
        }
        norm
    }

    pub fn all_finite(&self) -> bool {
        self.slots
            .iter()
            .flatten()
            .all(|g| g.iter().all(|x| x.is_finite()))
    }
}
