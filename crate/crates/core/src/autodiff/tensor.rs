use thiserror::Error;

use super::real::Real;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TensorError {
    #[error("shape {shape:?} holds {expected} elements but {actual} were supplied")]
    DataLength {
        shape: Vec<usize>,
        expected: usize,
        actual: usize,
    },
    #[error("shape dimensions must be positive, got {0:?}")]
    ZeroDimension(Vec<usize>),
    #[error("axis {axis} out of range for rank {rank}")]
    Axis { axis: usize, rank: usize },
    #[error("mask of length {mask} is not broadcast-compatible with shape {shape:?} along axis {axis}")]
    MaskShape {
        mask: usize,
        shape: Vec<usize>,
        axis: usize,
    },
    #[error("softmax group {group} has every element masked")]
    AllMasked { group: usize },
}

/// Dense row-major array.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor<F> {
    shape: Vec<usize>,
    data: Vec<F>,
}

impl<F: Real> Tensor<F> {
    pub fn new(shape: Vec<usize>, data: Vec<F>) -> Result<Self, TensorError> {
        if shape.contains(&0) {
            return Err(TensorError::ZeroDimension(shape));
        }
        let expected: usize = shape.iter().product();
        if expected != data.len() {
            return Err(TensorError::DataLength {
                shape,
                expected,
                actual: data.len(),
            });
        }
        Ok(Self { shape, data })
    }

    pub fn zeros(shape: &[usize]) -> Self {
        let n = shape.iter().product();
        Self {
            shape: shape.to_vec(),
            data: vec![F::zero(); n],
        }
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(rows * cols, data.len(), "matrix data length");
        Self {
            shape: vec![rows, cols],
            data,
        }
    }

    pub fn vector(data: Vec<F>) -> Self {
        Self {
            shape: vec![data.len()],
            data,
        }
    }

    pub fn scalar(x: F) -> Self {
        Self {
            shape: vec![1],
            data: vec![x],
        }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn data(&self) -> &[F] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<F> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Rows when viewed as a matrix whose last axis is the column axis.
    pub fn rows(&self) -> usize {
        self.data.len() / self.cols()
    }

    pub fn cols(&self) -> usize {
        *self.shape.last().expect("tensor rank >= 1")
    }

    pub fn row(&self, i: usize) -> &[F] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }

    pub fn cast<G: Real>(&self) -> Tensor<G> {
        Tensor {
            shape: self.shape.clone(),
            data: self.data.iter().map(|&x| G::of(x.as_f64())).collect(),
        }
    }
}

/// `out[m×n] += a[m×k] · b[k×n]`
pub(crate) fn matmul_acc<F: Real>(a: &[F], b: &[F], out: &mut [F], m: usize, k: usize, n: usize) {
    for i in 0..m {
        let orow = &mut out[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == F::zero() {
                continue;
            }
            let brow = &b[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// `out[m×n] += a[m×k] · b[n×k]ᵀ`
pub(crate) fn matmul_bt_acc<F: Real>(
    a: &[F],
    b: &[F],
    out: &mut [F],
    m: usize,
    k: usize,
    n: usize,
) {
    for i in 0..m {
        let arow = &a[i * k..(i + 1) * k];
        for j in 0..n {
            let brow = &b[j * k..(j + 1) * k];
            let mut s = F::zero();
            for (&x, &y) in arow.iter().zip(brow) {
                s += x * y;
            }
            out[i * n + j] += s;
        }
    }
}

/// `out[k×n] += a[m×k]ᵀ · b[m×n]`
pub(crate) fn matmul_at_acc<F: Real>(
    a: &[F],
    b: &[F],
    out: &mut [F],
    m: usize,
    k: usize,
    n: usize,
) {
    for i in 0..m {
        let brow = &b[i * n..(i + 1) * n];
        for p in 0..k {
            let av = a[i * k + p];
            if av == F::zero() {
                continue;
            }
            let orow = &mut out[p * n..(p + 1) * n];
            for (o, &bv) in orow.iter_mut().zip(brow) {
                *o += av * bv;
            }
        }
    }
}

/// Index layout of the softmax groups along one axis.
#[derive(Debug, Clone, Copy)]
pub(crate) struct AxisGroups {
    outer: usize,
    len: usize,
    inner: usize,
}

impl AxisGroups {
    pub(crate) fn new(shape: &[usize], axis: usize) -> Result<Self, TensorError> {
        if axis >= shape.len() {
            return Err(TensorError::Axis {
                axis,
                rank: shape.len(),
            });
        }
        Ok(Self {
            outer: shape[..axis].iter().product(),
            len: shape[axis],
            inner: shape[axis + 1..].iter().product(),
        })
    }

    pub(crate) fn count(&self) -> usize {
        self.outer * self.inner
    }

    pub(crate) fn len(&self) -> usize {
        self.len
    }

    /// Flat indices of group `g` in axis order.
    pub(crate) fn indices(&self, g: usize) -> impl Iterator<Item = usize> {
        let (o, i) = (g / self.inner, g % self.inner);
        let (len, inner) = (self.len, self.inner);
        (0..len).map(move |j| o * len * inner + j * inner + i)
    }
}

/// Expands a mask given either at full size or as a vector along `axis`.
pub(crate) fn expand_mask(
    mask: &[bool],
    shape: &[usize],
    axis: usize,
) -> Result<Vec<bool>, TensorError> {
    let groups = AxisGroups::new(shape, axis)?;
    let total: usize = shape.iter().product();
    if mask.len() == total {
        return Ok(mask.to_vec());
    }
    if mask.len() != groups.len() {
        return Err(TensorError::MaskShape {
            mask: mask.len(),
            shape: shape.to_vec(),
            axis,
        });
    }
    let mut full = vec![false; total];
    for g in 0..groups.count() {
        for (j, idx) in groups.indices(g).enumerate() {
            full[idx] = mask[j];
        }
    }
    Ok(full)
}

/// Additive bias applied to masked logits before exponentiation.
pub const MASK_FILL: f64 = -1e9;

pub(crate) fn masked_softmax_raw<F: Real>(
    x: &[F],
    shape: &[usize],
    axis: usize,
    mask: Option<&[bool]>,
) -> Result<Vec<F>, TensorError> {
    let groups = AxisGroups::new(shape, axis)?;
    let mut out = vec![F::zero(); x.len()];
    let fill = F::of(MASK_FILL);
    let mut buf = Vec::with_capacity(groups.len());
    for g in 0..groups.count() {
        buf.clear();
        let mut any = false;
        for idx in groups.indices(g) {
            let keep = mask.is_none_or(|m| m[idx]);
            any |= keep;
            buf.push((idx, keep, if keep { x[idx] } else { x[idx] + fill }));
        }
        if !any {
            return Err(TensorError::AllMasked { group: g });
        }
        let max = buf
            .iter()
            .map(|&(_, _, v)| v)
            .fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for &mut (idx, keep, v) in buf.iter_mut() {
            let e = if keep { (v - max).exp() } else { F::zero() };
            out[idx] = e;
            sum += e;
        }
        for &(idx, _, _) in buf.iter() {
            out[idx] = out[idx] / sum;
        }
    }
    Ok(out)
}

/// Softmax along `axis`; masked positions (mask false) are excluded and set
/// to exactly zero. The mask may cover the full shape or only the axis.
pub fn masked_softmax<F: Real>(
    logits: &Tensor<F>,
    axis: usize,
    mask: Option<&[bool]>,
) -> Result<Tensor<F>, TensorError> {
    let full = mask
        .map(|m| expand_mask(m, logits.shape(), axis))
        .transpose()?;
    let data = masked_softmax_raw(logits.data(), logits.shape(), axis, full.as_deref())?;
    Ok(Tensor {
        shape: logits.shape.clone(),
        data,
    })
}
