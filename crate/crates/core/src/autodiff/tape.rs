//! Tensor-level reverse-mode differentiation.
//!
//! A [`Tape`] records one forward evaluation against a borrowed
//! [`ParamStore`]. Gradients flow only into parameters: every other leaf is a
//! constant. Calling [`Tape::backward`] on a scalar node returns a [`Grads`]
//! set keyed by parameter id.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::params::{Grads, ParamId, ParamStore};
use super::real::Real;
use super::tensor::{
    expand_mask, masked_softmax_raw, matmul_acc, matmul_at_acc, matmul_bt_acc, AxisGroups,
    Tensor, TensorError,
};

/// Handle to a node on a tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Probability floor used by [`Tape::neg_log_at`].
pub const PROB_FLOOR: f64 = 1e-12;

enum Op<F> {
    Constant,
    Param(ParamId),
    Gather { table: ParamId, ids: Vec<usize> },
    MatMul(Var, Var),
    MatMulBt(Var, Var),
    Add(Var, Var),
    AddRow(Var, Var),
    Mul(Var, Var),
    Scale(Var, F),
    Sigmoid(Var),
    Tanh(Var),
    Relu(Var),
    ConcatCols(Vec<Var>),
    ConcatRows(Vec<Var>),
    SliceCols(Var, usize),
    Row(Var, usize),
    Softmax { input: Var, axis: usize },
    MaskedRowMean { input: Var, mask: Vec<bool> },
    Unfold { input: Var, block: usize, width: usize },
    BlockMax { input: Var, argmax: Vec<usize> },
    ScatterRows { input: Var, rows: Vec<usize> },
    Dropout { input: Var, scale: Vec<F> },
    NegLogAt { input: Var, index: usize },
    Sum(Var),
}

struct Node<F> {
    value: Tensor<F>,
    op: Op<F>,
    needs_grad: bool,
}

pub struct Tape<'p, F: Real> {
    params: &'p ParamStore<F>,
    nodes: Vec<Node<F>>,
    mode: Mode,
    rng: Option<ChaCha8Rng>,
}

impl<'p, F: Real> Tape<'p, F> {
    /// Evaluation tape: dropout is the identity.
    pub fn eval(params: &'p ParamStore<F>) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            mode: Mode::Eval,
            rng: None,
        }
    }

    /// Training tape; `rng` drives dropout masks.
    pub fn train(params: &'p ParamStore<F>, rng: ChaCha8Rng) -> Self {
        Self {
            params,
            nodes: Vec::new(),
            mode: Mode::Train,
            rng: Some(rng),
        }
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn params(&self) -> &'p ParamStore<F> {
        self.params
    }

    pub fn value(&self, v: Var) -> &Tensor<F> {
        &self.nodes[v.0].value
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    fn push(&mut self, value: Tensor<F>, op: Op<F>, needs_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            op,
            needs_grad,
        });
        Var(self.nodes.len() - 1)
    }

    fn ng(&self, v: Var) -> bool {
        self.nodes[v.0].needs_grad
    }

    fn dims2(&self, v: Var) -> (usize, usize) {
        let t = &self.nodes[v.0].value;
        (t.rows(), t.cols())
    }

    pub fn constant(&mut self, value: Tensor<F>) -> Var {
        self.push(value, Op::Constant, false)
    }

    pub fn zeros(&mut self, rows: usize, cols: usize) -> Var {
        self.constant(Tensor::zeros(&[rows, cols]))
    }

    pub fn param(&mut self, id: ParamId) -> Var {
        let value = self.params.get(id).clone();
        self.push(value, Op::Param(id), true)
    }

    /// Rows `ids` of a 2-D parameter table, as an `ids.len() × cols` matrix.
    pub fn gather(&mut self, table: ParamId, ids: &[usize]) -> Var {
        let t = self.params.get(table);
        assert_eq!(t.shape().len(), 2, "gather table must be 2-D");
        let cols = t.cols();
        let mut data = Vec::with_capacity(ids.len() * cols);
        for &i in ids {
            assert!(i < t.rows(), "gather index {i} out of range {}", t.rows());
            data.extend_from_slice(t.row(i));
        }
        let value = Tensor::from_rows(ids.len(), cols, data);
        self.push(
            value,
            Op::Gather {
                table,
                ids: ids.to_vec(),
            },
            true,
        )
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.dims2(a);
        let (k2, n) = self.dims2(b);
        assert_eq!(k, k2, "matmul inner dimension");
        let mut out = vec![F::zero(); m * n];
        matmul_acc(
            self.nodes[a.0].value.data(),
            self.nodes[b.0].value.data(),
            &mut out,
            m,
            k,
            n,
        );
        let ng = self.ng(a) || self.ng(b);
        self.push(Tensor::from_rows(m, n, out), Op::MatMul(a, b), ng)
    }

    /// `a · bᵀ`
    pub fn matmul_bt(&mut self, a: Var, b: Var) -> Var {
        let (m, k) = self.dims2(a);
        let (n, k2) = self.dims2(b);
        assert_eq!(k, k2, "matmul_bt inner dimension");
        let mut out = vec![F::zero(); m * n];
        matmul_bt_acc(
            self.nodes[a.0].value.data(),
            self.nodes[b.0].value.data(),
            &mut out,
            m,
            k,
            n,
        );
        let ng = self.ng(a) || self.ng(b);
        self.push(Tensor::from_rows(m, n, out), Op::MatMulBt(a, b), ng)
    }

    fn zip_with(&self, a: Var, b: Var, f: impl Fn(F, F) -> F) -> Tensor<F> {
        let (ta, tb) = (&self.nodes[a.0].value, &self.nodes[b.0].value);
        assert_eq!(ta.shape(), tb.shape(), "elementwise shape mismatch");
        let data = ta.data().iter().zip(tb.data()).map(|(&x, &y)| f(x, y)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("same shape")
    }

    fn map(&self, a: Var, f: impl Fn(F) -> F) -> Tensor<F> {
        let ta = &self.nodes[a.0].value;
        let data = ta.data().iter().map(|&x| f(x)).collect();
        Tensor::new(ta.shape().to_vec(), data).expect("same shape")
    }

    pub fn add(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |x, y| x + y);
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::Add(a, b), ng)
    }

    /// Adds a bias vector to every row of a matrix.
    pub fn add_row(&mut self, a: Var, bias: Var) -> Var {
        let (m, n) = self.dims2(a);
        let tb = &self.nodes[bias.0].value;
        assert_eq!(tb.len(), n, "bias width");
        let mut data = self.nodes[a.0].value.data().to_vec();
        for r in 0..m {
            for (x, &b) in data[r * n..(r + 1) * n].iter_mut().zip(tb.data()) {
                *x += b;
            }
        }
        let ng = self.ng(a) || self.ng(bias);
        self.push(Tensor::from_rows(m, n, data), Op::AddRow(a, bias), ng)
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Var {
        let v = self.zip_with(a, b, |x, y| x * y);
        let ng = self.ng(a) || self.ng(b);
        self.push(v, Op::Mul(a, b), ng)
    }

    pub fn scale(&mut self, a: Var, s: F) -> Var {
        let v = self.map(a, |x| x * s);
        let ng = self.ng(a);
        self.push(v, Op::Scale(a, s), ng)
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let v = self.map(a, |x| F::one() / (F::one() + (-x).exp()));
        let ng = self.ng(a);
        self.push(v, Op::Sigmoid(a), ng)
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let v = self.map(a, |x| x.tanh());
        let ng = self.ng(a);
        self.push(v, Op::Tanh(a), ng)
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let v = self.map(a, |x| if x > F::zero() { x } else { F::zero() });
        let ng = self.ng(a);
        self.push(v, Op::Relu(a), ng)
    }

    pub fn concat_cols(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let rows = self.dims2(parts[0]).0;
        let widths: Vec<usize> = parts
            .iter()
            .map(|&p| {
                let (r, c) = self.dims2(p);
                assert_eq!(r, rows, "concat_cols row mismatch");
                c
            })
            .collect();
        let total: usize = widths.iter().sum();
        let mut data = Vec::with_capacity(rows * total);
        for r in 0..rows {
            for &p in parts {
                data.extend_from_slice(self.nodes[p.0].value.row(r));
            }
        }
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(
            Tensor::from_rows(rows, total, data),
            Op::ConcatCols(parts.to_vec()),
            ng,
        )
    }

    pub fn concat_rows(&mut self, parts: &[Var]) -> Var {
        assert!(!parts.is_empty());
        let cols = self.dims2(parts[0]).1;
        let mut data = Vec::new();
        for &p in parts {
            assert_eq!(self.dims2(p).1, cols, "concat_rows column mismatch");
            data.extend_from_slice(self.nodes[p.0].value.data());
        }
        let rows = data.len() / cols;
        let ng = parts.iter().any(|&p| self.ng(p));
        self.push(
            Tensor::from_rows(rows, cols, data),
            Op::ConcatRows(parts.to_vec()),
            ng,
        )
    }

    /// Columns `[start, end)` of a matrix.
    pub fn slice_cols(&mut self, a: Var, start: usize, end: usize) -> Var {
        let (m, n) = self.dims2(a);
        assert!(start < end && end <= n, "slice_cols range");
        let src = self.nodes[a.0].value.data();
        let mut data = Vec::with_capacity(m * (end - start));
        for r in 0..m {
            data.extend_from_slice(&src[r * n + start..r * n + end]);
        }
        let ng = self.ng(a);
        self.push(
            Tensor::from_rows(m, end - start, data),
            Op::SliceCols(a, start),
            ng,
        )
    }

    /// Row `i` as a `1 × cols` matrix.
    pub fn row(&mut self, a: Var, i: usize) -> Var {
        let t = &self.nodes[a.0].value;
        let data = t.row(i).to_vec();
        let n = data.len();
        let ng = self.ng(a);
        self.push(Tensor::from_rows(1, n, data), Op::Row(a, i), ng)
    }

    /// Softmax along `axis`. Masked entries (false) are filled with the
    /// additive mask bias before exponentiation and then set to exactly 0.
    pub fn masked_softmax(
        &mut self,
        logits: Var,
        axis: usize,
        mask: Option<&[bool]>,
    ) -> Result<Var, TensorError> {
        let t = &self.nodes[logits.0].value;
        let full = mask.map(|m| expand_mask(m, t.shape(), axis)).transpose()?;
        let data = masked_softmax_raw(t.data(), t.shape(), axis, full.as_deref())?;
        let value = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(logits);
        Ok(self.push(value, Op::Softmax { input: logits, axis }, ng))
    }

    /// Mean over the rows whose mask is true, as a `1 × cols` matrix.
    pub fn masked_row_mean(&mut self, a: Var, mask: &[bool]) -> Var {
        let (m, n) = self.dims2(a);
        assert_eq!(mask.len(), m, "row mask length");
        let count = mask.iter().filter(|&&b| b).count();
        assert!(count > 0, "masked_row_mean needs an unmasked row");
        let inv = F::one() / F::of(count as f64);
        let src = self.nodes[a.0].value.data();
        let mut out = vec![F::zero(); n];
        for r in (0..m).filter(|&r| mask[r]) {
            for (o, &x) in out.iter_mut().zip(&src[r * n..(r + 1) * n]) {
                *o += x;
            }
        }
        for o in out.iter_mut() {
            *o *= inv;
        }
        let ng = self.ng(a);
        self.push(
            Tensor::from_rows(1, n, out),
            Op::MaskedRowMean {
                input: a,
                mask: mask.to_vec(),
            },
            ng,
        )
    }

    /// Treats `a` as consecutive blocks of `block` rows and emits, for every
    /// block, each window of `width` consecutive rows flattened into one row.
    /// Input `[B·block × d]` → output `[B·(block−width+1) × width·d]`.
    pub fn unfold(&mut self, a: Var, block: usize, width: usize) -> Var {
        let (m, d) = self.dims2(a);
        assert!(width >= 1 && width <= block, "unfold window");
        assert_eq!(m % block, 0, "unfold block size");
        let blocks = m / block;
        let per = block - width + 1;
        let src = self.nodes[a.0].value.data();
        let mut data = Vec::with_capacity(blocks * per * width * d);
        for b in 0..blocks {
            for s in 0..per {
                let start = (b * block + s) * d;
                data.extend_from_slice(&src[start..start + width * d]);
            }
        }
        let ng = self.ng(a);
        self.push(
            Tensor::from_rows(blocks * per, width * d, data),
            Op::Unfold {
                input: a,
                block,
                width,
            },
            ng,
        )
    }

    /// Column-wise max over consecutive blocks of `block` rows.
    /// Ties resolve to the first maximal row.
    pub fn block_max(&mut self, a: Var, block: usize) -> Var {
        let (m, n) = self.dims2(a);
        assert_eq!(m % block, 0, "block_max block size");
        let blocks = m / block;
        let src = self.nodes[a.0].value.data();
        let mut out = Vec::with_capacity(blocks * n);
        let mut argmax = Vec::with_capacity(blocks * n);
        for b in 0..blocks {
            for c in 0..n {
                let mut best = b * block;
                for r in b * block + 1..(b + 1) * block {
                    if src[r * n + c] > src[best * n + c] {
                        best = r;
                    }
                }
                out.push(src[best * n + c]);
                argmax.push(best * n + c);
            }
        }
        let ng = self.ng(a);
        self.push(
            Tensor::from_rows(blocks, n, out),
            Op::BlockMax { input: a, argmax },
            ng,
        )
    }

    /// Places row `i` of `a` at row `rows[i]` of a `total × cols` zero matrix.
    pub fn scatter_rows(&mut self, a: Var, rows: &[usize], total: usize) -> Var {
        let (m, n) = self.dims2(a);
        assert_eq!(m, rows.len(), "scatter_rows count");
        let src = self.nodes[a.0].value.data();
        let mut data = vec![F::zero(); total * n];
        for (i, &r) in rows.iter().enumerate() {
            assert!(r < total, "scatter_rows target");
            data[r * n..(r + 1) * n].copy_from_slice(&src[i * n..(i + 1) * n]);
        }
        let ng = self.ng(a);
        self.push(
            Tensor::from_rows(total, n, data),
            Op::ScatterRows {
                input: a,
                rows: rows.to_vec(),
            },
            ng,
        )
    }

    /// Inverted dropout. Identity on evaluation tapes or when `rate` is 0.
    pub fn dropout(&mut self, a: Var, rate: f64) -> Var {
        if self.mode == Mode::Eval || rate <= 0.0 {
            return a;
        }
        assert!(rate < 1.0, "dropout rate must be below 1");
        let keep = F::of(1.0 / (1.0 - rate));
        let n = self.nodes[a.0].value.len();
        let rng = self.rng.as_mut().expect("training tape has an rng");
        let scale: Vec<F> = (0..n)
            .map(|_| {
                if rng.gen::<f64>() < rate {
                    F::zero()
                } else {
                    keep
                }
            })
            .collect();
        let t = &self.nodes[a.0].value;
        let data = t.data().iter().zip(&scale).map(|(&x, &s)| x * s).collect();
        let value = Tensor::new(t.shape().to_vec(), data).expect("same shape");
        let ng = self.ng(a);
        self.push(value, Op::Dropout { input: a, scale }, ng)
    }

    /// `−ln(max(p[index], 1e-12))` as a scalar.
    pub fn neg_log_at(&mut self, probs: Var, index: usize) -> Var {
        let t = &self.nodes[probs.0].value;
        assert!(index < t.len(), "class index out of range");
        let p = t.data()[index].max(F::of(PROB_FLOOR));
        let ng = self.ng(probs);
        self.push(
            Tensor::scalar(-p.ln()),
            Op::NegLogAt {
                input: probs,
                index,
            },
            ng,
        )
    }

    pub fn sum(&mut self, a: Var) -> Var {
        let s = self.nodes[a.0].value.data().iter().copied().sum();
        let ng = self.ng(a);
        self.push(Tensor::scalar(s), Op::Sum(a), ng)
    }

    /// Reverse sweep from a single-element node.
    pub fn backward(&self, loss: Var) -> Grads<F> {
        assert_eq!(self.nodes[loss.0].value.len(), 1, "backward needs a scalar");
        let mut grads = Grads::empty(self.params.len());
        let mut adj: Vec<Option<Vec<F>>> = vec![None; loss.0 + 1];
        adj[loss.0] = Some(vec![F::one()]);

        for idx in (0..=loss.0).rev() {
            let Some(g) = adj[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.needs_grad {
                continue;
            }
            match &node.op {
                Op::Constant => {}
                Op::Param(id) => {
                    let slot = grads.slot_mut(*id, g.len());
                    for (s, &x) in slot.iter_mut().zip(&g) {
                        *s += x;
                    }
                }
                Op::Gather { table, ids } => {
                    let t = self.params.get(*table);
                    let cols = t.cols();
                    let slot = grads.slot_mut(*table, t.len());
                    for (r, &i) in ids.iter().enumerate() {
                        for (s, &x) in slot[i * cols..(i + 1) * cols]
                            .iter_mut()
                            .zip(&g[r * cols..(r + 1) * cols])
                        {
                            *s += x;
                        }
                    }
                }
                Op::MatMul(a, b) => {
                    let (m, k) = self.dims2(*a);
                    let n = self.dims2(*b).1;
                    if self.ng(*a) {
                        let ga = acc(&mut adj, *a, m * k);
                        matmul_bt_acc(&g, self.nodes[b.0].value.data(), ga, m, n, k);
                    }
                    if self.ng(*b) {
                        let gb = acc(&mut adj, *b, k * n);
                        matmul_at_acc(self.nodes[a.0].value.data(), &g, gb, m, k, n);
                    }
                }
                Op::MatMulBt(a, b) => {
                    let (m, k) = self.dims2(*a);
                    let n = self.dims2(*b).0;
                    if self.ng(*a) {
                        let ga = acc(&mut adj, *a, m * k);
                        matmul_acc(&g, self.nodes[b.0].value.data(), ga, m, n, k);
                    }
                    if self.ng(*b) {
                        let gb = acc(&mut adj, *b, n * k);
                        matmul_at_acc(&g, self.nodes[a.0].value.data(), gb, m, n, k);
                    }
                }
                Op::Add(a, b) => {
                    for v in [*a, *b] {
                        if self.ng(v) {
                            add_into(acc(&mut adj, v, g.len()), &g);
                        }
                    }
                }
                Op::AddRow(a, b) => {
                    let (m, n) = self.dims2(*a);
                    if self.ng(*a) {
                        add_into(acc(&mut adj, *a, m * n), &g);
                    }
                    if self.ng(*b) {
                        let gb = acc(&mut adj, *b, n);
                        for r in 0..m {
                            add_into(gb, &g[r * n..(r + 1) * n]);
                        }
                    }
                }
                Op::Mul(a, b) => {
                    let (va, vb) = (self.nodes[a.0].value.data(), self.nodes[b.0].value.data());
                    if self.ng(*a) {
                        let ga = acc(&mut adj, *a, g.len());
                        for ((s, &x), &y) in ga.iter_mut().zip(&g).zip(vb) {
                            *s += x * y;
                        }
                    }
                    if self.ng(*b) {
                        let gb = acc(&mut adj, *b, g.len());
                        for ((s, &x), &y) in gb.iter_mut().zip(&g).zip(va) {
                            *s += x * y;
                        }
                    }
                }
                Op::Scale(a, k) => {
                    let ga = acc(&mut adj, *a, g.len());
                    for (s, &x) in ga.iter_mut().zip(&g) {
                        *s += x * *k;
                    }
                }
                Op::Sigmoid(a) => {
                    let y = node.value.data();
                    let ga = acc(&mut adj, *a, g.len());
                    for ((s, &x), &yv) in ga.iter_mut().zip(&g).zip(y) {
                        *s += x * yv * (F::one() - yv);
                    }
                }
                Op::Tanh(a) => {
                    let y = node.value.data();
                    let ga = acc(&mut adj, *a, g.len());
                    for ((s, &x), &yv) in ga.iter_mut().zip(&g).zip(y) {
                        *s += x * (F::one() - yv * yv);
                    }
                }
                Op::Relu(a) => {
                    let inp = self.nodes[a.0].value.data();
                    let ga = acc(&mut adj, *a, g.len());
                    for ((s, &x), &xi) in ga.iter_mut().zip(&g).zip(inp) {
                        if xi > F::zero() {
                            *s += x;
                        }
                    }
                }
                Op::ConcatCols(parts) => {
                    let rows = node.value.rows();
                    let total = node.value.cols();
                    let mut off = 0;
                    for &p in parts {
                        let w = self.dims2(p).1;
                        if self.ng(p) {
                            let gp = acc(&mut adj, p, rows * w);
                            for r in 0..rows {
                                add_into(
                                    &mut gp[r * w..(r + 1) * w],
                                    &g[r * total + off..r * total + off + w],
                                );
                            }
                        }
                        off += w;
                    }
                }
                Op::ConcatRows(parts) => {
                    let mut off = 0;
                    for &p in parts {
                        let n = self.nodes[p.0].value.len();
                        if self.ng(p) {
                            add_into(acc(&mut adj, p, n), &g[off..off + n]);
                        }
                        off += n;
                    }
                }
                Op::SliceCols(a, start) => {
                    let (m, n) = self.dims2(*a);
                    let w = node.value.cols();
                    let ga = acc(&mut adj, *a, m * n);
                    for r in 0..m {
                        add_into(
                            &mut ga[r * n + start..r * n + start + w],
                            &g[r * w..(r + 1) * w],
                        );
                    }
                }
                Op::Row(a, i) => {
                    let (m, n) = self.dims2(*a);
                    let ga = acc(&mut adj, *a, m * n);
                    add_into(&mut ga[i * n..(i + 1) * n], &g);
                }
                Op::Softmax { input, axis } => {
                    let y = node.value.data();
                    let groups = AxisGroups::new(node.value.shape(), *axis).expect("valid axis");
                    let gi = acc(&mut adj, *input, y.len());
                    for grp in 0..groups.count() {
                        let dot: F = groups.indices(grp).map(|j| y[j] * g[j]).sum();
                        for j in groups.indices(grp) {
                            gi[j] += y[j] * (g[j] - dot);
                        }
                    }
                }
                Op::MaskedRowMean { input, mask } => {
                    let (m, n) = self.dims2(*input);
                    let count = mask.iter().filter(|&&b| b).count();
                    let inv = F::one() / F::of(count as f64);
                    let gi = acc(&mut adj, *input, m * n);
                    for r in (0..m).filter(|&r| mask[r]) {
                        for (s, &x) in gi[r * n..(r + 1) * n].iter_mut().zip(&g) {
                            *s += x * inv;
                        }
                    }
                }
                Op::Unfold {
                    input,
                    block,
                    width,
                } => {
                    let (m, d) = self.dims2(*input);
                    let per = block - width + 1;
                    let gi = acc(&mut adj, *input, m * d);
                    let row_len = width * d;
                    for b in 0..m / block {
                        for s in 0..per {
                            let out_row = b * per + s;
                            let start = (b * block + s) * d;
                            add_into(
                                &mut gi[start..start + row_len],
                                &g[out_row * row_len..(out_row + 1) * row_len],
                            );
                        }
                    }
                }
                Op::BlockMax { input, argmax } => {
                    let n = self.nodes[input.0].value.len();
                    let gi = acc(&mut adj, *input, n);
                    for (&src, &x) in argmax.iter().zip(&g) {
                        gi[src] += x;
                    }
                }
                Op::ScatterRows { input, rows } => {
                    let (m, n) = self.dims2(*input);
                    let gi = acc(&mut adj, *input, m * n);
                    for (i, &r) in rows.iter().enumerate() {
                        add_into(&mut gi[i * n..(i + 1) * n], &g[r * n..(r + 1) * n]);
                    }
                }
                Op::Dropout { input, scale } => {
                    let gi = acc(&mut adj, *input, g.len());
                    for ((s, &x), &k) in gi.iter_mut().zip(&g).zip(scale) {
                        *s += x * k;
                    }
                }
                Op::NegLogAt { input, index } => {
                    let t = &self.nodes[input.0].value;
                    let p = t.data()[*index];
                    let gi = acc(&mut adj, *input, t.len());
                    if p >= F::of(PROB_FLOOR) {
                        gi[*index] += -g[0] / p;
                    }
                }
                Op::Sum(a) => {
                    let n = self.nodes[a.0].value.len();
                    let ga = acc(&mut adj, *a, n);
                    for s in ga.iter_mut() {
                        *s += g[0];
                    }
                }
            }
        }
        grads
    }
}

fn acc<F: Real>(adj: &mut [Option<Vec<F>>], v: Var, size: usize) -> &mut [F] {
    adj[v.0].get_or_insert_with(|| vec![F::zero(); size])
}

fn add_into<F: Real>(dst: &mut [F], src: &[F]) {
    for (d, &s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}
