//! Reverse-mode differentiation over an eagerly evaluated operation tape.
//!
//! A [`Graph`] borrows the parameter store read-only and records one node per
//! operation; values are computed at node creation. [`Graph::backward`] walks
//! the tape in reverse and returns a [`GradStore`] with the gradients of the
//! requested scalar with respect to every parameter. Shape violations are
//! programming errors and panic; they cannot be triggered by data.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::tensor::{GradStore, ParamId, ParamStore};

/// Handle to a node of the tape.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NodeId(usize);

#[derive(Clone, Debug)]
enum Op {
    Param(ParamId),
    Constant,
    /// Row `row` of a parameter matrix with `cols` columns.
    Row { mat: NodeId, row: usize, cols: usize },
    /// Matrix-vector product; the matrix has `vec.len()` columns.
    MatVec { mat: NodeId, vec: NodeId },
    Add(NodeId, NodeId),
    Mul(NodeId, NodeId),
    Sigmoid(NodeId),
    Tanh(NodeId),
    Slice { src: NodeId, start: usize },
    Concat(Vec<NodeId>),
    Dropout { src: NodeId, mask: Vec<f64> },
    Scale { src: NodeId, factor: f64 },
    SumScalars(Vec<NodeId>),
    /// Negative log-softmax of `logits` at index `target`.
    NllLoss { logits: NodeId, target: usize },
}

#[derive(Clone, Debug)]
struct Node {
    op: Op,
    /// Owned value; empty for `Param` nodes, whose values live in the store.
    value: Vec<f64>,
}

/// The operation tape for one (batch of) forward/backward pass(es).
pub struct Graph<'p> {
    params: &'p ParamStore,
    nodes: Vec<Node>,
    param_nodes: Vec<Option<NodeId>>,
}

impl<'p> Graph<'p> {
    pub fn new(params: &'p ParamStore) -> Self {
        Graph { params, nodes: Vec::new(), param_nodes: vec![None; params.len()] }
    }

    fn push(&mut self, op: Op, value: Vec<f64>) -> NodeId {
        let id = NodeId(self.nodes.len());
        self.nodes.push(Node { op, value });
        id
    }

    /// The value of a node.
    pub fn value(&self, id: NodeId) -> &[f64] {
        let node = &self.nodes[id.0];
        match node.op {
            Op::Param(pid) => self.params.values(pid),
            _ => &node.value,
        }
    }

    /// Scalar value of a single-element node.
    pub fn scalar(&self, id: NodeId) -> f64 {
        let v = self.value(id);
        assert_eq!(v.len(), 1, "node is not a scalar");
        v[0]
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    /// Leaf referring to a parameter tensor. Repeated requests for the same
    /// parameter share one node.
    pub fn param(&mut self, id: ParamId) -> NodeId {
        if let Some(node) = self.param_nodes[id.0] {
            return node;
        }
        let node = self.push(Op::Param(id), Vec::new());
        self.param_nodes[id.0] = Some(node);
        node
    }

    /// Leaf with a fixed value; receives no gradient.
    pub fn constant(&mut self, values: Vec<f64>) -> NodeId {
        self.push(Op::Constant, values)
    }

    /// Row `row` of a parameter matrix (an embedding lookup).
    pub fn row(&mut self, mat: NodeId, row: usize) -> NodeId {
        let Op::Param(pid) = self.nodes[mat.0].op else {
            panic!("row lookup requires a parameter matrix");
        };
        let shape = self.params.get(pid).tensor.shape();
        assert_eq!(shape.len(), 2, "row lookup requires a matrix");
        let (rows, cols) = (shape[0], shape[1]);
        assert!(row < rows, "row {row} out of range for {rows} rows");
        let value = self.params.values(pid)[row * cols..(row + 1) * cols].to_vec();
        self.push(Op::Row { mat, row, cols }, value)
    }

    pub fn matvec(&mut self, mat: NodeId, vec_id: NodeId) -> NodeId {
        let m = self.value(mat);
        let v = self.value(vec_id);
        assert!(!v.is_empty() && m.len().is_multiple_of(v.len()), "matrix/vector shape mismatch");
        let rows = m.len() / v.len();
        let mut out = vec![0.0; rows];
        for (r, slot) in out.iter_mut().enumerate() {
            let row = &m[r * v.len()..(r + 1) * v.len()];
            *slot = row.iter().zip(v).map(|(a, b)| a * b).sum();
        }
        self.push(Op::MatVec { mat, vec: vec_id }, out)
    }

    pub fn add(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value: Vec<f64> = {
            let va = self.value(a);
            let vb = self.value(b);
            assert_eq!(va.len(), vb.len(), "addition shape mismatch");
            va.iter().zip(vb).map(|(x, y)| x + y).collect()
        };
        self.push(Op::Add(a, b), value)
    }

    pub fn mul(&mut self, a: NodeId, b: NodeId) -> NodeId {
        let value: Vec<f64> = {
            let va = self.value(a);
            let vb = self.value(b);
            assert_eq!(va.len(), vb.len(), "product shape mismatch");
            va.iter().zip(vb).map(|(x, y)| x * y).collect()
        };
        self.push(Op::Mul(a, b), value)
    }

    pub fn sigmoid(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> =
            self.value(x).iter().map(|&v| 1.0 / (1.0 + libm::exp(-v))).collect();
        self.push(Op::Sigmoid(x), value)
    }

    pub fn tanh(&mut self, x: NodeId) -> NodeId {
        let value: Vec<f64> = self.value(x).iter().map(|&v| libm::tanh(v)).collect();
        self.push(Op::Tanh(x), value)
    }

    pub fn slice(&mut self, src: NodeId, start: usize, len: usize) -> NodeId {
        let value = self.value(src)[start..start + len].to_vec();
        self.push(Op::Slice { src, start }, value)
    }

    pub fn concat(&mut self, parts: &[NodeId]) -> NodeId {
        let mut value = Vec::new();
        for &part in parts {
            value.extend_from_slice(self.value(part));
        }
        self.push(Op::Concat(parts.to_vec()), value)
    }

    /// Inverted dropout: kept components scale by `1/(1-rate)` so the
    /// expected value is unchanged. `rate` 0 is the identity.
    pub fn dropout(&mut self, src: NodeId, rate: f64, rng: &mut ChaCha8Rng) -> NodeId {
        assert!((0.0..1.0).contains(&rate), "dropout rate must be in [0, 1)");
        if rate == 0.0 {
            return src;
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(src).len())
            .map(|_| if rng.random_range(0.0..1.0) < rate { 0.0 } else { keep })
            .collect();
        let value: Vec<f64> = self.value(src).iter().zip(&mask).map(|(v, m)| v * m).collect();
        self.push(Op::Dropout { src, mask }, value)
    }

    pub fn scale(&mut self, src: NodeId, factor: f64) -> NodeId {
        let value: Vec<f64> = self.value(src).iter().map(|v| v * factor).collect();
        self.push(Op::Scale { src, factor }, value)
    }

    /// Sum of scalar nodes.
    pub fn sum_scalars(&mut self, xs: &[NodeId]) -> NodeId {
        let total = xs.iter().map(|&x| self.scalar(x)).sum();
        self.push(Op::SumScalars(xs.to_vec()), vec![total])
    }

    /// Cross-entropy of `logits` against the gold index `target`, via a
    /// max-shifted log-sum-exp.
    pub fn nll_loss(&mut self, logits: NodeId, target: usize) -> NodeId {
        let l = self.value(logits);
        assert!(target < l.len(), "target {target} out of range for {} logits", l.len());
        let loss = log_sum_exp(l) - l[target];
        self.push(Op::NllLoss { logits, target }, vec![loss])
    }

    /// Gradients of the scalar `loss` with respect to every parameter.
    pub fn backward(&self, loss: NodeId) -> GradStore {
        assert_eq!(self.value(loss).len(), 1, "backward requires a scalar loss");
        let mut grads: Vec<Option<Vec<f64>>> = vec![None; self.nodes.len()];
        grads[loss.0] = Some(vec![1.0]);
        let mut store = GradStore::zeros_like(self.params);

        for id in (0..=loss.0).rev() {
            let Some(grad) = grads[id].take() else { continue };
            match &self.nodes[id].op {
                Op::Param(pid) => store.accumulate(*pid, &grad),
                Op::Constant => {}
                Op::Row { mat, row, cols } => {
                    let total = self.value(*mat).len();
                    let buf = buffer(&mut grads, *mat, total);
                    for (i, g) in grad.iter().enumerate() {
                        buf[row * cols + i] += g;
                    }
                }
                Op::MatVec { mat, vec: vec_id } => {
                    let m = self.value(*mat);
                    let v = self.value(*vec_id);
                    let cols = v.len();
                    {
                        let dm = buffer(&mut grads, *mat, m.len());
                        for (r, g) in grad.iter().enumerate() {
                            for (c, x) in v.iter().enumerate() {
                                dm[r * cols + c] += g * x;
                            }
                        }
                    }
                    let dv = buffer(&mut grads, *vec_id, cols);
                    for (r, g) in grad.iter().enumerate() {
                        let row = &m[r * cols..(r + 1) * cols];
                        for (c, w) in row.iter().enumerate() {
                            dv[c] += g * w;
                        }
                    }
                }
                Op::Add(a, b) => {
                    accumulate(&mut grads, *a, &grad);
                    accumulate(&mut grads, *b, &grad);
                }
                Op::Mul(a, b) => {
                    let db: Vec<f64> =
                        self.value(*a).iter().zip(&grad).map(|(x, g)| x * g).collect();
                    let da: Vec<f64> =
                        self.value(*b).iter().zip(&grad).map(|(x, g)| x * g).collect();
                    accumulate(&mut grads, *a, &da);
                    accumulate(&mut grads, *b, &db);
                }
                Op::Sigmoid(x) => {
                    let dx: Vec<f64> = self.nodes[id]
                        .value
                        .iter()
                        .zip(&grad)
                        .map(|(y, g)| g * y * (1.0 - y))
                        .collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::Tanh(x) => {
                    let dx: Vec<f64> = self.nodes[id]
                        .value
                        .iter()
                        .zip(&grad)
                        .map(|(y, g)| g * (1.0 - y * y))
                        .collect();
                    accumulate(&mut grads, *x, &dx);
                }
                Op::Slice { src, start } => {
                    let total = self.value(*src).len();
                    let buf = buffer(&mut grads, *src, total);
                    for (i, g) in grad.iter().enumerate() {
                        buf[start + i] += g;
                    }
                }
                Op::Concat(parts) => {
                    let mut offset = 0;
                    for &part in parts {
                        let len = self.value(part).len();
                        accumulate(&mut grads, part, &grad[offset..offset + len]);
                        offset += len;
                    }
                }
                Op::Dropout { src, mask } => {
                    let dx: Vec<f64> = mask.iter().zip(&grad).map(|(m, g)| m * g).collect();
                    accumulate(&mut grads, *src, &dx);
                }
                Op::Scale { src, factor } => {
                    let dx: Vec<f64> = grad.iter().map(|g| g * factor).collect();
                    accumulate(&mut grads, *src, &dx);
                }
                Op::SumScalars(xs) => {
                    for &x in xs {
                        accumulate(&mut grads, x, &grad);
                    }
                }
                Op::NllLoss { logits, target } => {
                    let probs = softmax(self.value(*logits));
                    let g = grad[0];
                    let mut dl = probs;
                    dl[*target] -= 1.0;
                    for d in &mut dl {
                        *d *= g;
                    }
                    accumulate(&mut grads, *logits, &dl);
                }
            }
        }

        store
    }
}

fn buffer(grads: &mut [Option<Vec<f64>>], id: NodeId, len: usize) -> &mut Vec<f64> {
    grads[id.0].get_or_insert_with(|| vec![0.0; len])
}

fn accumulate(grads: &mut [Option<Vec<f64>>], id: NodeId, values: &[f64]) {
    let buf = buffer(grads, id, values.len());
    debug_assert_eq!(buf.len(), values.len());
    for (b, v) in buf.iter_mut().zip(values) {
        *b += v;
    }
}

/// Numerically stable softmax.
pub fn softmax(logits: &[f64]) -> Vec<f64> {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = logits.iter().map(|&l| libm::exp(l - max)).collect();
    let sum: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / sum).collect()
}

fn log_sum_exp(logits: &[f64]) -> f64 {
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max + libm::log(logits.iter().map(|&l| libm::exp(l - max)).sum())
}

/// Index of the largest component; the first one wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate() {
        if v > values[best] {
            best = i;
        }
    }
    best
}
