//! Flat tensors, the trainable parameter store and gradient buffers.

use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// A dense tensor of 64-bit reals. Vectors have shape `[n]`, matrices
/// `[rows, cols]` in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor {
    shape: Vec<usize>,
    values: Vec<f64>,
}

impl Tensor {
    pub fn zeros(shape: &[usize]) -> Self {
        Tensor { shape: shape.to_vec(), values: vec![0.0; shape.iter().product()] }
    }

    pub fn from_values(shape: &[usize], values: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            values.len(),
            "value count must equal the shape product"
        );
        Tensor { shape: shape.to_vec(), values }
    }

    pub fn shape(&self) -> &[usize] {
        &self.shape
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }
}

/// Handle to one parameter tensor in a [`ParamStore`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ParamId(pub(crate) usize);

/// One named parameter with its momentum buffer.
#[derive(Clone, Debug)]
pub struct ParamEntry {
    pub name: String,
    pub tensor: Tensor,
    pub(crate) velocity: Vec<f64>,
}

/// All trainable tensors of a model, in a stable declaration order that also
/// defines the serialization order of the model file.
#[derive(Clone, Debug, Default)]
pub struct ParamStore {
    entries: Vec<ParamEntry>,
}

impl ParamStore {
    pub fn new() -> Self {
        ParamStore::default()
    }

    pub fn add(&mut self, name: &str, tensor: Tensor) -> ParamId {
        let id = ParamId(self.entries.len());
        let velocity = vec![0.0; tensor.len()];
        self.entries.push(ParamEntry { name: name.to_string(), tensor, velocity });
        id
    }

    /// Adds a matrix initialized uniformly in `±sqrt(6 / (rows + cols))`.
    pub fn xavier(&mut self, name: &str, rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> ParamId {
        let bound = libm::sqrt(6.0 / (rows + cols) as f64);
        let values = (0..rows * cols).map(|_| rng.random_range(-bound..bound)).collect();
        self.add(name, Tensor::from_values(&[rows, cols], values))
    }

    /// Adds a zero-initialized vector.
    pub fn zeros(&mut self, name: &str, len: usize) -> ParamId {
        self.add(name, Tensor::zeros(&[len]))
    }

    pub fn get(&self, id: ParamId) -> &ParamEntry {
        &self.entries[id.0]
    }

    pub fn get_mut(&mut self, id: ParamId) -> &mut ParamEntry {
        &mut self.entries[id.0]
    }

    pub fn values(&self, id: ParamId) -> &[f64] {
        self.entries[id.0].tensor.values()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Total number of scalar parameters.
    pub fn scalar_count(&self) -> usize {
        self.entries.iter().map(|e| e.tensor.len()).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (ParamId, &ParamEntry)> {
        self.entries.iter().enumerate().map(|(i, e)| (ParamId(i), e))
    }

    pub fn find(&self, name: &str) -> Option<ParamId> {
        self.entries.iter().position(|e| e.name == name).map(ParamId)
    }
}

/// Per-parameter gradient buffers, zero until written by a backward pass.
#[derive(Clone, Debug)]
pub struct GradStore {
    grads: Vec<Vec<f64>>,
}

impl GradStore {
    pub fn zeros_like(params: &ParamStore) -> Self {
        GradStore { grads: params.iter().map(|(_, e)| vec![0.0; e.tensor.len()]).collect() }
    }

    pub fn grad(&self, id: ParamId) -> &[f64] {
        &self.grads[id.0]
    }

    pub(crate) fn accumulate(&mut self, id: ParamId, values: &[f64]) {
        let grad = &mut self.grads[id.0];
        debug_assert_eq!(grad.len(), values.len());
        for (g, v) in grad.iter_mut().zip(values) {
            *g += v;
        }
    }

    /// True when every component of the parameter's gradient is exactly zero.
    pub fn is_exactly_zero(&self, id: ParamId) -> bool {
        self.grads[id.0].iter().all(|&g| g == 0.0)
    }

    pub fn squared_norm(&self, id: ParamId) -> f64 {
        self.grads[id.0].iter().map(|g| g * g).sum()
    }
}
