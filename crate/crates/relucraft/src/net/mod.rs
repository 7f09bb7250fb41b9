//! Network intermediate representation, evaluator and metrics.
//!
//! A network is a list of affine layers `(W, b)` with ReLU applied after every
//! layer except the last. A single layer is a pure affine map of depth 0.

mod document;
mod hexfloat;
mod sparse;

pub use document::{from_json, to_json, to_json_hexfloat};
pub use sparse::SparseMatrix;

use crate::numeric::ExactSum;
use crate::{Error, Result};

#[inline]
pub fn relu(x: f64) -> f64 {
    if x > 0.0 {
        x
    } else {
        0.0
    }
}

/// One affine map `x -> W x + b`.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer {
    weights: SparseMatrix,
    bias: Vec<f64>,
}

impl Layer {
    pub fn new(weights: SparseMatrix, bias: Vec<f64>) -> Result<Self> {
        if weights.rows() != bias.len() {
            return Err(Error::dims("layer bias length", weights.rows(), bias.len()));
        }
        if weights.values().iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::invalid("layer contains a non-finite entry"));
        }
        Ok(Layer { weights, bias })
    }

    /// Layer from dense row-major weights.
    pub fn dense(weights: &[Vec<f64>], bias: Vec<f64>) -> Result<Self> {
        let cols = weights.first().map_or(0, |r| r.len());
        let w = SparseMatrix::from_dense(weights, cols).ok_or_else(|| Error::invalid("ragged weight matrix"))?;
        Layer::new(w, bias)
    }

    pub fn weights(&self) -> &SparseMatrix {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn input_dim(&self) -> usize {
        self.weights.cols()
    }

    pub fn output_dim(&self) -> usize {
        self.weights.rows()
    }

    pub fn nnz(&self) -> usize {
        self.weights.nnz() + self.bias.iter().filter(|&&b| b != 0.0).count()
    }

    fn apply_into(&self, x: &[f64], out: &mut [f64], acc: &mut ExactSum) {
        self.weights.mul_vec_add_into(x, &self.bias, out, acc);
    }
}

/// Size, width and depth of a network.
#[derive(Clone, Copy, Debug, PartialEq, Eq, serde::Serialize)]
pub struct NetworkMetrics {
    /// Number of nonzero weights and biases.
    pub size: usize,
    /// Largest hidden layer dimension, 0 for depth 0.
    pub width: usize,
    /// Number of hidden layers.
    pub depth: usize,
}

/// Feedforward ReLU network. Immutable after construction.
#[derive(Clone, Debug, PartialEq)]
pub struct ReluNetwork {
    input_dim: usize,
    layers: Vec<Layer>,
}

impl ReluNetwork {
    pub fn new(input_dim: usize, layers: Vec<Layer>) -> Result<Self> {
        if input_dim == 0 {
            return Err(Error::invalid("input dimension must be positive"));
        }
        if layers.is_empty() {
            return Err(Error::invalid("a network needs at least one layer"));
        }
        let mut dim = input_dim;
        for (i, layer) in layers.iter().enumerate() {
            if layer.input_dim() != dim {
                return Err(Error::dims(format!("layer {i} input"), dim, layer.input_dim()));
            }
            dim = layer.output_dim();
        }
        Ok(ReluNetwork { input_dim, layers })
    }

    /// Depth-0 network computing `x -> W x + b`.
    pub fn affine(weights: SparseMatrix, bias: Vec<f64>) -> Result<Self> {
        let d = weights.cols();
        ReluNetwork::new(d, vec![Layer::new(weights, bias)?])
    }

    /// Depth-0 identity on `R^d`.
    pub fn affine_identity(d: usize) -> Self {
        ReluNetwork::affine(SparseMatrix::identity(d), vec![0.0; d]).expect("identity is valid")
    }

    pub fn input_dim(&self) -> usize {
        self.input_dim
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().map_or(self.input_dim, Layer::output_dim)
    }

    pub fn layers(&self) -> &[Layer] {
        &self.layers
    }

    pub fn into_layers(self) -> Vec<Layer> {
        self.layers
    }

    pub fn depth(&self) -> usize {
        self.layers.len() - 1
    }

    /// Output dimensions of the hidden layers, in order.
    pub fn hidden_dims(&self) -> Vec<usize> {
        self.layers[..self.depth()].iter().map(Layer::output_dim).collect()
    }

    pub fn size(&self) -> usize {
        self.layers.iter().map(Layer::nnz).sum()
    }

    pub fn width(&self) -> usize {
        self.hidden_dims().into_iter().max().unwrap_or(0)
    }

    pub fn metrics(&self) -> NetworkMetrics {
        NetworkMetrics {
            size: self.size(),
            width: self.width(),
            depth: self.depth(),
        }
    }

    /// Largest absolute weight (biases excluded).
    pub fn max_abs_weight(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.weights.values())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Largest absolute bias entry.
    pub fn max_abs_bias(&self) -> f64 {
        self.layers
            .iter()
            .flat_map(|l| l.bias.iter())
            .fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn evaluate(&self, x: &[f64]) -> Result<Vec<f64>> {
        if x.len() != self.input_dim {
            return Err(Error::dims("network input", self.input_dim, x.len()));
        }
        Ok(self.eval(x))
    }

    /// Evaluates without the dimension check. Every pre-activation is the
    /// correctly rounded sum of the rounded products and the bias.
    ///
    /// # Panics
    /// If `x.len() != input_dim` (in debug builds; wrong results otherwise).
    pub fn eval(&self, x: &[f64]) -> Vec<f64> {
        let mut cur = x.to_vec();
        let mut next = Vec::new();
        let mut acc = ExactSum::new();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            next.clear();
            next.resize(layer.output_dim(), 0.0);
            layer.apply_into(&cur, &mut next, &mut acc);
            if i < last {
                next.iter_mut().for_each(|v| *v = relu(*v));
            }
            std::mem::swap(&mut cur, &mut next);
        }
        cur
    }

    /// Scalar-output convenience wrapper around [`ReluNetwork::eval`].
    pub fn eval1(&self, x: &[f64]) -> f64 {
        self.eval(x)[0]
    }

    /// Pre-activations of every layer (the last entry is the output).
    pub fn pre_activations(&self, x: &[f64]) -> Result<Vec<Vec<f64>>> {
        if x.len() != self.input_dim {
            return Err(Error::dims("network input", self.input_dim, x.len()));
        }
        let mut out = Vec::with_capacity(self.layers.len());
        let mut cur = x.to_vec();
        let mut acc = ExactSum::new();
        for layer in &self.layers {
            let mut pre = vec![0.0; layer.output_dim()];
            layer.apply_into(&cur, &mut pre, &mut acc);
            cur = pre.iter().map(|&v| relu(v)).collect();
            out.push(pre);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn single(w: f64, b: f64) -> Layer {
        Layer::dense(&[vec![w]], vec![b]).unwrap()
    }

    #[test]
    fn relu_kills_negative() {
        let net = ReluNetwork::new(1, vec![single(1.0, 0.0), single(1.0, 0.0)]).unwrap();
        assert_eq!(net.evaluate(&[-2.0]).unwrap(), vec![0.0]);
        assert_eq!(net.evaluate(&[3.0]).unwrap(), vec![3.0]);
    }

    #[test]
    fn layer_dims_checked() {
        let bad = Layer::dense(&[vec![1.0, 1.0]], vec![0.0]).unwrap();
        let err = ReluNetwork::new(1, vec![single(1.0, 0.0), bad]).unwrap_err();
        assert!(err.to_string().contains("layer 1"), "{err}");
    }

    #[test]
    fn zero_network_has_size_zero() {
        let z = Layer::dense(&[vec![0.0, 0.0], vec![0.0, 0.0]], vec![0.0, 0.0]).unwrap();
        let net = ReluNetwork::new(2, vec![z.clone(), z]).unwrap();
        assert_eq!(
            net.metrics(),
            NetworkMetrics {
                size: 0,
                width: 2,
                depth: 1
            }
        );
    }

    #[test]
    fn depth_zero_width_zero() {
        let net = ReluNetwork::affine_identity(3);
        assert_eq!(
            net.metrics(),
            NetworkMetrics {
                size: 3,
                width: 0,
                depth: 0
            }
        );
        assert_eq!(net.evaluate(&[1.0, -2.0, 0.5]).unwrap(), vec![1.0, -2.0, 0.5]);
    }

    #[test]
    fn wrong_input_length_is_an_error() {
        let net = ReluNetwork::affine_identity(2);
        assert!(matches!(net.evaluate(&[1.0]), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn non_finite_rejected() {
        assert!(Layer::dense(&[vec![f64::NAN]], vec![0.0]).is_err());
        assert!(Layer::dense(&[vec![1.0]], vec![f64::INFINITY]).is_err());
    }
}
