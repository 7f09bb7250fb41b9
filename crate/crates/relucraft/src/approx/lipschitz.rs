use serde::{Deserialize, Serialize};

use crate::calculus::{bound_weights, compose, linear_combination, BoundCertificate};
use crate::minmax::{ceil_log2, maxn_net, minn_net};
use crate::net::{Layer, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// Relative slack when comparing the budget `M` with the data's minimal
/// Lipschitz constant.
const BUDGET_SLACK: f64 = 1e-12;

/// Labelled points with a Lipschitz budget under the 1-norm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LipschitzSample {
    points: Vec<Vec<f64>>,
    values: Vec<f64>,
    lipschitz: f64,
}

fn l1(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum()
}

impl LipschitzSample {
    /// Checks shapes, distinctness and `M >= M̃`.
    pub fn new(points: Vec<Vec<f64>>, values: Vec<f64>, lipschitz: f64) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("Lipschitz sample needs at least one point"));
        }
        if values.len() != points.len() {
            return Err(Error::dims("sample values", points.len(), values.len()));
        }
        let d = points[0].len();
        if d == 0 {
            return Err(Error::invalid("sample points must have positive dimension"));
        }
        if let Some(p) = points.iter().find(|p| p.len() != d) {
            return Err(Error::dims("sample point", d, p.len()));
        }
        if points.iter().flatten().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("sample contains a non-finite coordinate or value"));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::invalid(format!(
                "Lipschitz budget must be finite and nonnegative, got {lipschitz}"
            )));
        }
        let minimal = Self::minimal_constant(&points, &values)?;
        if lipschitz < minimal * (1.0 - BUDGET_SLACK) {
            return Err(Error::Precondition(format!(
                "Lipschitz budget M = {lipschitz} is below the data's minimal constant {minimal}; \
                 the reconstruction requires M >= max |y_i - y_j| / ‖x_i - x_j‖₁"
            )));
        }
        Ok(LipschitzSample {
            points,
            values,
            lipschitz,
        })
    }

    /// `max_{i≠j} |y_i - y_j| / ‖x_i - x_j‖₁`, 0 for a single point. Repeated
    /// points are rejected.
    pub fn minimal_constant(points: &[Vec<f64>], values: &[f64]) -> Result<f64> {
        let mut best: f64 = 0.0;
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                let dist = l1(&points[i], &points[j]);
                if dist == 0.0 {
                    return Err(Error::invalid(format!("sample points {i} and {j} coincide")));
                }
                best = best.max((values[i] - values[j]).abs() / dist);
            }
        }
        Ok(best)
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn dim(&self) -> usize {
        self.points[0].len()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("sample serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let raw: LipschitzSample = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        LipschitzSample::new(raw.points, raw.values, raw.lipschitz)
    }
}

/// Values of the upper and lower envelopes and their midpoint.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct LipschitzBounds {
    pub upper: f64,
    pub lower: f64,
    pub mid: f64,
}

/// `upper = min_k (y_k + M ‖x - x_k‖₁)`, `lower = max_k (y_k - M ‖x - x_k‖₁)`
/// and `mid = (upper + lower) / 2`.
pub fn lipschitz_bounds(sample: &LipschitzSample, x: &[f64]) -> Result<LipschitzBounds> {
    if x.len() != sample.dim() {
        return Err(Error::dims("query point", sample.dim(), x.len()));
    }
    let m = sample.lipschitz;
    let mut upper = f64::INFINITY;
    let mut lower = f64::NEG_INFINITY;
    for (p, &y) in sample.points.iter().zip(&sample.values) {
        let r = m * l1(x, p);
        upper = upper.min(y + r);
        lower = lower.max(y - r);
    }
    Ok(LipschitzBounds {
        upper,
        lower,
        mid: 0.5 * (upper + lower),
    })
}

/// `x -> (y_k + sign M ‖x - x_k‖₁)_k` with hidden units `relu(±(x_i - x_{k,i}))`.
fn cone_layers(sample: &LipschitzSample, sign: f64) -> Result<ReluNetwork> {
    let d = sample.dim();
    let m = sample.len();
    let mut w0 = Vec::with_capacity(2 * d * m);
    let mut b0 = Vec::with_capacity(2 * d * m);
    let mut w1 = Vec::with_capacity(2 * d * m);
    for (k, p) in sample.points.iter().enumerate() {
        for (i, &c) in p.iter().enumerate() {
            for s in [1.0, -1.0] {
                let row = b0.len();
                w0.push((row, i, s));
                b0.push(-s * c);
                w1.push((k, row, sign * sample.lipschitz));
            }
        }
    }
    let hidden = b0.len();
    let l0 = Layer::new(SparseMatrix::from_triplets(hidden, d, w0), b0)?;
    let l1 = Layer::new(SparseMatrix::from_triplets(m, hidden, w1), sample.values.clone())?;
    ReluNetwork::new(d, vec![l0, l1])
}

/// Network realizing `(f_upper + f_lower) / 2` exactly: cones
/// `y_k ± M ‖x - x_k‖₁`, a min tree over the upper cones, a max tree over the
/// lower ones and the average. Depth `1 + ⌈log2 m⌉`. Weights are at most
/// `max(M, ‖y‖∞)` unless that would take more than
/// [`MAX_NEURON_COPIES`](crate::calculus::MAX_NEURON_COPIES) copies of a
/// neuron, in which case the unit weights of the gadgets are kept.
pub fn lipschitz_net(sample: &LipschitzSample) -> Result<(ReluNetwork, BoundCertificate)> {
    let d = sample.dim();
    let m = sample.len();
    let (min, _) = minn_net(m)?;
    let (max, _) = maxn_net(m)?;
    let (upper, _) = compose(&min, &cone_layers(sample, 1.0)?)?;
    let (lower, _) = compose(&max, &cone_layers(sample, -1.0)?)?;
    let (mut net, _) = linear_combination(&[upper, lower], &[0.5, 0.5], true)?;
    // each branch: 4dm entries in the cone layer, and every weight of the
    // min/max tree's first layer expands into at most 2d cone weights
    let mut size = 2 * (4 * d * m + 16 * m * (2 * d + 1));
    let mut width = 2 * (2 * d * m).max(3 * m);
    // the gadgets use unit weights; below max(M, |y|) = w < 1 the neurons
    // are split so that every weight stays within w
    let y_max = sample.values.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    let w = sample.lipschitz.max(y_max);
    if net.max_abs_weight() > w && w > 0.0 {
        if let Ok((bounded, copies)) = bound_weights(&net, w) {
            net = bounded;
            size *= copies * copies;
            width *= copies;
        }
    }
    let cert = BoundCertificate::issue(format!("lipschitz(m={m}, d={d})"), &net, size, width, 1 + ceil_log2(m))?;
    Ok((net, cert))
}
