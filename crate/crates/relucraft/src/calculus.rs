//! Basic ReLU calculus: identity, composition, parallelization and linear
//! combination. Each construction returns a [`BoundCertificate`] that has
//! already been checked against the measured metrics.

use serde::Serialize;

use crate::net::{Layer, NetworkMetrics, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// Measured metrics paired with the bounds a construction promises.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BoundCertificate {
    pub construction: String,
    pub claimed_size_bound: usize,
    pub claimed_width_bound: usize,
    /// Depth claims are equalities.
    pub claimed_depth_value: usize,
    pub actual: NetworkMetrics,
}

impl BoundCertificate {
    /// Checks the claims against `net` and fails with [`Error::Certificate`]
    /// if any of them does not hold.
    pub fn issue(
        construction: impl Into<String>,
        net: &ReluNetwork,
        size_bound: usize,
        width_bound: usize,
        depth: usize,
    ) -> Result<Self> {
        let cert = BoundCertificate {
            construction: construction.into(),
            claimed_size_bound: size_bound,
            claimed_width_bound: width_bound,
            claimed_depth_value: depth,
            actual: net.metrics(),
        };
        cert.check()?;
        Ok(cert)
    }

    pub fn holds(&self) -> bool {
        self.check().is_ok()
    }

    pub fn check(&self) -> Result<()> {
        let a = &self.actual;
        let fail = |detail: String| {
            Err(Error::Certificate {
                construction: self.construction.clone(),
                detail,
            })
        };
        if a.size > self.claimed_size_bound {
            return fail(format!("size {} > bound {}", a.size, self.claimed_size_bound));
        }
        if a.width > self.claimed_width_bound {
            return fail(format!("width {} > bound {}", a.width, self.claimed_width_bound));
        }
        if a.depth != self.claimed_depth_value {
            return fail(format!("depth {} != claimed {}", a.depth, self.claimed_depth_value));
        }
        Ok(())
    }
}

/// Depth-0 network `x -> W x + b` from dense rows.
pub fn affine_net(weights: &[Vec<f64>], bias: Vec<f64>, input_dim: usize) -> Result<ReluNetwork> {
    let w = SparseMatrix::from_dense(weights, input_dim).ok_or_else(|| Error::invalid("ragged weight matrix"))?;
    ReluNetwork::new(input_dim, vec![Layer::new(w, bias)?])
}

fn layer(w: SparseMatrix, b: Vec<f64>) -> Layer {
    Layer::new(w, b).expect("calculus keeps layer shapes consistent")
}

fn assemble(input_dim: usize, layers: Vec<Layer>) -> ReluNetwork {
    ReluNetwork::new(input_dim, layers).expect("calculus keeps layer chains consistent")
}

/// Depth-`depth` network of width `2d` computing the identity on `R^d` via
/// `x = relu(x) - relu(-x)`. Exact in floating point.
pub fn identity_net(d: usize, depth: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    if d == 0 || depth == 0 {
        return Err(Error::invalid("identity network needs d >= 1 and depth >= 1"));
    }
    let id = SparseMatrix::identity(d);
    let neg = id.scaled(-1.0);
    let mut layers = vec![layer(SparseMatrix::vstack(&[&id, &neg]), vec![0.0; 2 * d])];
    for _ in 1..depth {
        layers.push(layer(SparseMatrix::identity(2 * d), vec![0.0; 2 * d]));
    }
    layers.push(layer(SparseMatrix::hstack(&[&id, &neg]), vec![0.0; d]));
    let net = assemble(d, layers);
    let cert = BoundCertificate::issue("identity", &net, 2 * d * (depth + 1), 2 * d, depth)?;
    Ok((net, cert))
}

/// Composition `net2 ∘ net1` merging the last layer of `net1` into the first
/// layer of `net2`.
pub fn compose(net2: &ReluNetwork, net1: &ReluNetwork) -> Result<(ReluNetwork, BoundCertificate)> {
    if net1.output_dim() != net2.input_dim() {
        return Err(Error::dims(
            "composition interface",
            net2.input_dim(),
            net1.output_dim(),
        ));
    }
    let (l1, l2) = (net1.layers(), net2.layers());
    let last1 = &l1[l1.len() - 1];
    let first2 = &l2[0];
    let w = first2.weights().matmul(last1.weights());
    let b = first2.weights().mul_vec_add(last1.bias(), first2.bias());
    let mut layers: Vec<Layer> = l1[..l1.len() - 1].to_vec();
    layers.push(layer(w, b));
    layers.extend_from_slice(&l2[1..]);
    let net = assemble(net1.input_dim(), layers);

    let (m1, m2) = (net1.metrics(), net2.metrics());
    let size_bound = m1.size + m2.size + (last1.input_dim() + 1) * first2.output_dim();
    let cert = BoundCertificate::issue(
        "composition",
        &net,
        size_bound,
        m1.width.max(m2.width),
        m1.depth + m2.depth,
    )?;
    Ok((net, cert))
}

/// Sparse composition `net2 • net1 = net2 ∘ Id ∘ net1`, which avoids the
/// product of the two adjacent weight matrices at the cost of one layer.
///
/// The width claim is `2 max(width1, width2, d)` with `d` the interface
/// dimension; the extra term only matters when the interface is wider than
/// both operands.
pub fn sparse_compose(net2: &ReluNetwork, net1: &ReluNetwork) -> Result<(ReluNetwork, BoundCertificate)> {
    let d = net1.output_dim();
    if d != net2.input_dim() {
        return Err(Error::dims("composition interface", net2.input_dim(), d));
    }
    let (l1, l2) = (net1.layers(), net2.layers());
    let last1 = &l1[l1.len() - 1];
    let first2 = &l2[0];
    let neg_w1 = last1.weights().scaled(-1.0);
    let b1: Vec<f64> = last1
        .bias()
        .iter()
        .copied()
        .chain(last1.bias().iter().map(|v| -v))
        .collect();
    let neg_w2 = first2.weights().scaled(-1.0);

    let mut layers: Vec<Layer> = l1[..l1.len() - 1].to_vec();
    layers.push(layer(SparseMatrix::vstack(&[last1.weights(), &neg_w1]), b1));
    layers.push(layer(
        SparseMatrix::hstack(&[first2.weights(), &neg_w2]),
        first2.bias().to_vec(),
    ));
    layers.extend_from_slice(&l2[1..]);
    let net = assemble(net1.input_dim(), layers);

    let (m1, m2) = (net1.metrics(), net2.metrics());
    let cert = BoundCertificate::issue(
        "sparse composition",
        &net,
        2 * (m1.size + m2.size),
        2 * m1.width.max(m2.width).max(d),
        m1.depth + m2.depth + 1,
    )?;
    Ok((net, cert))
}

struct Stacked {
    nets: Vec<ReluNetwork>,
    input_dim: usize,
    depth: usize,
    size_bound: usize,
    width_bound: usize,
}

/// Pads every operand to the common depth with `Id ∘ net` and computes the
/// bounds shared by parallelization and linear combination.
fn pad_operands(nets: &[ReluNetwork], shared: bool) -> Result<Stacked> {
    let first = nets.first().ok_or_else(|| Error::invalid("empty network list"))?;
    if shared {
        if let Some(bad) = nets.iter().find(|n| n.input_dim() != first.input_dim()) {
            return Err(Error::dims(
                "shared-input parallelization",
                first.input_dim(),
                bad.input_dim(),
            ));
        }
    }
    let depth = nets.iter().map(ReluNetwork::depth).max().unwrap_or(0);
    let mut padded = Vec::with_capacity(nets.len());
    let (mut size_bound, mut width_bound) = (0, 0);
    for net in nets {
        let m = net.metrics();
        let gap = depth - m.depth;
        size_bound += 2 * m.size + 2 * gap * net.output_dim();
        if gap == 0 {
            width_bound += 2 * m.width;
            padded.push(net.clone());
        } else {
            width_bound += 2 * m.width.max(net.output_dim());
            let (id, _) = identity_net(net.output_dim(), gap)?;
            padded.push(compose(&id, net)?.0);
        }
    }
    let input_dim = if shared {
        first.input_dim()
    } else {
        nets.iter().map(ReluNetwork::input_dim).sum()
    };
    Ok(Stacked {
        nets: padded,
        input_dim,
        depth,
        size_bound,
        width_bound,
    })
}

/// Layers `0..=depth` of the stacked operands, except that the final layer is
/// left to the caller.
fn stack_hidden(st: &Stacked, shared: bool) -> Vec<Layer> {
    let mut layers = Vec::with_capacity(st.depth + 1);
    for l in 0..st.depth {
        let ws: Vec<&SparseMatrix> = st.nets.iter().map(|n| n.layers()[l].weights()).collect();
        let w = if l == 0 && shared {
            SparseMatrix::vstack(&ws)
        } else {
            SparseMatrix::block_diag(&ws)
        };
        let b = st
            .nets
            .iter()
            .flat_map(|n| n.layers()[l].bias().iter().copied())
            .collect();
        layers.push(layer(w, b));
    }
    layers
}

/// Runs `nets` side by side. With `shared` all operands read the same input,
/// otherwise the input is the concatenation of the operands' inputs.
pub fn parallelize(nets: &[ReluNetwork], shared: bool) -> Result<(ReluNetwork, BoundCertificate)> {
    let st = pad_operands(nets, shared)?;
    let mut layers = stack_hidden(&st, shared);
    let l = st.depth;
    let ws: Vec<&SparseMatrix> = st.nets.iter().map(|n| n.layers()[l].weights()).collect();
    let w = if l == 0 && shared {
        SparseMatrix::vstack(&ws)
    } else {
        SparseMatrix::block_diag(&ws)
    };
    let b = st
        .nets
        .iter()
        .flat_map(|n| n.layers()[l].bias().iter().copied())
        .collect();
    layers.push(layer(w, b));
    let net = assemble(st.input_dim, layers);
    let cert = BoundCertificate::issue("parallelization", &net, st.size_bound, st.width_bound, st.depth)?;
    Ok((net, cert))
}

/// `Σ coeffs[j] * nets[j]` as a single network. Operands must share their
/// output dimension.
pub fn linear_combination(
    nets: &[ReluNetwork],
    coeffs: &[f64],
    shared: bool,
) -> Result<(ReluNetwork, BoundCertificate)> {
    if nets.len() != coeffs.len() {
        return Err(Error::dims("linear combination coefficients", nets.len(), coeffs.len()));
    }
    if coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("non-finite coefficient"));
    }
    let out = nets
        .first()
        .ok_or_else(|| Error::invalid("empty network list"))?
        .output_dim();
    if let Some(bad) = nets.iter().find(|n| n.output_dim() != out) {
        return Err(Error::dims("linear combination output", out, bad.output_dim()));
    }
    let st = pad_operands(nets, shared)?;
    let mut layers = stack_hidden(&st, shared);
    let l = st.depth;
    let mut entries = Vec::new();
    let mut bias = vec![0.0; out];
    // with depth 0 and a shared input the weights add up instead of stacking
    let add_up = l == 0 && shared;
    let mut offset = 0;
    for (net, &alpha) in st.nets.iter().zip(coeffs) {
        let last = &net.layers()[l];
        entries.extend(last.weights().triplets().map(|(r, c, v)| (r, c + offset, alpha * v)));
        for (b, v) in bias.iter_mut().zip(last.bias()) {
            *b += alpha * v;
        }
        if !add_up {
            offset += last.input_dim();
        }
    }
    let in_dim = if add_up { st.input_dim } else { offset };
    layers.push(layer(SparseMatrix::from_triplets(out, in_dim, entries), bias));
    let net = assemble(st.input_dim, layers);
    let cert = BoundCertificate::issue("linear combination", &net, st.size_bound, st.width_bound, st.depth)?;
    Ok((net, cert))
}

/// Largest number of copies [`bound_weights`] makes of one neuron.
pub const MAX_NEURON_COPIES: usize = 1 << 12;

/// Copy of `net` whose weights all have magnitude at most `w`, with the
/// same realization bit for bit. Also returns the largest number of copies
/// made of any neuron.
///
/// Rows of the first layer are scaled by powers of two (the ReLU is
/// positively homogeneous) and the next layer compensates. Every hidden
/// neuron whose outgoing weights exceed `w` is then split into `2^j` copies
/// that share those weights. Power-of-two factors keep every product and
/// sum exact. Only first-layer biases change.
pub fn bound_weights(net: &ReluNetwork, w: f64) -> Result<(ReluNetwork, usize)> {
    if !(w > 0.0 && w.is_finite()) {
        return Err(Error::invalid(format!("weight bound must be positive, got {w}")));
    }
    if net.depth() == 0 {
        if net.max_abs_weight() > w {
            return Err(Error::Precondition(format!(
                "an affine map with weight {} cannot be rewritten with weights <= {w}",
                net.max_abs_weight()
            )));
        }
        return Ok((net.clone(), 1));
    }
    let mut layers: Vec<Layer> = net.layers().to_vec();
    let first = &layers[0];
    let scale: Vec<f64> = (0..first.output_dim())
        .map(|r| {
            let top = first.weights().row(r).fold(0.0f64, |a, (_, v)| a.max(v.abs()));
            let mut c = 1.0;
            while top * c > w {
                c *= 0.5;
            }
            c
        })
        .collect();
    let rows = first.weights().triplets().map(|(r, c, v)| (r, c, v * scale[r]));
    let bias = first.bias().iter().zip(&scale).map(|(b, c)| b * c).collect();
    layers[0] = layer(
        SparseMatrix::from_triplets(first.output_dim(), first.input_dim(), rows),
        bias,
    );
    let mut max_copies = 1;
    for l in 1..layers.len() {
        let (prev, cur) = (&layers[l - 1], &layers[l]);
        let n = prev.output_dim();
        let unscale = |c: usize| if l == 1 { scale[c] } else { 1.0 };
        let entries: Vec<(usize, usize, f64)> = cur
            .weights()
            .triplets()
            .map(|(r, c, v)| (r, c, v / unscale(c)))
            .collect();
        let mut top = vec![0.0f64; n];
        for &(_, c, v) in &entries {
            top[c] = top[c].max(v.abs());
        }
        let mut copies = vec![1usize; n];
        for (k, t) in copies.iter_mut().zip(&top) {
            while *t > w * *k as f64 {
                *k *= 2;
            }
            if *k > MAX_NEURON_COPIES {
                return Err(Error::Precondition(format!(
                    "bounding weight {t} by {w} needs more than {MAX_NEURON_COPIES} copies of a neuron"
                )));
            }
            max_copies = max_copies.max(*k);
        }
        let mut offset = vec![0usize; n + 1];
        for c in 0..n {
            offset[c + 1] = offset[c] + copies[c];
        }
        let mut prev_rows = Vec::new();
        let mut prev_bias = Vec::with_capacity(offset[n]);
        for c in 0..n {
            for t in 0..copies[c] {
                prev_rows.extend(prev.weights().row(c).map(|(j, v)| (offset[c] + t, j, v)));
                prev_bias.push(prev.bias()[c]);
            }
        }
        let new_prev = layer(
            SparseMatrix::from_triplets(offset[n], prev.input_dim(), prev_rows),
            prev_bias,
        );
        let mut cur_entries = Vec::new();
        for &(r, c, v) in &entries {
            cur_entries.extend((0..copies[c]).map(|t| (r, offset[c] + t, v / copies[c] as f64)));
        }
        let new_cur = layer(
            SparseMatrix::from_triplets(cur.output_dim(), offset[n], cur_entries),
            cur.bias().to_vec(),
        );
        layers[l - 1] = new_prev;
        layers[l] = new_cur;
    }
    Ok((assemble(net.input_dim(), layers), max_copies))
}
