use std::sync::Arc;

use serde::Serialize;

use super::kuhn::{kuhn_mesh, lattice_points};
use super::{default_grid, grid_points, sup_error, Builtin, DerivativeFn};
use crate::calculus::{affine_net, compose, linear_combination, parallelize};
use crate::net::{ReluNetwork, SparseMatrix};
use crate::simplicial::hat_basis_nets;
use crate::yarotsky::{mult_net, multn_net};
use crate::{Error, Result};

/// A target in `C^{k,s}([0, 1]^d)` given through its derivatives up to
/// order `k`, with a bound on its `C^{k,s}` norm.
#[derive(Clone)]
pub struct CksTarget {
    pub derivatives: DerivativeFn,
    pub k: usize,
    pub s: f64,
    pub norm_bound: f64,
}

impl CksTarget {
    pub fn new(derivatives: DerivativeFn, k: usize, s: f64, norm_bound: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&s) {
            return Err(Error::invalid(format!("Hölder exponent must lie in [0, 1], got {s}")));
        }
        if !(norm_bound > 0.0 && norm_bound.is_finite()) {
            return Err(Error::invalid(format!("norm bound must be positive, got {norm_bound}")));
        }
        Ok(CksTarget {
            derivatives,
            k,
            s,
            norm_bound,
        })
    }

    /// A built-in target with the registry's norm bound, or `bound` if given.
    pub fn builtin(target: Builtin, d: usize, k: usize, s: f64, bound: Option<f64>) -> Result<Self> {
        let bound = match bound {
            Some(b) => b,
            None => target
                .cks_norm_bound(d, k, s)
                .ok_or_else(|| Error::invalid(format!("target '{target}' has no known C^({k},{s}) norm bound")))?,
        };
        CksTarget::new(
            Arc::new(move |a: &[usize], x: &[f64]| target.derivative(a, x)),
            k,
            s,
            bound,
        )
    }

    fn value(&self, x: &[f64]) -> f64 {
        (self.derivatives)(&vec![0; x.len()], x).unwrap_or(f64::NAN)
    }
}

impl std::fmt::Debug for CksTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CksTarget")
            .field("k", &self.k)
            .field("s", &self.s)
            .field("norm_bound", &self.norm_bound)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct CksReport {
    pub dim: usize,
    pub k: usize,
    pub s: f64,
    pub n: usize,
    /// Mesh resolution `M`, the smallest integer with `M^d >= N`.
    pub resolution: usize,
    /// Gadget accuracy `N^{-(k+s)/d}`.
    pub epsilon: f64,
    pub norm_bound: f64,
    /// Factor `λ` applied to `f` before the construction; the network output
    /// is divided by it again.
    pub prescale: f64,
    /// Sup error of the network for `λ f` over the grid on `[0, 1]^d`.
    pub measured_sup_error: f64,
    /// `M^{-(k+s)} + (d + 2) ε`, valid for `λ f`.
    pub bound: f64,
    /// Sup error of the returned network for `f` itself.
    pub unscaled_sup_error: f64,
    pub grid_per_axis: usize,
}

/// Multi-indices `α ∈ N_0^d` with `|α| <= k` in graded lexicographic order:
/// by total degree, then descending in the first differing entry.
pub fn multi_indices(d: usize, k: usize) -> Vec<Vec<usize>> {
    fn fill(prefix: &mut Vec<usize>, left: usize, d: usize, out: &mut Vec<Vec<usize>>) {
        if prefix.len() + 1 == d {
            prefix.push(left);
            out.push(prefix.clone());
            prefix.pop();
            return;
        }
        for a in (0..=left).rev() {
            prefix.push(a);
            fill(prefix, left - a, d, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    for degree in 0..=k {
        fill(&mut Vec::with_capacity(d), degree, d, &mut out);
    }
    out
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|i| i as f64).product()
}

/// Smallest `M >= 1` with `M^d >= n`.
fn resolution_for(n: usize, d: usize) -> usize {
    let mut m = (n as f64).powf(1.0 / d as f64).floor().max(1.0) as usize;
    while (m as f64).powi(d as i32) < n as f64 {
        m += 1;
    }
    m
}

/// `x -> (x_{i_1} - c_1, ..., x_{i_k} - c_k)` for the sorted index list of `α`.
fn centered_selection(alpha: &[usize], center: &[f64]) -> Result<ReluNetwork> {
    let picks: Vec<usize> = alpha
        .iter()
        .enumerate()
        .flat_map(|(i, &a)| std::iter::repeat_n(i, a))
        .collect();
    let w = SparseMatrix::from_triplets(
        picks.len(),
        alpha.len(),
        picks.iter().enumerate().map(|(r, &c)| (r, c, 1.0)),
    );
    ReluNetwork::affine(w, picks.iter().map(|&i| -center[i]).collect())
}

/// Partition-of-unity network `Σ_ν ×_ε(φ_ν, p̂_ν)` over the nodes
/// `ν ∈ {0..M}^d`, where `φ_ν` are hat functions of the Kuhn mesh with nodes
/// `ν/M` (padded by one layer so that every node is interior) and `p̂_ν` is
/// the local Taylor polynomial of order `k` at `ν/M` with products replaced
/// by product networks of accuracy `ε`.
///
/// When `max{d^{k+1/2}/k!, e^d} ‖f‖` exceeds one, `f` is first multiplied by
/// the reciprocal `λ` and the output is divided by `λ`.
pub fn cks_net(target: &CksTarget, d: usize, n: usize) -> Result<(ReluNetwork, CksReport)> {
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    if n < 2 {
        return Err(Error::invalid(format!("N must be at least 2, got {n}")));
    }
    let k = target.k;
    if k == 0 && target.s == 0.0 {
        return Err(Error::invalid("k + s must be positive"));
    }
    let m = resolution_for(n, d);
    let eps = (n as f64).powf(-(k as f64 + target.s) / d as f64);
    let scale_factor = (d as f64).powf(k as f64 + 0.5) / factorial(k);
    let normalizer = scale_factor.max((d as f64).exp()) * target.norm_bound;
    let lambda = if normalizer > 1.0 { 1.0 / normalizer } else { 1.0 };

    let alphas = multi_indices(d, k);
    let h = 1.0 / m as f64;
    let km = kuhn_mesh(d, m + 2, &vec![-h; d], h, |_, _| 0.0)?;
    let nodes = lattice_points(d, m + 1);
    let mesh_nodes: Vec<usize> = nodes
        .iter()
        .map(|nu| km.node_index(&nu.iter().map(|&k| k + 1).collect::<Vec<_>>()))
        .collect();
    let hats = hat_basis_nets(&km.mesh, &mesh_nodes)?;

    let (mult, _) = mult_net(eps)?;
    let products: Vec<Option<ReluNetwork>> = (0..=k)
        .map(|j| {
            if j >= 2 {
                multn_net(j, eps).map(|(p, _)| Some(p))
            } else {
                Ok(None)
            }
        })
        .collect::<Result<_>>()?;

    let mut terms = Vec::with_capacity(nodes.len());
    for (nu, (hat, _)) in nodes.iter().zip(hats) {
        let center: Vec<f64> = nu.iter().map(|&k| k as f64 / m as f64).collect();
        let mut affine_w = vec![0.0; d];
        let mut affine_b = 0.0;
        let mut parts = Vec::new();
        let mut coeffs = Vec::new();
        for alpha in &alphas {
            let deriv = (target.derivatives)(alpha, &center).ok_or_else(|| {
                Error::invalid(format!("derivative of order {alpha:?} is not available at {center:?}"))
            })?;
            if !deriv.is_finite() {
                return Err(Error::invalid(format!(
                    "derivative of order {alpha:?} is not finite at {center:?}"
                )));
            }
            let c = lambda * deriv / alpha.iter().map(|&a| factorial(a)).product::<f64>();
            let order: usize = alpha.iter().sum();
            match order {
                0 => affine_b += c,
                1 => {
                    let i = alpha.iter().position(|&a| a == 1).expect("order one");
                    affine_w[i] += c;
                    affine_b -= c * center[i];
                }
                _ if c != 0.0 => {
                    let product = products[order].as_ref().expect("built for every order >= 2");
                    parts.push(compose(product, &centered_selection(alpha, &center)?)?.0);
                    coeffs.push(c);
                }
                _ => {}
            }
        }
        parts.insert(0, affine_net(&[affine_w], vec![affine_b], d)?);
        coeffs.insert(0, 1.0);
        let (p_hat, _) = linear_combination(&parts, &coeffs, true)?;
        let (pair, _) = parallelize(&[hat, p_hat], true)?;
        terms.push(compose(&mult, &pair)?.0);
    }
    let (normalized, _) = linear_combination(&terms, &vec![1.0; terms.len()], true)?;

    let grid = default_grid(d, m, 16);
    let points = grid_points(d, 0.0, 1.0, grid);
    let scaled_target = |x: &[f64]| lambda * target.value(x);
    let (err, _) = sup_error(&normalized, &scaled_target, &points);
    let net = if lambda == 1.0 {
        normalized
    } else {
        compose(&affine_net(&[vec![1.0 / lambda]], vec![0.0], 1)?, &normalized)?.0
    };
    let (unscaled, _) = sup_error(&net, &|x: &[f64]| target.value(x), &points);
    let report = CksReport {
        dim: d,
        k,
        s: target.s,
        n,
        resolution: m,
        epsilon: eps,
        norm_bound: target.norm_bound,
        prescale: lambda,
        measured_sup_error: err,
        bound: (m as f64).powf(-(k as f64 + target.s)) + (d as f64 + 2.0) * eps,
        unscaled_sup_error: unscaled,
        grid_per_axis: grid,
    };
    Ok((net, report))
}
