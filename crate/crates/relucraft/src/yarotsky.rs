//! Sawtooth, square, multiplication, product and polynomial networks.
//!
//! `h_1(x) = relu(2x) - relu(4x - 2)` is the unit hat on `[0, 1]` and `h_n` its
//! `n`-fold composition. `s_n(x) = x - Σ_{j≤n} h_j(x) / 4^j` is the piecewise
//! linear interpolant of `x^2` at the nodes `k 2^{-n}`, with error at most
//! `2^{-2n-1}`. Products follow from `xy = ((x+y)/2)^2 - ((x-y)/2)^2`.

use serde::Serialize;

use crate::calculus::{affine_net, compose, linear_combination, parallelize, BoundCertificate};
use crate::minmax::ceil_log2;
use crate::net::{Layer, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// Accuracy target of a multiplication gadget.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ErrorBudget {
    pub epsilon: f64,
    /// Number of square-approximation levels, `⌈|log4 ε|⌉`.
    pub n_levels: usize,
    /// Inputs are assumed to lie in `[-r, r]^2`.
    pub domain_radius: f64,
}

impl ErrorBudget {
    pub fn new(epsilon: f64) -> Result<Self> {
        check_eps(epsilon)?;
        let n = (epsilon.ln() / 4f64.ln()).abs().ceil() as usize;
        Ok(ErrorBudget {
            epsilon,
            n_levels: n.max(1),
            domain_radius: 1.0,
        })
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if eps.is_finite() && eps > 0.0 && eps < 1.0 {
        Ok(())
    } else {
        Err(Error::invalid(format!("epsilon must lie in (0, 1), got {eps}")))
    }
}

fn hat() -> ReluNetwork {
    let l0 = Layer::dense(&[vec![2.0], vec![4.0]], vec![0.0, -2.0]).expect("fixed shape");
    let l1 = Layer::dense(&[vec![1.0, -1.0]], vec![0.0]).expect("fixed shape");
    ReluNetwork::new(1, vec![l0, l1]).expect("fixed shape")
}

/// The sawtooth `h_n`: depth `n`, width 2, `2^n` pieces on `[0, 1]`.
pub fn sawtooth_net(n: usize) -> Result<ReluNetwork> {
    if n == 0 {
        return Err(Error::invalid("sawtooth order must be at least 1"));
    }
    let h1 = hat();
    let mut net = h1.clone();
    for _ in 1..n {
        net = compose(&h1, &net)?.0;
    }
    Ok(net)
}

/// The square interpolant `s_n` as a width-3 network of depth `n`.
///
/// Hidden units carry `(relu(s_{j-1}), relu(2 h_{j-1}), relu(4 h_{j-1} - 2))`,
/// so that `s_j = relu(s_{j-1}) - h_j / 4^j` with `h_j` the difference of the
/// last two units. The size is `8n - 1`.
pub fn square_net(n: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    if n == 0 {
        return Err(Error::invalid("square approximation order must be at least 1"));
    }
    let mut layers = vec![Layer::dense(&[vec![1.0], vec![2.0], vec![4.0]], vec![0.0, 0.0, -2.0])?];
    let mut scale = 0.25;
    for _ in 1..n {
        layers.push(Layer::dense(
            &[vec![1.0, -scale, scale], vec![0.0, 2.0, -2.0], vec![0.0, 4.0, -4.0]],
            vec![0.0, 0.0, -2.0],
        )?);
        scale *= 0.25;
    }
    layers.push(Layer::dense(&[vec![1.0, -scale, scale]], vec![0.0])?);
    let net = ReluNetwork::new(1, layers)?;
    let cert = BoundCertificate::issue(format!("s_{n}"), &net, 8 * n - 1, 3, n)?;
    Ok((net, cert))
}

/// `(x, y) -> (relu(a) + relu(-a)) / 2` with `a = x + sign * y`.
fn half_abs(sign: f64) -> ReluNetwork {
    let l0 = Layer::dense(&[vec![1.0, sign], vec![-1.0, -sign]], vec![0.0; 2]).expect("fixed shape");
    let l1 = Layer::dense(&[vec![0.5, 0.5]], vec![0.0]).expect("fixed shape");
    ReluNetwork::new(2, vec![l0, l1]).expect("fixed shape")
}

/// Approximate product on `[-1, 1]^2` with sup error at most `eps`.
///
/// Exactly zero whenever one argument is zero, and the output stays in
/// `[-1, 1]`. Depth is `1 + ⌈|log4 eps|⌉`.
pub fn mult_net(eps: f64) -> Result<(ReluNetwork, BoundCertificate)> {
    let budget = ErrorBudget::new(eps)?;
    let (sq, _) = square_net(budget.n_levels)?;
    let (plus, _) = compose(&sq, &half_abs(1.0))?;
    let (minus, _) = compose(&sq, &half_abs(-1.0))?;
    let (net, lc) = linear_combination(&[plus, minus], &[1.0, -1.0], true)?;
    let cert = BoundCertificate::issue(
        format!("mult(eps={eps})"),
        &net,
        lc.claimed_size_bound,
        lc.claimed_width_bound,
        1 + budget.n_levels,
    )?;
    Ok((net, cert))
}

fn product_tree(n: usize, block: &ReluNetwork) -> Result<ReluNetwork> {
    if n == 1 {
        return Ok(ReluNetwork::affine_identity(1));
    }
    let lo = product_tree(n / 2, block)?;
    let hi = product_tree(n - n / 2, block)?;
    let (pair, _) = parallelize(&[lo, hi], false)?;
    Ok(compose(block, &pair)?.0)
}

/// Approximate product of `n` numbers in `[-1, 1]` with sup error at most
/// `eps`, as a binary tree of [`mult_net`] blocks with accuracy `eps / n`.
pub fn multn_net(n: usize, eps: f64) -> Result<(ReluNetwork, BoundCertificate)> {
    if n < 2 {
        return Err(Error::invalid("product network needs at least two factors"));
    }
    check_eps(eps)?;
    let delta = eps / n as f64;
    let (block, _) = mult_net(delta)?;
    let net = product_tree(n, &block)?;
    let depth = ceil_log2(n) * block.depth();
    // every internal node costs one block plus padding identities of width 2
    let size_bound = (n - 1) * (2 * block.size() + 4 * block.depth() + 8);
    let cert = BoundCertificate::issue(
        format!("mult_{n}(eps={eps})"),
        &net,
        size_bound,
        n * block.width().max(2),
        depth,
    )?;
    Ok((net, cert))
}

/// A polynomial network together with its measured accuracy.
#[derive(Clone, Debug, Serialize)]
pub struct PolynomialReport {
    pub epsilon: f64,
    /// Sup error over 2001 equispaced points of `[-1, 1]`.
    pub measured_sup_error: f64,
    /// `eps * Σ|c_j|`, the scale of the error bound.
    pub error_scale: f64,
    /// `measured_sup_error / error_scale`: the empirical constant.
    pub measured_constant: f64,
}

fn horner(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, c| acc * x + c)
}

fn select(dim: usize, picks: &[usize]) -> Result<ReluNetwork> {
    let w = SparseMatrix::from_triplets(picks.len(), dim, picks.iter().enumerate().map(|(r, &c)| (r, c, 1.0)));
    ReluNetwork::affine(w, vec![0.0; picks.len()])
}

/// Network `x -> (x, x^2, ..., x^n)` on `[-1, 1]` built level by level: at
/// each level the existing powers are carried and the next ones are products
/// of the highest available power with a lower one.
fn monomials(n: usize, eps: f64) -> Result<ReluNetwork> {
    let (mult, _) = mult_net(eps)?;
    let mut net = ReluNetwork::affine_identity(1);
    let mut have = 1;
    while have < n {
        let next = (2 * have).min(n);
        let mut parts = vec![select(have, &(0..have).collect::<Vec<_>>())?];
        for j in have + 1..=next {
            // x^j = x^have * x^(j - have)
            let pick = select(have, &[have - 1, j - have - 1])?;
            parts.push(compose(&mult, &pick)?.0);
        }
        let (level, _) = parallelize(&parts, true)?;
        net = compose(&level, &net)?.0;
        have = next;
    }
    Ok(net)
}

/// Approximates `Σ c_j x^j` on `[-1, 1]`. Degrees below two are realized
/// exactly by an affine map.
pub fn polynomial_net(coeffs: &[f64], eps: f64) -> Result<(ReluNetwork, PolynomialReport)> {
    check_eps(eps)?;
    if coeffs.is_empty() || coeffs.iter().any(|c| !c.is_finite()) {
        return Err(Error::invalid("polynomial needs finite coefficients c_0..c_n"));
    }
    let degree = coeffs.iter().rposition(|&c| c != 0.0).unwrap_or(0);
    let net = if degree < 2 {
        affine_net(&[vec![coeffs.get(1).copied().unwrap_or(0.0)]], vec![coeffs[0]], 1)?
    } else {
        let mono = monomials(degree, eps)?;
        let out = affine_net(&[coeffs[1..=degree].to_vec()], vec![coeffs[0]], degree)?;
        compose(&out, &mono)?.0
    };
    let measured = (0..=2000)
        .map(|i| {
            let x = -1.0 + i as f64 / 1000.0;
            (net.eval1(&[x]) - horner(coeffs, x)).abs()
        })
        .fold(0.0, f64::max);
    let scale = eps * coeffs.iter().map(|c| c.abs()).sum::<f64>();
    let report = PolynomialReport {
        epsilon: eps,
        measured_sup_error: measured,
        error_scale: scale,
        measured_constant: if scale > 0.0 { measured / scale } else { 0.0 },
    };
    Ok((net, report))
}
