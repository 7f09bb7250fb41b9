//! Exact minimum and maximum networks.
//!
//! `min{x, y} = relu(y) - relu(-y) - relu(y - x)` gives a depth-1, width-3,
//! size-7 network. The `n`-input minimum is a binary tree of these blocks,
//! splitting the inputs into the first `⌊n/2⌋` and the last `⌈n/2⌉`.

use crate::calculus::{compose, identity_net, parallelize, BoundCertificate};
use crate::net::{Layer, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

fn two_input(output_sign: f64) -> ReluNetwork {
    // hidden units: relu(y), relu(-y), relu(s (x - y)); s = -1 for min, +1 for max
    let s = output_sign;
    let l0 = Layer::dense(&[vec![0.0, 1.0], vec![0.0, -1.0], vec![s, -s]], vec![0.0; 3]).expect("fixed shape");
    let l1 = Layer::dense(&[vec![1.0, -1.0, s]], vec![0.0]).expect("fixed shape");
    ReluNetwork::new(2, vec![l0, l1]).expect("fixed shape")
}

/// `(x, y) -> min{x, y}`.
pub fn min2_net() -> ReluNetwork {
    two_input(-1.0)
}

/// `(x, y) -> max{x, y}`.
pub fn max2_net() -> ReluNetwork {
    two_input(1.0)
}

/// `⌈log2 n⌉` for `n >= 1`.
pub fn ceil_log2(n: usize) -> usize {
    assert!(n >= 1, "ceil_log2 of 0");
    (usize::BITS - (n - 1).leading_zeros()) as usize
}

fn min_tree(n: usize) -> Result<ReluNetwork> {
    if n == 1 {
        return Ok(ReluNetwork::affine_identity(1));
    }
    let lo = min_tree(n / 2)?;
    let hi = min_tree(n - n / 2)?;
    let left = if lo.depth() < hi.depth() {
        // n = 2^k + 1: the short half is lifted by one identity layer
        let (id, _) = identity_net(1, hi.depth() - lo.depth())?;
        compose(&id, &lo)?.0
    } else {
        lo
    };
    let (pair, _) = parallelize(&[left, hi], false)?;
    Ok(compose(&min2_net(), &pair)?.0)
}

/// Network computing the exact minimum of `n` scalars, with depth
/// `⌈log2 n⌉`, width at most `3n` and size at most `16n`. For `n = 1` this is
/// the depth-0 identity.
pub fn minn_net(n: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    if n == 0 {
        return Err(Error::invalid("min network needs at least one input"));
    }
    let net = min_tree(n)?;
    let cert = BoundCertificate::issue(format!("min_{n}"), &net, 16 * n, 3 * n, ceil_log2(n))?;
    Ok((net, cert))
}

/// Maximum of `n` scalars as `-min(-x)`, with the same bounds as [`minn_net`].
pub fn maxn_net(n: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    let (min, _) = minn_net(n)?;
    let neg_in = ReluNetwork::affine(SparseMatrix::identity(n).scaled(-1.0), vec![0.0; n])?;
    let neg_out = ReluNetwork::affine(SparseMatrix::identity(1).scaled(-1.0), vec![0.0])?;
    let (inner, _) = compose(&min, &neg_in)?;
    let (net, _) = compose(&neg_out, &inner)?;
    let cert = BoundCertificate::issue(format!("max_{n}"), &net, 16 * n, 3 * n, ceil_log2(n))?;
    Ok((net, cert))
}
