//! Quantitative approximators: the Hölder interpolant on a uniform Kuhn mesh,
//! the `C^{k,s}` partition-of-unity network and the optimal Lipschitz
//! reconstruction under the 1-norm.

mod cks;
mod holder;
pub mod kuhn;
mod lipschitz;
pub mod targets;

use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;

use crate::net::ReluNetwork;

pub use cks::{cks_net, multi_indices, CksReport, CksTarget};
pub use holder::{holder_interpolant, HolderReport, HolderTarget};
pub use lipschitz::{lipschitz_bounds, lipschitz_net, LipschitzBounds, LipschitzSample};
pub use targets::Builtin;

/// A scalar field on `R^d`.
pub type ScalarFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;
/// `(α, x) -> D^α f(x)`, `None` when the derivative is not available.
pub type DerivativeFn = Arc<dyn Fn(&[usize], &[f64]) -> Option<f64> + Send + Sync>;

/// Upper limit on grid points used by the default error sweeps.
pub const MAX_GRID_POINTS: usize = 40_000;

/// `n` equispaced points per axis on `[lo, hi]^d`, first coordinate fastest.
pub fn grid_points(d: usize, lo: f64, hi: f64, n: usize) -> Vec<Vec<f64>> {
    let n = n.max(2);
    let step = (hi - lo) / (n - 1) as f64;
    let axis: Vec<f64> = (0..n)
        .map(|i| if i + 1 == n { hi } else { lo + step * i as f64 })
        .collect();
    kuhn::lattice_points(d, n)
        .into_iter()
        .map(|nu| nu.into_iter().map(|i| axis[i]).collect())
        .collect()
}

/// Points per axis for the default sweep: `resolution` points per mesh
/// cell, capped at [`MAX_GRID_POINTS`] in total.
pub fn default_grid(d: usize, cells: usize, resolution: usize) -> usize {
    let cap = (MAX_GRID_POINTS as f64).powf(1.0 / d as f64).floor() as usize;
    (resolution * cells + 1).min(cap).max(2)
}

/// Largest `|f(x) - net(x)|` over `points` and the first point attaining it.
/// The reduction is order independent.
pub fn sup_error(net: &ReluNetwork, f: &(dyn Fn(&[f64]) -> f64 + Sync), points: &[Vec<f64>]) -> (f64, Vec<f64>) {
    let (err, idx) = points
        .par_iter()
        .enumerate()
        .map(|(i, x)| ((f(x) - net.eval1(x)).abs(), i))
        .reduce(
            || (f64::NEG_INFINITY, usize::MAX),
            |a, b| match a.0.total_cmp(&b.0) {
                std::cmp::Ordering::Greater => a,
                std::cmp::Ordering::Less => b,
                std::cmp::Ordering::Equal => {
                    if a.1 <= b.1 {
                        a
                    } else {
                        b
                    }
                }
            },
        );
    match points.get(idx) {
        Some(x) => (err, x.clone()),
        None => (0.0, Vec::new()),
    }
}

/// One row of an error table.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ErrorRow {
    pub x: Vec<f64>,
    pub f: f64,
    pub phi: f64,
    pub abs_error: f64,
}

/// `x, f(x), net(x), |f(x) - net(x)|` at every point, in input order.
pub fn error_table(net: &ReluNetwork, f: &(dyn Fn(&[f64]) -> f64 + Sync), points: &[Vec<f64>]) -> Vec<ErrorRow> {
    points
        .par_iter()
        .map(|x| {
            let fx = f(x);
            let phi = net.eval1(x);
            ErrorRow {
                x: x.clone(),
                f: fx,
                phi,
                abs_error: (fx - phi).abs(),
            }
        })
        .collect()
}
