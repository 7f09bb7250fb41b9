use std::sync::Arc;

use serde::Serialize;

use super::kuhn::kuhn_mesh;
use super::{default_grid, grid_points, sup_error, Builtin, ScalarFn};
use crate::net::ReluNetwork;
use crate::simplicial::compile_mesh;
use crate::{Error, Result};

/// A target in `C^{0,s}([0, 1]^d)` with a bound on its Hölder norm.
#[derive(Clone)]
pub struct HolderTarget {
    pub f: ScalarFn,
    pub s: f64,
    pub holder_norm_bound: f64,
}

impl HolderTarget {
    pub fn new(f: ScalarFn, s: f64, holder_norm_bound: f64) -> Result<Self> {
        if !(s > 0.0 && s <= 1.0) {
            return Err(Error::invalid(format!("Hölder exponent must lie in (0, 1], got {s}")));
        }
        if !(holder_norm_bound > 0.0 && holder_norm_bound.is_finite()) {
            return Err(Error::invalid(format!(
                "Hölder norm bound must be positive, got {holder_norm_bound}"
            )));
        }
        Ok(HolderTarget {
            f,
            s,
            holder_norm_bound,
        })
    }

    /// A built-in target with the registry's norm bound, or `bound` if given.
    pub fn builtin(target: Builtin, d: usize, s: f64, bound: Option<f64>) -> Result<Self> {
        let bound = match bound {
            Some(b) => b,
            None => target
                .holder_norm_bound(d, s)
                .ok_or_else(|| Error::invalid(format!("target '{target}' has no known C^(0,{s}) norm bound")))?,
        };
        HolderTarget::new(Arc::new(move |x: &[f64]| target.eval(x)), s, bound)
    }
}

impl std::fmt::Debug for HolderTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("HolderTarget")
            .field("s", &self.s)
            .field("holder_norm_bound", &self.holder_norm_bound)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct HolderReport {
    pub dim: usize,
    pub resolution: usize,
    pub s: f64,
    pub holder_norm_bound: f64,
    /// `2 d^{s/2} ‖f‖ M^{-s}`.
    pub bound: f64,
    /// Sup error over the grid on `[0, 1]^d`.
    pub measured_sup_error: f64,
    pub worst_point: Vec<f64>,
    pub grid_per_axis: usize,
}

/// Nodal interpolant of `f` on the Kuhn mesh of `[-1/M, 1 + 1/M]^d` with
/// nodes `ν/M`, `ν ∈ {-1..M+1}^d`. Nodes inside `[0, 1]^d` carry `f(ν/M)` and
/// the padding layer carries 0, so the mesh compiler applies. The error is
/// measured on `[0, 1]^d`.
pub fn holder_interpolant(target: &HolderTarget, d: usize, m: usize) -> Result<(ReluNetwork, HolderReport)> {
    if m < 2 {
        return Err(Error::invalid(format!("mesh resolution must be at least 2, got {m}")));
    }
    if d == 0 {
        return Err(Error::invalid("dimension must be positive"));
    }
    let h = 1.0 / m as f64;
    let f = &target.f;
    let km = kuhn_mesh(d, m + 2, &vec![-h; d], h, |nu, _| {
        if nu.iter().any(|&k| k == 0 || k == m + 2) {
            0.0
        } else {
            let x: Vec<f64> = nu.iter().map(|&k| (k - 1) as f64 / m as f64).collect();
            f(&x)
        }
    })?;
    let (net, _) = compile_mesh(&km.mesh)?;
    let grid = default_grid(d, m, 32);
    let points = grid_points(d, 0.0, 1.0, grid);
    let (err, worst) = sup_error(&net, f.as_ref(), &points);
    let bound = 2.0 * (d as f64).powf(target.s / 2.0) * target.holder_norm_bound * (m as f64).powf(-target.s);
    let report = HolderReport {
        dim: d,
        resolution: m,
        s: target.s,
        holder_norm_bound: target.holder_norm_bound,
        bound,
        measured_sup_error: err,
        worst_point: worst,
        grid_per_axis: grid,
    };
    Ok((net, report))
}
