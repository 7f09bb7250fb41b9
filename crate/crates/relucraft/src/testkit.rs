//! Oracles and fixtures shared by the test suites.
//!
//! The oracles are written directly from the closed-form definitions and do
//! not call into the constructions they check. The only shared helper is the
//! correctly rounded sum from [`crate::numeric`], which is treated as
//! primitive arithmetic.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::cpwl::{AffineMap, Cpwl1D};
use crate::net::{Layer, ReluNetwork, SparseMatrix};
use crate::numeric::exact_sum;

/// Tolerance tiers. Every comparison in the suites names one of these.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Tier {
    /// Bitwise equal values.
    Exact,
    /// Absolute difference at most `1e-12`.
    Tight,
    /// Absolute difference at most `1e-9`.
    Loose,
}

impl Tier {
    pub fn tol(self) -> f64 {
        match self {
            Tier::Exact => 0.0,
            Tier::Tight => 1e-12,
            Tier::Loose => 1e-9,
        }
    }

    pub fn accepts(self, got: f64, want: f64) -> bool {
        match self {
            Tier::Exact => got == want || (got.is_nan() && want.is_nan()),
            _ => (got - want).abs() <= self.tol(),
        }
    }

    /// `Err` with a message naming the tier when `got` and `want` differ.
    pub fn check(self, got: f64, want: f64, what: &str) -> Result<(), String> {
        if self.accepts(got, want) {
            Ok(())
        } else {
            Err(format!(
                "{what}: got {got}, want {want} (|diff| = {:e}, tier {self:?})",
                (got - want).abs()
            ))
        }
    }
}

/// Seeded generator used by all fixtures.
pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Forward pass written as a plain dense loop.
pub fn reference_eval(net: &ReluNetwork, x: &[f64]) -> Vec<f64> {
    let mut a = x.to_vec();
    let last = net.layers().len() - 1;
    for (l, layer) in net.layers().iter().enumerate() {
        let w = layer.weights().to_dense();
        let mut z = Vec::with_capacity(w.len());
        for (row, b) in w.iter().zip(layer.bias()) {
            let terms = row.iter().zip(&a).map(|(wij, aj)| wij * aj).chain(std::iter::once(*b));
            z.push(exact_sum(terms));
        }
        a = if l < last {
            z.into_iter().map(|v| if v > 0.0 { v } else { 0.0 }).collect()
        } else {
            z
        };
    }
    a
}

/// A dense random network with entries uniform in `[-1, 1]`. About a
/// quarter of the weights are zeroed to exercise sparse storage.
pub fn random_network(rng: &mut impl Rng, dims: &[usize]) -> ReluNetwork {
    assert!(dims.len() >= 2, "need input and output dimensions");
    let layers = dims
        .windows(2)
        .map(|w| {
            let entries: Vec<(usize, usize, f64)> = (0..w[1])
                .flat_map(|r| (0..w[0]).map(move |c| (r, c)))
                .filter_map(|(r, c)| {
                    let v: f64 = rng.gen_range(-1.0..1.0);
                    (rng.gen::<f64>() > 0.25).then_some((r, c, v))
                })
                .collect();
            let bias = (0..w[1]).map(|_| rng.gen_range(-1.0..1.0)).collect();
            Layer::new(SparseMatrix::from_triplets(w[1], w[0], entries), bias).expect("shapes chain")
        })
        .collect();
    ReluNetwork::new(dims[0], layers).expect("shapes chain")
}

/// Random dimensions `(d_0, ..., d_{L+1})` with `L <= max_depth` and all
/// entries in `1..=max_width`.
pub fn random_dims(rng: &mut impl Rng, max_depth: usize, max_width: usize, output: usize) -> Vec<usize> {
    let depth = rng.gen_range(0..=max_depth);
    let mut dims: Vec<usize> = (0..=depth).map(|_| rng.gen_range(1..=max_width)).collect();
    dims.push(output);
    dims
}

pub fn random_point(rng: &mut impl Rng, d: usize, lo: f64, hi: f64) -> Vec<f64> {
    (0..d).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Continuous random CPWL function with `1..=max_pieces` pieces, pairwise
/// distinct slopes from the grid `{-3, -2.75, ..., 3}` and breakpoints in
/// `[-1, 1]` at least `0.02` apart.
pub fn random_cpwl_1d(seed: u64, max_pieces: usize) -> Cpwl1D {
    assert!((1..=8).contains(&max_pieces), "max_pieces must lie in 1..=8");
    let mut rng = rng(seed);
    let pieces = rng.gen_range(1..=max_pieces);
    let mut slope_grid: Vec<f64> = (-12..=12).map(|k| k as f64 * 0.25).collect();
    slope_grid.shuffle(&mut rng);
    let slopes = &slope_grid[..pieces];
    let breakpoints = loop {
        let mut b: Vec<f64> = (1..pieces).map(|_| rng.gen_range(-1.0..1.0)).collect();
        b.sort_by(f64::total_cmp);
        if b.windows(2).all(|w| w[1] - w[0] >= 0.02) {
            break b;
        }
    };
    let mut offset = rng.gen_range(-1.0..1.0);
    let mut maps = vec![AffineMap::new(vec![slopes[0]], offset)];
    for (i, &x) in breakpoints.iter().enumerate() {
        // continuity at x: s_i x + c_i = s_{i+1} x + c_{i+1}
        offset += (slopes[i] - slopes[i + 1]) * x;
        maps.push(AffineMap::new(vec![slopes[i + 1]], offset));
    }
    Cpwl1D::from_pieces(breakpoints, maps).expect("continuous by construction")
}

/// Pieces of `f` restricted to `[a, b]` counted from slope changes.
pub fn cpwl_pieces_on(f: &Cpwl1D, a: f64, b: f64) -> usize {
    1 + f
        .breakpoints
        .iter()
        .zip(f.pieces.windows(2))
        .filter(|(&x, p)| x > a && x < b && p[0].w[0] != p[1].w[0])
        .count()
}

pub fn square(x: f64) -> f64 {
    x * x
}

pub fn product(xs: &[f64]) -> f64 {
    xs.iter().product()
}

pub fn min(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn max(xs: &[f64]) -> f64 {
    xs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

/// `h_n(x)` on `[0, 1]`: the unit hat applied to the fractional part of
/// `2^{n-1} x`.
pub fn sawtooth(n: usize, x: f64) -> f64 {
    let y = x * 2f64.powi(n as i32 - 1);
    let f = y - y.floor();
    if f <= 0.5 {
        2.0 * f
    } else {
        2.0 - 2.0 * f
    }
}

/// Piecewise linear interpolant of `x^2` at the nodes `k 2^{-n}`, on `[0, 1]`.
pub fn square_interpolant(n: usize, x: f64) -> f64 {
    let cells = 2f64.powi(n as i32);
    let k = (x * cells).floor().clamp(0.0, cells - 1.0);
    let (x0, x1) = (k / cells, (k + 1.0) / cells);
    let t = (x - x0) / (x1 - x0);
    (1.0 - t) * x0 * x0 + t * x1 * x1
}

/// Piecewise linear interpolant of `f` at the nodes `j/m`, `j = 0..=m`, on
/// `[0, 1]`.
pub fn interpolant_1d(f: &dyn Fn(f64) -> f64, m: usize, x: f64) -> f64 {
    let k = (x * m as f64).floor().clamp(0.0, m as f64 - 1.0);
    let (x0, x1) = (k / m as f64, (k + 1.0) / m as f64);
    let t = (x - x0) / (x1 - x0);
    (1.0 - t) * f(x0) + t * f(x1)
}

/// `Σ_j max(0, 1 - |m x - j|) p_j(x)` on `[0, 1]` where `p_j` is the Taylor
/// polynomial of order `k` at `j/m`; `deriv(i, x)` is the `i`-th derivative.
pub fn taylor_partition_1d(deriv: &dyn Fn(usize, f64) -> f64, k: usize, m: usize, x: f64) -> f64 {
    let mut terms = Vec::new();
    for j in 0..=m {
        let c = j as f64 / m as f64;
        let phi = (1.0 - (m as f64 * x - j as f64).abs()).max(0.0);
        if phi == 0.0 {
            continue;
        }
        let mut fact = 1.0;
        for i in 0..=k {
            if i > 0 {
                fact *= i as f64;
            }
            terms.push(phi * deriv(i, c) / fact * (x - c).powi(i as i32));
        }
    }
    exact_sum(terms)
}

/// Solves `A y = rhs` by Gaussian elimination with partial pivoting.
fn solve(mut a: Vec<Vec<f64>>, mut rhs: Vec<f64>) -> Option<Vec<f64>> {
    let n = rhs.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-300 {
            return None;
        }
        a.swap(col, pivot);
        rhs.swap(col, pivot);
        let (top, rest) = a.split_at_mut(col + 1);
        let pivot_row = &top[col];
        for (r, row) in rest.iter_mut().enumerate() {
            let factor = row[col] / pivot_row[col];
            for (x, p) in row[col..].iter_mut().zip(&pivot_row[col..]) {
                *x -= factor * p;
            }
            rhs[col + 1 + r] -= factor * rhs[col];
        }
    }
    let mut y = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * y[c]).sum();
        y[r] = (rhs[r] - s) / a[r][r];
    }
    Some(y)
}

/// Value at `x` of the nodal interpolant on a simplicial mesh, found by
/// trying every simplex. `None` outside the mesh.
pub fn barycentric_oracle(vertices: &[Vec<f64>], simplices: &[Vec<usize>], values: &[f64], x: &[f64]) -> Option<f64> {
    let d = x.len();
    for s in simplices {
        // columns v_i - v_0, right-hand side x - v_0
        let v0 = &vertices[s[0]];
        let a: Vec<Vec<f64>> = (0..d)
            .map(|r| (1..=d).map(|c| vertices[s[c]][r] - v0[r]).collect())
            .collect();
        let rhs: Vec<f64> = (0..d).map(|r| x[r] - v0[r]).collect();
        let Some(mu) = solve(a, rhs) else { continue };
        let lambda0 = 1.0 - mu.iter().sum::<f64>();
        if lambda0 >= -1e-12 && mu.iter().all(|&m| m >= -1e-12) {
            let mut v = lambda0 * values[s[0]];
            for (i, m) in mu.iter().enumerate() {
                v += m * values[s[i + 1]];
            }
            return Some(v);
        }
    }
    None
}

/// `(upper, lower, mid)` of the optimal Lipschitz reconstruction under the
/// 1-norm.
pub fn lipschitz_envelopes(points: &[Vec<f64>], values: &[f64], m: f64, x: &[f64]) -> (f64, f64, f64) {
    let cones: Vec<f64> = points
        .iter()
        .map(|p| m * p.iter().zip(x).map(|(a, b)| (a - b).abs()).sum::<f64>())
        .collect();
    let upper = values
        .iter()
        .zip(&cones)
        .map(|(y, c)| y + c)
        .fold(f64::INFINITY, f64::min);
    let lower = values
        .iter()
        .zip(&cones)
        .map(|(y, c)| y - c)
        .fold(f64::NEG_INFINITY, f64::max);
    (upper, lower, (upper + lower) / 2.0)
}
