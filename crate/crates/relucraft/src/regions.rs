//! Linear pieces of a network restricted to a segment, the `(2 width)^L`
//! piece bound and the random-bias expected-pieces experiment.
//!
//! The counter sweeps the segment layer by layer. Knots are kept where some
//! pre-activation of an earlier layer changes sign; between consecutive
//! knots every layer is affine in the segment parameter, so new sign changes
//! are found by linear interpolation of the knot values. Adjacent intervals
//! with equal slopes are merged at the end.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::net::{relu, Layer, ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// The segment `t -> a + t (b - a)`, `t ∈ [0, 1]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Segment {
    a: Vec<f64>,
    b: Vec<f64>,
}

impl Segment {
    pub fn new(a: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if a.is_empty() || a.len() != b.len() {
            return Err(Error::dims("segment end point", a.len(), b.len()));
        }
        if a.iter().chain(&b).any(|v| !v.is_finite()) {
            return Err(Error::invalid("segment end points must be finite"));
        }
        if a == b {
            return Err(Error::invalid("segment end points must differ"));
        }
        Ok(Segment { a, b })
    }

    pub fn start(&self) -> &[f64] {
        &self.a
    }

    pub fn end(&self) -> &[f64] {
        &self.b
    }

    pub fn dim(&self) -> usize {
        self.a.len()
    }

    pub fn point(&self, t: f64) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| a + t * (b - a)).collect()
    }

    pub fn direction(&self) -> Vec<f64> {
        self.a.iter().zip(&self.b).map(|(a, b)| b - a).collect()
    }

    pub fn length(&self) -> f64 {
        self.direction().iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Tolerances of the piece counter.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct RegionConfig {
    /// Knots closer than this in the segment parameter are merged.
    pub breakpoint_tol: f64,
    /// Relative tolerance for equal slopes of adjacent intervals.
    pub slope_tol: f64,
}

impl Default for RegionConfig {
    fn default() -> Self {
        RegionConfig {
            breakpoint_tol: 1e-12,
            slope_tol: 1e-10,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PieceReport {
    pub exact_count: usize,
    /// Sorted parameters in `(0, 1)` where the restriction changes slope.
    pub breakpoints: Vec<f64>,
    /// `(2 width)^depth`, saturating.
    pub telgarsky_bound: u128,
}

/// `(2 width)^L` for ReLU networks, 1 for depth 0. Saturates at `u128::MAX`.
pub fn telgarsky_bound(net: &ReluNetwork) -> u128 {
    let base = 2 * net.width() as u128;
    (0..net.depth()).fold(1u128, |acc, _| acc.saturating_mul(base))
}

pub fn count_pieces_on_segment(net: &ReluNetwork, seg: &Segment) -> Result<PieceReport> {
    count_pieces_with(net, seg, &RegionConfig::default())
}

/// Inputs to layer `upto` at parameter `t`.
fn layer_input(net: &ReluNetwork, seg: &Segment, t: f64, upto: usize) -> Vec<f64> {
    let mut x = seg.point(t);
    for layer in &net.layers()[..upto] {
        x = layer
            .weights()
            .mul_vec_add(&x, layer.bias())
            .into_iter()
            .map(relu)
            .collect();
    }
    x
}

/// Directional derivative of every pre-activation along the segment, using
/// the activation pattern at `t`.
fn pre_activation_slopes(net: &ReluNetwork, seg: &Segment, t: f64) -> Vec<Vec<f64>> {
    let mut x = seg.point(t);
    let mut dx = seg.direction();
    let mut out = Vec::with_capacity(net.layers().len());
    for (l, layer) in net.layers().iter().enumerate() {
        let z = layer.weights().mul_vec_add(&x, layer.bias());
        let dz = layer.weights().mul_vec(&dx);
        if l + 1 < net.layers().len() {
            dx = z
                .iter()
                .zip(&dz)
                .map(|(&zi, &di)| if zi > 0.0 { di } else { 0.0 })
                .collect();
            x = z.into_iter().map(relu).collect();
        }
        out.push(dz);
    }
    out
}

fn dedup_sorted(ts: &mut Vec<f64>, tol: f64) {
    ts.sort_by(f64::total_cmp);
    let mut kept: Vec<f64> = Vec::with_capacity(ts.len());
    for &t in ts.iter() {
        match kept.last() {
            Some(&last) if t - last <= tol => {}
            _ => kept.push(t),
        }
    }
    // keep the exact end point 1 rather than a nearby crossing
    if let (Some(last), Some(&end)) = (kept.last_mut(), ts.last()) {
        if end == 1.0 {
            *last = 1.0;
        }
    }
    *ts = kept;
}

pub fn count_pieces_with(net: &ReluNetwork, seg: &Segment, cfg: &RegionConfig) -> Result<PieceReport> {
    if seg.dim() != net.input_dim() {
        return Err(Error::dims("segment", net.input_dim(), seg.dim()));
    }
    let mut knots = vec![0.0, 1.0];
    for (l, layer) in net.layers().iter().enumerate().take(net.depth()) {
        let z: Vec<Vec<f64>> = knots
            .par_iter()
            .map(|&t| layer.weights().mul_vec_add(&layer_input(net, seg, t, l), layer.bias()))
            .collect();
        let mut added = Vec::new();
        for j in 0..knots.len() - 1 {
            let (t0, t1) = (knots[j], knots[j + 1]);
            for (&z0, &z1) in z[j].iter().zip(&z[j + 1]) {
                if (z0 < 0.0 && z1 > 0.0) || (z0 > 0.0 && z1 < 0.0) {
                    let t = t0 + (t1 - t0) * (z0 / (z0 - z1));
                    if t > t0 && t < t1 {
                        added.push(t);
                    }
                }
            }
        }
        if !added.is_empty() {
            knots.extend(added);
            dedup_sorted(&mut knots, cfg.breakpoint_tol);
        }
    }
    let last = net.layers().len() - 1;
    let slopes: Vec<Vec<f64>> = knots
        .par_windows(2)
        .map(|w| pre_activation_slopes(net, seg, 0.5 * (w[0] + w[1])).swap_remove(last))
        .collect();
    let mut breakpoints = Vec::new();
    for j in 1..slopes.len() {
        let same = slopes[j - 1]
            .iter()
            .zip(&slopes[j])
            .all(|(a, b)| (a - b).abs() <= cfg.slope_tol * a.abs().max(b.abs()).max(1.0));
        if !same {
            breakpoints.push(knots[j]);
        }
    }
    Ok(PieceReport {
        exact_count: breakpoints.len() + 1,
        breakpoints,
        telgarsky_bound: telgarsky_bound(net),
    })
}

/// Fixed weights of a random-bias network: `weights[ℓ]` maps layer `ℓ` to
/// layer `ℓ + 1`, the last one to a scalar output.
#[derive(Clone, Debug)]
pub struct RandomBiasConfig {
    pub weights: Vec<SparseMatrix>,
    /// Biases are uniform on `[-δ/2, δ/2]`.
    pub delta: f64,
    pub trials: usize,
    /// Bound on the maximal internal derivative; estimated when `None`.
    pub c_nu: Option<f64>,
    pub seed: u64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RandomBiasStats {
    pub trials: usize,
    pub delta: f64,
    pub c_nu: f64,
    pub c_nu_estimated: bool,
    pub mean_pieces: f64,
    pub max_pieces: usize,
    /// `1 + d_1 + (C_ν/δ)(1 + (L-1) ln(2 width)) Σ_{j=2}^L d_j`.
    pub bound: f64,
    /// Piece count of every trial, in trial order.
    pub pieces: Vec<usize>,
}

impl RandomBiasConfig {
    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta <= 1.0) {
            return Err(Error::invalid(format!(
                "bias half-width δ must lie in (0, 1], got {}",
                self.delta
            )));
        }
        if self.trials == 0 {
            return Err(Error::invalid("at least one trial is required"));
        }
        if self.weights.len() < 2 {
            return Err(Error::invalid("random-bias networks need at least one hidden layer"));
        }
        for l in 1..self.weights.len() {
            if self.weights[l].cols() != self.weights[l - 1].rows() {
                return Err(Error::dims(
                    format!("weights[{l}] columns"),
                    self.weights[l - 1].rows(),
                    self.weights[l].cols(),
                ));
            }
        }
        if self.weights.last().map(SparseMatrix::rows) != Some(1) {
            return Err(Error::invalid("the last weight matrix must have a single row"));
        }
        if let Some(c) = self.c_nu {
            if !(c >= 0.0 && c.is_finite()) {
                return Err(Error::invalid(format!("C_nu must be finite and nonnegative, got {c}")));
            }
        }
        Ok(())
    }

    /// Hidden widths `d_1..d_L`.
    pub fn hidden_widths(&self) -> Vec<usize> {
        self.weights[..self.weights.len() - 1]
            .iter()
            .map(SparseMatrix::rows)
            .collect()
    }

    fn network(&self, biases: &[Vec<f64>]) -> Result<ReluNetwork> {
        let layers = self
            .weights
            .iter()
            .zip(biases)
            .map(|(w, b)| Layer::new(w.clone(), b.clone()))
            .collect::<Result<Vec<_>>>()?;
        ReluNetwork::new(self.weights[0].cols(), layers)
    }

    fn expected_pieces_bound(&self, c_nu: f64) -> f64 {
        let widths = self.hidden_widths();
        let depth = widths.len() as f64;
        let width = widths.iter().copied().max().unwrap_or(0) as f64;
        let tail: usize = widths[1..].iter().sum();
        1.0 + widths[0] as f64 + c_nu / self.delta * (1.0 + (depth - 1.0) * (2.0 * width).ln()) * tail as f64
    }
}

/// Dense He-normal weights `N(0, 2/d_in)` for the layer widths
/// `(d_0, d_1, ..., d_L, d_out)`.
pub fn he_weights(widths: &[usize], seed: u64) -> Result<Vec<SparseMatrix>> {
    if widths.len() < 2 || widths.contains(&0) {
        return Err(Error::invalid("layer widths must be positive and at least two"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Ok(widths
        .windows(2)
        .map(|w| {
            let normal = Normal::new(0.0, (2.0 / w[0] as f64).sqrt()).expect("positive variance");
            let entries: Vec<(usize, usize, f64)> = (0..w[1])
                .flat_map(|r| (0..w[0]).map(move |c| (r, c)))
                .map(|(r, c)| (r, c, normal.sample(&mut rng)))
                .collect();
            SparseMatrix::from_triplets(w[1], w[0], entries)
        })
        .collect())
}

/// Number of bias configurations used by [`estimate_c_nu`].
pub const C_NU_BIAS_CONFIGS: usize = 16;
/// Segment samples per configuration used by [`estimate_c_nu`].
pub const C_NU_SEGMENT_SAMPLES: usize = 512;
/// Safety factor applied to the sampled maximum.
pub const C_NU_MULTIPLIER: f64 = 1.1;

/// Estimate of the maximal internal derivative: the largest
/// `|d/dt (W x^{(ℓ-1)})_i|` over hidden layers, with the bias of every entry
/// placed on a 16-point lattice of `[-δ/2, δ/2]` (entry `(ℓ, i)` in
/// configuration `c` takes lattice point `(c + 7ℓ + 3i) mod 16`) and 512
/// midpoint samples along the segment, times 1.1. The derivative is taken
/// per unit length of the segment.
pub fn estimate_c_nu(weights: &[SparseMatrix], delta: f64, seg: &Segment) -> Result<f64> {
    let cfg = RandomBiasConfig {
        weights: weights.to_vec(),
        delta,
        trials: 1,
        c_nu: Some(0.0),
        seed: 0,
    };
    cfg.validate()?;
    if seg.dim() != weights[0].cols() {
        return Err(Error::dims("segment", weights[0].cols(), seg.dim()));
    }
    let steps = (C_NU_BIAS_CONFIGS - 1) as f64;
    let hidden = weights.len() - 1;
    let length = seg.length();
    let best = (0..C_NU_BIAS_CONFIGS)
        .into_par_iter()
        .map(|c| -> Result<f64> {
            let biases: Vec<Vec<f64>> = weights
                .iter()
                .enumerate()
                .map(|(l, w)| {
                    (0..w.rows())
                        .map(|i| -delta / 2.0 + delta * ((c + 7 * l + 3 * i) % C_NU_BIAS_CONFIGS) as f64 / steps)
                        .collect()
                })
                .collect();
            let net = cfg.network(&biases)?;
            let mut best: f64 = 0.0;
            for s in 0..C_NU_SEGMENT_SAMPLES {
                let t = (s as f64 + 0.5) / C_NU_SEGMENT_SAMPLES as f64;
                let slopes = pre_activation_slopes(&net, seg, t);
                for layer in &slopes[..hidden] {
                    best = layer.iter().fold(best, |m, v| m.max(v.abs()));
                }
            }
            Ok(best / length)
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Ok(C_NU_MULTIPLIER * best)
}

/// Draws fresh biases for every trial and counts the pieces on the segment.
/// Trial `k` uses stream `k` of a ChaCha generator seeded with `seed`, so
/// results do not depend on scheduling.
pub fn random_bias_experiment(cfg: &RandomBiasConfig, seg: &Segment) -> Result<RandomBiasStats> {
    cfg.validate()?;
    let (c_nu, estimated) = match cfg.c_nu {
        Some(c) => (c, false),
        None => (estimate_c_nu(&cfg.weights, cfg.delta, seg)?, true),
    };
    if seg.dim() != cfg.weights[0].cols() {
        return Err(Error::dims("segment", cfg.weights[0].cols(), seg.dim()));
    }
    let half = cfg.delta / 2.0;
    let pieces = (0..cfg.trials)
        .into_par_iter()
        .map(|trial| -> Result<usize> {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
            rng.set_stream(trial as u64);
            let biases: Vec<Vec<f64>> = cfg
                .weights
                .iter()
                .map(|w| (0..w.rows()).map(|_| rng.gen_range(-half..=half)).collect())
                .collect();
            let net = cfg.network(&biases)?;
            Ok(count_pieces_on_segment(&net, seg)?.exact_count)
        })
        .collect::<Result<Vec<usize>>>()?;
    let mean = pieces.iter().sum::<usize>() as f64 / pieces.len() as f64;
    Ok(RandomBiasStats {
        trials: cfg.trials,
        delta: cfg.delta,
        c_nu,
        c_nu_estimated: estimated,
        mean_pieces: mean,
        max_pieces: pieces.iter().copied().max().unwrap_or(0),
        bound: cfg.expected_pieces_bound(c_nu),
        pieces,
    })
}
