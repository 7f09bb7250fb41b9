//! Continuous piecewise linear functions in max-min form and their compiler.
//!
//! Every CPWL function with affine pieces `g_1..g_n` can be written as
//! `max_j min_{i in s_j} g_i`. In one dimension the sets `s_j` are found by
//! sweeping the line and collecting `s_x = {i : g_i(x) >= f(x)}`. The
//! compiler stacks all `g_i`, applies one min network per set and a max
//! network on top, glued with sparse compositions.

use serde::{Deserialize, Serialize};

use crate::calculus::{parallelize, sparse_compose, BoundCertificate};
use crate::minmax::{ceil_log2, maxn_net, minn_net};
use crate::net::{ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// Two pieces are the same if no coefficient differs by more than this.
pub const PIECE_DEDUP_TOL: f64 = 1e-12;
/// Relative slack in the test `g_i(x) >= f(x)` of the sweep.
pub const SWEEP_TOL: f64 = 1e-9;
/// Continuity tolerance at breakpoints (relative to the value's magnitude).
pub const CONTINUITY_TOL: f64 = 1e-12;

/// `x -> w . x + b`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AffineMap {
    pub w: Vec<f64>,
    pub b: f64,
}

impl AffineMap {
    pub fn new(w: Vec<f64>, b: f64) -> Self {
        AffineMap { w, b }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.w.iter().zip(x).map(|(w, x)| w * x).sum::<f64>() + self.b
    }

    pub fn dim(&self) -> usize {
        self.w.len()
    }

    pub fn is_finite(&self) -> bool {
        self.b.is_finite() && self.w.iter().all(|v| v.is_finite())
    }

    /// True if all coefficients agree within `tol`.
    pub fn approx_eq(&self, other: &AffineMap, tol: f64) -> bool {
        self.w.len() == other.w.len()
            && (self.b - other.b).abs() <= tol
            && self.w.iter().zip(&other.w).all(|(a, b)| (a - b).abs() <= tol)
    }

    pub fn scaled(&self, alpha: f64) -> AffineMap {
        AffineMap::new(self.w.iter().map(|v| alpha * v).collect(), alpha * self.b)
    }
}

/// Convex domain of a CPWL function.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub enum Domain {
    #[default]
    AllSpace,
    Box {
        lo: Vec<f64>,
        hi: Vec<f64>,
    },
}

/// A CPWL function given by affine pieces and (optionally) max-min index
/// sets. Index sets are 0-based here and 1-based in documents.
#[derive(Clone, Debug, PartialEq)]
pub struct CpwlSpec {
    pub dim: usize,
    pub pieces: Vec<AffineMap>,
    pub maxmin: Option<Vec<Vec<usize>>>,
    pub domain: Domain,
}

impl CpwlSpec {
    pub fn new(dim: usize, pieces: Vec<AffineMap>, maxmin: Option<Vec<Vec<usize>>>) -> Result<Self> {
        let spec = CpwlSpec {
            dim,
            pieces,
            maxmin,
            domain: Domain::AllSpace,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 {
            return Err(Error::invalid("CPWL dimension must be positive"));
        }
        for (i, p) in self.pieces.iter().enumerate() {
            if p.dim() != self.dim {
                return Err(Error::dims(format!("piece {}", i + 1), self.dim, p.dim()));
            }
            if !p.is_finite() {
                return Err(Error::invalid(format!("piece {} has a non-finite coefficient", i + 1)));
            }
        }
        if let Some(sets) = &self.maxmin {
            for (j, s) in sets.iter().enumerate() {
                if let Some(&bad) = s.iter().find(|&&i| i >= self.pieces.len()) {
                    return Err(Error::invalid(format!(
                        "max-min set {} refers to piece {} but only {} pieces exist",
                        j + 1,
                        bad + 1,
                        self.pieces.len()
                    )));
                }
            }
        }
        if let Domain::Box { lo, hi } = &self.domain {
            if lo.len() != self.dim || hi.len() != self.dim || lo.iter().zip(hi).any(|(a, b)| a > b) {
                return Err(Error::invalid("domain box does not match the dimension"));
            }
        }
        Ok(())
    }

    fn sets(&self) -> Result<&[Vec<usize>]> {
        match &self.maxmin {
            Some(s) if !s.is_empty() && s.iter().all(|s| !s.is_empty()) => Ok(s),
            Some(_) => Err(Error::invalid("max-min form needs nonempty index sets")),
            None => Err(Error::invalid("CPWL spec has no max-min form")),
        }
    }

    /// The same function with every piece negated; pair with [`eval_minmax`]
    /// to evaluate `-f` in min-max form.
    pub fn negated(&self) -> CpwlSpec {
        CpwlSpec {
            pieces: self.pieces.iter().map(|p| p.scaled(-1.0)).collect(),
            ..self.clone()
        }
    }

    pub fn scaled(&self, alpha: f64) -> CpwlSpec {
        CpwlSpec {
            pieces: self.pieces.iter().map(|p| p.scaled(alpha)).collect(),
            ..self.clone()
        }
    }
}

/// `max_j min_{i in s_j} g_i(x)`.
pub fn eval_maxmin(spec: &CpwlSpec, x: &[f64]) -> Result<f64> {
    let sets = spec.sets()?;
    if x.len() != spec.dim {
        return Err(Error::dims("CPWL input", spec.dim, x.len()));
    }
    let g: Vec<f64> = spec.pieces.iter().map(|p| p.eval(x)).collect();
    Ok(sets
        .iter()
        .map(|s| s.iter().map(|&i| g[i]).fold(f64::INFINITY, f64::min))
        .fold(f64::NEG_INFINITY, f64::max))
}

/// `min_j max_{i in s_j} g_i(x)`, the dual form.
pub fn eval_minmax(spec: &CpwlSpec, x: &[f64]) -> Result<f64> {
    let sets = spec.sets()?;
    if x.len() != spec.dim {
        return Err(Error::dims("CPWL input", spec.dim, x.len()));
    }
    let g: Vec<f64> = spec.pieces.iter().map(|p| p.eval(x)).collect();
    Ok(sets
        .iter()
        .map(|s| s.iter().map(|&i| g[i]).fold(f64::NEG_INFINITY, f64::max))
        .fold(f64::INFINITY, f64::min))
}

/// A CPWL function of one variable: breakpoints `x_1 < ... < x_k` and the
/// `k + 1` affine pieces between them, left to right.
#[derive(Clone, Debug, PartialEq)]
pub struct Cpwl1D {
    pub breakpoints: Vec<f64>,
    pub pieces: Vec<AffineMap>,
}

impl Cpwl1D {
    /// Builds the function from its pieces, checking continuity.
    pub fn from_pieces(breakpoints: Vec<f64>, pieces: Vec<AffineMap>) -> Result<Self> {
        let f = Cpwl1D { breakpoints, pieces };
        f.validate()?;
        Ok(f)
    }

    /// Builds the function from values at the breakpoints and the two outer
    /// slopes. Continuous by construction.
    pub fn from_values(breakpoints: Vec<f64>, values: Vec<f64>, left_slope: f64, right_slope: f64) -> Result<Self> {
        if breakpoints.is_empty() || breakpoints.len() != values.len() {
            return Err(Error::invalid(
                "need one value per breakpoint and at least one breakpoint",
            ));
        }
        let k = breakpoints.len();
        let line = |slope: f64, x0: f64, y0: f64| AffineMap::new(vec![slope], y0 - slope * x0);
        let mut pieces = vec![line(left_slope, breakpoints[0], values[0])];
        for i in 1..k {
            let slope = (values[i] - values[i - 1]) / (breakpoints[i] - breakpoints[i - 1]);
            pieces.push(line(slope, breakpoints[i - 1], values[i - 1]));
        }
        pieces.push(line(right_slope, breakpoints[k - 1], values[k - 1]));
        Cpwl1D::from_pieces(breakpoints, pieces)
    }

    pub fn validate(&self) -> Result<()> {
        if self.pieces.len() != self.breakpoints.len() + 1 {
            return Err(Error::invalid(
                "a 1D CPWL function needs one more piece than breakpoints",
            ));
        }
        if self.pieces.iter().any(|p| p.dim() != 1 || !p.is_finite()) {
            return Err(Error::invalid("1D pieces must be finite scalar affine maps"));
        }
        if self.breakpoints.iter().any(|b| !b.is_finite()) || self.breakpoints.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("breakpoints must be finite and strictly increasing"));
        }
        for (i, &x) in self.breakpoints.iter().enumerate() {
            let (l, r) = (self.pieces[i].eval(&[x]), self.pieces[i + 1].eval(&[x]));
            if (l - r).abs() > CONTINUITY_TOL * l.abs().max(r.abs()).max(1.0) {
                return Err(Error::invalid(format!(
                    "discontinuous at breakpoint {x}: left value {l}, right value {r}"
                )));
            }
        }
        Ok(())
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.breakpoints.partition_point(|&b| b < x);
        self.pieces[i].eval(&[x])
    }

    pub fn values(&self) -> Vec<f64> {
        self.breakpoints
            .iter()
            .enumerate()
            .map(|(i, &x)| self.pieces[i].eval(&[x]))
            .collect()
    }

    pub fn left_slope(&self) -> f64 {
        self.pieces[0].w[0]
    }

    pub fn right_slope(&self) -> f64 {
        self.pieces[self.pieces.len() - 1].w[0]
    }

    /// Number of affine pieces of the restriction to `[a, b]`, counting only
    /// breakpoints where the slope really changes.
    pub fn pieces_on(&self, a: f64, b: f64) -> usize {
        let (a, b) = (a.min(b), a.max(b));
        1 + self
            .breakpoints
            .iter()
            .enumerate()
            .filter(|&(i, &x)| x > a && x < b && !self.pieces[i].approx_eq(&self.pieces[i + 1], PIECE_DEDUP_TOL))
            .count()
    }
}

fn dedup_pieces(pieces: &[AffineMap]) -> Vec<AffineMap> {
    let mut out: Vec<AffineMap> = Vec::new();
    for p in pieces {
        if !out.iter().any(|q| q.approx_eq(p, PIECE_DEDUP_TOL)) {
            out.push(p.clone());
        }
    }
    out
}

/// Collects the sets `s_x` at the sample points, dropping duplicates and
/// sets that contain another collected set (their minimum is never larger).
fn collect_sets(pieces: &[AffineMap], f: &dyn Fn(&[f64]) -> f64, samples: &[Vec<f64>]) -> Vec<Vec<usize>> {
    let mut sets: Vec<Vec<usize>> = Vec::new();
    for x in samples {
        let fx = f(x);
        let slack = SWEEP_TOL * (1.0 + fx.abs());
        let s: Vec<usize> = (0..pieces.len()).filter(|&i| pieces[i].eval(x) >= fx - slack).collect();
        if !sets.contains(&s) {
            sets.push(s);
        }
    }
    let is_strict_superset = |a: &Vec<usize>, b: &Vec<usize>| a.len() > b.len() && b.iter().all(|i| a.contains(i));
    let keep: Vec<bool> = sets
        .iter()
        .map(|a| !sets.iter().any(|b| is_strict_superset(a, b)))
        .collect();
    sets.into_iter().zip(keep).filter_map(|(s, k)| k.then_some(s)).collect()
}

fn check_reproduces(spec: &CpwlSpec, f: &dyn Fn(&[f64]) -> f64, points: &[Vec<f64>]) -> Result<()> {
    for x in points {
        let (want, got) = (f(x), eval_maxmin(spec, x)?);
        if (want - got).abs() > SWEEP_TOL * (1.0 + want.abs()) {
            return Err(Error::Precondition(format!(
                "max-min form gives {got} instead of {want} at {x:?}"
            )));
        }
    }
    Ok(())
}

/// Derives the max-min form of a continuous 1D CPWL function by the `s_x`
/// sweep. `s_x` can only change at a breakpoint or where two pieces cross,
/// so those points and one point inside every gap between them are sampled.
/// The result is checked on a refined grid before it is returned.
pub fn derive_maxmin_1d(f: &Cpwl1D) -> Result<CpwlSpec> {
    f.validate()?;
    let pieces = dedup_pieces(&f.pieces);
    let mut events = f.breakpoints.clone();
    for (i, p) in pieces.iter().enumerate() {
        for q in &pieces[i + 1..] {
            let dw = p.w[0] - q.w[0];
            if dw != 0.0 {
                let x = (q.b - p.b) / dw;
                if x.is_finite() {
                    events.push(x);
                }
            }
        }
    }
    events.sort_by(f64::total_cmp);
    events.dedup();
    let mut samples: Vec<f64> = Vec::new();
    if events.is_empty() {
        samples.push(0.0);
    } else {
        samples.push(events[0] - 1.0);
        for (i, &x) in events.iter().enumerate() {
            samples.push(x);
            let next = events.get(i + 1).copied().unwrap_or(x + 2.0);
            samples.push(0.5 * (x + next));
        }
    }
    let eval = |x: &[f64]| f.eval(x[0]);
    let pts: Vec<Vec<f64>> = samples.iter().map(|&x| vec![x]).collect();
    let sets = collect_sets(&pieces, &eval, &pts);
    let spec = CpwlSpec::new(1, pieces, Some(sets))?;

    let mut grid = Vec::new();
    for w in samples.windows(2) {
        grid.extend((0..8).map(|t| vec![w[0] + (w[1] - w[0]) * t as f64 / 8.0]));
    }
    let last = *samples.last().expect("at least one sample");
    grid.extend([vec![last], vec![last + 10.0], vec![samples[0] - 10.0]]);
    check_reproduces(&spec, &eval, &grid).map_err(|e| Error::Certificate {
        construction: "derive_maxmin_1d".into(),
        detail: e.to_string(),
    })?;
    Ok(spec)
}

/// Derives a max-min form in any dimension from a reference evaluator by
/// collecting `s_x` at `samples`, then validates it at `validation`. Fails
/// with [`Error::Precondition`] if the sampled sets do not reproduce `f`.
pub fn derive_maxmin_sampled(
    dim: usize,
    pieces: &[AffineMap],
    f: &dyn Fn(&[f64]) -> f64,
    samples: &[Vec<f64>],
    validation: &[Vec<f64>],
) -> Result<CpwlSpec> {
    let pieces = dedup_pieces(pieces);
    let sets = collect_sets(&pieces, f, samples);
    let spec = CpwlSpec::new(dim, pieces, Some(sets))?;
    check_reproduces(&spec, f, validation)?;
    Ok(spec)
}

/// Compiles a max-min form into a network realizing it on all of `R^d`:
/// `max_m • (min_{|s_j|})_j • (g_i)_{i in s_j, j}`.
pub fn compile_cpwl(spec: &CpwlSpec) -> Result<(ReluNetwork, BoundCertificate)> {
    spec.validate()?;
    let sets = spec.sets()?;
    let (d, n, m) = (spec.dim, spec.pieces.len(), sets.len());

    let mut entries = Vec::new();
    let mut bias = Vec::new();
    for s in sets {
        for &i in s {
            let p = &spec.pieces[i];
            let r = bias.len();
            entries.extend(p.w.iter().enumerate().map(|(c, &v)| (r, c, v)));
            bias.push(p.b);
        }
    }
    let rows = bias.len();
    let stacked = ReluNetwork::affine(SparseMatrix::from_triplets(rows, d, entries), bias)?;
    let mins = sets
        .iter()
        .map(|s| minn_net(s.len()).map(|(net, _)| net))
        .collect::<Result<Vec<_>>>()?;
    let (mins, _) = parallelize(&mins, false)?;
    let (inner, _) = sparse_compose(&mins, &stacked)?;
    let (max, _) = maxn_net(m)?;
    let (net, _) = sparse_compose(&max, &inner)?;

    let max_set = sets.iter().map(Vec::len).max().unwrap_or(1);
    let log_n = ceil_log2(n.max(1));
    let inner_size: usize = sets.iter().map(|s| 16 * s.len() + 2 * log_n).sum();
    let size_bound = 4 * (16 * m + 2 * inner_size + n * m * (d + 1));
    let width_bound = 2 * (3 * m).max(3 * m * n).max(m * d * n);
    let depth = ceil_log2(m) + ceil_log2(max_set) + 2;
    let cert = BoundCertificate::issue("cpwl", &net, size_bound, width_bound, depth)?;
    Ok((net, cert))
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct SpecDoc {
    dim: usize,
    pieces: Vec<AffineMap>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    maxmin: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    domain: Option<BoxDoc>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxDoc {
    lo: Vec<f64>,
    hi: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct OneDimDoc {
    breakpoints: Vec<f64>,
    values: Vec<f64>,
    left_slope: f64,
    right_slope: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum AnyDoc {
    Spec(SpecDoc),
    OneDim(OneDimDoc),
}

/// A parsed CPWL document: either a max-min spec or a 1D breakpoint form.
#[derive(Clone, Debug, PartialEq)]
pub enum CpwlDocument {
    Spec(CpwlSpec),
    OneDim(Cpwl1D),
}

fn parse_err(e: serde_json::Error) -> Error {
    Error::Parse {
        location: format!("line {} column {}", e.line(), e.column()),
        message: e.to_string(),
    }
}

impl CpwlSpec {
    pub fn to_json(&self) -> String {
        let doc = SpecDoc {
            dim: self.dim,
            pieces: self.pieces.clone(),
            maxmin: self
                .maxmin
                .as_ref()
                .map(|sets| sets.iter().map(|s| s.iter().map(|i| i + 1).collect()).collect()),
            domain: match &self.domain {
                Domain::AllSpace => None,
                Domain::Box { lo, hi } => Some(BoxDoc {
                    lo: lo.clone(),
                    hi: hi.clone(),
                }),
            },
        };
        serde_json::to_string(&doc).expect("spec serializes") + "\n"
    }
}

impl Cpwl1D {
    /// A single affine piece is written with a redundant breakpoint at 0,
    /// since the document has no other place for the intercept.
    pub fn to_json(&self) -> String {
        let (breakpoints, values) = if self.breakpoints.is_empty() {
            (vec![0.0], vec![self.eval(0.0)])
        } else {
            (self.breakpoints.clone(), self.values())
        };
        let doc = OneDimDoc {
            breakpoints,
            values,
            left_slope: self.left_slope(),
            right_slope: self.right_slope(),
        };
        serde_json::to_string(&doc).expect("1D CPWL serializes") + "\n"
    }
}

/// Parses either document flavor. Max-min indices are 1-based in the text.
pub fn parse_cpwl_document(text: &str) -> Result<CpwlDocument> {
    match serde_json::from_str::<AnyDoc>(text) {
        Ok(AnyDoc::Spec(doc)) => {
            let maxmin = match doc.maxmin {
                Some(sets) => Some(
                    sets.into_iter()
                        .map(|s| {
                            s.into_iter()
                                .map(|i| {
                                    i.checked_sub(1).ok_or_else(|| Error::Parse {
                                        location: "maxmin".into(),
                                        message: "indices are 1-based".into(),
                                    })
                                })
                                .collect::<Result<Vec<_>>>()
                        })
                        .collect::<Result<Vec<_>>>()?,
                ),
                None => None,
            };
            let mut spec = CpwlSpec {
                dim: doc.dim,
                pieces: doc.pieces,
                maxmin,
                domain: Domain::AllSpace,
            };
            if let Some(b) = doc.domain {
                spec.domain = Domain::Box { lo: b.lo, hi: b.hi };
            }
            spec.validate()?;
            Ok(CpwlDocument::Spec(spec))
        }
        Ok(AnyDoc::OneDim(doc)) => Ok(CpwlDocument::OneDim(Cpwl1D::from_values(
            doc.breakpoints,
            doc.values,
            doc.left_slope,
            doc.right_slope,
        )?)),
        Err(e) => {
            // report the more specific error of the flavor the text resembles
            let specific = if text.contains("breakpoints") {
                serde_json::from_str::<OneDimDoc>(text).err()
            } else {
                serde_json::from_str::<SpecDoc>(text).err()
            };
            Err(parse_err(specific.unwrap_or(e)))
        }
    }
}
