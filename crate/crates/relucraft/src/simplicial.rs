//! Simplicial meshes, hat-basis networks and the mesh compiler.
//!
//! On a regular triangulation every nodal function is CPWL. The hat `φ_η`
//! of an interior node is 1 at `η`, 0 at every other node and vanishes outside
//! the patch `ω(η)` of simplices containing `η`. When the patch is convex,
//! `φ_η = max{0, min_τ g_{τ,η}}` where `g_{τ,η}` is the affine extension of
//! `φ_η` from the simplex `τ`.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::calculus::{affine_net, linear_combination, sparse_compose, BoundCertificate};
use crate::cpwl::{compile_cpwl, derive_maxmin_sampled, AffineMap};
use crate::minmax::{ceil_log2, minn_net};
use crate::net::{ReluNetwork, SparseMatrix};
use crate::{Error, Result};

/// Slack for "on the boundary" in point location and convexity tests.
pub const BOUNDARY_TOL: f64 = 1e-12;
/// Meshes above this many elements skip the pairwise regularity check.
pub const REGULARITY_CHECK_LIMIT: usize = 1000;
/// Nonconvex patches are handled up to this many candidate pieces.
pub const MAX_SAMPLED_PIECES: usize = 12;

/// Vertices, `(d+1)`-vertex simplices and one value per vertex.
#[derive(Clone, Debug, PartialEq)]
pub struct Triangulation {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    values: Vec<f64>,
}

/// The patch of simplices around one node.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchInfo {
    pub node: usize,
    pub incident: Vec<usize>,
    pub k_local: usize,
    /// The node does not lie on the mesh boundary.
    pub interior: bool,
    /// Faces `V(τ) \ {η}` of the incident simplices (sorted vertex indices).
    pub boundary_faces: Vec<Vec<usize>>,
}

impl PatchInfo {
    /// Every ridge of the boundary faces is shared by exactly two faces, i.e.
    /// the faces close up around the node (a cycle in 2D, two points in 1D).
    pub fn boundary_is_closed(&self) -> bool {
        let mut ridges: HashMap<Vec<usize>, usize> = HashMap::new();
        for face in &self.boundary_faces {
            for skip in 0..face.len() {
                let ridge: Vec<usize> = face
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                *ridges.entry(ridge).or_default() += 1;
            }
        }
        !ridges.is_empty() && ridges.values().all(|&c| c == 2)
    }
}

fn edge_matrix(points: &[&[f64]]) -> DMatrix<f64> {
    let d = points[0].len();
    DMatrix::from_fn(d, d, |r, c| points[c + 1][r] - points[0][r])
}

fn is_degenerate(points: &[&[f64]]) -> bool {
    let e = edge_matrix(points);
    let scale: f64 = e.column_iter().map(|c| c.norm()).product();
    e.determinant().abs().partial_cmp(&(1e-12 * scale)) != Some(std::cmp::Ordering::Greater)
}

/// The unique affine map taking the values `values[i]` at `vertices[i]`.
pub fn affine_on_simplex(vertices: &[Vec<f64>], values: &[f64]) -> Result<AffineMap> {
    let d = vertices.first().map_or(0, Vec::len);
    if d == 0 || vertices.len() != d + 1 || values.len() != d + 1 || vertices.iter().any(|v| v.len() != d) {
        return Err(Error::invalid(
            "a d-simplex needs d + 1 vertices in R^d and d + 1 values",
        ));
    }
    let pts: Vec<&[f64]> = vertices.iter().map(Vec::as_slice).collect();
    if is_degenerate(&pts) {
        return Err(Error::Singular("degenerate simplex".into()));
    }
    let a = DMatrix::from_fn(d + 1, d + 1, |r, c| if c < d { vertices[r][c] } else { 1.0 });
    let sol = a
        .lu()
        .solve(&DVector::from_column_slice(values))
        .ok_or_else(|| Error::Singular("degenerate simplex".into()))?;
    Ok(AffineMap::new(sol.as_slice()[..d].to_vec(), sol[d]))
}

/// Barycentric coordinates on each simplex via precomputed inverses.
#[derive(Clone, Debug)]
pub struct MeshLocator {
    origin: Vec<Vec<f64>>,
    inverse: Vec<DMatrix<f64>>,
    lo: Vec<Vec<f64>>,
    hi: Vec<Vec<f64>>,
}

impl MeshLocator {
    pub fn new(mesh: &Triangulation) -> Self {
        let mut loc = MeshLocator {
            origin: Vec::new(),
            inverse: Vec::new(),
            lo: Vec::new(),
            hi: Vec::new(),
        };
        for s in &mesh.simplices {
            let pts: Vec<&[f64]> = s.iter().map(|&i| mesh.vertices[i].as_slice()).collect();
            let inv = edge_matrix(&pts)
                .try_inverse()
                .expect("mesh simplices are non-degenerate");
            loc.origin.push(pts[0].to_vec());
            loc.inverse.push(inv);
            let lo = (0..mesh.dim)
                .map(|k| pts.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
                .collect();
            let hi = (0..mesh.dim)
                .map(|k| pts.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
                .collect();
            loc.lo.push(lo);
            loc.hi.push(hi);
        }
        loc
    }

    /// Barycentric coordinates of `x` with respect to simplex `t`, ordered
    /// like the simplex's vertex list.
    pub fn barycentric(&self, t: usize, x: &[f64]) -> Vec<f64> {
        let o = &self.origin[t];
        let rel = DVector::from_iterator(o.len(), x.iter().zip(o).map(|(a, b)| a - b));
        let tail = &self.inverse[t] * rel;
        let mut lam = Vec::with_capacity(o.len() + 1);
        lam.push(1.0 - tail.sum());
        lam.extend(tail.iter());
        lam
    }

    /// First simplex containing `x` (with [`BOUNDARY_TOL`] slack) and the
    /// barycentric coordinates there.
    pub fn locate(&self, x: &[f64]) -> Option<(usize, Vec<f64>)> {
        (0..self.origin.len()).find_map(|t| {
            let inside_box = x
                .iter()
                .zip(self.lo[t].iter().zip(&self.hi[t]))
                .all(|(v, (l, h))| *v >= l - 1e-9 && *v <= h + 1e-9);
            if !inside_box {
                return None;
            }
            let lam = self.barycentric(t, x);
            lam.iter().all(|&l| l >= -BOUNDARY_TOL).then_some((t, lam))
        })
    }
}

impl Triangulation {
    /// Validates shapes, non-degeneracy and (for meshes with at most
    /// [`REGULARITY_CHECK_LIMIT`] elements) regularity.
    pub fn new(dim: usize, vertices: Vec<Vec<f64>>, simplices: Vec<Vec<usize>>, values: Vec<f64>) -> Result<Self> {
        let mesh = Self::new_unchecked_regularity(dim, vertices, simplices, values)?;
        if mesh.simplices.len() <= REGULARITY_CHECK_LIMIT {
            mesh.check_regular()?;
        }
        Ok(mesh)
    }

    /// As [`Triangulation::new`] without the pairwise regularity check, for
    /// meshes that are regular by construction.
    pub fn new_unchecked_regularity(
        dim: usize,
        vertices: Vec<Vec<f64>>,
        simplices: Vec<Vec<usize>>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::invalid("mesh dimension must be positive"));
        }
        if values.len() != vertices.len() {
            return Err(Error::dims("mesh values", vertices.len(), values.len()));
        }
        if let Some(v) = vertices.iter().find(|v| v.len() != dim) {
            return Err(Error::dims("mesh vertex", dim, v.len()));
        }
        if vertices.iter().flatten().chain(&values).any(|v| !v.is_finite()) {
            return Err(Error::invalid("mesh contains a non-finite coordinate or value"));
        }
        if simplices.is_empty() {
            return Err(Error::invalid("mesh has no simplices"));
        }
        for (t, s) in simplices.iter().enumerate() {
            if s.len() != dim + 1 {
                return Err(Error::invalid(format!(
                    "simplex {t} has {} vertices, expected {}",
                    s.len(),
                    dim + 1
                )));
            }
            if let Some(&bad) = s.iter().find(|&&i| i >= vertices.len()) {
                return Err(Error::invalid(format!("simplex {t} refers to missing vertex {bad}")));
            }
            let mut sorted = s.clone();
            sorted.sort_unstable();
            sorted.dedup();
            let pts: Vec<&[f64]> = s.iter().map(|&i| vertices[i].as_slice()).collect();
            if sorted.len() != s.len() || is_degenerate(&pts) {
                return Err(Error::Singular(format!("simplex {t} is degenerate")));
            }
        }
        Ok(Triangulation {
            dim,
            vertices,
            simplices,
            values,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<f64>] {
        &self.vertices
    }

    pub fn simplices(&self) -> &[Vec<usize>] {
        &self.simplices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        if values.len() != self.vertices.len() {
            return Err(Error::dims("mesh values", self.vertices.len(), values.len()));
        }
        Ok(Triangulation { values, ..self.clone() })
    }

    /// Simplices containing each vertex.
    pub fn incidence(&self) -> Vec<Vec<usize>> {
        let mut inc = vec![Vec::new(); self.vertices.len()];
        for (t, s) in self.simplices.iter().enumerate() {
            for &v in s {
                inc[v].push(t);
            }
        }
        inc
    }

    fn facet_counts(&self) -> HashMap<Vec<usize>, usize> {
        let mut counts = HashMap::new();
        for s in &self.simplices {
            for skip in 0..s.len() {
                let mut f: Vec<usize> = s
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                f.sort_unstable();
                *counts.entry(f).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Flags the vertices lying on a facet that belongs to a single simplex.
    pub fn boundary_flags(&self) -> Vec<bool> {
        let mut flags = vec![false; self.vertices.len()];
        for (f, c) in self.facet_counts() {
            if c == 1 {
                for v in f {
                    flags[v] = true;
                }
            }
        }
        flags
    }

    /// Vertices that are used by some simplex and do not lie on the boundary.
    pub fn interior_nodes(&self) -> Vec<usize> {
        let flags = self.boundary_flags();
        let inc = self.incidence();
        (0..self.vertices.len())
            .filter(|&v| !flags[v] && !inc[v].is_empty())
            .collect()
    }

    pub fn patch(&self, node: usize) -> Result<PatchInfo> {
        if node >= self.vertices.len() {
            return Err(Error::invalid(format!("node {node} does not exist")));
        }
        let incident = self.incidence().swap_remove(node);
        let interior = !incident.is_empty() && !self.boundary_flags()[node];
        Ok(self.patch_from(node, incident, interior))
    }

    fn patch_from(&self, node: usize, incident: Vec<usize>, interior: bool) -> PatchInfo {
        let boundary_faces = incident
            .iter()
            .map(|&t| {
                let mut f: Vec<usize> = self.simplices[t].iter().copied().filter(|&v| v != node).collect();
                f.sort_unstable();
                f
            })
            .collect();
        PatchInfo {
            node,
            k_local: incident.len(),
            incident,
            interior,
            boundary_faces,
        }
    }

    /// Checks that any two simplices meet exactly in the hull of their shared
    /// vertices: every facet has at most two simplices, no vertex of one
    /// simplex lies in the closure of another unless it is one of its
    /// vertices, and no edge of one simplex passes through the interior of
    /// another.
    pub fn check_regular(&self) -> Result<()> {
        if let Some((f, c)) = self.facet_counts().into_iter().find(|&(_, c)| c > 2) {
            return Err(Error::Precondition(format!(
                "mesh is not regular: facet {f:?} belongs to {c} simplices"
            )));
        }
        let loc = MeshLocator::new(self);
        let overlap = |a: usize, b: usize| {
            (0..self.dim).all(|k| loc.lo[a][k] <= loc.hi[b][k] + 1e-9 && loc.lo[b][k] <= loc.hi[a][k] + 1e-9)
        };
        for a in 0..self.simplices.len() {
            for b in a + 1..self.simplices.len() {
                if !overlap(a, b) {
                    continue;
                }
                if self.intrudes(&loc, a, b) || self.intrudes(&loc, b, a) {
                    return Err(Error::Precondition(format!(
                        "mesh is not regular: simplices {a} and {b} overlap beyond their shared face"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Does simplex `b` reach into simplex `a` beyond their shared vertices?
    fn intrudes(&self, loc: &MeshLocator, a: usize, b: usize) -> bool {
        let sa = &self.simplices[a];
        let sb = &self.simplices[b];
        for &v in sb {
            if !sa.contains(&v)
                && loc
                    .barycentric(a, &self.vertices[v])
                    .iter()
                    .all(|&l| l >= -BOUNDARY_TOL)
            {
                return true;
            }
        }
        const INSIDE: f64 = 1e-9;
        for i in 0..sb.len() {
            for j in i + 1..sb.len() {
                let p = loc.barycentric(a, &self.vertices[sb[i]]);
                let q = loc.barycentric(a, &self.vertices[sb[j]]);
                // feasible t in [0,1] with (1-t) p_k + t q_k >= INSIDE for all k
                let (mut lo, mut hi) = (0.0f64, 1.0f64);
                for (pk, qk) in p.iter().zip(&q) {
                    let slope = qk - pk;
                    if slope.abs() < 1e-300 {
                        if *pk < INSIDE {
                            hi = -1.0;
                        }
                    } else if slope > 0.0 {
                        lo = lo.max((INSIDE - pk) / slope);
                    } else {
                        hi = hi.min((INSIDE - pk) / slope);
                    }
                }
                if lo <= hi {
                    return true;
                }
            }
        }
        false
    }
}

/// Largest number of simplices sharing one node.
pub fn k_t(mesh: &Triangulation) -> usize {
    mesh.incidence().iter().map(Vec::len).max().unwrap_or(0)
}

fn nodal_pieces(mesh: &Triangulation, patch: &PatchInfo) -> Result<Vec<AffineMap>> {
    patch
        .incident
        .iter()
        .map(|&t| {
            let s = &mesh.simplices[t];
            let verts: Vec<Vec<f64>> = s.iter().map(|&v| mesh.vertices[v].clone()).collect();
            let vals: Vec<f64> = s.iter().map(|&v| if v == patch.node { 1.0 } else { 0.0 }).collect();
            affine_on_simplex(&verts, &vals)
        })
        .collect()
}

fn convex_patch(mesh: &Triangulation, patch: &PatchInfo, pieces: &[AffineMap]) -> bool {
    patch.incident.iter().all(|&t| {
        mesh.simplices[t]
            .iter()
            .all(|&mu| pieces.iter().all(|g| g.eval(&mesh.vertices[mu]) >= -BOUNDARY_TOL))
    })
}

/// Whether the patch of an interior node is convex.
pub fn is_locally_convex(mesh: &Triangulation, node: usize) -> Result<bool> {
    let patch = mesh.patch(node)?;
    if !patch.interior {
        return Err(Error::invalid(format!("node {node} lies on the mesh boundary")));
    }
    let pieces = nodal_pieces(mesh, &patch)?;
    Ok(convex_patch(mesh, &patch, &pieces))
}

fn relu_net() -> ReluNetwork {
    let l = affine_net(&[vec![1.0]], vec![0.0], 1)
        .expect("fixed shape")
        .into_layers()
        .remove(0);
    ReluNetwork::new(1, vec![l.clone(), l]).expect("fixed shape")
}

fn convex_hat(pieces: &[AffineMap], d: usize, k_t: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    let k = pieces.len();
    let entries = pieces
        .iter()
        .enumerate()
        .flat_map(|(r, g)| g.w.iter().enumerate().map(move |(c, &v)| (r, c, v)));
    let stacked = ReluNetwork::affine(
        SparseMatrix::from_triplets(k, d, entries),
        pieces.iter().map(|g| g.b).collect(),
    )?;
    let (min, _) = minn_net(k)?;
    let (inner, _) = sparse_compose(&min, &stacked)?;
    let (net, _) = sparse_compose(&relu_net(), &inner)?;
    let cert = BoundCertificate::issue(
        "convex hat",
        &net,
        4 * (2 + 16 * k_t + k_t * d),
        1usize.max(3 * k_t).max(d),
        ceil_log2(k) + 3,
    )?;
    Ok((net, cert))
}

/// Deterministic points in and around the patch for the sampled max-min
/// derivation: a barycentric lattice on every incident simplex plus a grid
/// over the enlarged bounding box.
fn patch_samples(mesh: &Triangulation, patch: &PatchInfo, lattice: usize) -> Vec<Vec<f64>> {
    let d = mesh.dim;
    let mut pts = Vec::new();
    for &t in &patch.incident {
        let verts: Vec<&Vec<f64>> = mesh.simplices[t].iter().map(|&v| &mesh.vertices[v]).collect();
        let mut idx = vec![0usize; d + 1];
        loop {
            if idx.iter().sum::<usize>() == lattice {
                let p = (0..d)
                    .map(|k| verts.iter().zip(&idx).map(|(v, &i)| v[k] * i as f64).sum::<f64>() / lattice as f64)
                    .collect();
                pts.push(p);
            }
            let mut pos = 0;
            while pos <= d {
                idx[pos] += 1;
                if idx[pos] <= lattice {
                    break;
                }
                idx[pos] = 0;
                pos += 1;
            }
            if pos > d {
                break;
            }
        }
    }
    let all: Vec<&Vec<f64>> = patch
        .incident
        .iter()
        .flat_map(|&t| mesh.simplices[t].iter().map(|&v| &mesh.vertices[v]))
        .collect();
    let lo: Vec<f64> = (0..d)
        .map(|k| all.iter().map(|v| v[k]).fold(f64::INFINITY, f64::min))
        .collect();
    let hi: Vec<f64> = (0..d)
        .map(|k| all.iter().map(|v| v[k]).fold(f64::NEG_INFINITY, f64::max))
        .collect();
    let steps = 4 * lattice;
    let total = (steps + 1).pow(d as u32);
    for flat in 0..total {
        let mut rem = flat;
        let p = (0..d)
            .map(|k| {
                let i = rem % (steps + 1);
                rem /= steps + 1;
                let span = hi[k] - lo[k];
                lo[k] - span + 3.0 * span * i as f64 / steps as f64
            })
            .collect();
        pts.push(p);
    }
    pts
}

fn sampled_hat(
    mesh: &Triangulation,
    patch: &PatchInfo,
    pieces: &[AffineMap],
) -> Result<(ReluNetwork, BoundCertificate)> {
    let d = mesh.dim;
    let mut candidates = pieces.to_vec();
    candidates.push(AffineMap::new(vec![0.0; d], 0.0));
    if candidates.len() > MAX_SAMPLED_PIECES {
        return Err(Error::UnsupportedPatch {
            node: patch.node,
            reason: format!("nonconvex patch with {} candidate pieces", candidates.len()),
        });
    }
    let loc = MeshLocator::new(mesh);
    let node = patch.node;
    let reference = |x: &[f64]| -> f64 {
        patch
            .incident
            .iter()
            .find_map(|&t| {
                let lam = loc.barycentric(t, x);
                if lam.iter().all(|&l| l >= -BOUNDARY_TOL) {
                    let pos = mesh.simplices[t].iter().position(|&v| v == node).expect("incident");
                    Some(lam[pos].max(0.0))
                } else {
                    None
                }
            })
            .unwrap_or(0.0)
    };
    let samples = patch_samples(mesh, patch, 6);
    let validation = patch_samples(mesh, patch, 11);
    let spec = derive_maxmin_sampled(d, &candidates, &reference, &samples, &validation).map_err(|e| {
        Error::UnsupportedPatch {
            node,
            reason: format!("no max-min form found by sampling: {e}"),
        }
    })?;
    compile_cpwl(&spec)
}

fn hat_for_patch(mesh: &Triangulation, patch: &PatchInfo, k_t: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    if !patch.interior {
        return Err(Error::invalid(format!("node {} lies on the mesh boundary", patch.node)));
    }
    let pieces = nodal_pieces(mesh, patch)?;
    if convex_patch(mesh, patch, &pieces) {
        convex_hat(&pieces, mesh.dim, k_t)
    } else {
        sampled_hat(mesh, patch, &pieces)
    }
}

/// Network realizing the hat function of an interior node on all of `R^d`.
///
/// Convex patches use `relu • min_k • (g_τ)_τ`. Nonconvex patches go through
/// the CPWL compiler with a max-min form derived by sampling; if none is
/// found the node is reported as unsupported.
pub fn hat_basis_net(mesh: &Triangulation, node: usize) -> Result<(ReluNetwork, BoundCertificate)> {
    let patch = mesh.patch(node)?;
    hat_for_patch(mesh, &patch, k_t(mesh))
}

/// Hat networks for several nodes, sharing one pass over the mesh topology.
pub fn hat_basis_nets(mesh: &Triangulation, nodes: &[usize]) -> Result<Vec<(ReluNetwork, BoundCertificate)>> {
    let flags = mesh.boundary_flags();
    let inc = mesh.incidence();
    let kt = inc.iter().map(Vec::len).max().unwrap_or(0);
    nodes
        .iter()
        .map(|&v| {
            if v >= mesh.vertices.len() {
                return Err(Error::invalid(format!("node {v} does not exist")));
            }
            let interior = !inc[v].is_empty() && !flags[v];
            let patch = mesh.patch_from(v, inc[v].clone(), interior);
            hat_for_patch(mesh, &patch, kt)
        })
        .collect()
}

/// `Σ_η f(η) φ_η` over the interior nodes, equal to the nodal interpolant on
/// the mesh. Boundary values must vanish.
///
/// The certificate's size bound is `C |T|` with the per-element constant
/// `C = 2 (d + 1) (max hat size + max padding depth)`; there are at most
/// `(d + 1) |T|` interior nodes.
pub fn compile_mesh(mesh: &Triangulation) -> Result<(ReluNetwork, BoundCertificate)> {
    let flags = mesh.boundary_flags();
    if let Some(v) = (0..mesh.vertices.len()).find(|&v| flags[v] && mesh.values[v].abs() > BOUNDARY_TOL) {
        return Err(Error::Precondition(format!(
            "boundary node {v} has value {} but the mesh compiler requires zero boundary values",
            mesh.values[v]
        )));
    }
    let inc = mesh.incidence();
    let kt = k_t(mesh);
    let interior: Vec<usize> = (0..mesh.vertices.len())
        .filter(|&v| !flags[v] && !inc[v].is_empty())
        .collect();
    if interior.is_empty() {
        let net = affine_net(&[vec![0.0; mesh.dim]], vec![0.0], mesh.dim)?;
        let cert = BoundCertificate::issue("mesh", &net, 0, 0, 0)?;
        return Ok((net, cert));
    }
    let mut hats = Vec::with_capacity(interior.len());
    for &v in &interior {
        let patch = mesh.patch_from(v, inc[v].clone(), true);
        hats.push(hat_for_patch(mesh, &patch, kt)?.0);
    }
    let coeffs: Vec<f64> = interior.iter().map(|&v| mesh.values[v]).collect();
    let (net, lc) = linear_combination(&hats, &coeffs, true)?;
    let max_size = hats.iter().map(ReluNetwork::size).max().unwrap_or(0);
    let max_gap = net.depth() - hats.iter().map(ReluNetwork::depth).min().unwrap_or(0);
    let per_element = 2 * (mesh.dim + 1) * (max_size + max_gap);
    let cert = BoundCertificate::issue(
        "mesh",
        &net,
        per_element * mesh.simplices.len(),
        lc.claimed_width_bound,
        lc.claimed_depth_value,
    )?;
    Ok((net, cert))
}

/// Nodal interpolant at `x` by barycentric coordinates, or `None` outside
/// the mesh.
pub fn barycentric_eval(mesh: &Triangulation, x: &[f64]) -> Option<f64> {
    MeshLocator::new(mesh).locate(x).map(|(t, lam)| {
        mesh.simplices[t]
            .iter()
            .zip(&lam)
            .map(|(&v, l)| mesh.values[v] * l)
            .sum()
    })
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MeshDoc {
    dim: usize,
    vertices: Vec<Vec<f64>>,
    simplices: Vec<Vec<usize>>,
    values: Vec<f64>,
}

impl Triangulation {
    pub fn to_json(&self) -> String {
        let doc = MeshDoc {
            dim: self.dim,
            vertices: self.vertices.clone(),
            simplices: self.simplices.clone(),
            values: self.values.clone(),
        };
        serde_json::to_string(&doc).expect("mesh serializes") + "\n"
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: MeshDoc = serde_json::from_str(text).map_err(|e| Error::Parse {
            location: format!("line {} column {}", e.line(), e.column()),
            message: e.to_string(),
        })?;
        Triangulation::new(doc.dim, doc.vertices, doc.simplices, doc.values)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_mesh() -> Triangulation {
        Triangulation::new(
            1,
            vec![vec![0.0], vec![0.5], vec![1.0]],
            vec![vec![0, 1], vec![1, 2]],
            vec![0.0, 1.0, 0.0],
        )
        .unwrap()
    }

    /// Node 0 at the origin surrounded by a fan of triangles.
    fn fan(ring: &[[f64; 2]]) -> Triangulation {
        let mut verts = vec![vec![0.0, 0.0]];
        verts.extend(ring.iter().map(|p| p.to_vec()));
        let n = ring.len();
        let simplices = (0..n).map(|i| vec![0, 1 + i, 1 + (i + 1) % n]).collect();
        let mut values = vec![0.0; n + 1];
        values[0] = 1.0;
        Triangulation::new(2, verts, simplices, values).unwrap()
    }

    #[test]
    fn affine_on_simplex_examples() {
        let g = affine_on_simplex(&[vec![0.0], vec![1.0]], &[0.0, 1.0]).unwrap();
        assert!(g.approx_eq(&AffineMap::new(vec![1.0], 0.0), 1e-15));
        let g = affine_on_simplex(&[vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]], &[0.0, 1.0, 2.0]).unwrap();
        assert!(g.approx_eq(&AffineMap::new(vec![1.0, 2.0], 0.0), 1e-15));
        let g = affine_on_simplex(&[vec![0.3, 0.0], vec![1.0, 0.2], vec![0.0, 1.0]], &[4.0; 3]).unwrap();
        assert!(g.approx_eq(&AffineMap::new(vec![0.0, 0.0], 4.0), 1e-14));
        let flat = affine_on_simplex(&[vec![0.0, 0.0], vec![1.0, 1.0], vec![2.0, 2.0]], &[0.0; 3]);
        assert!(matches!(flat, Err(Error::Singular(_))));
    }

    #[test]
    fn k_t_examples() {
        let single = Triangulation::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0]],
            vec![vec![0, 1, 2]],
            vec![0.0; 3],
        )
        .unwrap();
        assert_eq!(k_t(&single), 1);
        let two = Triangulation::new(
            2,
            vec![vec![0.0, 0.0], vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]],
            vec![vec![0, 1, 2], vec![1, 3, 2]],
            vec![0.0; 4],
        )
        .unwrap();
        assert_eq!(two.incidence()[1].len(), 2);
        assert_eq!(k_t(&two), 2);
    }

    #[test]
    fn one_dimensional_hat() {
        let mesh = line_mesh();
        assert!(is_locally_convex(&mesh, 1).unwrap());
        let (net, _) = hat_basis_net(&mesh, 1).unwrap();
        assert_eq!(net.eval1(&[0.5]), 1.0);
        assert_eq!(net.eval1(&[0.0]), 0.0);
        assert_eq!(net.eval1(&[1.0]), 0.0);
        assert_eq!(net.eval1(&[0.25]), 0.5);
        assert!(hat_basis_net(&mesh, 0).is_err());
        assert!(is_locally_convex(&mesh, 2).is_err());
        let (compiled, _) = compile_mesh(&mesh).unwrap();
        assert_eq!(compiled.eval1(&[0.75]), 0.5);
        assert_eq!(barycentric_eval(&mesh, &[0.75]), Some(0.5));
        assert_eq!(barycentric_eval(&mesh, &[1.5]), None);
    }

    #[test]
    fn nonzero_boundary_is_a_precondition_error() {
        let mesh = line_mesh().with_values(vec![1.0, 1.0, 0.0]).unwrap();
        assert!(matches!(compile_mesh(&mesh), Err(Error::Precondition(_))));
    }

    #[test]
    fn zero_values_compile_to_zero() {
        let mesh = line_mesh().with_values(vec![0.0; 3]).unwrap();
        let (net, _) = compile_mesh(&mesh).unwrap();
        assert_eq!(net.eval1(&[0.3]), 0.0);
    }

    #[test]
    fn fan_patch_is_closed_and_convex() {
        let mesh = fan(&[[1.0, 0.0], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        let patch = mesh.patch(0).unwrap();
        assert!(patch.interior && patch.boundary_is_closed());
        assert!(is_locally_convex(&mesh, 0).unwrap());
        let (net, _) = compile_mesh(&mesh.with_values(vec![2.0, 0.0, 0.0, 0.0, 0.0]).unwrap()).unwrap();
        assert!((net.eval1(&[0.0, 0.0]) - 2.0).abs() < 1e-12);
    }

    #[test]
    fn reflex_patch_goes_through_sampling() {
        let mesh = fan(&[[1.0, 0.0], [0.3, 0.3], [0.0, 1.0], [-1.0, 0.0], [0.0, -1.0]]);
        assert!(!is_locally_convex(&mesh, 0).unwrap());
        let (net, _) = hat_basis_net(&mesh, 0).unwrap();
        let loc = MeshLocator::new(&mesh);
        for i in 0..=40 {
            for j in 0..=40 {
                let x = [-1.2 + 2.4 * i as f64 / 40.0, -1.2 + 2.4 * j as f64 / 40.0];
                let want = loc.locate(&x).map_or(0.0, |(t, lam)| {
                    let pos = mesh.simplices()[t].iter().position(|&v| v == 0);
                    pos.map_or(0.0, |p| lam[p])
                });
                assert!((net.eval1(&x) - want).abs() < 1e-9, "at {x:?}");
            }
        }
    }

    #[test]
    fn overlapping_triangles_are_irregular() {
        // two triangles crossing like a star, sharing no vertex
        let verts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![1.0, 1.5],
            vec![0.0, 1.0],
            vec![2.0, 1.0],
            vec![1.0, -0.5],
        ];
        let err = Triangulation::new(2, verts, vec![vec![0, 1, 2], vec![3, 4, 5]], vec![0.0; 6]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn hanging_node_is_irregular() {
        let verts = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![1.0, 0.0],
            vec![1.0, -1.0],
        ];
        let err = Triangulation::new(2, verts, vec![vec![0, 1, 2], vec![0, 3, 4]], vec![0.0; 5]).unwrap_err();
        assert!(matches!(err, Error::Precondition(_)), "{err}");
    }

    #[test]
    fn mesh_document_round_trip() {
        let mesh = line_mesh();
        assert_eq!(Triangulation::from_json(&mesh.to_json()).unwrap(), mesh);
        assert!(Triangulation::from_json(r#"{"dim":1,"vertices":[[0]],"simplices":[[0,1]],"values":[0]}"#).is_err());
    }
}
