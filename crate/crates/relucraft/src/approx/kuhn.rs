//! Uniform Kuhn (Freudenthal) triangulations of a box.
//!
//! Lattice nodes are `origin + h ν` for integer `ν ∈ {0..cells}^d`. Every
//! cell with lower corner `c` is split into `d!` simplices, one per
//! permutation `π`, with vertices `c, c + e_π(1), c + e_π(1) + e_π(2), ...`.
//! The split is translation invariant, so neighbouring cells match up and
//! the mesh is regular.

use crate::simplicial::Triangulation;
use crate::{Error, Result};

/// A uniform Kuhn mesh together with its lattice bookkeeping.
#[derive(Clone, Debug)]
pub struct KuhnMesh {
    pub mesh: Triangulation,
    /// Cells per axis.
    pub cells: usize,
    pub origin: Vec<f64>,
    pub h: f64,
}

impl KuhnMesh {
    /// Vertex index of the lattice point `ν ∈ {0..cells}^d`.
    pub fn node_index(&self, nu: &[usize]) -> usize {
        lattice_index(nu, self.cells + 1)
    }

    /// Lattice coordinates of a vertex index.
    pub fn lattice_point(&self, index: usize) -> Vec<usize> {
        let d = self.mesh.dim();
        let side = self.cells + 1;
        let mut rest = index;
        let mut nu = vec![0; d];
        for slot in nu.iter_mut() {
            *slot = rest % side;
            rest /= side;
        }
        nu
    }
}

fn lattice_index(nu: &[usize], side: usize) -> usize {
    nu.iter().rev().fold(0, |acc, &k| acc * side + k)
}

/// All permutations of `0..d` in lexicographic order.
pub fn permutations(d: usize) -> Vec<Vec<usize>> {
    fn extend(prefix: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if prefix.len() == used.len() {
            out.push(prefix.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                prefix.push(i);
                extend(prefix, used, out);
                prefix.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    extend(&mut Vec::with_capacity(d), &mut vec![false; d], &mut out);
    out
}

/// Every point of `{0..side-1}^d` in index order (first coordinate fastest).
pub fn lattice_points(d: usize, side: usize) -> Vec<Vec<usize>> {
    let total = side.pow(d as u32);
    (0..total)
        .map(|mut i| {
            (0..d)
                .map(|_| {
                    let k = i % side;
                    i /= side;
                    k
                })
                .collect()
        })
        .collect()
}

/// Kuhn mesh of `origin + h [0, cells]^d` with values from `value`.
pub fn kuhn_mesh(
    d: usize,
    cells: usize,
    origin: &[f64],
    h: f64,
    mut value: impl FnMut(&[usize], &[f64]) -> f64,
) -> Result<KuhnMesh> {
    if d == 0 || cells == 0 {
        return Err(Error::invalid(
            "Kuhn mesh needs a positive dimension and at least one cell",
        ));
    }
    if origin.len() != d {
        return Err(Error::dims("mesh origin", d, origin.len()));
    }
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::invalid(format!("mesh width must be positive, got {h}")));
    }
    let side = cells + 1;
    let nodes = lattice_points(d, side);
    let vertices: Vec<Vec<f64>> = nodes
        .iter()
        .map(|nu| nu.iter().zip(origin).map(|(&k, o)| o + h * k as f64).collect())
        .collect();
    let values: Vec<f64> = nodes.iter().zip(&vertices).map(|(nu, x)| value(nu, x)).collect();
    let perms = permutations(d);
    let mut simplices = Vec::with_capacity(cells.pow(d as u32) * perms.len());
    for corner in lattice_points(d, cells) {
        for p in &perms {
            let mut v = corner.clone();
            let mut s = Vec::with_capacity(d + 1);
            s.push(lattice_index(&v, side));
            for &axis in p {
                v[axis] += 1;
                s.push(lattice_index(&v, side));
            }
            simplices.push(s);
        }
    }
    let mesh = Triangulation::new_unchecked_regularity(d, vertices, simplices, values)?;
    Ok(KuhnMesh {
        mesh,
        cells,
        origin: origin.to_vec(),
        h,
    })
}
