//! Longest-edge bisection with conforming closure.

use std::collections::HashMap;

use super::{TetMesh, LOCAL_EDGES};
use crate::{Error, Result, Vec3};

const MAX_CLOSURE_ROUNDS: usize = 10_000;

fn edge_key(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}

/// Local endpoints of the longest edge; ties go to the lexicographically
/// smallest vertex pair, which is the smallest global edge id.
fn refinement_edge(vertices: &[Vec3], cell: &[usize; 4]) -> [usize; 2] {
    let mut best = LOCAL_EDGES[0];
    let mut best_len = f64::NEG_INFINITY;
    let mut best_key = [usize::MAX; 2];
    for [p, q] in LOCAL_EDGES {
        let len = (vertices[cell[p]] - vertices[cell[q]]).norm_squared();
        let key = edge_key(cell[p], cell[q]);
        if len > best_len || (len == best_len && key < best_key) {
            best = [p, q];
            best_len = len;
            best_key = key;
        }
    }
    best
}

/// Bisects every marked cell through its longest edge, then keeps bisecting any
/// cell that carries a hanging midpoint until the mesh is conforming again.
///
/// Children inherit the parent's subdomain and keep its orientation. The two
/// children of a cell take the parent's slot in the cell list, so the output is
/// a deterministic function of the input.
pub fn bisect_marked(mesh: &TetMesh, marked: &[usize]) -> Result<TetMesh> {
    let n = mesh.num_cells();
    let mut flag = vec![false; n];
    for &c in marked {
        if c >= n {
            return Err(Error::InvalidParameter(format!(
                "marked cell {c} out of range (mesh has {n} cells)"
            )));
        }
        flag[c] = true;
    }
    if marked.is_empty() {
        return Ok(mesh.clone());
    }

    let mut vertices = mesh.vertices().to_vec();
    let mut cells = mesh.cells().to_vec();
    let mut labels = mesh.subdomains().to_vec();
    let mut midpoints: HashMap<[usize; 2], usize> = HashMap::new();

    let mut done = false;
    for _ in 0..MAX_CLOSURE_ROUNDS {
        let mut next_cells = Vec::with_capacity(cells.len() * 2);
        let mut next_labels = Vec::with_capacity(cells.len() * 2);
        let mut split_any = false;
        for (i, cell) in cells.iter().enumerate() {
            let hanging = LOCAL_EDGES
                .iter()
                .any(|&[p, q]| midpoints.contains_key(&edge_key(cell[p], cell[q])));
            if !(flag[i] || hanging) {
                next_cells.push(*cell);
                next_labels.push(labels[i]);
                continue;
            }
            split_any = true;
            let [p, q] = refinement_edge(&vertices, cell);
            let key = edge_key(cell[p], cell[q]);
            let m = *midpoints.entry(key).or_insert_with(|| {
                vertices.push((vertices[key[0]] + vertices[key[1]]) * 0.5);
                vertices.len() - 1
            });
            let mut first = *cell;
            first[q] = m;
            let mut second = *cell;
            second[p] = m;
            next_cells.push(first);
            next_cells.push(second);
            next_labels.push(labels[i]);
            next_labels.push(labels[i]);
        }
        flag = vec![false; next_cells.len()];
        cells = next_cells;
        labels = next_labels;
        if !split_any {
            done = true;
            break;
        }
    }
    if !done {
        return Err(Error::RefinementCap(MAX_CLOSURE_ROUNDS));
    }
    TetMesh::with_subdomain_count(vertices, cells, labels, mesh.num_subdomains())
}
