//! Edge and face tables derived from the cell list.
//!
//! Numbering is independent of traversal order: edges and faces are identified
//! by their sorted vertex tuples and numbered in lexicographic order of those.

use std::collections::HashMap;

use super::{TetMesh, LOCAL_EDGES, LOCAL_FACES};
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, PartialEq)]
pub struct EdgeTable {
    /// Vertex pairs `(a, b)` with `a < b`, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Global edge ids of the six local edges of every cell (order of [`LOCAL_EDGES`]).
    pub cell_edges: Vec<[usize; 6]>,
    /// `+1` when the local edge runs from the lower to the higher global vertex id.
    pub cell_signs: Vec<[f64; 6]>,
    /// Whether the edge lies on a boundary face.
    pub is_boundary: Vec<bool>,
}

impl EdgeTable {
    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    pub fn num_boundary(&self) -> usize {
        self.is_boundary.iter().filter(|&&b| b).count()
    }

    /// Lookup by vertex pair, in either order.
    pub fn find(&self, a: usize, b: usize) -> Option<usize> {
        let key = if a < b { [a, b] } else { [b, a] };
        self.edges.binary_search(&key).ok()
    }
}

/// An interior face with its two cells. `plus` is the smaller cell id and the
/// unit normal points from `plus` into `minus`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteriorFace {
    pub vertices: [usize; 3],
    pub plus: usize,
    pub minus: usize,
    pub normal: Vec3,
    pub area: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceTable {
    pub interior: Vec<InteriorFace>,
    /// Boundary faces (sorted vertex triples) with their owning cell.
    pub boundary: Vec<([usize; 3], usize)>,
    /// Neighbor across the face opposite to each local vertex, if any.
    pub neighbors: Vec<[Option<usize>; 4]>,
    /// Interior face id across each local face, if any.
    pub cell_interior_faces: Vec<[Option<usize>; 4]>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub edges: EdgeTable,
    pub faces: FaceTable,
}

fn sorted3(mut f: [usize; 3]) -> [usize; 3] {
    f.sort_unstable();
    f
}

fn face_entries(cells: &[[usize; 4]]) -> Vec<([usize; 3], usize, usize)> {
    let mut entries: Vec<([usize; 3], usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| {
            LOCAL_FACES
                .iter()
                .enumerate()
                .map(move |(lf, f)| (sorted3(f.map(|i| cell[i])), c, lf))
        })
        .collect();
    entries.sort_unstable();
    entries
}

pub(super) fn boundary_faces(cells: &[[usize; 4]]) -> Vec<[usize; 3]> {
    let entries = face_entries(cells);
    let mut out = Vec::new();
    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            j += 1;
        }
        if j - i == 1 {
            out.push(entries[i].0);
        }
        i = j;
    }
    out
}

/// Builds the edge and face tables and audits conformity.
///
/// Reported as [`Error::NonConforming`]: a face shared by more than two cells,
/// an edge covered by an odd number of boundary faces, or a vertex lying at the
/// midpoint of an edge (the hanging nodes bisection would leave behind).
pub fn extract_topology(mesh: &TetMesh) -> Result<Topology> {
    let cells = mesh.cells();
    let verts = mesh.vertices();

    // Faces.
    let entries = face_entries(cells);
    let mut interior = Vec::new();
    let mut boundary = Vec::new();
    let mut neighbors = vec![[None; 4]; cells.len()];
    let mut cell_interior_faces = vec![[None; 4]; cells.len()];
    let mut i = 0;
    while i < entries.len() {
        let mut j = i + 1;
        while j < entries.len() && entries[j].0 == entries[i].0 {
            j += 1;
        }
        match j - i {
            1 => boundary.push((entries[i].0, entries[i].1)),
            2 => {
                let (key, c0, lf0) = entries[i];
                let (_, c1, lf1) = entries[j - 1];
                let (plus, minus) = if c0 < c1 { (c0, c1) } else { (c1, c0) };
                let lf_plus = if c0 < c1 { lf0 } else { lf1 };
                let [a, b, c] = key.map(|v| verts[v]);
                let raw = (b - a).cross(&(c - a));
                let area = 0.5 * raw.norm();
                let mut normal = raw.normalize();
                let opposite_plus = verts[cells[plus][lf_plus]];
                if normal.dot(&(opposite_plus - a)) > 0.0 {
                    normal = -normal;
                }
                let id = interior.len();
                neighbors[c0][lf0] = Some(c1);
                neighbors[c1][lf1] = Some(c0);
                cell_interior_faces[c0][lf0] = Some(id);
                cell_interior_faces[c1][lf1] = Some(id);
                interior.push(InteriorFace {
                    vertices: key,
                    plus,
                    minus,
                    normal,
                    area,
                });
            }
            k => {
                return Err(Error::NonConforming(format!(
                    "face {:?} is shared by {k} cells",
                    entries[i].0
                )));
            }
        }
        i = j;
    }

    // Edges.
    let mut edge_entries: Vec<([usize; 2], usize, usize)> = cells
        .iter()
        .enumerate()
        .flat_map(|(c, cell)| {
            LOCAL_EDGES.iter().enumerate().map(move |(le, &[p, q])| {
                let (a, b) = (cell[p], cell[q]);
                (if a < b { [a, b] } else { [b, a] }, c, le)
            })
        })
        .collect();
    edge_entries.sort_unstable();
    let mut edges: Vec<[usize; 2]> = Vec::new();
    let mut cell_edges = vec![[0usize; 6]; cells.len()];
    let mut cell_signs = vec![[0.0f64; 6]; cells.len()];
    for (key, c, le) in edge_entries {
        if edges.last() != Some(&key) {
            edges.push(key);
        }
        let id = edges.len() - 1;
        cell_edges[c][le] = id;
        let [p, _] = LOCAL_EDGES[le];
        cell_signs[c][le] = if cells[c][p] == key[0] { 1.0 } else { -1.0 };
    }

    let mut boundary_cover = vec![0u32; edges.len()];
    for (f, _) in &boundary {
        for (p, q) in [(0, 1), (0, 2), (1, 2)] {
            let e = edges
                .binary_search(&[f[p], f[q]])
                .expect("boundary face edge must exist");
            boundary_cover[e] += 1;
        }
    }
    if let Some(e) = boundary_cover.iter().position(|&n| n % 2 == 1) {
        return Err(Error::NonConforming(format!(
            "edge {:?} is covered by an odd number of boundary faces (hanging node)",
            edges[e]
        )));
    }
    let is_boundary = boundary_cover.iter().map(|&n| n > 0).collect();

    // A vertex sitting exactly at the midpoint of an edge is a hanging node.
    let key = |x: &Vec3| {
        [
            (x.x + 0.0).to_bits(),
            (x.y + 0.0).to_bits(),
            (x.z + 0.0).to_bits(),
        ]
    };
    let positions: HashMap<[u64; 3], usize> =
        verts.iter().enumerate().map(|(i, x)| (key(x), i)).collect();
    for &[a, b] in &edges {
        let mid = (verts[a] + verts[b]) * 0.5;
        if let Some(&m) = positions.get(&key(&mid)) {
            return Err(Error::NonConforming(format!(
                "vertex {m} hangs on edge ({a}, {b})"
            )));
        }
    }

    Ok(Topology {
        edges: EdgeTable {
            edges,
            cell_edges,
            cell_signs,
            is_boundary,
        },
        faces: FaceTable {
            interior,
            boundary,
            neighbors,
            cell_interior_faces,
        },
    })
}
