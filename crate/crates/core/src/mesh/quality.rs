use super::{TetMesh, LOCAL_EDGES};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeshQuality {
    pub h_max: f64,
    pub h_min: f64,
    /// Smallest dihedral angle over all cells, in radians.
    pub min_dihedral: f64,
    pub cell_count: usize,
    /// Number of interior edges, i.e. the dimension of the edge element space.
    pub dof_estimate: usize,
}

/// Longest edge of the cell.
pub fn cell_diameter(mesh: &TetMesh, cell: usize) -> f64 {
    let v = mesh.cell_vertices(cell);
    LOCAL_EDGES
        .iter()
        .map(|&[p, q]| (v[p] - v[q]).norm())
        .fold(0.0, f64::max)
}

/// The six dihedral angles of a cell, ordered like [`LOCAL_EDGES`].
pub fn dihedral_angles(mesh: &TetMesh, cell: usize) -> [f64; 6] {
    let v = mesh.cell_vertices(cell);
    // inward normal of the face opposite vertex i
    let normal = |i: usize| {
        let others: Vec<usize> = (0..4).filter(|&j| j != i).collect();
        let (a, b, c) = (v[others[0]], v[others[1]], v[others[2]]);
        let mut n = (b - a).cross(&(c - a)).normalize();
        if n.dot(&(v[i] - a)) < 0.0 {
            n = -n;
        }
        n
    };
    let normals: [_; 4] = std::array::from_fn(normal);
    LOCAL_EDGES.map(|[p, q]| {
        let (k, l) = match (p, q) {
            (0, 1) => (2, 3),
            (0, 2) => (1, 3),
            (0, 3) => (1, 2),
            (1, 2) => (0, 3),
            (1, 3) => (0, 2),
            _ => (0, 1),
        };
        std::f64::consts::PI - normals[k].dot(&normals[l]).clamp(-1.0, 1.0).acos()
    })
}

pub fn mesh_quality_stats(mesh: &TetMesh) -> MeshQuality {
    let mut h_max: f64 = 0.0;
    let mut h_min = f64::INFINITY;
    let mut min_dihedral = f64::INFINITY;
    for c in 0..mesh.num_cells() {
        let h = cell_diameter(mesh, c);
        h_max = h_max.max(h);
        h_min = h_min.min(h);
        min_dihedral = dihedral_angles(mesh, c)
            .iter()
            .copied()
            .fold(min_dihedral, f64::min);
    }
    let mut edges: Vec<[usize; 2]> = mesh
        .cells()
        .iter()
        .flat_map(|cell| {
            LOCAL_EDGES
                .iter()
                .map(move |&[p, q]| sorted2(cell[p], cell[q]))
        })
        .collect();
    edges.sort_unstable();
    edges.dedup();
    let mut boundary: Vec<[usize; 2]> = mesh
        .boundary_faces()
        .iter()
        .flat_map(|f| {
            [
                sorted2(f[0], f[1]),
                sorted2(f[0], f[2]),
                sorted2(f[1], f[2]),
            ]
        })
        .collect();
    boundary.sort_unstable();
    boundary.dedup();
    MeshQuality {
        h_max,
        h_min,
        min_dihedral,
        cell_count: mesh.num_cells(),
        dof_estimate: edges.len() - boundary.len(),
    }
}

fn sorted2(a: usize, b: usize) -> [usize; 2] {
    if a < b {
        [a, b]
    } else {
        [b, a]
    }
}
