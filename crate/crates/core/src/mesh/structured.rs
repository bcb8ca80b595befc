//! Structured Kuhn (Freudenthal) meshes of the benchmark domains.

use std::collections::BTreeMap;

use super::TetMesh;
use crate::{Error, Result, Vec3};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DomainKind {
    /// `(0,1)^3`, one subdomain.
    UnitCube,
    /// `(-1,1)x(-1,1)x(0,1)` minus `(0,1)x(-1,0)x(0,1)`; re-entrant edge on the z-axis.
    LShape,
    /// `(0,1)^3` split into the inner box `[0.25,0.75]^3` (subdomain 0) and its complement (subdomain 1).
    CubeWithInnerBox,
}

impl DomainKind {
    pub fn name(self) -> &'static str {
        match self {
            DomainKind::UnitCube => "unit_cube",
            DomainKind::LShape => "lshape3d",
            DomainKind::CubeWithInnerBox => "cube_with_inner_box",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "unit_cube" => Some(DomainKind::UnitCube),
            "lshape3d" | "lshape" => Some(DomainKind::LShape),
            "cube_with_inner_box" => Some(DomainKind::CubeWithInnerBox),
            _ => None,
        }
    }

    pub fn num_subdomains(self) -> usize {
        match self {
            DomainKind::CubeWithInnerBox => 2,
            _ => 1,
        }
    }
}

/// Inner box of [`DomainKind::CubeWithInnerBox`], as an open set.
pub fn in_inner_box(x: &Vec3) -> bool {
    (x.x - 0.5)
        .abs()
        .max((x.y - 0.5).abs())
        .max((x.z - 0.5).abs())
        < 0.25
}

/// Builds `n` sub-cubes per unit length, each split into six Kuhn tetrahedra
/// around its main diagonal.
pub fn build_structured_domain(kind: DomainKind, n: usize) -> Result<TetMesh> {
    if n == 0 {
        return Err(Error::InvalidParameter("n must be at least 1".into()));
    }
    if kind == DomainKind::CubeWithInnerBox && !n.is_multiple_of(4) {
        return Err(Error::InvalidParameter(format!(
            "n = {n}: the partitioned cube needs n to be a multiple of 4"
        )));
    }
    let h = 1.0 / n as f64;
    // Integer cube ranges in grid units.
    let (x0, x1, y0, y1, z1) = match kind {
        DomainKind::LShape => (-(n as i64), n as i64, -(n as i64), n as i64, n as i64),
        _ => (0, n as i64, 0, n as i64, n as i64),
    };
    let keep = |i: i64, j: i64| -> bool { !(kind == DomainKind::LShape && i >= 0 && j < 0) };

    let mut index: BTreeMap<(i64, i64, i64), usize> = BTreeMap::new();
    let mut vertices = Vec::new();
    let mut cells = Vec::new();
    let mut labels = Vec::new();
    // Orders of axes along the Kuhn paths from corner 000 to 111.
    const PATHS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];

    // Vertex numbering follows the grid (z slowest), independent of cube order.
    let mut grid_points = Vec::new();
    for k in 0..=z1 {
        for j in y0..=y1 {
            for i in x0..=x1 {
                let used = [(i - 1, j - 1), (i - 1, j), (i, j - 1), (i, j)]
                    .iter()
                    .any(|&(ci, cj)| ci >= x0 && ci < x1 && cj >= y0 && cj < y1 && keep(ci, cj));
                if used {
                    grid_points.push((i, j, k));
                }
            }
        }
    }
    for p in grid_points {
        index.insert(p, vertices.len());
        vertices.push(Vec3::new(p.0 as f64 * h, p.1 as f64 * h, p.2 as f64 * h));
    }

    for k in 0..z1 {
        for j in y0..y1 {
            for i in x0..x1 {
                if !keep(i, j) {
                    continue;
                }
                let centre = Vec3::new(
                    (i as f64 + 0.5) * h,
                    (j as f64 + 0.5) * h,
                    (k as f64 + 0.5) * h,
                );
                let label = match kind {
                    DomainKind::CubeWithInnerBox if !in_inner_box(&centre) => 1,
                    _ => 0,
                };
                for path in PATHS {
                    let mut corner = [0i64; 3];
                    let mut tet = [0usize; 4];
                    tet[0] = index[&(i, j, k)];
                    for (step, &axis) in path.iter().enumerate() {
                        corner[axis] = 1;
                        tet[step + 1] = index[&(i + corner[0], j + corner[1], k + corner[2])];
                    }
                    cells.push(tet);
                    labels.push(label);
                }
            }
        }
    }
    TetMesh::with_subdomain_count(vertices, cells, labels, kind.num_subdomains())
}
