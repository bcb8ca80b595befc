//! Conforming tetrahedral meshes with a subdomain partition.
//!
//! A [`TetMesh`] is immutable once built: refinement returns a new mesh. Cells
//! are stored with positive orientation and carry a 0-based subdomain index
//! (the 1-based labels used in files are translated at the I/O boundary).

mod quality;
mod refine;
mod structured;
mod topology;

pub use quality::{cell_diameter, dihedral_angles, mesh_quality_stats, MeshQuality};
pub use refine::bisect_marked;
pub use structured::{build_structured_domain, in_inner_box, DomainKind};
pub use topology::{extract_topology, EdgeTable, FaceTable, InteriorFace, Topology};

use crate::{Error, Result, Vec3};

/// Local vertex pairs of the six edges of a tetrahedron.
pub const LOCAL_EDGES: [[usize; 2]; 6] = [[0, 1], [0, 2], [0, 3], [1, 2], [1, 3], [2, 3]];

/// Local vertices of the face opposite to vertex `i`.
pub const LOCAL_FACES: [[usize; 3]; 4] = [[1, 2, 3], [0, 2, 3], [0, 1, 3], [0, 1, 2]];

#[derive(Debug, Clone, PartialEq)]
pub struct TetMesh {
    vertices: Vec<Vec3>,
    cells: Vec<[usize; 4]>,
    subdomains: Vec<usize>,
    num_subdomains: usize,
    boundary_faces: Vec<[usize; 3]>,
}

impl TetMesh {
    /// Builds a mesh, reorienting negatively oriented cells by swapping their last
    /// two vertices. Degenerate cells and dangling indices are rejected.
    pub fn new(
        vertices: Vec<Vec3>,
        mut cells: Vec<[usize; 4]>,
        subdomains: Vec<usize>,
    ) -> Result<Self> {
        if cells.len() != subdomains.len() {
            return Err(Error::InvalidParameter(format!(
                "{} cells but {} subdomain labels",
                cells.len(),
                subdomains.len()
            )));
        }
        for (c, cell) in cells.iter_mut().enumerate() {
            if cell.iter().any(|&v| v >= vertices.len()) {
                return Err(Error::InvalidParameter(format!(
                    "cell {c} references a missing vertex"
                )));
            }
            let vol = signed_volume(&vertices, cell);
            if !(vol.abs() > 0.0) {
                return Err(Error::InvalidParameter(format!("cell {c} is degenerate")));
            }
            if vol < 0.0 {
                cell.swap(2, 3);
            }
        }
        let num_subdomains = subdomains.iter().max().map_or(0, |&m| m + 1);
        let boundary_faces = topology::boundary_faces(&cells);
        Ok(Self {
            vertices,
            cells,
            subdomains,
            num_subdomains,
            boundary_faces,
        })
    }

    /// Same as [`TetMesh::new`] but with a declared number of subdomains, so that
    /// partitions with an empty subdomain keep their width.
    pub fn with_subdomain_count(
        vertices: Vec<Vec3>,
        cells: Vec<[usize; 4]>,
        subdomains: Vec<usize>,
        num_subdomains: usize,
    ) -> Result<Self> {
        let mut mesh = Self::new(vertices, cells, subdomains)?;
        if mesh.num_subdomains > num_subdomains {
            return Err(Error::InvalidParameter(format!(
                "subdomain label {} exceeds declared count {num_subdomains}",
                mesh.num_subdomains - 1
            )));
        }
        mesh.num_subdomains = num_subdomains;
        Ok(mesh)
    }

    pub fn vertices(&self) -> &[Vec3] {
        &self.vertices
    }

    pub fn cells(&self) -> &[[usize; 4]] {
        &self.cells
    }

    pub fn subdomains(&self) -> &[usize] {
        &self.subdomains
    }

    pub fn subdomain(&self, cell: usize) -> usize {
        self.subdomains[cell]
    }

    pub fn num_subdomains(&self) -> usize {
        self.num_subdomains
    }

    pub fn num_cells(&self) -> usize {
        self.cells.len()
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }

    /// Faces that belong to exactly one cell, as sorted vertex triples.
    pub fn boundary_faces(&self) -> &[[usize; 3]] {
        &self.boundary_faces
    }

    pub fn cell_vertices(&self, cell: usize) -> [Vec3; 4] {
        self.cells[cell].map(|v| self.vertices[v])
    }

    pub fn volume(&self, cell: usize) -> f64 {
        signed_volume(&self.vertices, &self.cells[cell])
    }

    pub fn centroid(&self, cell: usize) -> Vec3 {
        let [a, b, c, d] = self.cell_vertices(cell);
        (a + b + c + d) * 0.25
    }
}

pub(crate) fn signed_volume(vertices: &[Vec3], cell: &[usize; 4]) -> f64 {
    let [a, b, c, d] = cell.map(|v| vertices[v]);
    (b - a).cross(&(c - a)).dot(&(d - a)) / 6.0
}
