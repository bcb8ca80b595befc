//! Lowest-order Nedelec (Whitney edge) elements.
//!
//! One degree of freedom per mesh edge: the circulation along the edge, oriented
//! from the lower to the higher global vertex id. On a cell the basis function
//! of local edge `(i, j)` is `s (l_i grad l_j - l_j grad l_i)` with `s` the cell's
//! orientation sign for that edge; its curl is the constant `2 s grad l_i x grad l_j`.
//!
//! Fields store one value per edge, boundary edges included. Homogeneous fields
//! keep zeros there; inhomogeneous tangential traces are imposed by lifting
//! boundary values (see [`FESpace::field_from_parts`]).

mod assembly;
mod norms;

pub use assembly::{
    assemble_functionals, assemble_mass, assemble_operator, assemble_operator_full,
    assemble_stiffness, Functional,
};
pub use norms::{error_norms, interpolate_edges, interpolate_field, ErrorNorms};

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use crate::linalg::{CsrMatrix, SparsityPattern};
use crate::mesh::{cell_diameter, extract_topology, TetMesh, Topology, LOCAL_EDGES};
use crate::quadrature::SingularRefinement;
use crate::{Error, Result, Vec3};

static NEXT_SPACE_ID: AtomicU64 = AtomicU64::new(1);

/// Quadrature settings for integrals of analytic data.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataQuadrature {
    /// Polynomial exactness degree of the cell rule.
    pub degree: usize,
    /// Graded subdivision of the cells touching a singular line.
    pub singular: Option<SingularRefinement>,
}

impl Default for DataQuadrature {
    fn default() -> Self {
        Self {
            degree: 5,
            singular: None,
        }
    }
}

/// Affine data of one cell.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellGeometry {
    /// Gradients of the four barycentric coordinates.
    pub grads: [Vec3; 4],
    pub volume: f64,
    /// Longest edge.
    pub diameter: f64,
}

impl CellGeometry {
    fn new(mesh: &TetMesh, cell: usize) -> Self {
        let v = mesh.cell_vertices(cell);
        let j = nalgebra::Matrix3::from_columns(&[v[1] - v[0], v[2] - v[0], v[3] - v[0]]);
        let inv = j.try_inverse().expect("cells are non-degenerate");
        let g1 = inv.row(0).transpose();
        let g2 = inv.row(1).transpose();
        let g3 = inv.row(2).transpose();
        Self {
            grads: [-(g1 + g2 + g3), g1, g2, g3],
            volume: mesh.volume(cell),
            diameter: cell_diameter(mesh, cell),
        }
    }

    /// Curl of the six oriented-by-local-order Whitney functions (without cell signs).
    pub fn local_curls(&self) -> [Vec3; 6] {
        LOCAL_EDGES.map(|[i, j]| 2.0 * self.grads[i].cross(&self.grads[j]))
    }

    /// Local Whitney functions (without cell signs) at barycentric point `l`.
    pub fn local_values(&self, l: &[f64; 4]) -> [Vec3; 6] {
        LOCAL_EDGES.map(|[i, j]| self.grads[j] * l[i] - self.grads[i] * l[j])
    }
}

/// The edge element space on a mesh.
#[derive(Debug)]
pub struct FESpace {
    id: u64,
    mesh: Arc<TetMesh>,
    topology: Topology,
    geometry: Vec<CellGeometry>,
    free: Vec<usize>,
    dof_of_edge: Vec<Option<usize>>,
    full_pattern: Arc<SparsityPattern>,
    cell_slots: Vec<[u32; 36]>,
    free_pattern: Arc<SparsityPattern>,
    free_to_full_slot: Vec<u32>,
}

impl FESpace {
    /// Builds the space; free degrees of freedom are the interior edges in ascending id.
    pub fn new(mesh: Arc<TetMesh>) -> Result<Self> {
        let topology = extract_topology(&mesh)?;
        let geometry: Vec<CellGeometry> = (0..mesh.num_cells())
            .map(|c| CellGeometry::new(&mesh, c))
            .collect();
        let ne = topology.edges.len();
        let mut free = Vec::new();
        let mut dof_of_edge = vec![None; ne];
        for (e, dof) in dof_of_edge.iter_mut().enumerate() {
            if !topology.edges.is_boundary[e] {
                *dof = Some(free.len());
                free.push(e);
            }
        }
        let cell_edges = &topology.edges.cell_edges;
        let full_pattern = Arc::new(SparsityPattern::from_entries(
            ne,
            cell_edges.iter().flat_map(|es| {
                es.iter()
                    .flat_map(move |&a| es.iter().map(move |&b| (a, b)))
            }),
        ));
        let cell_slots = cell_edges
            .iter()
            .map(|es| {
                let mut slots = [0u32; 36];
                for (a, &ea) in es.iter().enumerate() {
                    for (b, &eb) in es.iter().enumerate() {
                        slots[6 * a + b] = full_pattern
                            .find(ea, eb)
                            .expect("pattern covers cell couplings")
                            as u32;
                    }
                }
                slots
            })
            .collect();
        let free_pattern = Arc::new(SparsityPattern::from_entries(
            free.len(),
            free.iter().enumerate().flat_map(|(i, &e)| {
                let dof_of_edge = &dof_of_edge;
                full_pattern
                    .row(e)
                    .iter()
                    .filter_map(move |&f| dof_of_edge[f].map(|j| (i, j)))
            }),
        ));
        let mut free_to_full_slot = Vec::with_capacity(free_pattern.nnz());
        for (i, &e) in free.iter().enumerate() {
            for &j in free_pattern.row(i) {
                free_to_full_slot.push(
                    full_pattern
                        .find(e, free[j])
                        .expect("free pattern is a sub-pattern") as u32,
                );
            }
        }
        Ok(Self {
            id: NEXT_SPACE_ID.fetch_add(1, Ordering::Relaxed),
            mesh,
            topology,
            geometry,
            free,
            dof_of_edge,
            full_pattern,
            cell_slots,
            free_pattern,
            free_to_full_slot,
        })
    }

    /// Unique id of this space instance (fields remember it).
    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn mesh(&self) -> &Arc<TetMesh> {
        &self.mesh
    }

    pub fn topology(&self) -> &Topology {
        &self.topology
    }

    pub fn geometry(&self, cell: usize) -> &CellGeometry {
        &self.geometry[cell]
    }

    /// Number of free (interior-edge) degrees of freedom.
    pub fn dim(&self) -> usize {
        self.free.len()
    }

    pub fn num_edges(&self) -> usize {
        self.topology.edges.len()
    }

    /// Edge ids of the free degrees of freedom, ascending.
    pub fn free_edges(&self) -> &[usize] {
        &self.free
    }

    pub fn dof_of_edge(&self, edge: usize) -> Option<usize> {
        self.dof_of_edge[edge]
    }

    pub fn full_pattern(&self) -> &Arc<SparsityPattern> {
        &self.full_pattern
    }

    pub(crate) fn cell_slots(&self, cell: usize) -> &[u32; 36] {
        &self.cell_slots[cell]
    }

    pub fn cell_edges(&self, cell: usize) -> &[usize; 6] {
        &self.topology.edges.cell_edges[cell]
    }

    pub fn cell_signs(&self, cell: usize) -> &[f64; 6] {
        &self.topology.edges.cell_signs[cell]
    }

    /// Free-free block of a matrix assembled over all edges.
    pub fn restrict_matrix(&self, full: &CsrMatrix) -> CsrMatrix {
        assert_eq!(full.dim(), self.num_edges());
        let mut m = CsrMatrix::zeros(self.free_pattern.clone());
        let vals = full.values();
        for (dst, &src) in m.values_mut().iter_mut().zip(&self.free_to_full_slot) {
            *dst = vals[src as usize];
        }
        m
    }

    /// Free entries of an edge vector.
    pub fn restrict(&self, full: &[f64]) -> Vec<f64> {
        self.free.iter().map(|&e| full[e]).collect()
    }

    /// Edge vector with the given free entries and zeros on the boundary.
    pub fn extend(&self, free: &[f64]) -> Vec<f64> {
        let mut full = vec![0.0; self.num_edges()];
        for (&e, &v) in self.free.iter().zip(free) {
            full[e] = v;
        }
        full
    }

    pub fn zero_field(&self) -> FEField {
        FEField {
            space_id: self.id,
            values: vec![0.0; self.num_edges()],
        }
    }

    /// Homogeneous field from free values.
    pub fn field_from_free(&self, free: &[f64]) -> Result<FEField> {
        if free.len() != self.dim() {
            return Err(Error::SpaceMismatch);
        }
        Ok(FEField {
            space_id: self.id,
            values: self.extend(free),
        })
    }

    /// Field from free values plus boundary values taken from `lift` (interior entries of `lift` ignored).
    pub fn field_from_parts(&self, free: &[f64], lift: &[f64]) -> Result<FEField> {
        if free.len() != self.dim() || lift.len() != self.num_edges() {
            return Err(Error::SpaceMismatch);
        }
        let mut values = lift.to_vec();
        for (&e, &v) in self.free.iter().zip(free) {
            values[e] = v;
        }
        Ok(FEField {
            space_id: self.id,
            values,
        })
    }

    /// Field from a full edge vector.
    pub fn field_from_edges(&self, values: Vec<f64>) -> Result<FEField> {
        if values.len() != self.num_edges() {
            return Err(Error::SpaceMismatch);
        }
        Ok(FEField {
            space_id: self.id,
            values,
        })
    }

    pub fn check(&self, field: &FEField) -> Result<()> {
        if field.space_id != self.id || field.values.len() != self.num_edges() {
            return Err(Error::SpaceMismatch);
        }
        Ok(())
    }

    /// Oriented coefficients of the six local basis functions of a cell.
    pub fn local_coefficients(&self, field: &FEField, cell: usize) -> [f64; 6] {
        let edges = self.cell_edges(cell);
        let signs = self.cell_signs(cell);
        std::array::from_fn(|k| signs[k] * field.values[edges[k]])
    }

    /// Value of a field at barycentric point `l` of `cell`.
    pub fn eval(&self, field: &FEField, cell: usize, l: &[f64; 4]) -> Vec3 {
        let c = self.local_coefficients(field, cell);
        let w = self.geometry[cell].local_values(l);
        (0..6).fold(Vec3::zeros(), |acc, k| acc + w[k] * c[k])
    }

    /// Constant curl of a field on `cell`.
    pub fn curl(&self, field: &FEField, cell: usize) -> Vec3 {
        let c = self.local_coefficients(field, cell);
        let w = self.geometry[cell].local_curls();
        (0..6).fold(Vec3::zeros(), |acc, k| acc + w[k] * c[k])
    }

    /// Barycentric coordinates of a physical point with respect to `cell`.
    pub fn barycentric(&self, cell: usize, x: &Vec3) -> [f64; 4] {
        let cell_v = self.mesh.cells()[cell];
        let verts = self.mesh.vertices();
        let g = &self.geometry[cell].grads;
        // l_i vanishes on the face opposite vertex i, which contains vertex (i + 1) % 4
        std::array::from_fn(|i| g[i].dot(&(x - verts[cell_v[(i + 1) % 4]])))
    }

    /// Discrete gradient: circulations of the piecewise linear function with vertex values `psi`.
    pub fn discrete_gradient(&self, psi: &[f64]) -> Vec<f64> {
        self.topology
            .edges
            .edges
            .iter()
            .map(|&[a, b]| psi[b] - psi[a])
            .collect()
    }
}

/// Coefficients of a discrete field, one per edge of its space.
#[derive(Debug, Clone, PartialEq)]
pub struct FEField {
    space_id: u64,
    values: Vec<f64>,
}

impl FEField {
    pub fn space_id(&self) -> u64 {
        self.space_id
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }
}
