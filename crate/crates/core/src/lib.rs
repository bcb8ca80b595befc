//! Bilinear optimal control of the real curl-curl equation.
//!
//! The state equation is
//!
//! ```text
//! curl(chi curl y) + (kappa . u) y = f   in Omega,     y x n = 0 on Gamma,
//! ```
//!
//! where the control `u` is a vector with one entry per subdomain of a fixed
//! partition, constrained to a box `a <= u <= b`. The crate discretizes the
//! state and adjoint equations with lowest-order Nedelec (Whitney edge)
//! elements on tetrahedral meshes, solves the discrete optimality system with a
//! semi-smooth Newton method, evaluates residual a posteriori error indicators
//! and drives an adaptive refinement loop based on longest-edge bisection.
//!
//! Module map:
//!
//! * [`mesh`]: tetrahedral meshes, topology, bisection refinement.
//! * [`quadrature`]: positive-weight rules on edges, triangles and tetrahedra.
//! * [`field`]: analytic vector fields used as problem data.
//! * [`nedelec`]: the edge element space, assembly, interpolation and norms.
//! * [`linalg`]: sparse matrices and the SPD solvers behind every PDE solve.
//! * [`pde`]: problem data and the state/adjoint solvers.
//! * [`control`]: reduced cost, gradient, Hessian and the semi-smooth Newton solver.
//! * [`estimator`]: residual indicators and data oscillation.
//! * [`adapt`]: marking, the adaptive loop, uniform sweeps and convergence tables.
//! * [`cases`]: the benchmark problems.
//! * [`io`]: MSH v2 reader and legacy VTK writer.
//! * [`reference`]: reference values and tolerances used by the acceptance checks.

// `!(x > 0.0)` style checks deliberately reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod adapt;
pub mod cases;
pub mod control;
pub mod error;
pub mod estimator;
pub mod field;
pub mod io;
pub mod linalg;
pub mod mesh;
pub mod nedelec;
pub mod pde;
pub mod quadrature;
pub mod reference;

pub use error::{Error, Result};

/// Points and vectors in physical space.
pub type Vec3 = nalgebra::Vector3<f64>;
