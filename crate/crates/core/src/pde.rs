//! Problem data and the state/adjoint solvers.
//!
//! For a control `u` the operator is `A(u) = K_chi + sum_k u_k M_k`, where
//! `M_k` is the mass matrix restricted to subdomain `k` and weighted by
//! `kappa_k`. The state solves `A(u) y = (f, .)` and the adjoint solves
//! `A(u) p = (y - y_target, .) + (curl y - e_target, curl .)`, both with
//! prescribed tangential boundary values (zero unless the data say otherwise).

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::{Arc, Mutex};

use crate::field::AnalyticField;
use crate::linalg::{CsrMatrix, SpdSolver, DEFAULT_TOL};
use crate::nedelec::{
    assemble_functionals, assemble_mass, assemble_stiffness, interpolate_edges, DataQuadrature,
    FEField, FESpace, Functional,
};
use crate::quadrature::{cell_quadrature, tet_rule};
use crate::{Error, Result};

/// Coefficients, data and control bounds of one optimal control problem.
#[derive(Debug, Clone)]
pub struct ProblemData {
    /// `chi` per subdomain.
    pub chi: Vec<f64>,
    /// `kappa` per subdomain.
    pub kappa: Vec<f64>,
    pub f: AnalyticField,
    pub y_target: AnalyticField,
    pub e_target: AnalyticField,
    pub alpha: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    /// Tangential boundary data of the state (homogeneous when `None`).
    pub state_boundary: Option<AnalyticField>,
    /// Tangential boundary data of the adjoint (homogeneous when `None`).
    pub adjoint_boundary: Option<AnalyticField>,
    pub quadrature: DataQuadrature,
}

impl ProblemData {
    pub fn num_controls(&self) -> usize {
        self.kappa.len()
    }

    pub fn validate(&self) -> Result<()> {
        let l = self.kappa.len();
        if l == 0 {
            return Err(Error::InvalidParameter(
                "at least one subdomain is required".into(),
            ));
        }
        for (name, v) in [
            ("chi", &self.chi),
            ("lower", &self.lower),
            ("upper", &self.upper),
        ] {
            if v.len() != l {
                return Err(Error::InvalidParameter(format!(
                    "{name} has {} entries, expected {l}",
                    v.len()
                )));
            }
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::Domain(format!(
                "alpha = {} must be positive",
                self.alpha
            )));
        }
        for k in 0..l {
            if !(self.chi[k] > 0.0) || !(self.kappa[k] > 0.0) {
                return Err(Error::Domain(format!(
                    "chi and kappa must be positive (subdomain {})",
                    k + 1
                )));
            }
            if !(0.0 < self.lower[k] && self.lower[k] < self.upper[k]) {
                return Err(Error::Domain(format!(
                    "bounds must satisfy 0 < a < b (subdomain {}: a = {}, b = {})",
                    k + 1,
                    self.lower[k],
                    self.upper[k]
                )));
            }
        }
        Ok(())
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

const CACHE_SLOTS: usize = 4;

/// A problem discretized on one space: cached matrices, data vectors, boundary
/// lifts and a small cache of factorizations keyed by the control.
#[derive(Debug)]
pub struct DiscreteProblem {
    space: Arc<FESpace>,
    data: ProblemData,
    tol_linear: f64,
    stiffness_chi: CsrMatrix,
    /// `M + K` with unit coefficients, the Gram matrix of the tracking terms.
    tracking: CsrMatrix,
    kappa_mass: Vec<CsrMatrix>,
    load: Vec<f64>,
    target: Vec<f64>,
    target_norm_sq: f64,
    state_lift: Vec<f64>,
    adjoint_lift: Vec<f64>,
    cache: Mutex<Vec<(Vec<f64>, Arc<SpdSolver>)>>,
    factorizations: AtomicUsize,
}

impl DiscreteProblem {
    pub fn new(space: Arc<FESpace>, data: ProblemData, tol_linear: f64) -> Result<Self> {
        data.validate()?;
        let mesh = space.mesh().clone();
        if mesh.num_subdomains() != data.num_controls() {
            return Err(Error::InvalidParameter(format!(
                "mesh has {} subdomains but the data define {} controls",
                mesh.num_subdomains(),
                data.num_controls()
            )));
        }
        if !(tol_linear > 0.0 && tol_linear < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "tol_linear = {tol_linear} must lie in (0, 1)"
            )));
        }
        let nc = mesh.num_cells();
        let chi_cells: Vec<f64> = mesh.subdomains().iter().map(|&k| data.chi[k]).collect();
        let stiffness_chi = assemble_stiffness(&space, &chi_cells)?;
        let mut tracking = assemble_stiffness(&space, &vec![1.0; nc])?;
        tracking.add_scaled(&assemble_mass(&space, &vec![1.0; nc])?, 1.0);
        let kappa_mass = (0..data.num_controls())
            .map(|k| {
                let c: Vec<f64> = mesh
                    .subdomains()
                    .iter()
                    .map(|&s| if s == k { data.kappa[k] } else { 0.0 })
                    .collect();
                assemble_mass(&space, &c)
            })
            .collect::<Result<Vec<_>>>()?;
        let q = &data.quadrature;
        let load = assemble_functionals(&space, Functional::Load(&data.f), q)?;
        let target = assemble_functionals(
            &space,
            Functional::Target {
                y_target: &data.y_target,
                e_target: &data.e_target,
            },
            q,
        )?;
        let rule = tet_rule(q.degree);
        let target_norm_sq: f64 = (0..nc)
            .map(|c| {
                cell_quadrature(&mesh.cell_vertices(c), rule, q.singular.as_ref())
                    .iter()
                    .map(|qp| {
                        qp.weight
                            * (data.y_target.eval(&qp.x).norm_squared()
                                + data.e_target.eval(&qp.x).norm_squared())
                    })
                    .sum::<f64>()
            })
            .sum();
        let lift = |b: &Option<AnalyticField>| -> Result<Vec<f64>> {
            let mut v = match b {
                Some(g) => interpolate_edges(&space, g)?,
                None => vec![0.0; space.num_edges()],
            };
            for &e in space.free_edges() {
                v[e] = 0.0;
            }
            Ok(v)
        };
        let state_lift = lift(&data.state_boundary)?;
        let adjoint_lift = lift(&data.adjoint_boundary)?;
        Ok(Self {
            space,
            data,
            tol_linear,
            stiffness_chi,
            tracking,
            kappa_mass,
            load,
            target,
            target_norm_sq,
            state_lift,
            adjoint_lift,
            cache: Mutex::new(Vec::new()),
            factorizations: AtomicUsize::new(0),
        })
    }

    /// Replaces the target functional `(y_target, w) + (e_target, curl w)` by a given
    /// edge vector, e.g. to manufacture a discrete problem with a known solution.
    /// `target_norm_sq` only shifts the cost by a constant.
    pub fn with_discrete_target(mut self, target: Vec<f64>, target_norm_sq: f64) -> Result<Self> {
        if target.len() != self.space.num_edges() {
            return Err(Error::SpaceMismatch);
        }
        self.target = target;
        self.target_norm_sq = target_norm_sq;
        Ok(self)
    }

    pub fn space(&self) -> &Arc<FESpace> {
        &self.space
    }

    pub fn data(&self) -> &ProblemData {
        &self.data
    }

    pub fn tol_linear(&self) -> f64 {
        self.tol_linear
    }

    /// `M_k` (kappa-weighted mass on subdomain `k`) over all edges.
    pub fn kappa_mass(&self, k: usize) -> &CsrMatrix {
        &self.kappa_mass[k]
    }

    /// `M + K` over all edges.
    pub fn tracking_matrix(&self) -> &CsrMatrix {
        &self.tracking
    }

    /// `(f, w)` for every edge basis function.
    pub fn load(&self) -> &[f64] {
        &self.load
    }

    /// `(y_target, w) + (e_target, curl w)` for every edge basis function.
    pub fn target(&self) -> &[f64] {
        &self.target
    }

    /// `||y_target||^2 + ||e_target||^2`.
    pub fn target_norm_sq(&self) -> f64 {
        self.target_norm_sq
    }

    pub fn state_lift(&self) -> &[f64] {
        &self.state_lift
    }

    pub fn adjoint_lift(&self) -> &[f64] {
        &self.adjoint_lift
    }

    pub fn check_control(&self, u: &[f64]) -> Result<()> {
        if u.len() != self.data.num_controls() {
            return Err(Error::InvalidParameter(format!(
                "control has {} entries, expected {}",
                u.len(),
                self.data.num_controls()
            )));
        }
        if let Some(k) = u.iter().position(|&v| !(v > 0.0 && v.is_finite())) {
            return Err(Error::Domain(format!(
                "control component u_{} = {} must be positive",
                k + 1,
                u[k]
            )));
        }
        Ok(())
    }

    /// `A(u)` over all edges.
    pub fn operator_full(&self, u: &[f64]) -> CsrMatrix {
        let mut a = self.stiffness_chi.clone();
        for (k, m) in self.kappa_mass.iter().enumerate() {
            a.add_scaled(m, u[k]);
        }
        a
    }

    /// Factorized free block of `A(u)`, reused for repeated requests with the same `u`.
    pub fn solver(&self, u: &[f64]) -> Result<Arc<SpdSolver>> {
        self.check_control(u)?;
        {
            let cache = self.cache.lock().expect("cache lock");
            if let Some((_, s)) = cache.iter().find(|(key, _)| key.as_slice() == u) {
                return Ok(s.clone());
            }
        }
        let solver = Arc::new(SpdSolver::new(
            self.space.restrict_matrix(&self.operator_full(u)),
            self.tol_linear,
        )?);
        self.factorizations.fetch_add(1, Ordering::Relaxed);
        let mut cache = self.cache.lock().expect("cache lock");
        if cache.len() >= CACHE_SLOTS {
            cache.remove(0);
        }
        cache.push((u.to_vec(), solver.clone()));
        Ok(solver)
    }

    /// Number of factorizations computed so far.
    pub fn factorization_count(&self) -> usize {
        self.factorizations.load(Ordering::Relaxed)
    }

    /// Free rows of `A(u) v - rhs` for a full edge vector `v`.
    pub fn operator_residual(&self, u: &[f64], v: &[f64], rhs: &[f64]) -> Vec<f64> {
        let av = self.operator_full(u).mul_vec(v);
        self.space
            .free_edges()
            .iter()
            .map(|&e| av[e] - rhs[e])
            .collect()
    }

    /// Solves `A(u) v = rhs` on the free rows with the boundary values of `lift`.
    fn solve_lifted(&self, u: &[f64], rhs: &[f64], lift: &[f64]) -> Result<FEField> {
        let solver = self.solver(u)?;
        let b = if lift.iter().any(|&v| v != 0.0) {
            let al = self.operator_full(u).mul_vec(lift);
            self.space
                .free_edges()
                .iter()
                .map(|&e| rhs[e] - al[e])
                .collect::<Vec<_>>()
        } else {
            self.space.restrict(rhs)
        };
        let (x, _) = solver.solve(&b)?;
        self.space.field_from_parts(&x, lift)
    }

    pub fn solve_state(&self, u: &[f64]) -> Result<FEField> {
        self.solve_lifted(u, &self.load, &self.state_lift)
    }

    /// Right-hand side `(y - y_target, w) + (curl y - e_target, curl w)` of the adjoint.
    pub fn adjoint_rhs(&self, y: &FEField) -> Result<Vec<f64>> {
        self.space.check(y)?;
        let mut r = self.tracking.mul_vec(y.values());
        for (ri, ti) in r.iter_mut().zip(&self.target) {
            *ri -= ti;
        }
        Ok(r)
    }

    pub fn solve_adjoint(&self, u: &[f64], y: &FEField) -> Result<FEField> {
        let rhs = self.adjoint_rhs(y)?;
        self.solve_lifted(u, &rhs, &self.adjoint_lift)
    }

    /// `||v||` of the free residual vector, for diagnostics.
    pub fn residual_norm(&self, u: &[f64], v: &FEField, rhs: &[f64]) -> f64 {
        norm(&self.operator_residual(u, v.values(), rhs))
    }
}

/// One-shot state solve with the default linear tolerance.
pub fn solve_state(space: Arc<FESpace>, data: &ProblemData, u: &[f64]) -> Result<FEField> {
    DiscreteProblem::new(space, data.clone(), DEFAULT_TOL)?.solve_state(u)
}

/// One-shot adjoint solve with the default linear tolerance.
pub fn solve_adjoint(
    space: Arc<FESpace>,
    data: &ProblemData,
    u: &[f64],
    y: &FEField,
) -> Result<FEField> {
    DiscreteProblem::new(space, data.clone(), DEFAULT_TOL)?.solve_adjoint(u, y)
}
