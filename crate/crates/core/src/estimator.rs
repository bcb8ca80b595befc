//! Residual a posteriori error indicators and data oscillation.
//!
//! For lowest-order edge elements with cellwise constant `chi`, `div y_h = 0`
//! and `curl(chi curl y_h) = 0` inside every cell, so the element residuals
//! reduce to data terms plus the zeroth-order part. With `c = kappa . u`:
//!
//! ```text
//! E_{T,1}^2 = h^2 |div f|_T^2            + h/2 sum_S |[(f - c y_h) . n]|_S^2
//! E_{T,2}^2 = h^2 |f - c y_h|_T^2        + h/2 sum_S |[chi curl y_h x n]|_S^2
//! F_{T,1}^2 = h^2 |div y_target|_T^2     + h/2 sum_S |[(y_h - y_target - c p_h) . n]|_S^2
//! F_{T,2}^2 = h^2 |y_h - y_target - curl e_target - c p_h|_T^2
//!           + h/2 sum_S |[(curl y_h - e_target - chi curl p_h) x n]|_S^2
//! ```
//!
//! Sums run over the interior faces of `T`; every face integral is computed once
//! and shared by its two cells, each weighting it with its own diameter.

use rayon::prelude::*;

use crate::field::AnalyticField;
use crate::mesh::{InteriorFace, TetMesh};
use crate::nedelec::{DataQuadrature, FEField, FESpace};
use crate::pde::DiscreteProblem;
use crate::quadrature::{cell_quadrature, tet_rule, triangle_rule};
use crate::{Error, Result, Vec3};

const FACE_DEGREE: usize = 4;

/// Per-cell state and adjoint indicators with their global totals.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorField {
    pub est_state: Vec<f64>,
    pub est_adjoint: Vec<f64>,
    pub e_st: f64,
    pub e_adj: f64,
    pub e_ocp: f64,
}

impl IndicatorField {
    pub fn new(est_state: Vec<f64>, est_adjoint: Vec<f64>) -> Self {
        let e_st = est_state.iter().map(|v| v * v).sum::<f64>().sqrt();
        let e_adj = est_adjoint.iter().map(|v| v * v).sum::<f64>().sqrt();
        Self {
            est_state,
            est_adjoint,
            e_st,
            e_adj,
            e_ocp: e_st.hypot(e_adj),
        }
    }

    /// `sqrt(E_st,T^2 + E_adj,T^2)` per cell.
    pub fn combined(&self) -> Vec<f64> {
        self.est_state
            .iter()
            .zip(&self.est_adjoint)
            .map(|(a, b)| a.hypot(*b))
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimatorTotals {
    pub e_st: f64,
    pub e_adj: f64,
    pub e_ocp: f64,
}

pub fn total_estimator(ind: &IndicatorField) -> EstimatorTotals {
    EstimatorTotals {
        e_st: ind.e_st,
        e_adj: ind.e_adj,
        e_ocp: ind.e_st.hypot(ind.e_adj),
    }
}

/// Physical quadrature points and weights on a face.
fn face_points(mesh: &TetMesh, face: &InteriorFace) -> Vec<(Vec3, f64)> {
    let [a, b, c] = face.vertices.map(|v| mesh.vertices()[v]);
    let rule = triangle_rule(FACE_DEGREE);
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(l, w)| (a * l[0] + b * l[1] + c * l[2], w * 2.0 * face.area))
        .collect()
}

fn reaction(problem: &DiscreteProblem, u: &[f64], cell: usize) -> f64 {
    let k = problem.space().mesh().subdomain(cell);
    problem.data().kappa[k] * u[k]
}

fn chi(problem: &DiscreteProblem, cell: usize) -> f64 {
    problem.data().chi[problem.space().mesh().subdomain(cell)]
}

/// Integrates a cell quantity with the data quadrature of the problem.
fn cell_integral(
    space: &FESpace,
    quad: &DataQuadrature,
    cell: usize,
    g: impl Fn(&Vec3, &[f64; 4]) -> f64,
) -> f64 {
    let rule = tet_rule(quad.degree.max(4));
    cell_quadrature(
        &space.mesh().cell_vertices(cell),
        rule,
        quad.singular.as_ref(),
    )
    .iter()
    .map(|qp| qp.weight * g(&qp.x, &qp.bary))
    .sum()
}

/// Adds `h_T / 2 * face_value` to both cells of every interior face.
fn distribute_faces(space: &FESpace, face_values: &[[f64; 2]], cells: &mut [[f64; 2]]) {
    for (f, face) in space.topology().faces.interior.iter().enumerate() {
        for c in [face.plus, face.minus] {
            let h = space.geometry(c).diameter;
            cells[c][0] += 0.5 * h * face_values[f][0];
            cells[c][1] += 0.5 * h * face_values[f][1];
        }
    }
}

fn finish(cells: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    cells
        .into_iter()
        .map(|[a, b]| [a.sqrt(), b.sqrt()])
        .collect()
}

fn require_div(f: &AnalyticField, name: &'static str) -> Result<()> {
    if f.has_div() {
        Ok(())
    } else {
        Err(Error::Missing(name))
    }
}

/// `(E_{T,1}, E_{T,2})` for every cell.
pub fn state_indicators(
    problem: &DiscreteProblem,
    u: &[f64],
    y: &FEField,
) -> Result<Vec<[f64; 2]>> {
    let space = problem.space();
    space.check(y)?;
    problem.check_control(u)?;
    let data = problem.data();
    require_div(&data.f, "divergence of the load")?;
    let mesh = space.mesh();
    let quad = &data.quadrature;

    let mut cells: Vec<[f64; 2]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let h2 = space.geometry(c).diameter.powi(2);
            let r = reaction(problem, u, c);
            let div_term = cell_integral(space, quad, c, |x, _| {
                data.f.div(x).expect("checked").powi(2)
            });
            let res_term = cell_integral(space, quad, c, |x, l| {
                (data.f.eval(x) - space.eval(y, c, l) * r).norm_squared()
            });
            [h2 * div_term, h2 * res_term]
        })
        .collect();

    let faces = &space.topology().faces.interior;
    let face_values: Vec<[f64; 2]> = faces
        .par_iter()
        .map(|face| {
            let (p, m) = (face.plus, face.minus);
            let (rp, rm) = (reaction(problem, u, p), reaction(problem, u, m));
            let normal_jump: f64 = face_points(mesh, face)
                .iter()
                .map(|(x, w)| {
                    let f = data.f.eval(x);
                    let vp = f - space.eval(y, p, &space.barycentric(p, x)) * rp;
                    let vm = f - space.eval(y, m, &space.barycentric(m, x)) * rm;
                    w * (vp - vm).dot(&face.normal).powi(2)
                })
                .sum();
            let jt = (space.curl(y, p) * chi(problem, p) - space.curl(y, m) * chi(problem, m))
                .cross(&face.normal);
            [normal_jump, jt.norm_squared() * face.area]
        })
        .collect();
    distribute_faces(space, &face_values, &mut cells);
    Ok(finish(cells))
}

/// Adjoint indicators `(F_{T,1}, F_{T,2})` for every cell.
pub fn adjoint_indicators(
    problem: &DiscreteProblem,
    u: &[f64],
    y: &FEField,
    p: &FEField,
) -> Result<Vec<[f64; 2]>> {
    let space = problem.space();
    space.check(y)?;
    space.check(p)?;
    problem.check_control(u)?;
    let data = problem.data();
    require_div(&data.y_target, "divergence of the target state")?;
    if !data.e_target.has_curl() {
        return Err(Error::Missing("curl of the target curl field"));
    }
    let mesh = space.mesh();
    let quad = &data.quadrature;

    let mut cells: Vec<[f64; 2]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let h2 = space.geometry(c).diameter.powi(2);
            let r = reaction(problem, u, c);
            let div_term = cell_integral(space, quad, c, |x, _| {
                data.y_target.div(x).expect("checked").powi(2)
            });
            let res_term = cell_integral(space, quad, c, |x, l| {
                (space.eval(y, c, l)
                    - data.y_target.eval(x)
                    - data.e_target.curl(x).expect("checked")
                    - space.eval(p, c, l) * r)
                    .norm_squared()
            });
            [h2 * div_term, h2 * res_term]
        })
        .collect();

    let faces = &space.topology().faces.interior;
    let face_values: Vec<[f64; 2]> = faces
        .par_iter()
        .map(|face| {
            let (a, b) = (face.plus, face.minus);
            let (ra, rb) = (reaction(problem, u, a), reaction(problem, u, b));
            let (ca, cb) = (
                space.curl(y, a) - space.curl(p, a) * chi(problem, a),
                space.curl(y, b) - space.curl(p, b) * chi(problem, b),
            );
            let mut normal_jump = 0.0;
            let mut tangential_jump = 0.0;
            for (x, w) in face_points(mesh, face) {
                let (la, lb) = (space.barycentric(a, &x), space.barycentric(b, &x));
                let yt = data.y_target.eval(&x);
                let va = space.eval(y, a, &la) - yt - space.eval(p, a, &la) * ra;
                let vb = space.eval(y, b, &lb) - yt - space.eval(p, b, &lb) * rb;
                normal_jump += w * (va - vb).dot(&face.normal).powi(2);
                let e = data.e_target.eval(&x);
                tangential_jump += w * ((ca - e) - (cb - e)).cross(&face.normal).norm_squared();
            }
            [normal_jump, tangential_jump]
        })
        .collect();
    distribute_faces(space, &face_values, &mut cells);
    Ok(finish(cells))
}

/// State and adjoint indicators combined per cell: `E_st,T^2 = E_{T,1}^2 + E_{T,2}^2`.
pub fn indicator_field(
    problem: &DiscreteProblem,
    u: &[f64],
    y: &FEField,
    p: &FEField,
) -> Result<IndicatorField> {
    let st = state_indicators(problem, u, y)?;
    let adj = adjoint_indicators(problem, u, y, p)?;
    Ok(IndicatorField::new(
        st.iter().map(|v| v[0].hypot(v[1])).collect(),
        adj.iter().map(|v| v[0].hypot(v[1])).collect(),
    ))
}

/// Oscillation of a datum with respect to cellwise constants.
#[derive(Debug, Clone, PartialEq)]
pub struct OscillationField {
    /// `h |v - pi v|_T + h |div v - pi div v|_T` on each cell.
    pub local: Vec<f64>,
    /// Patch oscillation `osc(v; T)`.
    pub per_cell: Vec<f64>,
    /// `sqrt(sum_T osc(v; T)^2)`.
    pub total: f64,
}

/// `osc(v; T)`: local terms summed over `T` and its face neighbors, plus the
/// normal jumps of `v - pi v` over the interior faces of `T`.
pub fn oscillation(
    space: &FESpace,
    datum: &AnalyticField,
    quad: &DataQuadrature,
) -> Result<OscillationField> {
    require_div(datum, "divergence of the datum")?;
    let mesh = space.mesh();
    let rule = tet_rule(quad.degree.max(4));
    let cellwise: Vec<(f64, Vec3)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let pts = cell_quadrature(&mesh.cell_vertices(c), rule, quad.singular.as_ref());
            let vol: f64 = pts.iter().map(|q| q.weight).sum();
            let vals: Vec<(Vec3, f64, f64)> = pts
                .iter()
                .map(|q| {
                    (
                        datum.eval(&q.x),
                        datum.div(&q.x).expect("checked"),
                        q.weight,
                    )
                })
                .collect();
            let mean = vals
                .iter()
                .fold(Vec3::zeros(), |acc, (v, _, w)| acc + v * *w)
                / vol;
            let mean_div = vals.iter().map(|(_, d, w)| d * w).sum::<f64>() / vol;
            let dev: f64 = vals
                .iter()
                .map(|(v, _, w)| w * (v - mean).norm_squared())
                .sum();
            let dev_div: f64 = vals
                .iter()
                .map(|(_, d, w)| w * (d - mean_div).powi(2))
                .sum();
            let h = space.geometry(c).diameter;
            (h * dev.sqrt() + h * dev_div.sqrt(), mean)
        })
        .collect();
    let local: Vec<f64> = cellwise.iter().map(|c| c.0).collect();
    let faces = &space.topology().faces;
    let mut per_cell: Vec<f64> = (0..mesh.num_cells())
        .map(|c| {
            local[c]
                + faces.neighbors[c]
                    .iter()
                    .flatten()
                    .map(|&n| local[n])
                    .sum::<f64>()
        })
        .collect();
    for face in &faces.interior {
        // v is continuous, so the jump of v - pi v is the jump of the cell means
        let jump = (cellwise[face.plus].1 - cellwise[face.minus].1)
            .dot(&face.normal)
            .abs()
            * face.area.sqrt();
        for c in [face.plus, face.minus] {
            per_cell[c] += space.geometry(c).diameter.sqrt() * jump;
        }
    }
    let total = per_cell.iter().map(|v| v * v).sum::<f64>().sqrt();
    Ok(OscillationField {
        local,
        per_cell,
        total,
    })
}
