use rayon::prelude::*;

use super::{CellGeometry, DataQuadrature, FEField, FESpace};
use crate::field::AnalyticField;
use crate::linalg::CsrMatrix;
use crate::mesh::LOCAL_EDGES;
use crate::quadrature::{cell_quadrature, tet_rule, QuadPoint};
use crate::{Error, Result, Vec3};

/// Exact local mass matrix of the unsigned Whitney functions, times `c`.
fn local_mass(g: &CellGeometry, c: f64) -> [f64; 36] {
    let mut out = [0.0; 36];
    let gg = |a: usize, b: usize| g.grads[a].dot(&g.grads[b]);
    // int l_a l_b = |T| (1 + delta_ab) / 20
    let ii = |a: usize, b: usize| g.volume * if a == b { 2.0 } else { 1.0 } / 20.0;
    for (p, &[a, b]) in LOCAL_EDGES.iter().enumerate() {
        for (q, &[cc, d]) in LOCAL_EDGES.iter().enumerate().skip(p) {
            // (l_a gb - l_b ga) . (l_c gd - l_d gc)
            let v = gg(b, d) * ii(a, cc) - gg(b, cc) * ii(a, d) - gg(a, d) * ii(b, cc)
                + gg(a, cc) * ii(b, d);
            out[6 * p + q] = c * v;
            out[6 * q + p] = c * v;
        }
    }
    out
}

fn local_stiffness(g: &CellGeometry, chi: f64) -> [f64; 36] {
    let curls = g.local_curls();
    let mut out = [0.0; 36];
    for p in 0..6 {
        for q in p..6 {
            let v = chi * g.volume * curls[p].dot(&curls[q]);
            out[6 * p + q] = v;
            out[6 * q + p] = v;
        }
    }
    out
}

fn assemble_local(space: &FESpace, local: impl Fn(usize) -> [f64; 36] + Sync + Send) -> CsrMatrix {
    let blocks: Vec<[f64; 36]> = (0..space.mesh().num_cells())
        .into_par_iter()
        .map(local)
        .collect();
    let mut m = CsrMatrix::zeros(space.full_pattern().clone());
    let vals = m.values_mut();
    // serial scatter in cell order keeps the result independent of scheduling
    for (c, block) in blocks.iter().enumerate() {
        let signs = space.cell_signs(c);
        let slots = space.cell_slots(c);
        for p in 0..6 {
            for q in 0..6 {
                vals[slots[6 * p + q] as usize] += signs[p] * signs[q] * block[6 * p + q];
            }
        }
    }
    m
}

fn check_cells(space: &FESpace, values: &[f64], name: &str, strict: bool) -> Result<()> {
    if values.len() != space.mesh().num_cells() {
        return Err(Error::InvalidParameter(format!(
            "{name}: expected one value per cell"
        )));
    }
    if let Some((c, v)) =
        values
            .iter()
            .enumerate()
            .find(|(_, &v)| if strict { !(v > 0.0) } else { !(v >= 0.0) })
    {
        return Err(Error::Domain(format!("{name} = {v} on cell {c}")));
    }
    Ok(())
}

/// `(chi curl v, curl w)` over all edges (boundary rows included); `chi` per cell, nonnegative.
pub fn assemble_stiffness(space: &FESpace, chi: &[f64]) -> Result<CsrMatrix> {
    check_cells(space, chi, "chi", false)?;
    Ok(assemble_local(space, |c| {
        local_stiffness(space.geometry(c), chi[c])
    }))
}

/// `(c v, w)` over all edges; `c` per cell, nonnegative.
pub fn assemble_mass(space: &FESpace, c: &[f64]) -> Result<CsrMatrix> {
    check_cells(space, c, "mass coefficient", false)?;
    Ok(assemble_local(space, |cell| {
        local_mass(space.geometry(cell), c[cell])
    }))
}

/// `K_chi + M_c` over all edges, with strictly positive coefficients.
pub fn assemble_operator_full(space: &FESpace, chi: &[f64], c: &[f64]) -> Result<CsrMatrix> {
    check_cells(space, chi, "chi", true)?;
    check_cells(space, c, "reaction coefficient", true)?;
    Ok(assemble_local(space, |cell| {
        let g = space.geometry(cell);
        let mut k = local_stiffness(g, chi[cell]);
        let m = local_mass(g, c[cell]);
        k.iter_mut().zip(m).for_each(|(a, b)| *a += b);
        k
    }))
}

/// The SPD system matrix `K_chi + M_c` on the free degrees of freedom.
pub fn assemble_operator(space: &FESpace, chi: &[f64], c: &[f64]) -> Result<CsrMatrix> {
    Ok(space.restrict_matrix(&assemble_operator_full(space, chi, c)?))
}

/// Right-hand sides built from analytic data.
#[derive(Debug, Clone, Copy)]
pub enum Functional<'a> {
    /// `(f, w)`.
    Load(&'a AnalyticField),
    /// `(y_h - y_target, w) + (curl y_h - e_target, curl w)`; `y_h = None` is an error.
    Adjoint {
        y_h: Option<&'a FEField>,
        y_target: &'a AnalyticField,
        e_target: &'a AnalyticField,
    },
    /// `(y_target, w) + (e_target, curl w)`.
    Target {
        y_target: &'a AnalyticField,
        e_target: &'a AnalyticField,
    },
}

/// Integrates `v . W + c . curl W` for every local basis function and scatters to edges.
pub(crate) fn integrate_against_basis(
    space: &FESpace,
    quad: &DataQuadrature,
    integrand: impl Fn(usize, &QuadPoint) -> (Vec3, Vec3) + Sync + Send,
) -> Vec<f64> {
    let rule = tet_rule(quad.degree);
    let mesh = space.mesh();
    let locals: Vec<[f64; 6]> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let g = space.geometry(c);
            let curls = g.local_curls();
            let mut out = [0.0; 6];
            for qp in cell_quadrature(&mesh.cell_vertices(c), rule, quad.singular.as_ref()) {
                let (v, cv) = integrand(c, &qp);
                let w = g.local_values(&qp.bary);
                for k in 0..6 {
                    out[k] += qp.weight * (v.dot(&w[k]) + cv.dot(&curls[k]));
                }
            }
            out
        })
        .collect();
    let mut full = vec![0.0; space.num_edges()];
    for (c, loc) in locals.iter().enumerate() {
        let edges = space.cell_edges(c);
        let signs = space.cell_signs(c);
        for k in 0..6 {
            full[edges[k]] += signs[k] * loc[k];
        }
    }
    full
}

/// Assembles a functional against every edge basis function (boundary edges included).
pub fn assemble_functionals(
    space: &FESpace,
    functional: Functional<'_>,
    quad: &DataQuadrature,
) -> Result<Vec<f64>> {
    match functional {
        Functional::Load(f) => Ok(integrate_against_basis(space, quad, |_, qp| {
            (f.eval(&qp.x), Vec3::zeros())
        })),
        Functional::Target { y_target, e_target } => {
            Ok(integrate_against_basis(space, quad, |_, qp| {
                (y_target.eval(&qp.x), e_target.eval(&qp.x))
            }))
        }
        Functional::Adjoint {
            y_h,
            y_target,
            e_target,
        } => {
            let y = y_h.ok_or(Error::Missing("y_field"))?;
            space.check(y)?;
            Ok(integrate_against_basis(space, quad, |c, qp| {
                (
                    space.eval(y, c, &qp.bary) - y_target.eval(&qp.x),
                    space.curl(y, c) - e_target.eval(&qp.x),
                )
            }))
        }
    }
}
