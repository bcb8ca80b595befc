use rayon::prelude::*;

use super::{DataQuadrature, FEField, FESpace};
use crate::field::AnalyticField;
use crate::quadrature::{cell_quadrature, gauss_legendre, tet_rule};
use crate::{Error, Result};

/// Edge circulations of `g` on every edge, boundary edges included.
///
/// Gradient fields with a known potential use the exact difference of the
/// potential; other fields use 3-point Gauss on the edge.
pub fn interpolate_edges(space: &FESpace, g: &AnalyticField) -> Result<Vec<f64>> {
    let verts = space.mesh().vertices();
    let rule = gauss_legendre(3);
    space
        .topology()
        .edges
        .edges
        .par_iter()
        .enumerate()
        .map(|(e, &[a, b])| {
            let (xa, xb) = (verts[a], verts[b]);
            let v = match (g.potential(&xb), g.potential(&xa)) {
                (Some(pb), Some(pa)) => pb - pa,
                _ => {
                    let t = xb - xa;
                    rule.points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(s, w)| w * g.eval(&(xa + t * *s)).dot(&t))
                        .sum()
                }
            };
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::NonFinite { edge: e })
            }
        })
        .collect()
}

/// Edge interpolant with homogeneous boundary values.
pub fn interpolate_field(space: &FESpace, g: &AnalyticField) -> Result<FEField> {
    let mut values = interpolate_edges(space, g)?;
    for (v, &b) in values.iter_mut().zip(&space.topology().edges.is_boundary) {
        if b {
            *v = 0.0;
        }
    }
    space.field_from_edges(values)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorNorms {
    pub l2: f64,
    pub curl_l2: f64,
    pub hcurl: f64,
}

/// `L2`, curl and `H(curl)` norms of `exact - u_h`.
pub fn error_norms(
    space: &FESpace,
    u_h: &FEField,
    exact: &AnalyticField,
    quad: &DataQuadrature,
) -> Result<ErrorNorms> {
    space.check(u_h)?;
    if !exact.has_curl() {
        return Err(Error::Missing("curl of the exact field"));
    }
    let rule = tet_rule(quad.degree.max(5));
    let mesh = space.mesh();
    let per_cell: Vec<(f64, f64)> = (0..mesh.num_cells())
        .into_par_iter()
        .map(|c| {
            let curl_h = space.curl(u_h, c);
            let mut l2 = 0.0;
            let mut cl2 = 0.0;
            for qp in cell_quadrature(&mesh.cell_vertices(c), rule, quad.singular.as_ref()) {
                l2 += qp.weight * (exact.eval(&qp.x) - space.eval(u_h, c, &qp.bary)).norm_squared();
                cl2 +=
                    qp.weight * (exact.curl(&qp.x).expect("checked above") - curl_h).norm_squared();
            }
            (l2, cl2)
        })
        .collect();
    let (l2, cl2) = per_cell
        .iter()
        .fold((0.0, 0.0), |acc, v| (acc.0 + v.0, acc.1 + v.1));
    Ok(ErrorNorms {
        l2: l2.sqrt(),
        curl_l2: cl2.sqrt(),
        hcurl: (l2 + cl2).sqrt(),
    })
}
