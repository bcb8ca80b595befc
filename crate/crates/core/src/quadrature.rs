//! Positive-weight quadrature on edges, triangles and tetrahedra.
//!
//! Simplex rules are conical (collapsed) products of Gauss-Jacobi rules, so an
//! `n`-point-per-direction rule integrates every polynomial of total degree
//! `2n - 1` exactly and all weights are positive. Points are stored in
//! barycentric coordinates; weights sum to the reference measure (1/6 for the
//! tetrahedron, 1/2 for the triangle, 1 for the unit interval).

use std::sync::OnceLock;

use nalgebra::{DMatrix, SymmetricEigen};

use crate::Vec3;

#[derive(Debug, Clone)]
pub struct TetRule {
    pub points: Vec<[f64; 4]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct TriangleRule {
    pub points: Vec<[f64; 3]>,
    pub weights: Vec<f64>,
    pub degree: usize,
}

#[derive(Debug, Clone)]
pub struct LineRule {
    /// Parameters in `[0, 1]`.
    pub points: Vec<f64>,
    pub weights: Vec<f64>,
}

/// Gauss-Jacobi rule on `[0, 1]` for the weight `(1 - t)^alpha` (Golub-Welsch).
pub fn gauss_jacobi(n: usize, alpha: u32) -> LineRule {
    assert!(n >= 1);
    let a = alpha as f64;
    // Jacobi matrix on [-1, 1] for weight (1 - x)^a (1 + x)^0.
    let b = 0.0;
    let mut jac = DMatrix::<f64>::zeros(n, n);
    for k in 0..n {
        let kf = k as f64;
        let s = 2.0 * kf + a + b;
        jac[(k, k)] = if k == 0 {
            (b - a) / (a + b + 2.0)
        } else {
            (b * b - a * a) / (s * (s + 2.0))
        };
        if k + 1 < n {
            let k1 = kf + 1.0;
            let s1 = 2.0 * k1 + a + b;
            let beta =
                4.0 * k1 * (k1 + a) * (k1 + b) * (k1 + a + b) / (s1 * s1 * (s1 + 1.0) * (s1 - 1.0));
            jac[(k, k + 1)] = beta.sqrt();
            jac[(k + 1, k)] = beta.sqrt();
        }
    }
    // total mass of (1 - x)^a on [-1, 1]
    let mu0 = 2f64.powf(a + 1.0) / (a + 1.0);
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..n)
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            let x = eig.eigenvalues[i];
            // t = (1 + x) / 2 so that 1 - t = (1 - x) / 2
            ((1.0 + x) / 2.0, mu0 * v0 * v0 / 2f64.powf(a + 1.0))
        })
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0));
    LineRule {
        points: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

pub fn gauss_legendre(n: usize) -> LineRule {
    gauss_jacobi(n, 0)
}

fn points_for_degree(degree: usize) -> usize {
    degree / 2 + 1
}

fn build_tet_rule(degree: usize) -> TetRule {
    let n = points_for_degree(degree);
    let (rs, rt, rw) = (gauss_jacobi(n, 2), gauss_jacobi(n, 1), gauss_jacobi(n, 0));
    let mut points = Vec::with_capacity(n * n * n);
    let mut weights = Vec::with_capacity(n * n * n);
    for (s, ws) in rs.points.iter().zip(&rs.weights) {
        for (t, wt) in rt.points.iter().zip(&rt.weights) {
            for (w, ww) in rw.points.iter().zip(&rw.weights) {
                let x = s;
                let y = (1.0 - s) * t;
                let z = (1.0 - s) * (1.0 - t) * w;
                points.push([1.0 - x - y - z, *x, y, z]);
                weights.push(ws * wt * ww);
            }
        }
    }
    TetRule {
        points,
        weights,
        degree: 2 * n - 1,
    }
}

fn build_triangle_rule(degree: usize) -> TriangleRule {
    let n = points_for_degree(degree);
    let (rs, rt) = (gauss_jacobi(n, 1), gauss_jacobi(n, 0));
    let mut points = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for (s, ws) in rs.points.iter().zip(&rs.weights) {
        for (t, wt) in rt.points.iter().zip(&rt.weights) {
            let x = s;
            let y = (1.0 - s) * t;
            points.push([1.0 - x - y, *x, y]);
            weights.push(ws * wt);
        }
    }
    TriangleRule {
        points,
        weights,
        degree: 2 * n - 1,
    }
}

const MAX_CACHED_DEGREE: usize = 15;

/// Rule exact for total degree `degree` (cached).
pub fn tet_rule(degree: usize) -> &'static TetRule {
    static RULES: OnceLock<Vec<TetRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_CACHED_DEGREE).map(build_tet_rule).collect());
    &rules[degree.min(MAX_CACHED_DEGREE)]
}

pub fn triangle_rule(degree: usize) -> &'static TriangleRule {
    static RULES: OnceLock<Vec<TriangleRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (0..=MAX_CACHED_DEGREE).map(build_triangle_rule).collect());
    &rules[degree.min(MAX_CACHED_DEGREE)]
}

/// A straight line along which problem data may be singular.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularLine {
    pub point: Vec3,
    pub direction: Vec3,
}

impl SingularLine {
    pub fn z_axis() -> Self {
        Self {
            point: Vec3::zeros(),
            direction: Vec3::new(0.0, 0.0, 1.0),
        }
    }

    pub fn distance(&self, x: &Vec3) -> f64 {
        let d = x - self.point;
        let dir = self.direction.normalize();
        (d - dir * d.dot(&dir)).norm()
    }

    fn touches(&self, verts: &[Vec3; 4]) -> bool {
        let scale = (verts[1] - verts[0])
            .norm()
            .max((verts[2] - verts[0]).norm())
            .max((verts[3] - verts[0]).norm());
        verts.iter().any(|v| self.distance(v) <= 1e-10 * scale)
    }
}

/// How to integrate over cells near a singular line: cells touching it are
/// recursively split into eight, refining only the children that still touch
/// the line, for `levels` levels.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SingularRefinement {
    pub line: SingularLine,
    pub levels: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadPoint {
    /// Barycentric coordinates with respect to the cell.
    pub bary: [f64; 4],
    pub x: Vec3,
    /// Physical weight (includes the cell volume).
    pub weight: f64,
}

fn bary_combine(corners: &[[f64; 4]; 4], l: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| (0..4).map(|k| l[k] * corners[k][i]).sum())
}

fn to_physical(verts: &[Vec3; 4], b: &[f64; 4]) -> Vec3 {
    verts[0] * b[0] + verts[1] * b[1] + verts[2] * b[2] + verts[3] * b[3]
}

fn mid(a: &[f64; 4], b: &[f64; 4]) -> [f64; 4] {
    std::array::from_fn(|i| 0.5 * (a[i] + b[i]))
}

fn red_children(c: &[[f64; 4]; 4]) -> [[[f64; 4]; 4]; 8] {
    let m01 = mid(&c[0], &c[1]);
    let m02 = mid(&c[0], &c[2]);
    let m03 = mid(&c[0], &c[3]);
    let m12 = mid(&c[1], &c[2]);
    let m13 = mid(&c[1], &c[3]);
    let m23 = mid(&c[2], &c[3]);
    [
        [c[0], m01, m02, m03],
        [m01, c[1], m12, m13],
        [m02, m12, c[2], m23],
        [m03, m13, m23, c[3]],
        [m01, m02, m03, m13],
        [m01, m02, m12, m13],
        [m02, m03, m13, m23],
        [m02, m12, m13, m23],
    ]
}

/// Quadrature points over a physical cell, optionally graded toward a singular line.
pub fn cell_quadrature(
    verts: &[Vec3; 4],
    rule: &TetRule,
    singular: Option<&SingularRefinement>,
) -> Vec<QuadPoint> {
    let volume = ((verts[1] - verts[0])
        .cross(&(verts[2] - verts[0]))
        .dot(&(verts[3] - verts[0]))
        / 6.0)
        .abs();
    let identity = [
        [1.0, 0.0, 0.0, 0.0],
        [0.0, 1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0, 0.0],
        [0.0, 0.0, 0.0, 1.0],
    ];
    let mut out = Vec::with_capacity(rule.points.len());
    let push_rule = |corners: &[[f64; 4]; 4], scale: f64, out: &mut Vec<QuadPoint>| {
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            let bary = bary_combine(corners, p);
            out.push(QuadPoint {
                bary,
                x: to_physical(verts, &bary),
                weight: w * 6.0 * volume * scale,
            });
        }
    };
    match singular {
        Some(s) if s.levels > 0 && s.line.touches(verts) => {
            let mut frontier = vec![identity];
            let mut scale = 1.0;
            for _ in 0..s.levels {
                scale /= 8.0;
                let mut next = Vec::new();
                for corners in &frontier {
                    for child in red_children(corners) {
                        let phys = child.map(|b| to_physical(verts, &b));
                        if s.line.touches(&phys) {
                            next.push(child);
                        } else {
                            push_rule(&child, scale, &mut out);
                        }
                    }
                }
                frontier = next;
            }
            for corners in &frontier {
                push_rule(corners, scale, &mut out);
            }
        }
        _ => push_rule(&identity, 1.0, &mut out),
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn factorial(n: u32) -> f64 {
        (1..=n).map(|k| k as f64).product()
    }

    /// Integral of x^a y^b z^c over the reference tetrahedron.
    fn tet_monomial(a: u32, b: u32, c: u32) -> f64 {
        factorial(a) * factorial(b) * factorial(c) / factorial(a + b + c + 3)
    }

    fn tri_monomial(a: u32, b: u32) -> f64 {
        factorial(a) * factorial(b) / factorial(a + b + 2)
    }

    #[test]
    fn jacobi_rules_integrate_moments() {
        for alpha in 0..=2u32 {
            for n in 1..=6 {
                let r = gauss_jacobi(n, alpha);
                for k in 0..(2 * n) as u32 {
                    let q: f64 = r
                        .points
                        .iter()
                        .zip(&r.weights)
                        .map(|(t, w)| w * t.powi(k as i32))
                        .sum();
                    // int_0^1 t^k (1-t)^alpha dt = k! alpha! / (k + alpha + 1)!
                    let exact = factorial(k) * factorial(alpha) / factorial(k + alpha + 1);
                    assert!(
                        (q - exact).abs() < 1e-14,
                        "alpha {alpha} n {n} k {k}: {q} vs {exact}"
                    );
                }
                assert!(r.weights.iter().all(|&w| w > 0.0));
            }
        }
    }

    #[test]
    fn tet_rules_are_exact_to_their_degree() {
        for degree in 0..=8 {
            let rule = tet_rule(degree);
            assert!(rule.degree >= degree);
            assert!(rule.weights.iter().all(|&w| w > 0.0));
            assert!((rule.weights.iter().sum::<f64>() - 1.0 / 6.0).abs() < 1e-15);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    for c in 0..=(degree as u32 - a - b) {
                        let q: f64 = rule
                            .points
                            .iter()
                            .zip(&rule.weights)
                            .map(|(p, w)| {
                                w * p[1].powi(a as i32) * p[2].powi(b as i32) * p[3].powi(c as i32)
                            })
                            .sum();
                        assert!(
                            (q - tet_monomial(a, b, c)).abs() < 1e-15,
                            "deg {degree}: {a} {b} {c}"
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn triangle_rules_are_exact_to_their_degree() {
        for degree in 0..=8 {
            let rule = triangle_rule(degree);
            assert!((rule.weights.iter().sum::<f64>() - 0.5).abs() < 1e-15);
            for a in 0..=degree as u32 {
                for b in 0..=(degree as u32 - a) {
                    let q: f64 = rule
                        .points
                        .iter()
                        .zip(&rule.weights)
                        .map(|(p, w)| w * p[1].powi(a as i32) * p[2].powi(b as i32))
                        .sum();
                    assert!((q - tri_monomial(a, b)).abs() < 1e-15);
                }
            }
        }
    }

    #[test]
    fn subdivided_quadrature_preserves_polynomials_and_tames_singularity() {
        let verts = [
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.0, 1.0, 0.0),
            Vec3::new(0.0, 0.0, 1.0),
        ];
        let s = SingularRefinement {
            line: SingularLine::z_axis(),
            levels: 3,
        };
        let pts = cell_quadrature(&verts, tet_rule(3), Some(&s));
        let vol: f64 = pts.iter().map(|p| p.weight).sum();
        assert!((vol - 1.0 / 6.0).abs() < 1e-14, "{vol}");
        let xy: f64 = pts.iter().map(|p| p.weight * p.x.x * p.x.y).sum();
        assert!((xy - tet_monomial(1, 1, 0)).abs() < 1e-14, "{xy}");

        // int r^{-2/3} over the reference tet, reduced to a 1D integral in polar
        // coordinates: for r in the xy-plane with angle t, the height is 1 - r(cos t + sin t)
        // and the radial limit 1/(cos t + sin t).
        let gl = gauss_legendre(40);
        let exact: f64 = gl
            .points
            .iter()
            .zip(&gl.weights)
            .map(|(u, w)| {
                let t = u * std::f64::consts::FRAC_PI_2;
                let c = t.cos() + t.sin();
                // int_0^{1/c} r^{1/3} (1 - r c) dr = (3/4) c^{-4/3} - c (3/7) c^{-7/3}
                w * std::f64::consts::FRAC_PI_2 * ((0.75 - 3.0 / 7.0) * c.powf(-4.0 / 3.0))
            })
            .sum();
        let integrand = |p: &QuadPoint| p.weight * (p.x.x * p.x.x + p.x.y * p.x.y).powf(-1.0 / 3.0);
        let coarse: f64 = cell_quadrature(&verts, tet_rule(5), None)
            .iter()
            .map(integrand)
            .sum();
        let fine: f64 = cell_quadrature(&verts, tet_rule(5), Some(&s))
            .iter()
            .map(integrand)
            .sum();
        assert!((fine - exact).abs() < (coarse - exact).abs());
        assert!((fine - exact).abs() / exact < 1e-2);
    }
}
