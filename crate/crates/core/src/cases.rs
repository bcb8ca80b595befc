//! Benchmark problems and a builder for manufactured solutions.
//!
//! A manufactured case starts from a prescribed state `y*` and adjoint `p*` on a
//! single subdomain with constant `chi` and `kappa`. The optimal control is the
//! projection `u* = clamp(kappa (y*, p*) / alpha)`, and the data are chosen so
//! that `(y*, p*, u*)` solves the optimality system exactly:
//!
//! ```text
//! f        = chi curl curl y* + kappa u* y*
//! e_target = curl y*
//! y_target = y* - chi curl curl p* - kappa u* p*
//! ```

use std::f64::consts::PI;
use std::sync::Arc;

use crate::field::{AnalyticField, VectorFn};
use crate::mesh::{build_structured_domain, in_inner_box, DomainKind, TetMesh};
use crate::nedelec::DataQuadrature;
use crate::pde::ProblemData;
use crate::quadrature::{gauss_legendre, SingularLine, SingularRefinement};
use crate::{Error, Result, Vec3};

/// Where the meshes of a case come from.
#[derive(Debug, Clone)]
pub enum Domain {
    /// A structured domain rebuilt at any resolution.
    Structured(DomainKind),
    /// A fixed initial mesh, e.g. read from a file.
    Mesh(Arc<TetMesh>),
}

impl Domain {
    pub fn num_subdomains(&self) -> usize {
        match self {
            Domain::Structured(kind) => kind.num_subdomains(),
            Domain::Mesh(mesh) => mesh.num_subdomains(),
        }
    }

    pub fn name(&self) -> &str {
        match self {
            Domain::Structured(kind) => kind.name(),
            Domain::Mesh(_) => "mesh",
        }
    }
}

/// The exact optimal triple of a manufactured case.
#[derive(Debug, Clone)]
pub struct ExactSolution {
    pub y: AnalyticField,
    pub p: AnalyticField,
    pub u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct BenchmarkCase {
    pub name: String,
    pub domain: Domain,
    /// Subdivisions per unit length of the initial structured mesh.
    pub n0: usize,
    pub data: ProblemData,
    pub exact: Option<ExactSolution>,
}

impl BenchmarkCase {
    /// `test1`, `test2` or `test3`.
    pub fn by_name(name: &str) -> Result<Self> {
        match name {
            "test1" => Ok(test1_smooth()),
            "test2" => Ok(test2_lshape()),
            "test3" => Ok(test3_discontinuous()),
            other => Err(Error::InvalidParameter(format!(
                "unknown case '{other}' (expected test1, test2 or test3)"
            ))),
        }
    }

    pub fn initial_mesh(&self) -> Result<Arc<TetMesh>> {
        self.structured_mesh(self.n0)
    }

    /// Structured mesh with `n` subdivisions per unit length; a file mesh is
    /// returned unchanged.
    pub fn structured_mesh(&self, n: usize) -> Result<Arc<TetMesh>> {
        match &self.domain {
            Domain::Structured(kind) => Ok(Arc::new(build_structured_domain(*kind, n)?)),
            Domain::Mesh(mesh) => Ok(mesh.clone()),
        }
    }
}

/// Input of [`manufactured`].
#[derive(Clone)]
pub struct Manufactured {
    pub name: String,
    pub domain: DomainKind,
    pub n0: usize,
    pub chi: f64,
    pub kappa: f64,
    pub alpha: f64,
    pub lower: f64,
    pub upper: f64,
    /// `y*` with curl and divergence.
    pub y: AnalyticField,
    pub y_curl_curl: VectorFn,
    /// `p*` with curl and divergence.
    pub p: AnalyticField,
    pub p_curl_curl: VectorFn,
    /// `(y*, p*)` over the domain.
    pub coupling: f64,
    /// Impose the traces of `y*` and `p*` as Dirichlet data.
    pub nonzero_trace: bool,
    pub quadrature: DataQuadrature,
}

pub fn manufactured(m: Manufactured) -> Result<BenchmarkCase> {
    if m.domain.num_subdomains() != 1 {
        return Err(Error::InvalidParameter(
            "manufactured cases use a single subdomain".into(),
        ));
    }
    for (name, field) in [("y", &m.y), ("p", &m.p)] {
        if !field.has_curl() || !field.has_div() {
            return Err(Error::InvalidParameter(format!(
                "{name}* needs a closed-form curl and divergence"
            )));
        }
    }
    let u = (m.kappa * m.coupling / m.alpha).clamp(m.lower, m.upper);
    let c = m.kappa * u;
    let chi = m.chi;

    let (y, ycc) = (m.y.clone(), m.y_curl_curl.clone());
    let y_div = m.y.clone();
    let f = AnalyticField::new(move |x| ycc(x) * chi + y.eval(x) * c)
        .with_div(move |x| c * y_div.div(x).expect("checked"));

    let (y, ycc) = (m.y.clone(), m.y_curl_curl.clone());
    let e_target =
        AnalyticField::new(move |x| y.curl(x).expect("checked")).with_curl(move |x| ycc(x));

    let (y, p, pcc) = (m.y.clone(), m.p.clone(), m.p_curl_curl.clone());
    let (yd, pd) = (m.y.clone(), m.p.clone());
    let y_target = AnalyticField::new(move |x| y.eval(x) - pcc(x) * chi - p.eval(x) * c)
        .with_div(move |x| yd.div(x).expect("checked") - c * pd.div(x).expect("checked"));

    let data = ProblemData {
        chi: vec![chi],
        kappa: vec![m.kappa],
        f,
        y_target,
        e_target,
        alpha: m.alpha,
        lower: vec![m.lower],
        upper: vec![m.upper],
        state_boundary: m.nonzero_trace.then(|| m.y.clone()),
        adjoint_boundary: m.nonzero_trace.then(|| m.p.clone()),
        quadrature: m.quadrature,
    };
    data.validate()?;
    Ok(BenchmarkCase {
        name: m.name,
        domain: Domain::Structured(m.domain),
        n0: m.n0,
        data,
        exact: Some(ExactSolution {
            y: m.y,
            p: m.p,
            u: vec![u],
        }),
    })
}

fn trig(x: &Vec3) -> ([f64; 3], [f64; 3]) {
    let s = [(PI * x.x).sin(), (PI * x.y).sin(), (PI * x.z).sin()];
    let c = [(PI * x.x).cos(), (PI * x.y).cos(), (PI * x.z).cos()];
    (s, c)
}

/// `y* = grad(sin(pi x) sin(pi y) sin(pi z)) / pi`, curl-free with zero tangential trace.
pub fn test1_state() -> AnalyticField {
    AnalyticField::new(|x| {
        let (s, c) = trig(x);
        Vec3::new(c[0] * s[1] * s[2], s[0] * c[1] * s[2], s[0] * s[1] * c[2])
    })
    .with_curl(|_| Vec3::zeros())
    .with_div(|x| {
        let (s, _) = trig(x);
        -3.0 * PI * s[0] * s[1] * s[2]
    })
    .with_potential(|x| {
        let (s, _) = trig(x);
        s[0] * s[1] * s[2] / PI
    })
}

/// `w = (x^2 sin(pi y) sin(pi z), sin(pi x) sin(pi z), sin(pi x) sin(pi y))`.
fn test1_w() -> (AnalyticField, VectorFn) {
    let w = AnalyticField::new(|x| {
        let (s, _) = trig(x);
        Vec3::new(x.x * x.x * s[1] * s[2], s[0] * s[2], s[0] * s[1])
    })
    .with_curl(|x| {
        let (s, c) = trig(x);
        let x2 = x.x * x.x;
        PI * Vec3::new(
            s[0] * c[1] - s[0] * c[2],
            x2 * s[1] * c[2] - c[0] * s[1],
            c[0] * s[2] - x2 * c[1] * s[2],
        )
    })
    .with_div(|x| {
        let (s, _) = trig(x);
        2.0 * x.x * s[1] * s[2]
    });
    let w_curl_curl: VectorFn = Arc::new(|x: &Vec3| {
        let (s, c) = trig(x);
        let pi2 = PI * PI;
        Vec3::new(
            2.0 * pi2 * x.x * x.x * s[1] * s[2],
            2.0 * PI * x.x * c[1] * s[2] + 2.0 * pi2 * s[0] * s[2],
            2.0 * PI * x.x * s[1] * c[2] + 2.0 * pi2 * s[0] * s[1],
        )
    });
    (w, w_curl_curl)
}

/// Smooth solution on the unit cube, `u* = 1/(2 pi^2)` in the interior of `[0.01, 5]`.
pub fn test1_smooth() -> BenchmarkCase {
    let (w, wcc) = test1_w();
    let p = w.scaled(-1.0);
    let p_curl_curl: VectorFn = Arc::new(move |x: &Vec3| -wcc(x));
    let ycc: VectorFn = Arc::new(|_: &Vec3| Vec3::zeros());
    manufactured(Manufactured {
        name: "test1".into(),
        domain: DomainKind::UnitCube,
        n0: 2,
        chi: 1.0,
        kappa: 0.1,
        alpha: 0.1,
        lower: 0.01,
        upper: 5.0,
        y: test1_state(),
        y_curl_curl: ycc,
        p,
        p_curl_curl,
        // int x^2 cos(pi x) dx = -2/pi^2, the other two products integrate to zero
        coupling: 1.0 / (2.0 * PI * PI),
        nonzero_trace: false,
        quadrature: DataQuadrature::default(),
    })
    .expect("test 1 data are valid")
}

/// Angle in `[0, 2 pi)` about the z-axis.
fn angle(x: &Vec3) -> f64 {
    let t = x.y.atan2(x.x);
    if t < 0.0 {
        t + 2.0 * PI
    } else {
        t
    }
}

/// `S = r^(2/3) sin(2 theta / 3)`.
pub fn corner_potential(x: &Vec3) -> f64 {
    let r = x.x.hypot(x.y);
    r.powf(2.0 / 3.0) * (2.0 * angle(x) / 3.0).sin()
}

/// `grad S`, singular like `r^(-1/3)` at the re-entrant edge.
pub fn corner_gradient() -> AnalyticField {
    AnalyticField::new(|x| {
        let r = x.x.hypot(x.y);
        let t = angle(x) / 3.0;
        Vec3::new(-t.sin(), t.cos(), 0.0) * (2.0 / 3.0 * r.powf(-1.0 / 3.0))
    })
    .with_curl(|_| Vec3::zeros())
    .with_div(|_| 0.0)
    .with_potential(corner_potential)
}

/// `int |grad S|^2` over the L-shaped prism: three unit squares around the edge,
/// each contributing `(4/9) int r^(-2/3) = (4/9)(3/2) int_0^(pi/4) sec^(4/3)`.
pub fn corner_energy() -> f64 {
    let rule = gauss_legendre(40);
    let half_quarter = PI / 4.0;
    let sec_int: f64 = rule
        .points
        .iter()
        .zip(&rule.weights)
        .map(|(t, w)| w * half_quarter * (t * half_quarter).cos().powf(-4.0 / 3.0))
        .sum();
    // two symmetric triangles per square
    3.0 * 4.0 / 9.0 * 2.0 * 0.75 * sec_int
}

/// Graded quadrature towards the re-entrant edge.
pub fn corner_quadrature() -> DataQuadrature {
    DataQuadrature {
        degree: 5,
        singular: Some(SingularRefinement {
            line: SingularLine::z_axis(),
            levels: 3,
        }),
    }
}

/// Corner singularity on the L-shaped prism with `y* = p* = grad S`.
pub fn test2_lshape() -> BenchmarkCase {
    let zero: VectorFn = Arc::new(|_: &Vec3| Vec3::zeros());
    manufactured(Manufactured {
        name: "test2".into(),
        domain: DomainKind::LShape,
        n0: 2,
        chi: 1.0,
        kappa: 0.01,
        alpha: 1.0,
        lower: 0.01,
        upper: 1.0,
        y: corner_gradient(),
        y_curl_curl: zero.clone(),
        p: corner_gradient(),
        p_curl_curl: zero,
        coupling: corner_energy(),
        nonzero_trace: true,
        quadrature: corner_quadrature(),
    })
    .expect("test 2 data are valid")
}

/// Discontinuous coefficients on the cube with an inner box; no exact solution.
pub fn test3_discontinuous() -> BenchmarkCase {
    let (w, _) = test1_w();
    let data = ProblemData {
        chi: vec![1e-4, 1.0],
        kappa: vec![1.0, 100.0],
        f: AnalyticField::constant(Vec3::new(1.0, 0.0, 0.0)),
        y_target: w,
        e_target: AnalyticField::zero(),
        alpha: 1.0,
        lower: vec![0.1, 0.1],
        upper: vec![100.0, 100.0],
        state_boundary: None,
        adjoint_boundary: None,
        quadrature: DataQuadrature::default(),
    };
    BenchmarkCase {
        name: "test3".into(),
        domain: Domain::Structured(DomainKind::CubeWithInnerBox),
        n0: 4,
        data,
        exact: None,
    }
}

/// Whether `x` lies in the inner box of the partitioned cube.
pub fn in_test3_inclusion(x: &Vec3) -> bool {
    in_inner_box(x)
}

/// A case with constant data and per-subdomain coefficients.
#[derive(Debug, Clone)]
pub struct ConstantCase {
    pub name: String,
    pub domain: Domain,
    pub n0: usize,
    pub chi: Vec<f64>,
    pub kappa: Vec<f64>,
    pub alpha: f64,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub f: Vec3,
    pub y_target: Vec3,
    pub e_target: Vec3,
}

impl ConstantCase {
    pub fn build(self) -> Result<BenchmarkCase> {
        let l = self.domain.num_subdomains();
        if self.kappa.len() != l {
            return Err(Error::InvalidParameter(format!(
                "the domain has {l} subdomains but {} coefficients were given",
                self.kappa.len()
            )));
        }
        let data = ProblemData {
            chi: self.chi,
            kappa: self.kappa,
            f: AnalyticField::constant(self.f),
            y_target: AnalyticField::constant(self.y_target),
            e_target: AnalyticField::constant(self.e_target),
            alpha: self.alpha,
            lower: self.lower,
            upper: self.upper,
            state_boundary: None,
            adjoint_boundary: None,
            quadrature: DataQuadrature::default(),
        };
        data.validate()?;
        Ok(BenchmarkCase {
            name: self.name,
            domain: self.domain,
            n0: self.n0,
            data,
            exact: None,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{extract_topology, mesh_quality_stats};
    use crate::quadrature::{cell_quadrature, tet_rule};

    const H: f64 = 1e-5;

    fn fd_curl(f: &dyn Fn(&Vec3) -> Vec3, x: &Vec3) -> Vec3 {
        let d = |i: usize| {
            let mut e = Vec3::zeros();
            e[i] = H;
            (f(&(x + e)) - f(&(x - e))) / (2.0 * H)
        };
        let (dx, dy, dz) = (d(0), d(1), d(2));
        Vec3::new(dy.z - dz.y, dz.x - dx.z, dx.y - dy.x)
    }

    fn fd_div(f: &dyn Fn(&Vec3) -> Vec3, x: &Vec3) -> f64 {
        (0..3)
            .map(|i| {
                let mut e = Vec3::zeros();
                e[i] = H;
                (f(&(x + e))[i] - f(&(x - e))[i]) / (2.0 * H)
            })
            .sum()
    }

    fn points(case: &BenchmarkCase) -> Vec<Vec3> {
        let mesh = case.initial_mesh().unwrap();
        (0..mesh.num_cells())
            .step_by(7)
            .map(|c| mesh.centroid(c))
            .collect()
    }

    fn close(a: Vec3, b: Vec3, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1.0)
    }

    fn check_field(f: &AnalyticField, pts: &[Vec3]) {
        let v = |x: &Vec3| f.eval(x);
        for x in pts {
            if let Some(c) = f.curl(x) {
                assert!(close(fd_curl(&v, x), c, 1e-7), "curl at {x:?}");
            }
            if let Some(d) = f.div(x) {
                assert!(
                    (fd_div(&v, x) - d).abs() <= 1e-7 * d.abs().max(1.0),
                    "div at {x:?}"
                );
            }
        }
    }

    #[test]
    fn test1_derivatives_and_equations() {
        let case = test1_smooth();
        let pts = points(&case);
        let ex = case.exact.as_ref().unwrap();
        for f in [
            &ex.y,
            &ex.p,
            &case.data.f,
            &case.data.y_target,
            &case.data.e_target,
        ] {
            check_field(f, &pts);
        }
        let u = ex.u[0];
        assert!((u - 1.0 / (2.0 * PI * PI)).abs() < 1e-15);
        // strong residuals of the state and adjoint equations via nested differences
        let p_curl = |x: &Vec3| ex.p.curl(x).unwrap();
        for x in &pts {
            let state = case.data.f.eval(x) - ex.y.eval(x) * (0.1 * u);
            assert!(state.norm() < 1e-14);
            let cc = fd_curl(&p_curl, x);
            let adjoint = cc + ex.p.eval(x) * (0.1 * u) - ex.y.eval(x) + case.data.y_target.eval(x);
            assert!(adjoint.norm() < 1e-7, "{adjoint:?}");
        }
    }

    #[test]
    fn test1_traces_vanish() {
        let case = test1_smooth();
        let ex = case.exact.clone().unwrap();
        let mesh = case.initial_mesh().unwrap();
        for face in mesh.boundary_faces() {
            let [a, b, c] = face.map(|v| mesh.vertices()[v]);
            let n = (b - a).cross(&(c - a)).normalize();
            let x = (a + b + c) / 3.0;
            assert!(ex.y.eval(&x).cross(&n).norm() < 1e-14);
            assert!(ex.p.eval(&x).cross(&n).norm() < 1e-14);
        }
    }

    #[test]
    fn test1_coupling_matches_quadrature() {
        let case = test1_smooth();
        let ex = case.exact.unwrap();
        let mesh = build_structured_domain(DomainKind::UnitCube, 4).unwrap();
        let rule = tet_rule(10);
        let total: f64 = (0..mesh.num_cells())
            .flat_map(|c| cell_quadrature(&mesh.cell_vertices(c), rule, None))
            .map(|q| q.weight * ex.y.eval(&q.x).dot(&ex.p.eval(&q.x)))
            .sum();
        assert!((total - 1.0 / (2.0 * PI * PI)).abs() < 1e-8, "{total}");
    }

    #[test]
    fn test2_potential_and_energy() {
        let case = test2_lshape();
        let ex = case.exact.as_ref().unwrap();
        check_field(&ex.y, &points(&case));
        // S vanishes on both faces meeting at the re-entrant edge
        for r in [0.3, 0.9] {
            assert!(corner_potential(&Vec3::new(r, 0.0, 0.4)).abs() < 1e-15);
            assert!(corner_potential(&Vec3::new(0.0, -r, 0.4)).abs() < 1e-15);
            assert!(corner_potential(&Vec3::new(r, -0.0, 0.4)).abs() < 1e-15);
        }
        let mesh = build_structured_domain(DomainKind::LShape, 4).unwrap();
        let quad = corner_quadrature();
        let rule = tet_rule(8);
        let total: f64 = (0..mesh.num_cells())
            .flat_map(|c| cell_quadrature(&mesh.cell_vertices(c), rule, quad.singular.as_ref()))
            .map(|q| q.weight * ex.y.eval(&q.x).norm_squared())
            .sum();
        let e = corner_energy();
        assert!((total - e).abs() < 2e-3 * e, "{total} vs {e}");
        let u = ex.u[0];
        assert!(
            (u - 0.01 * e).abs() < 1e-15 && u > 0.01 && u < 1.0,
            "u* = {u}"
        );
        // y_target = (1 - kappa u*) grad S
        let x = Vec3::new(-0.3, 0.4, 0.5);
        assert!(close(
            case.data.y_target.eval(&x),
            ex.y.eval(&x) * (1.0 - 0.01 * u),
            1e-14
        ));
        assert!(case.data.state_boundary.is_some() && case.data.adjoint_boundary.is_some());
    }

    #[test]
    fn test3_coefficients_by_subdomain() {
        let case = test3_discontinuous();
        let mesh = case.initial_mesh().unwrap();
        assert_eq!(mesh.num_subdomains(), 2);
        extract_topology(&mesh).unwrap();
        for c in 0..mesh.num_cells() {
            let k = mesh.subdomain(c);
            let inside = in_test3_inclusion(&mesh.centroid(c));
            assert_eq!(k == 0, inside);
            assert_eq!(case.data.chi[k], if inside { 1e-4 } else { 1.0 });
            assert_eq!(case.data.kappa[k], if inside { 1.0 } else { 100.0 });
        }
        check_field(&case.data.y_target, &points(&case));
        assert!(mesh_quality_stats(&mesh).min_dihedral > 0.0);
    }

    #[test]
    fn lookup_and_constant_cases() {
        assert_eq!(BenchmarkCase::by_name("test2").unwrap().name, "test2");
        assert!(BenchmarkCase::by_name("test9").is_err());
        let ok = ConstantCase {
            name: "c".into(),
            domain: Domain::Structured(DomainKind::CubeWithInnerBox),
            n0: 4,
            chi: vec![1.0, 2.0],
            kappa: vec![1.0, 1.0],
            alpha: 1.0,
            lower: vec![0.1, 0.1],
            upper: vec![2.0, 2.0],
            f: Vec3::new(1.0, 0.0, 0.0),
            y_target: Vec3::zeros(),
            e_target: Vec3::zeros(),
        };
        assert!(ok.clone().build().is_ok());
        let bad = ConstantCase {
            kappa: vec![1.0],
            ..ok.clone()
        };
        assert!(matches!(bad.build(), Err(Error::InvalidParameter(_))));
        let bad_bounds = ConstantCase {
            lower: vec![3.0, 0.1],
            ..ok
        };
        assert!(matches!(bad_bounds.build(), Err(Error::Domain(_))));
    }
}
