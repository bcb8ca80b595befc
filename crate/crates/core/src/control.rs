//! Reduced-space optimization: cost, gradient, Hessian and the semi-smooth
//! Newton solver for the discrete optimality system.
//!
//! Sign convention: the reduced gradient is `g_k = alpha u_k - (M_k y, p)` and
//! the stationary value is `s_k = (M_k y, p) / alpha`, so that the optimality
//! condition reads `u_k = clamp(s_k, a_k, b_k)`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{SolveReport, SpdSolver};
use crate::nedelec::FEField;
use crate::pde::{dot, DiscreteProblem};
use crate::{Error, Result};

/// A control with its box.
#[derive(Debug, Clone, PartialEq)]
pub struct ControlVector {
    values: Vec<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

fn check_bounds(lower: &[f64], upper: &[f64]) -> Result<()> {
    if lower.len() != upper.len() {
        return Err(Error::InvalidParameter(
            "bounds have different lengths".into(),
        ));
    }
    if let Some(k) = (0..lower.len()).find(|&k| !(lower[k] < upper[k])) {
        return Err(Error::Domain(format!(
            "bounds must satisfy a < b (component {})",
            k + 1
        )));
    }
    Ok(())
}

impl ControlVector {
    pub fn new(values: Vec<f64>, lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        check_bounds(&lower, &upper)?;
        if values.len() != lower.len() {
            return Err(Error::InvalidParameter(
                "control and bounds have different lengths".into(),
            ));
        }
        Ok(Self {
            values,
            lower,
            upper,
        })
    }

    pub fn midpoint(lower: &[f64], upper: &[f64]) -> Result<Self> {
        let mid = lower
            .iter()
            .zip(upper)
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Self::new(mid, lower.to_vec(), upper.to_vec())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn is_admissible(&self) -> bool {
        (0..self.len()).all(|k| self.lower[k] <= self.values[k] && self.values[k] <= self.upper[k])
    }

    /// Same box, new values (projected).
    pub fn with_values(&self, values: &[f64]) -> Self {
        project_box(values, &self.lower, &self.upper).expect("box already validated")
    }
}

/// Componentwise clamp of `v` into `[lower, upper]`.
pub fn project_box(v: &[f64], lower: &[f64], upper: &[f64]) -> Result<ControlVector> {
    check_bounds(lower, upper)?;
    if v.len() != lower.len() {
        return Err(Error::InvalidParameter(
            "control and bounds have different lengths".into(),
        ));
    }
    let values = v
        .iter()
        .zip(lower.iter().zip(upper))
        .map(|(&x, (&a, &b))| x.clamp(a, b))
        .collect();
    ControlVector::new(values, lower.to_vec(), upper.to_vec())
}

/// `J = 1/2 ||y - y_target||^2 + 1/2 ||curl y - e_target||^2 + alpha/2 |u|^2`.
pub fn cost_value(problem: &DiscreteProblem, y: &FEField, u: &[f64]) -> Result<f64> {
    problem.space().check(y)?;
    let yv = y.values();
    let quad = 0.5 * dot(&problem.tracking_matrix().mul_vec(yv), yv) - dot(yv, problem.target())
        + 0.5 * problem.target_norm_sq();
    Ok(quad.max(0.0) + 0.5 * problem.data().alpha * dot(u, u))
}

/// Reduced cost `j(u) = J(S(u), u)`.
pub fn reduced_cost(problem: &DiscreteProblem, u: &[f64]) -> Result<f64> {
    let y = problem.solve_state(u)?;
    cost_value(problem, &y, u)
}

/// `(M_k y, p)` for every subdomain.
pub fn coupling(problem: &DiscreteProblem, y: &FEField, p: &FEField) -> Result<Vec<f64>> {
    problem.space().check(y)?;
    problem.space().check(p)?;
    Ok((0..problem.data().num_controls())
        .map(|k| dot(&problem.kappa_mass(k).mul_vec(y.values()), p.values()))
        .collect())
}

/// `g_k = alpha u_k - (M_k y, p)`.
pub fn reduced_gradient(
    problem: &DiscreteProblem,
    u: &[f64],
    y: &FEField,
    p: &FEField,
) -> Result<Vec<f64>> {
    let c = coupling(problem, y, p)?;
    let alpha = problem.data().alpha;
    Ok(u.iter().zip(c).map(|(uk, ck)| alpha * uk - ck).collect())
}

/// Unconstrained stationary values `s_k = (M_k y, p) / alpha`.
pub fn stationary_values(problem: &DiscreteProblem, y: &FEField, p: &FEField) -> Result<Vec<f64>> {
    let alpha = problem.data().alpha;
    Ok(coupling(problem, y, p)?
        .into_iter()
        .map(|c| c / alpha)
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SsnOptions {
    /// Tolerance on the Euclidean norm of the full residual.
    pub tol: f64,
    pub max_iterations: usize,
    /// Smallest damping factor tried before a step is taken regardless.
    pub min_step: f64,
}

impl Default for SsnOptions {
    fn default() -> Self {
        Self {
            tol: 1e-9,
            max_iterations: 30,
            min_step: 1.0 / 1024.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SsnReport {
    /// Newton steps taken.
    pub iterations: usize,
    /// Residual norm before each step and after the last one.
    pub residual_history: Vec<f64>,
    pub step_sizes: Vec<f64>,
}

impl SsnReport {
    /// `r_{i+1} / r_i` for consecutive residuals.
    pub fn reduction_factors(&self) -> Vec<f64> {
        self.residual_history
            .windows(2)
            .map(|w| w[1] / w[0])
            .collect()
    }
}

#[derive(Debug, Clone)]
pub struct OptimalityTriple {
    pub y: FEField,
    pub p: FEField,
    pub u: ControlVector,
    pub gradient: Vec<f64>,
    pub report: SsnReport,
}

struct Residual {
    fy: Vec<f64>,
    fp: Vec<f64>,
    fu: Vec<f64>,
    s: Vec<f64>,
}

impl Residual {
    fn norm(&self) -> f64 {
        (dot(&self.fy, &self.fy) + dot(&self.fp, &self.fp) + dot(&self.fu, &self.fu)).sqrt()
    }
}

fn clamp_residual(u: &[f64], s: &[f64], lower: &[f64], upper: &[f64]) -> Vec<f64> {
    (0..u.len())
        .map(|k| u[k] - s[k].clamp(lower[k], upper[k]))
        .collect()
}

fn optimality_residual(problem: &DiscreteProblem, y: &[f64], p: &[f64], u: &[f64]) -> Residual {
    let data = problem.data();
    let a = problem.operator_full(u);
    let space = problem.space();
    let ay = a.mul_vec(y);
    let ap = a.mul_vec(p);
    let ty = problem.tracking_matrix().mul_vec(y);
    let (load, target) = (problem.load(), problem.target());
    let fy = space
        .free_edges()
        .iter()
        .map(|&e| ay[e] - load[e])
        .collect();
    let fp = space
        .free_edges()
        .iter()
        .map(|&e| ap[e] - ty[e] + target[e])
        .collect();
    let s: Vec<f64> = (0..data.num_controls())
        .map(|k| dot(&problem.kappa_mass(k).mul_vec(y), p) / data.alpha)
        .collect();
    let fu = clamp_residual(u, &s, &data.lower, &data.upper);
    Residual { fy, fp, fu, s }
}

/// The generalized Jacobian at one iterate, factored for repeated corrections.
struct Linearization<'a> {
    problem: &'a DiscreteProblem,
    solver: Arc<SpdSolver>,
    by: Vec<Vec<f64>>,
    bp: Vec<Vec<f64>>,
    z: Vec<Vec<f64>>,
    w: Vec<Vec<f64>>,
    /// Clamp derivative divided by `alpha`.
    d: Vec<f64>,
    schur: nalgebra::LU<f64, nalgebra::Dyn, nalgebra::Dyn>,
}

/// Newton correction in free field coordinates and controls.
struct Correction {
    dy: Vec<f64>,
    dp: Vec<f64>,
    du: Vec<f64>,
}

impl<'a> Linearization<'a> {
    fn new(
        problem: &'a DiscreteProblem,
        y: &[f64],
        p: &[f64],
        u: &[f64],
        s: &[f64],
    ) -> Result<Self> {
        let data = problem.data();
        let space = problem.space();
        let l = data.num_controls();
        let solver = problem.solver(u)?;
        let by: Vec<Vec<f64>> = (0..l)
            .map(|k| space.restrict(&problem.kappa_mass(k).mul_vec(y)))
            .collect();
        let bp: Vec<Vec<f64>> = (0..l)
            .map(|k| space.restrict(&problem.kappa_mass(k).mul_vec(p)))
            .collect();
        let z: Vec<Vec<f64>> = solver.solve_many(&by)?.into_iter().map(|s| s.0).collect();
        let rhs: Vec<Vec<f64>> = (0..l)
            .map(|k| {
                Self::tracking(problem, &z[k])
                    .iter()
                    .zip(&bp[k])
                    .map(|(a, b)| a + b)
                    .collect()
            })
            .collect();
        let w: Vec<Vec<f64>> = solver.solve_many(&rhs)?.into_iter().map(|s| s.0).collect();
        // derivative of the clamp: 1 strictly inside the box, 0 at or beyond a bound
        let d: Vec<f64> = (0..l)
            .map(|k| {
                if s[k] <= data.lower[k] || s[k] >= data.upper[k] {
                    0.0
                } else {
                    1.0 / data.alpha
                }
            })
            .collect();
        let mut schur = DMatrix::<f64>::identity(l, l);
        for k in 0..l {
            for j in 0..l {
                schur[(k, j)] += d[k] * (dot(&bp[k], &z[j]) + dot(&by[k], &w[j]));
            }
        }
        Ok(Self {
            problem,
            solver,
            by,
            bp,
            z,
            w,
            d,
            schur: schur.lu(),
        })
    }

    fn tracking(problem: &DiscreteProblem, v: &[f64]) -> Vec<f64> {
        let space = problem.space();
        space.restrict(&problem.tracking_matrix().mul_vec(&space.extend(v)))
    }

    /// Solves `J delta = -F` for a residual `F`.
    fn correction(&self, res: &Residual) -> Result<Correction> {
        let l = self.d.len();
        let neg_fy: Vec<f64> = res.fy.iter().map(|v| -v).collect();
        let dy0 = self.solver.solve(&neg_fy)?.0;
        let tdy0 = Self::tracking(self.problem, &dy0);
        let rhs_p: Vec<f64> = res.fp.iter().zip(&tdy0).map(|(f, t)| -f + t).collect();
        let dp0 = self.solver.solve(&rhs_p)?.0;
        let rhs = DVector::from_iterator(
            l,
            (0..l).map(|k| {
                -res.fu[k] + self.d[k] * (dot(&self.bp[k], &dy0) + dot(&self.by[k], &dp0))
            }),
        );
        let du = self.schur.solve(&rhs).ok_or_else(|| Error::Solver {
            reason: "singular control block in the Newton system".into(),
            report: SolveReport::default(),
        })?;
        let dy = (0..dy0.len())
            .map(|i| dy0[i] - (0..l).map(|k| self.z[k][i] * du[k]).sum::<f64>())
            .collect();
        let dp = (0..dp0.len())
            .map(|i| dp0[i] - (0..l).map(|k| self.w[k][i] * du[k]).sum::<f64>())
            .collect();
        Ok(Correction {
            dy,
            dp,
            du: du.iter().copied().collect(),
        })
    }
}

/// Semi-smooth Newton on the coupled state/adjoint/control system.
///
/// Each step linearizes the bilinear coupling in `(y, p, u)` and eliminates the
/// field updates through solves with the current factorization, leaving an
/// `l x l` dense system for the control update. Step lengths `1, 1/2, ...` down
/// to `min_step` are tried; at each one the fields are taken either from the
/// linearized update or from fresh state/adjoint solves, whichever has the
/// smaller residual. The first length that lowers the residual is taken, and
/// failing that the trial with the smallest residual.
pub fn ssn_solve(
    problem: &DiscreteProblem,
    u0: &ControlVector,
    opts: &SsnOptions,
) -> Result<OptimalityTriple> {
    let data = problem.data();
    let l = data.num_controls();
    if u0.len() != l {
        return Err(Error::InvalidParameter(format!(
            "initial control has {} entries, expected {l}",
            u0.len()
        )));
    }
    let space = problem.space().clone();
    let free = space.free_edges();
    let mut u = project_box(u0.values(), &data.lower, &data.upper)?.values;
    let y0 = problem.solve_state(&u)?;
    let p0 = problem.solve_adjoint(&u, &y0)?;
    let mut y = y0.into_values();
    let mut p = p0.into_values();
    let mut report = SsnReport::default();
    let mut res = optimality_residual(problem, &y, &p, &u);
    let mut rnorm = res.norm();
    report.residual_history.push(rnorm);

    while rnorm > opts.tol {
        if report.iterations >= opts.max_iterations {
            return Err(Error::NonConvergence {
                iterations: report.iterations,
                history: report.residual_history,
            });
        }
        let lin = Linearization::new(problem, &y, &p, &u, &res.s)?;
        let step = lin.correction(&res)?;

        // first step length whose better trial (linearized or re-solved fields) lowers the residual
        let mut best = None;
        let mut t = 1.0;
        while t >= opts.min_step {
            let ut: Vec<f64> = (0..l).map(|k| u[k] + t * step.du[k]).collect();
            if ut.iter().all(|&v| v > 0.0) {
                let (mut yl, mut pl) = (y.clone(), p.clone());
                for (i, &e) in free.iter().enumerate() {
                    yl[e] += t * step.dy[i];
                    pl[e] += t * step.dp[i];
                }
                let rl = optimality_residual(problem, &yl, &pl, &ut);
                let ye = problem.solve_state(&ut)?;
                let pe = problem.solve_adjoint(&ut, &ye)?.into_values();
                let ye = ye.into_values();
                let re = optimality_residual(problem, &ye, &pe, &ut);
                let trial = if re.norm() < rl.norm() {
                    (re.norm(), ut, ye, pe, re)
                } else {
                    (rl.norm(), ut, yl, pl, rl)
                };
                let improves = trial.0 < rnorm;
                if best
                    .as_ref()
                    .is_none_or(|b: &(f64, Vec<f64>, Vec<f64>, Vec<f64>, Residual)| trial.0 < b.0)
                {
                    best = Some(trial);
                }
                if improves {
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((_, ut, yt, pt, r)) = best else {
            return Err(Error::NonConvergence {
                iterations: report.iterations,
                history: report.residual_history,
            });
        };
        u = ut;
        y = yt;
        p = pt;
        res = r;
        report.iterations += 1;
        report.step_sizes.push(t);
        rnorm = res.norm();
        report.residual_history.push(rnorm);
    }

    let y = space.field_from_edges(y)?;
    let p = space.field_from_edges(p)?;
    let gradient = reduced_gradient(problem, &u, &y, &p)?;
    let u = ControlVector {
        values: u,
        lower: data.lower.clone(),
        upper: data.upper.clone(),
    };
    Ok(OptimalityTriple {
        y,
        p,
        u,
        gradient,
        report,
    })
}

/// Reduced Hessian `j''(u)` from the linearized states `z_k = S'(u) e_k`.
pub fn reduced_hessian(
    problem: &DiscreteProblem,
    u: &[f64],
    y: &FEField,
    p: &FEField,
) -> Result<DMatrix<f64>> {
    let space = problem.space();
    space.check(y)?;
    space.check(p)?;
    let l = problem.data().num_controls();
    let solver = problem.solver(u)?;
    let rhs: Vec<Vec<f64>> = (0..l)
        .map(|k| {
            space
                .restrict(&problem.kappa_mass(k).mul_vec(y.values()))
                .iter()
                .map(|v| -v)
                .collect()
        })
        .collect();
    let z: Vec<Vec<f64>> = solver
        .solve_many(&rhs)?
        .into_iter()
        .map(|(x, _)| space.extend(&x))
        .collect();
    let mp: Vec<Vec<f64>> = (0..l)
        .map(|k| problem.kappa_mass(k).mul_vec(p.values()))
        .collect();
    let tz: Vec<Vec<f64>> = z
        .iter()
        .map(|zk| problem.tracking_matrix().mul_vec(zk))
        .collect();
    let alpha = problem.data().alpha;
    let mut h = DMatrix::zeros(l, l);
    for k in 0..l {
        for j in k..l {
            let v = if k == j { alpha } else { 0.0 } - dot(&z[j], &mp[k]) - dot(&z[k], &mp[j])
                + dot(&z[k], &tz[j]);
            h[(k, j)] = v;
            h[(j, k)] = v;
        }
    }
    Ok(h)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SecondOrderCheck {
    pub tau: f64,
    /// Indices with `|g_k| <= tau`.
    pub free: Vec<usize>,
    /// Hessian restricted to the free indices.
    pub restricted: DMatrix<f64>,
    /// Minimum of `h' H h / |h|^2` over the critical cone (`+inf` for the trivial cone).
    pub nu_min: f64,
    /// Whether the minimum was estimated by sampling (sign-restricted cone).
    pub sampled: bool,
    pub passed: bool,
}

pub const CONE_SAMPLES: usize = 10_000;

/// Second-order sufficient condition on the critical cone of a converged triple.
pub fn check_second_order(
    problem: &DiscreteProblem,
    triple: &OptimalityTriple,
    tau: f64,
    nu_floor: f64,
    seed: u64,
) -> Result<SecondOrderCheck> {
    let h = reduced_hessian(problem, triple.u.values(), &triple.y, &triple.p)?;
    Ok(second_order_from_hessian(
        &h,
        &triple.gradient,
        &triple.u,
        tau,
        nu_floor,
        seed,
    ))
}

/// The cone test for a given Hessian and gradient.
pub fn second_order_from_hessian(
    h: &DMatrix<f64>,
    gradient: &[f64],
    u: &ControlVector,
    tau: f64,
    nu_floor: f64,
    seed: u64,
) -> SecondOrderCheck {
    let free: Vec<usize> = (0..gradient.len())
        .filter(|&k| gradient[k].abs() <= tau)
        .collect();
    let m = free.len();
    let restricted = DMatrix::from_fn(m, m, |i, j| h[(free[i], free[j])]);
    if m == 0 {
        return SecondOrderCheck {
            tau,
            free,
            restricted,
            nu_min: f64::INFINITY,
            sampled: false,
            passed: true,
        };
    }
    // sign restriction at active bounds: h_k >= 0 at the lower, h_k <= 0 at the upper bound
    let at_bound = |k: usize, b: f64| (u.values()[k] - b).abs() <= 1e-10 * (1.0 + b.abs());
    let sign: Vec<f64> = free
        .iter()
        .map(|&k| {
            if at_bound(k, u.lower()[k]) {
                1.0
            } else if at_bound(k, u.upper()[k]) {
                -1.0
            } else {
                0.0
            }
        })
        .collect();
    let (nu_min, sampled) = if sign.iter().all(|&s| s == 0.0) {
        (restricted.clone().symmetric_eigenvalues().min(), false)
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut best = f64::INFINITY;
        for _ in 0..CONE_SAMPLES {
            let v = DVector::from_fn(m, |i, _| {
                let x: f64 = rng.random_range(-1.0..1.0);
                if sign[i] == 0.0 {
                    x
                } else {
                    sign[i] * x.abs()
                }
            });
            let n2 = v.norm_squared();
            if n2 > 0.0 {
                best = best.min((v.transpose() * &restricted * &v)[(0, 0)] / n2);
            }
        }
        (best, true)
    };
    SecondOrderCheck {
        tau,
        free,
        restricted,
        nu_min,
        sampled,
        passed: nu_min >= nu_floor,
    }
}
