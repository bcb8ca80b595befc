//! Marking, the adaptive loop, uniform sweeps and convergence tables.
//!
//! Every iteration solves the optimality system with semi-smooth Newton,
//! warm-started from the control of the previous mesh, evaluates the state and
//! adjoint indicators, marks with the maximum strategy (separately for both
//! families, union of the two sets) and bisects.

use std::sync::Arc;
use std::time::Instant;

use thiserror::Error as ThisError;

use crate::cases::{BenchmarkCase, Domain};
use crate::control::{cost_value, ssn_solve, ControlVector, OptimalityTriple, SsnOptions};
use crate::estimator::{indicator_field, IndicatorField};
use crate::linalg::DEFAULT_TOL;
use crate::mesh::{bisect_marked, mesh_quality_stats, TetMesh};
use crate::nedelec::{error_norms, FESpace};
use crate::pde::DiscreteProblem;
use crate::{Error, Result};

/// Bisection rounds of a uniform step on a file mesh (three halve every edge of a Kuhn cube).
const UNIFORM_ROUNDS: usize = 3;

/// `{T : values[T] >= theta * max(values)}`.
pub fn mark_max_strategy(values: &[f64], theta: f64) -> Result<Vec<usize>> {
    if values.is_empty() {
        return Err(Error::InvalidParameter(
            "no indicator values to mark".into(),
        ));
    }
    if !(theta > 0.0 && theta <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "marking fraction {theta} must lie in (0, 1]"
        )));
    }
    if let Some(i) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!(
            "indicator of cell {i} is not finite"
        )));
    }
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let threshold = theta * max;
    Ok((0..values.len())
        .filter(|&i| values[i] >= threshold)
        .collect())
}

/// Sorted union of two sorted id lists.
pub fn mark_union(a: &[usize], b: &[usize]) -> Vec<usize> {
    let mut out: Vec<usize> = a.iter().chain(b).copied().collect();
    out.sort_unstable();
    out.dedup();
    out
}

/// Cells marked by either family of indicators.
pub fn mark_cells(indicators: &IndicatorField, theta: f64) -> Result<Vec<usize>> {
    Ok(mark_union(
        &mark_max_strategy(&indicators.est_state, theta)?,
        &mark_max_strategy(&indicators.est_adjoint, theta)?,
    ))
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub max_cells: usize,
    pub max_iterations: usize,
    pub theta: f64,
    pub ssn: SsnOptions,
    pub tol_linear: f64,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        Self {
            max_cells: 100_000,
            max_iterations: 50,
            theta: 0.5,
            ssn: SsnOptions::default(),
            tol_linear: DEFAULT_TOL,
        }
    }
}

impl AdaptiveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.theta > 0.0 && self.theta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "theta = {} must lie in (0, 1]",
                self.theta
            )));
        }
        for (name, v) in [("tol_ssn", self.ssn.tol), ("tol_linear", self.tol_linear)] {
            if !(v > 0.0 && v < 1.0) {
                return Err(Error::InvalidParameter(format!(
                    "{name} = {v} must lie in (0, 1)"
                )));
            }
        }
        if self.max_iterations == 0 {
            return Err(Error::InvalidParameter(
                "max_iterations must be at least 1".into(),
            ));
        }
        Ok(())
    }
}

/// Errors against the exact triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExactErrors {
    pub y_l2: f64,
    pub y_hcurl: f64,
    pub p_hcurl: f64,
    /// Euclidean norm of `u* - u_h`.
    pub u: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IterationRecord {
    pub iteration: usize,
    pub ncells: usize,
    pub ndofs: usize,
    pub h_max: f64,
    pub cost: f64,
    pub u: Vec<f64>,
    pub ssn_iterations: usize,
    pub ssn_residuals: Vec<f64>,
    pub est_st: f64,
    pub est_adj: f64,
    pub est_ocp: f64,
    pub errors: Option<ExactErrors>,
    /// Cells marked for refinement after this iteration (0 for the last one).
    pub marked: usize,
    pub seconds: f64,
}

#[derive(Debug, Clone)]
pub struct AdaptiveRun {
    pub case_name: String,
    pub records: Vec<IterationRecord>,
    /// Mesh of the last completed iteration.
    pub final_mesh: Option<Arc<TetMesh>>,
}

impl AdaptiveRun {
    fn new(case: &BenchmarkCase) -> Self {
        Self {
            case_name: case.name.clone(),
            records: Vec::new(),
            final_mesh: None,
        }
    }
}

/// A run that stopped on an error; the completed iterations are kept.
#[derive(Debug, ThisError)]
#[error("run stopped after {} completed iterations: {error}", partial.records.len())]
pub struct RunFailure {
    pub partial: AdaptiveRun,
    #[source]
    pub error: Error,
}

/// Everything known about one completed iteration, handed to observers.
pub struct IterationView<'a> {
    pub record: &'a IterationRecord,
    pub problem: &'a DiscreteProblem,
    pub triple: &'a OptimalityTriple,
    pub indicators: &'a IndicatorField,
}

struct Solved {
    problem: DiscreteProblem,
    triple: OptimalityTriple,
    indicators: IndicatorField,
    record: IterationRecord,
}

fn solve_on_mesh(
    case: &BenchmarkCase,
    mesh: Arc<TetMesh>,
    u0: &ControlVector,
    config: &AdaptiveConfig,
    iteration: usize,
) -> Result<Solved> {
    let start = Instant::now();
    let space = Arc::new(FESpace::new(mesh.clone())?);
    let problem = DiscreteProblem::new(space.clone(), case.data.clone(), config.tol_linear)?;
    let triple = ssn_solve(&problem, u0, &config.ssn)?;
    let u = triple.u.values();
    let indicators = indicator_field(&problem, u, &triple.y, &triple.p)?;
    let errors = match &case.exact {
        Some(ex) => {
            let q = &case.data.quadrature;
            let ey = error_norms(&space, &triple.y, &ex.y, q)?;
            let ep = error_norms(&space, &triple.p, &ex.p, q)?;
            let eu =
                ex.u.iter()
                    .zip(u)
                    .map(|(a, b)| (a - b).powi(2))
                    .sum::<f64>()
                    .sqrt();
            Some(ExactErrors {
                y_l2: ey.l2,
                y_hcurl: ey.hcurl,
                p_hcurl: ep.hcurl,
                u: eu,
            })
        }
        None => None,
    };
    let record = IterationRecord {
        iteration,
        ncells: mesh.num_cells(),
        ndofs: space.dim(),
        h_max: mesh_quality_stats(&mesh).h_max,
        cost: cost_value(&problem, &triple.y, u)?,
        u: u.to_vec(),
        ssn_iterations: triple.report.iterations,
        ssn_residuals: triple.report.residual_history.clone(),
        est_st: indicators.e_st,
        est_adj: indicators.e_adj,
        est_ocp: indicators.e_ocp,
        errors,
        marked: 0,
        seconds: start.elapsed().as_secs_f64(),
    };
    Ok(Solved {
        problem,
        triple,
        indicators,
        record,
    })
}

fn initial_control(case: &BenchmarkCase) -> Result<ControlVector> {
    ControlVector::midpoint(&case.data.lower, &case.data.upper)
}

/// The adaptive loop without an observer.
pub fn run_adaptive(
    case: &BenchmarkCase,
    config: &AdaptiveConfig,
) -> Result<AdaptiveRun, RunFailure> {
    run_adaptive_with(case, config, |_| Ok(()))
}

/// Solves, estimates, marks and bisects until the next mesh would exceed
/// `max_cells` or `max_iterations` meshes have been solved.
pub fn run_adaptive_with(
    case: &BenchmarkCase,
    config: &AdaptiveConfig,
    mut observer: impl FnMut(&IterationView) -> Result<()>,
) -> Result<AdaptiveRun, RunFailure> {
    let mut run = AdaptiveRun::new(case);
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(RunFailure {
                        partial: run,
                        error,
                    })
                }
            }
        };
    }
    attempt!(config.validate());
    let mut mesh = attempt!(case.initial_mesh());
    let mut u0 = attempt!(initial_control(case));
    for iteration in 0..config.max_iterations {
        let mut solved = attempt!(solve_on_mesh(case, mesh.clone(), &u0, config, iteration));
        let last = iteration + 1 == config.max_iterations;
        let next = if last {
            None
        } else {
            let marked = attempt!(mark_cells(&solved.indicators, config.theta));
            solved.record.marked = marked.len();
            let refined = attempt!(bisect_marked(&mesh, &marked));
            (refined.num_cells() <= config.max_cells).then_some(refined)
        };
        if next.is_none() {
            solved.record.marked = 0;
        }
        let view = IterationView {
            record: &solved.record,
            problem: &solved.problem,
            triple: &solved.triple,
            indicators: &solved.indicators,
        };
        attempt!(observer(&view));
        u0 = solved.triple.u.clone();
        run.records.push(solved.record);
        run.final_mesh = Some(mesh.clone());
        match next {
            Some(m) => mesh = Arc::new(m),
            None => break,
        }
    }
    Ok(run)
}

/// Mesh of uniform level `level`: structured domains are rebuilt with
/// `n0 * 2^level` subdivisions, file meshes are bisected everywhere.
pub fn uniform_mesh(
    case: &BenchmarkCase,
    level: usize,
    previous: Option<&TetMesh>,
) -> Result<Arc<TetMesh>> {
    match (&case.domain, previous) {
        (Domain::Structured(_), _) | (Domain::Mesh(_), None) => {
            case.structured_mesh(case.n0 << level)
        }
        (Domain::Mesh(_), Some(prev)) => {
            let mut mesh = prev.clone();
            for _ in 0..UNIFORM_ROUNDS {
                let all: Vec<usize> = (0..mesh.num_cells()).collect();
                mesh = bisect_marked(&mesh, &all)?;
            }
            Ok(Arc::new(mesh))
        }
    }
}

pub fn run_uniform(
    case: &BenchmarkCase,
    levels: usize,
    config: &AdaptiveConfig,
) -> Result<AdaptiveRun, RunFailure> {
    run_uniform_with(case, levels, config, |_| Ok(()))
}

/// `levels` uniformly refined meshes starting from the initial one.
pub fn run_uniform_with(
    case: &BenchmarkCase,
    levels: usize,
    config: &AdaptiveConfig,
    mut observer: impl FnMut(&IterationView) -> Result<()>,
) -> Result<AdaptiveRun, RunFailure> {
    let mut run = AdaptiveRun::new(case);
    macro_rules! attempt {
        ($e:expr) => {
            match $e {
                Ok(v) => v,
                Err(error) => {
                    return Err(RunFailure {
                        partial: run,
                        error,
                    })
                }
            }
        };
    }
    if levels == 0 {
        return Err(RunFailure {
            partial: run,
            error: Error::InvalidParameter("levels must be at least 1".into()),
        });
    }
    attempt!(config.validate());
    let mut u0 = attempt!(initial_control(case));
    let mut previous: Option<Arc<TetMesh>> = None;
    for level in 0..levels {
        let mesh = attempt!(uniform_mesh(case, level, previous.as_deref()));
        let solved = attempt!(solve_on_mesh(case, mesh.clone(), &u0, config, level));
        let view = IterationView {
            record: &solved.record,
            problem: &solved.problem,
            triple: &solved.triple,
            indicators: &solved.indicators,
        };
        attempt!(observer(&view));
        u0 = solved.triple.u.clone();
        run.records.push(solved.record);
        run.final_mesh = Some(mesh.clone());
        previous = Some(mesh);
    }
    Ok(run)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EocMode {
    /// Sizes are mesh sizes `h`.
    H,
    /// Sizes are unknown or cell counts `N`, with `h ~ N^(-1/3)`.
    N,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EocRow {
    pub size: f64,
    pub error: f64,
    /// `None` on the first row.
    pub order: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EocTable {
    pub mode: EocMode,
    pub rows: Vec<EocRow>,
}

impl EocTable {
    pub fn orders(&self) -> Vec<f64> {
        self.rows.iter().filter_map(|r| r.order).collect()
    }
}

/// `order_i = log(e_{i-1}/e_i) / log(h_{i-1}/h_i)`.
pub fn eoc_table(errors: &[f64], sizes: &[f64], mode: EocMode) -> Result<EocTable> {
    if errors.len() != sizes.len() || errors.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need two or more (size, error) pairs of equal length, got {} and {}",
            sizes.len(),
            errors.len()
        )));
    }
    if errors
        .iter()
        .chain(sizes)
        .any(|v| !(*v > 0.0 && v.is_finite()))
    {
        return Err(Error::Domain("errors and sizes must be positive".into()));
    }
    let h = |s: f64| match mode {
        EocMode::H => s,
        EocMode::N => s.powf(-1.0 / 3.0),
    };
    let rows = (0..errors.len())
        .map(|i| EocRow {
            size: sizes[i],
            error: errors[i],
            order: (i > 0)
                .then(|| (errors[i - 1] / errors[i]).ln() / (h(sizes[i - 1]) / h(sizes[i])).ln()),
        })
        .collect();
    Ok(EocTable { mode, rows })
}

/// Least-squares slope of `log y` against `log x`.
pub fn loglog_slope(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(Error::InvalidParameter(
            "need two or more points of equal length".into(),
        ));
    }
    if x.iter().chain(y).any(|v| !(*v > 0.0)) {
        return Err(Error::Domain("log-log fit needs positive values".into()));
    }
    let lx: Vec<f64> = x.iter().map(|v| v.ln()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = lx.len() as f64;
    let (mx, my) = (lx.iter().sum::<f64>() / n, ly.iter().sum::<f64>() / n);
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::Domain("log-log fit needs distinct abscissae".into()));
    }
    Ok(sxy / sxx)
}
