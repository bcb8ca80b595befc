//! Command execution and exit status mapping.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use maxwell_ocp::adapt::{
    eoc_table, run_adaptive_with, run_uniform_with, AdaptiveConfig, AdaptiveRun, EocMode,
    IterationView, RunFailure,
};
use maxwell_ocp::cases::{BenchmarkCase, ConstantCase, Domain};
use maxwell_ocp::control::SsnOptions;
use maxwell_ocp::io::read_msh;
use maxwell_ocp::mesh::{mesh_quality_stats, DomainKind};
use maxwell_ocp::reference::{check_test1, ReferenceCheck};
use maxwell_ocp::Vec3;
use thiserror::Error;

use crate::config::{parse_config, CaseSpec, ConfigError, CustomSpec, RefineMode, RunConfig};
use crate::output::{write_iteration_vtk, write_outputs};

/// Environment variable with the number of worker threads.
pub const THREADS_ENV: &str = "MAXWELL_OCP_THREADS";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration: {0}")]
    Config(#[from] ConfigError),
    #[error("configuration: {0}")]
    Invalid(String),
    #[error("solver: {0}")]
    Solver(maxwell_ocp::Error),
    #[error("I/O: {0}")]
    Io(String),
    #[error("reference check failed: {0} comparison(s) out of tolerance")]
    Check(usize),
}

impl CliError {
    /// 1 configuration, 2 solver, 3 I/O, 4 failed reference check.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Invalid(_) => 1,
            CliError::Solver(_) => 2,
            CliError::Io(_) => 3,
            CliError::Check(_) => 4,
        }
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Sets the global thread pool size from [`THREADS_ENV`] when present.
pub fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var(THREADS_ENV) else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| {
            CliError::Invalid(format!("{THREADS_ENV}='{value}' is not a positive integer"))
        })?;
    // a pool that already exists keeps its size
    let _ = rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global();
    Ok(())
}

/// Builds the case of a configuration; relative mesh paths are resolved against `base`.
pub fn build_case(config: &RunConfig, base: &Path) -> Result<BenchmarkCase, CliError> {
    let mut case = match &config.case {
        CaseSpec::Named(name) => {
            BenchmarkCase::by_name(name).map_err(|e| CliError::Invalid(e.to_string()))?
        }
        CaseSpec::Custom(spec) => custom_case(spec, base)?,
    };
    if let Some(n0) = config.n0 {
        case.n0 = n0;
    }
    Ok(case)
}

fn custom_case(spec: &CustomSpec, base: &Path) -> Result<BenchmarkCase, CliError> {
    let domain = match DomainKind::from_name(&spec.domain) {
        Some(kind) => Domain::Structured(kind),
        None => {
            let path = base.join(&spec.domain);
            if !path.is_file() {
                return Err(CliError::Invalid(format!(
                    "domain '{}' is neither a known domain nor an existing mesh file",
                    spec.domain
                )));
            }
            let msh = read_msh(&path).map_err(|e| match e {
                maxwell_ocp::Error::Io(e) => io_err(&path, e),
                other => CliError::Invalid(format!("{}: {other}", path.display())),
            })?;
            Domain::Mesh(Arc::new(msh.mesh))
        }
    };
    let l = domain.num_subdomains();
    let widen = |name: &str, v: &[f64]| -> Result<Vec<f64>, CliError> {
        match v.len() {
            1 => Ok(vec![v[0]; l]),
            n if n == l => Ok(v.to_vec()),
            n => Err(CliError::Invalid(format!(
                "{name} has {n} entries, the domain has {l} subdomains"
            ))),
        }
    };
    let v3 = |a: [f64; 3]| Vec3::new(a[0], a[1], a[2]);
    ConstantCase {
        name: "custom".into(),
        domain,
        n0: 2,
        chi: widen("chi", &spec.chi)?,
        kappa: widen("kappa", &spec.kappa)?,
        alpha: spec.alpha,
        lower: widen("lower", &spec.lower)?,
        upper: widen("upper", &spec.upper)?,
        f: v3(spec.f),
        y_target: v3(spec.y_target),
        e_target: v3(spec.e_target),
    }
    .build()
    .map_err(|e| CliError::Invalid(e.to_string()))
}

/// Options given on the command line rather than in the file.
#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub check: bool,
    pub out: Option<PathBuf>,
}

/// Summary of a completed run.
#[derive(Debug)]
pub struct RunOutcome {
    pub run: AdaptiveRun,
    pub out_dir: PathBuf,
    pub check: Option<ReferenceCheck>,
}

/// Reads a configuration file and executes it.
pub fn run_file(path: &Path, opts: &RunOptions) -> Result<RunOutcome, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let config = parse_config(&text)?;
    let base = path.parent().unwrap_or(Path::new("."));
    run_config(&config, base, opts)
}

/// Executes a parsed configuration and writes its outputs.
///
/// On solver failure the records of the meshes solved so far are still written.
pub fn run_config(
    config: &RunConfig,
    base: &Path,
    opts: &RunOptions,
) -> Result<RunOutcome, CliError> {
    if opts.check
        && (config.case != CaseSpec::Named("test1".into())
            || config.refine != RefineMode::Uniform
            || config.levels < 4)
    {
        return Err(CliError::Invalid(
            "--check compares against the test1 reference and needs refine=uniform with levels >= 4".into(),
        ));
    }
    let case = build_case(config, base)?;
    let l = case.data.num_controls();
    let out_dir = opts
        .out
        .clone()
        .or_else(|| config.out.clone())
        .unwrap_or_else(|| PathBuf::from("out"));
    std::fs::create_dir_all(&out_dir).map_err(|e| io_err(&out_dir, e))?;

    let adaptive = AdaptiveConfig {
        max_cells: config.max_cells,
        max_iterations: config.max_iters,
        theta: config.theta_mark,
        ssn: SsnOptions {
            tol: config.tol_ssn,
            ..SsnOptions::default()
        },
        tol_linear: config.tol_linear,
    };
    let every = config.vtk_every;
    let observer = |view: &IterationView| -> maxwell_ocp::Result<()> {
        let r = view.record;
        eprintln!(
            "iter {:>3}  cells {:>8}  dofs {:>8}  ssn {:>2}  est_ocp {:.4e}  {:.1}s",
            r.iteration, r.ncells, r.ndofs, r.ssn_iterations, r.est_ocp, r.seconds
        );
        if every > 0 && r.iteration.is_multiple_of(every) {
            write_iteration_vtk(view, &out_dir)?;
        }
        Ok(())
    };
    let (result, mode) = match config.refine {
        RefineMode::Uniform => (
            run_uniform_with(&case, config.levels, &adaptive, observer),
            EocMode::H,
        ),
        RefineMode::Adaptive => (run_adaptive_with(&case, &adaptive, observer), EocMode::N),
    };
    let (run, failure) = match result {
        Ok(run) => (run, None),
        Err(RunFailure { partial, error }) => (partial, Some(error)),
    };
    write_outputs(&run, l, mode, &out_dir).map_err(|e| io_err(&out_dir, e))?;
    if let Some(error) = failure {
        return Err(match error {
            maxwell_ocp::Error::Io(e) => io_err(&out_dir, e),
            maxwell_ocp::Error::InvalidParameter(m) => CliError::Invalid(m),
            other => CliError::Solver(other),
        });
    }

    let check = if opts.check {
        let table = |pick: fn(&maxwell_ocp::adapt::ExactErrors) -> f64| {
            let errors: Vec<f64> = run
                .records
                .iter()
                .filter_map(|r| r.errors.as_ref().map(pick))
                .collect();
            let h: Vec<f64> = run.records.iter().map(|r| r.h_max).collect();
            eoc_table(&errors, &h, EocMode::H).map_err(CliError::Solver)
        };
        let result = check_test1(&table(|e| e.y_hcurl)?, &table(|e| e.p_hcurl)?);
        for c in &result.comparisons {
            println!(
                "{} {:<24} computed {:.5} reference {:.5} deviation {:.3} (tolerance {})",
                if c.passed() { "PASS" } else { "FAIL" },
                c.label,
                c.computed,
                c.reference,
                c.deviation,
                c.tolerance
            );
        }
        Some(result)
    } else {
        None
    };
    if let Some(failed) = check
        .as_ref()
        .map(|c| c.failures().count())
        .filter(|&n| n > 0)
    {
        return Err(CliError::Check(failed));
    }
    Ok(RunOutcome {
        run,
        out_dir,
        check,
    })
}

/// Human-readable summary of an MSH file.
pub fn mesh_info(path: &Path) -> Result<String, CliError> {
    let msh = read_msh(path).map_err(|e| match e {
        maxwell_ocp::Error::Io(e) => io_err(path, e),
        other => CliError::Invalid(format!("{}: {other}", path.display())),
    })?;
    let mesh = &msh.mesh;
    let q = mesh_quality_stats(mesh);
    let mut counts = vec![0usize; mesh.num_subdomains()];
    for &s in mesh.subdomains() {
        counts[s] += 1;
    }
    let mut out = format!(
        "vertices {}\ncells {}\nedge unknowns {}\nh_max {:.6}\nh_min {:.6}\nmin dihedral {:.3} deg\n",
        mesh.num_vertices(),
        q.cell_count,
        q.dof_estimate,
        q.h_max,
        q.h_min,
        q.min_dihedral.to_degrees()
    );
    for (label, (tag, n)) in msh.physical_tags.iter().zip(&counts).enumerate() {
        out.push_str(&format!(
            "subdomain {label} (physical tag {tag}): {n} cells\n"
        ));
    }
    Ok(out)
}
