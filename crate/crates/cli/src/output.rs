//! CSV and VTK output of a run.
//!
//! `history.csv` has one row per solved mesh:
//!
//! ```text
//! iter,ncells,ndofs,h_max,J,ssn_iters,u_1..u_l,est_st,est_adj,est_ocp,err_y_l2,err_y_hcurl,err_p_hcurl,err_u
//! ```
//!
//! with the error columns left empty when the case has no exact solution.
//! `eoc.csv` lists convergence orders against the mesh size for uniform runs
//! and against the number of unknowns for adaptive runs; the latter are
//! reported as mesh-size equivalents, `h ~ N^(-1/3)`.

use std::fmt::Write as _;
use std::path::Path;

use maxwell_ocp::adapt::IterationView;
use maxwell_ocp::adapt::{eoc_table, AdaptiveRun, EocMode};
use maxwell_ocp::io::{write_vtk, VtkCellData};

fn num(v: f64) -> String {
    format!("{v:e}")
}

/// Header of `history.csv` for `l` controls.
pub fn history_header(l: usize) -> String {
    let mut cols: Vec<String> = ["iter", "ncells", "ndofs", "h_max", "J", "ssn_iters"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    cols.extend((1..=l).map(|k| format!("u_{k}")));
    cols.extend(
        [
            "est_st",
            "est_adj",
            "est_ocp",
            "err_y_l2",
            "err_y_hcurl",
            "err_p_hcurl",
            "err_u",
        ]
        .iter()
        .map(|s| s.to_string()),
    );
    cols.join(",")
}

/// Contents of `history.csv`.
pub fn history_csv(run: &AdaptiveRun, l: usize) -> String {
    let mut out = history_header(l);
    out.push('\n');
    for r in &run.records {
        let mut row = vec![
            r.iteration.to_string(),
            r.ncells.to_string(),
            r.ndofs.to_string(),
            num(r.h_max),
            num(r.cost),
            r.ssn_iterations.to_string(),
        ];
        row.extend(r.u.iter().map(|&v| num(v)));
        row.extend([r.est_st, r.est_adj, r.est_ocp].map(num));
        match &r.errors {
            Some(e) => row.extend([e.y_l2, e.y_hcurl, e.p_hcurl, e.u].map(num)),
            None => row.extend(std::iter::repeat_n(String::new(), 4)),
        }
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

/// Contents of `eoc.csv`; order columns are empty on the first row.
pub fn eoc_csv(run: &AdaptiveRun, mode: EocMode) -> String {
    let size_name = match mode {
        EocMode::H => "h_max",
        EocMode::N => "ndofs",
    };
    let sizes: Vec<f64> = run
        .records
        .iter()
        .map(|r| match mode {
            EocMode::H => r.h_max,
            EocMode::N => r.ndofs as f64,
        })
        .collect();
    let orders = |errors: Option<Vec<f64>>| -> Vec<String> {
        let table = errors.and_then(|e| eoc_table(&e, &sizes, mode).ok());
        (0..sizes.len())
            .map(|i| {
                table
                    .as_ref()
                    .and_then(|t| t.rows[i].order)
                    .map_or(String::new(), num)
            })
            .collect()
    };
    let y: Option<Vec<f64>> = run
        .records
        .iter()
        .map(|r| r.errors.as_ref().map(|e| e.y_hcurl))
        .collect();
    let p: Option<Vec<f64>> = run
        .records
        .iter()
        .map(|r| r.errors.as_ref().map(|e| e.p_hcurl))
        .collect();
    let est: Vec<f64> = run.records.iter().map(|r| r.est_ocp).collect();
    let (oy, op, oe) = (
        orders(y.clone()),
        orders(p.clone()),
        orders(Some(est.clone())),
    );
    let mut out = format!(
        "iter,{size_name},err_y_hcurl,eoc_y_hcurl,err_p_hcurl,eoc_p_hcurl,est_ocp,eoc_est_ocp\n"
    );
    for (i, r) in run.records.iter().enumerate() {
        let cell = |v: &Option<Vec<f64>>| v.as_ref().map_or(String::new(), |v| num(v[i]));
        let size = match mode {
            EocMode::H => num(r.h_max),
            EocMode::N => r.ndofs.to_string(),
        };
        let _ = writeln!(
            out,
            "{},{size},{},{},{},{},{},{}",
            r.iteration,
            cell(&y),
            oy[i],
            cell(&p),
            op[i],
            num(est[i]),
            oe[i]
        );
    }
    out
}

/// Writes `history.csv` and `eoc.csv` into `dir`, creating it if needed.
pub fn write_outputs(
    run: &AdaptiveRun,
    l: usize,
    mode: EocMode,
    dir: &Path,
) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    std::fs::write(dir.join("history.csv"), history_csv(run, l))?;
    if run.records.len() > 1 {
        std::fs::write(dir.join("eoc.csv"), eoc_csv(run, mode))?;
    }
    Ok(())
}

/// Writes `mesh_####.vtk` with indicators and the discrete state and adjoint.
pub fn write_iteration_vtk(view: &IterationView, dir: &Path) -> maxwell_ocp::Result<()> {
    let space = view.problem.space();
    let ind = view.indicators;
    let data = VtkCellData::new()
        .scalar("eta_state", ind.est_state.clone())
        .scalar("eta_adjoint", ind.est_adjoint.clone())
        .scalar("eta_ocp", ind.combined())
        .field(space, "y", &view.triple.y)?
        .field(space, "p", &view.triple.p)?;
    let path = dir.join(format!("mesh_{:04}.vtk", view.record.iteration));
    write_vtk(path, space.mesh(), &data)
}
