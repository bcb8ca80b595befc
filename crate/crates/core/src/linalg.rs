//! Sparse symmetric matrices and SPD solvers.
//!
//! Matrices are stored in CSR form with the full (both triangles) pattern, so
//! the same arrays double as CSC storage of the same matrix. Systems up to
//! [`DIRECT_LIMIT`] unknowns use a sparse Cholesky factorization from `faer`
//! with the symbolic analysis cached on the pattern; larger ones use
//! Jacobi-preconditioned conjugate gradients.

use std::fmt;
use std::sync::{Arc, OnceLock};
use std::time::{Duration, Instant};

use faer::linalg::solvers::SolveCore;
use faer::sparse::linalg::solvers::{Llt, SymbolicLlt};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::{Conj, Mat, Side};

use crate::{Error, Result};

pub const DIRECT_LIMIT: usize = 200_000;
pub const DEFAULT_TOL: f64 = 1e-10;

pub struct SparsityPattern {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    symbolic: OnceLock<std::result::Result<SymbolicLlt<usize>, String>>,
}

impl fmt::Debug for SparsityPattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SparsityPattern")
            .field("n", &self.n)
            .field("nnz", &self.col_idx.len())
            .finish()
    }
}

impl PartialEq for SparsityPattern {
    fn eq(&self, other: &Self) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col_idx == other.col_idx
    }
}

impl SparsityPattern {
    /// Pattern containing the given positions (duplicates allowed) and the diagonal.
    pub fn from_entries(n: usize, entries: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut rows: Vec<Vec<usize>> = (0..n).map(|i| vec![i]).collect();
        for (i, j) in entries {
            rows[i].push(j);
        }
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col_idx = Vec::new();
        row_ptr.push(0);
        for mut r in rows {
            r.sort_unstable();
            r.dedup();
            col_idx.extend(r);
            row_ptr.push(col_idx.len());
        }
        Self {
            n,
            row_ptr,
            col_idx,
            symbolic: OnceLock::new(),
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.col_idx.len()
    }

    pub fn row(&self, i: usize) -> &[usize] {
        &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]]
    }

    /// Storage slot of entry `(i, j)`, if present.
    pub fn find(&self, i: usize, j: usize) -> Option<usize> {
        let start = self.row_ptr[i];
        self.row(i).binary_search(&j).ok().map(|k| start + k)
    }

    fn symbolic_llt(&self) -> Result<SymbolicLlt<usize>> {
        let sym = self.symbolic.get_or_init(|| {
            let s = SymbolicSparseColMat::new_checked(
                self.n,
                self.n,
                self.row_ptr.clone(),
                None,
                self.col_idx.clone(),
            );
            SymbolicLlt::try_new(s.as_ref(), Side::Lower).map_err(|e| format!("{e:?}"))
        });
        sym.clone().map_err(|reason| Error::Solver {
            reason,
            report: SolveReport::default(),
        })
    }
}

/// Square sparse matrix on a shared pattern.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pattern: Arc<SparsityPattern>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn zeros(pattern: Arc<SparsityPattern>) -> Self {
        let values = vec![0.0; pattern.nnz()];
        Self { pattern, values }
    }

    /// Sums duplicate triplets; the pattern is exactly the set of given positions plus the diagonal.
    pub fn from_triplets(n: usize, triplets: &[(usize, usize, f64)]) -> Self {
        let pattern = Arc::new(SparsityPattern::from_entries(
            n,
            triplets.iter().map(|&(i, j, _)| (i, j)),
        ));
        let mut m = Self::zeros(pattern);
        for &(i, j, v) in triplets {
            m.add_at(i, j, v);
        }
        m
    }

    pub fn pattern(&self) -> &Arc<SparsityPattern> {
        &self.pattern
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn dim(&self) -> usize {
        self.pattern.n
    }

    /// Adds `v` at `(i, j)`; panics if the position is outside the pattern.
    pub fn add_at(&mut self, i: usize, j: usize, v: f64) {
        let k = self
            .pattern
            .find(i, j)
            .expect("entry outside the sparsity pattern");
        self.values[k] += v;
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.pattern.find(i, j).map_or(0.0, |k| self.values[k])
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.dim()).map(|i| self.get(i, i)).collect()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.dim()];
        self.mul_vec_into(x, &mut y);
        y
    }

    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        let p = &self.pattern;
        for (i, yi) in y.iter_mut().enumerate() {
            let (s, e) = (p.row_ptr[i], p.row_ptr[i + 1]);
            *yi = p.col_idx[s..e]
                .iter()
                .zip(&self.values[s..e])
                .map(|(&j, &a)| a * x[j])
                .sum();
        }
    }

    /// `self += s * other`, both on the same pattern.
    pub fn add_scaled(&mut self, other: &CsrMatrix, s: f64) {
        assert!(Arc::ptr_eq(&self.pattern, &other.pattern) || *self.pattern == *other.pattern);
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            *a += s * b;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.values.iter_mut().for_each(|v| *v *= s);
    }

    /// `max |A_ij - A_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut worst: f64 = 0.0;
        for i in 0..self.dim() {
            for &j in self.pattern.row(i) {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> nalgebra::DMatrix<f64> {
        let mut d = nalgebra::DMatrix::zeros(self.dim(), self.dim());
        for i in 0..self.dim() {
            for &j in self.pattern.row(i) {
                d[(i, j)] = self.get(i, j);
            }
        }
        d
    }

    fn as_faer(&self) -> Result<(SymbolicSparseColMat<usize>, &[f64])> {
        let p = &self.pattern;
        let sym =
            SymbolicSparseColMat::new_checked(p.n, p.n, p.row_ptr.clone(), None, p.col_idx.clone());
        Ok((sym, &self.values))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SolveReport {
    pub iterations: usize,
    pub relative_residual: f64,
    pub wall_time: Duration,
}

enum Method {
    Cholesky(Llt<usize, f64>),
    Jacobi(Vec<f64>),
}

/// A prepared SPD solver for one matrix.
pub struct SpdSolver {
    matrix: CsrMatrix,
    method: Method,
    tol: f64,
    /// Largest absolute row sum.
    norm_inf: f64,
}

impl fmt::Debug for SpdSolver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let kind = match self.method {
            Method::Cholesky(_) => "cholesky",
            Method::Jacobi(_) => "jacobi-pcg",
        };
        f.debug_struct("SpdSolver")
            .field("dim", &self.matrix.dim())
            .field("method", &kind)
            .field("tol", &self.tol)
            .finish()
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl SpdSolver {
    pub fn new(matrix: CsrMatrix, tol: f64) -> Result<Self> {
        Self::with_direct_limit(matrix, tol, DIRECT_LIMIT)
    }

    pub fn with_direct_limit(matrix: CsrMatrix, tol: f64, direct_limit: usize) -> Result<Self> {
        let method = if matrix.dim() <= direct_limit {
            let symbolic = matrix.pattern.symbolic_llt()?;
            let (sym, vals) = matrix.as_faer()?;
            let a = SparseColMatRef::new(sym.as_ref(), vals);
            let llt = Llt::try_new_with_symbolic(symbolic, a, Side::Lower).map_err(|e| {
                Error::Solver {
                    reason: format!("Cholesky factorization failed: {e:?}"),
                    report: SolveReport::default(),
                }
            })?;
            Method::Cholesky(llt)
        } else {
            let d = matrix.diagonal();
            if d.iter().any(|&v| !(v > 0.0)) {
                return Err(Error::Solver {
                    reason: "nonpositive diagonal".into(),
                    report: SolveReport::default(),
                });
            }
            Method::Jacobi(d.iter().map(|v| 1.0 / v).collect())
        };
        let norm_inf = (0..matrix.dim())
            .map(|i| {
                matrix.values[matrix.pattern.row_ptr[i]..matrix.pattern.row_ptr[i + 1]]
                    .iter()
                    .map(|v| v.abs())
                    .sum::<f64>()
            })
            .fold(0.0, f64::max);
        Ok(Self {
            matrix,
            method,
            tol,
            norm_inf,
        })
    }

    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn solve(&self, b: &[f64]) -> Result<(Vec<f64>, SolveReport)> {
        let mut out = self.solve_many(&[b.to_vec()])?;
        Ok(out.pop().expect("one right-hand side"))
    }

    /// Solves for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[Vec<f64>]) -> Result<Vec<(Vec<f64>, SolveReport)>> {
        let start = Instant::now();
        match &self.method {
            Method::Cholesky(llt) => {
                let n = self.dim();
                let mut x: Vec<Vec<f64>> = vec![vec![0.0; n]; rhs.len()];
                let mut r: Vec<Vec<f64>> = rhs.to_vec();
                let bnorm: Vec<f64> = rhs.iter().map(|b| norm(b)).collect();
                let mut rel = vec![0.0; rhs.len()];
                let mut iterations = 0;
                // one solve plus up to three refinement sweeps
                for sweep in 0..4 {
                    let active: Vec<usize> = (0..rhs.len())
                        .filter(|&k| bnorm[k] > 0.0 && (sweep == 0 || rel[k] > self.tol))
                        .collect();
                    if active.is_empty() {
                        break;
                    }
                    iterations += 1;
                    let mut m = Mat::<f64>::zeros(n, active.len());
                    for (c, &k) in active.iter().enumerate() {
                        for i in 0..n {
                            m[(i, c)] = r[k][i];
                        }
                    }
                    llt.solve_in_place_with_conj(Conj::No, m.as_mut());
                    for (c, &k) in active.iter().enumerate() {
                        for i in 0..n {
                            x[k][i] += m[(i, c)];
                        }
                        let ax = self.matrix.mul_vec(&x[k]);
                        for i in 0..n {
                            r[k][i] = rhs[k][i] - ax[i];
                        }
                        rel[k] = norm(&r[k]) / bnorm[k];
                    }
                }
                let wall_time = start.elapsed();
                x.into_iter()
                    .zip(rel)
                    .enumerate()
                    .map(|(k, (x, rel))| {
                        let report = SolveReport {
                            iterations,
                            relative_residual: rel,
                            wall_time,
                        };
                        // a residual at roundoff level cannot be reduced further by refinement
                        let backward = rel * bnorm[k] / (self.norm_inf * norm(&x) + bnorm[k]);
                        if !(rel <= self.tol || backward <= f64::EPSILON * 64.0) {
                            return Err(Error::Solver {
                                reason: "residual above tolerance after refinement".into(),
                                report,
                            });
                        }
                        Ok((x, report))
                    })
                    .collect()
            }
            Method::Jacobi(inv_diag) => rhs.iter().map(|b| self.pcg(b, inv_diag, start)).collect(),
        }
    }

    fn pcg(&self, b: &[f64], inv_diag: &[f64], start: Instant) -> Result<(Vec<f64>, SolveReport)> {
        let n = self.dim();
        let bnorm = norm(b);
        let mut x = vec![0.0; n];
        if bnorm == 0.0 {
            return Ok((
                x,
                SolveReport {
                    iterations: 0,
                    relative_residual: 0.0,
                    wall_time: start.elapsed(),
                },
            ));
        }
        let max_iter = 20 * n + 1000;
        let mut r = b.to_vec();
        let mut z: Vec<f64> = r.iter().zip(inv_diag).map(|(a, d)| a * d).collect();
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut ap = vec![0.0; n];
        for it in 1..=max_iter {
            self.matrix.mul_vec_into(&p, &mut ap);
            let pap = dot(&p, &ap);
            if !(pap > 0.0) {
                let report = SolveReport {
                    iterations: it,
                    relative_residual: norm(&r) / bnorm,
                    wall_time: start.elapsed(),
                };
                return Err(Error::Solver {
                    reason: "conjugate gradient breakdown".into(),
                    report,
                });
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            let rel = norm(&r) / bnorm;
            if rel <= self.tol {
                return Ok((
                    x,
                    SolveReport {
                        iterations: it,
                        relative_residual: rel,
                        wall_time: start.elapsed(),
                    },
                ));
            }
            for i in 0..n {
                z[i] = r[i] * inv_diag[i];
            }
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        let report = SolveReport {
            iterations: max_iter,
            relative_residual: norm(&r) / bnorm,
            wall_time: start.elapsed(),
        };
        Err(Error::Solver {
            reason: "iteration cap reached".into(),
            report,
        })
    }
}

/// One-shot solve of `A x = b` to relative residual `tol`.
pub fn linear_solve(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<(Vec<f64>, SolveReport)> {
    SpdSolver::new(a.clone(), tol)?.solve(b)
}
