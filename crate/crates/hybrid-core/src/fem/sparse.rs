//! Compressed sparse row storage and the linear solve used by the
//! time stepper.
//!
//! Factorisation and Krylov iterations are delegated to `faer`.

use faer::dyn_stack::{MemBuffer, MemStack};
use faer::matrix_free::bicgstab::{bicgstab, bicgstab_scratch, BicgParams};
use faer::prelude::*;
use faer::sparse::linalg::solvers::Lu;
use faer::sparse::{SparseColMat, Triplet};
use faer::diag::Diag;
use faer::{Mat, Par};

use crate::error::{Error, Result};

/// Systems up to this size are factorised directly.
pub const DIRECT_LIMIT: usize = 20_000;
pub const KRYLOV_TOL: f64 = 1e-10;
pub const KRYLOV_MAX_ITER: usize = 10_000;

/// Square or rectangular matrix in CSR form with sorted, unique columns.
#[derive(Debug, Clone, PartialEq)]
pub struct CsrMatrix {
    pub nrows: usize,
    pub ncols: usize,
    pub row_ptr: Vec<usize>,
    pub cols: Vec<usize>,
    pub vals: Vec<f64>,
}

impl CsrMatrix {
    /// Builds from `(row, col, value)` triplets, summing duplicates.
    pub fn from_triplets(nrows: usize, ncols: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_unstable_by_key(|&(r, c, _)| (r, c));
        let mut row_ptr = vec![0usize; nrows + 1];
        let mut cols = Vec::with_capacity(trips.len());
        let mut vals: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in trips {
            if last == Some((r, c)) {
                *vals.last_mut().expect("previous entry") += v;
            } else {
                cols.push(c);
                vals.push(v);
                row_ptr[r + 1] += 1;
                last = Some((r, c));
            }
        }
        for r in 0..nrows {
            row_ptr[r + 1] += row_ptr[r];
        }
        CsrMatrix { nrows, ncols, row_ptr, cols, vals }
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix::from_triplets(n, n, (0..n).map(|i| (i, i, 1.0)).collect())
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    #[inline]
    pub fn row(&self, r: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
        self.cols[a..b].iter().copied().zip(self.vals[a..b].iter().copied())
    }

    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.row(r).find(|&(cc, _)| cc == c).map(|(_, v)| v).unwrap_or(0.0)
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.nrows];
        self.matvec_into(x, &mut y);
        y
    }

    pub fn matvec_into(&self, x: &[f64], y: &mut [f64]) {
        for (r, yr) in y.iter_mut().enumerate() {
            let (a, b) = (self.row_ptr[r], self.row_ptr[r + 1]);
            *yr = self.cols[a..b].iter().zip(&self.vals[a..b]).map(|(&c, v)| v * x[c]).sum();
        }
    }

    /// `a * self + b * other` on matching shapes.
    pub fn axpby(&self, a: f64, other: &CsrMatrix, b: f64) -> CsrMatrix {
        let mut t: Vec<(usize, usize, f64)> = Vec::with_capacity(self.nnz() + other.nnz());
        for r in 0..self.nrows {
            t.extend(self.row(r).map(|(c, v)| (r, c, a * v)));
            t.extend(other.row(r).map(|(c, v)| (r, c, b * v)));
        }
        CsrMatrix::from_triplets(self.nrows, self.ncols, t)
    }

    /// Submatrix on the given rows and columns (index maps give the new
    /// position or `usize::MAX` to drop).
    pub fn select(&self, row_map: &[usize], nrows: usize, col_map: &[usize], ncols: usize) -> CsrMatrix {
        let mut t = Vec::new();
        for r in 0..self.nrows {
            let nr = row_map[r];
            if nr == usize::MAX {
                continue;
            }
            for (c, v) in self.row(r) {
                let nc = col_map[c];
                if nc != usize::MAX {
                    t.push((nr, nc, v));
                }
            }
        }
        CsrMatrix::from_triplets(nrows, ncols, t)
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut t = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            t.extend(self.row(r).map(|(c, v)| (c, r, v)));
        }
        CsrMatrix::from_triplets(self.ncols, self.nrows, t)
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.nrows.min(self.ncols)).map(|i| self.get(i, i)).collect()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        let t = self.transpose();
        let scale = self.vals.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
        (0..self.nrows).all(|r| self.row(r).all(|(c, v)| (v - t.get(r, c)).abs() <= tol * scale))
    }

    fn to_faer(&self) -> Result<SparseColMat<usize, f64>> {
        let mut trips = Vec::with_capacity(self.nnz());
        for r in 0..self.nrows {
            trips.extend(self.row(r).map(|(c, v)| Triplet::new(r, c, v)));
        }
        SparseColMat::try_new_from_triplets(self.nrows, self.ncols, &trips)
            .map_err(|e| Error::Solver(format!("sparse conversion failed: {e:?}")))
    }
}

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// Reusable solver for a fixed matrix.
pub enum LinearSolver {
    Direct { lu: Lu<usize, f64>, a: CsrMatrix },
    Krylov { a: SparseColMat<usize, f64>, inv_diag: Diag<f64>, csr: CsrMatrix },
}

impl std::fmt::Debug for LinearSolver {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LinearSolver::Direct { a, .. } => write!(f, "LinearSolver::Direct(n = {})", a.nrows),
            LinearSolver::Krylov { csr, .. } => write!(f, "LinearSolver::Krylov(n = {})", csr.nrows),
        }
    }
}

impl LinearSolver {
    /// LU for `n <= DIRECT_LIMIT`, otherwise Jacobi-preconditioned BiCGStab.
    pub fn new(a: &CsrMatrix) -> Result<Self> {
        Self::with_limit(a, DIRECT_LIMIT)
    }

    pub fn with_limit(a: &CsrMatrix, direct_limit: usize) -> Result<Self> {
        if a.nrows != a.ncols {
            return Err(Error::Solver(format!("matrix is {}x{}, not square", a.nrows, a.ncols)));
        }
        let fa = a.to_faer()?;
        if a.nrows <= direct_limit {
            let lu = fa.sp_lu().map_err(|e| Error::Solver(format!("sparse LU failed: {e:?}")))?;
            Ok(LinearSolver::Direct { lu, a: a.clone() })
        } else {
            let d = a.diagonal();
            if let Some(i) = d.iter().position(|&x| x == 0.0) {
                return Err(Error::Solver(format!("zero diagonal at row {i}; Jacobi preconditioner undefined")));
            }
            let inv_diag = Col::<f64>::from_fn(a.nrows, |i| 1.0 / d[i]).into_diagonal();
            Ok(LinearSolver::Krylov { a: fa, inv_diag, csr: a.clone() })
        }
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let n = b.len();
        let bnorm = norm(b);
        if bnorm == 0.0 {
            return Ok(vec![0.0; n]);
        }
        match self {
            LinearSolver::Direct { lu, a } => {
                let mut x = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
                lu.solve_in_place(x.as_mut());
                let mut xv: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
                // one refinement pass keeps the residual contract on ill-scaled systems
                for _ in 0..2 {
                    let r: Vec<f64> = a.matvec(&xv).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
                    if norm(&r) <= KRYLOV_TOL * bnorm {
                        return Ok(xv);
                    }
                    let mut dx = Mat::<f64>::from_fn(n, 1, |i, _| r[i]);
                    lu.solve_in_place(dx.as_mut());
                    for (i, xi) in xv.iter_mut().enumerate() {
                        *xi += dx[(i, 0)];
                    }
                }
                let r: Vec<f64> = a.matvec(&xv).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
                let rel = norm(&r) / bnorm;
                if !(rel <= KRYLOV_TOL) {
                    return Err(Error::Solver(format!("direct solve residual {rel:e} above {KRYLOV_TOL:e}")));
                }
                Ok(xv)
            }
            LinearSolver::Krylov { a, inv_diag, csr } => {
                let rhs = Mat::<f64>::from_fn(n, 1, |i, _| b[i]);
                let mut x = Mat::<f64>::zeros(n, 1);
                let mut params = BicgParams::<f64>::default();
                params.rel_tolerance = 0.5 * KRYLOV_TOL;
                params.max_iters = KRYLOV_MAX_ITER;
                let par = Par::Seq;
                let identity = faer::matrix_free::IdentityPrecond { dim: n };
                let req = bicgstab_scratch(inv_diag, identity, a, 1, par);
                let mut buf = MemBuffer::new(req);
                let stack = MemStack::new(&mut buf);
                let identity = faer::matrix_free::IdentityPrecond { dim: n };
                let info = bicgstab(x.as_mut(), inv_diag, identity, a, rhs.as_ref(), params, |_| {}, par, stack)
                    .map_err(|e| Error::Solver(format!("BiCGStab failed: {e:?}")))?;
                let xv: Vec<f64> = (0..n).map(|i| x[(i, 0)]).collect();
                let r: Vec<f64> = csr.matvec(&xv).iter().zip(b).map(|(ax, bi)| bi - ax).collect();
                let rel = norm(&r) / bnorm;
                if !(rel <= KRYLOV_TOL) {
                    return Err(Error::Solver(format!(
                        "BiCGStab stopped after {} iterations with residual {rel:e}",
                        info.iter_count
                    )));
                }
                Ok(xv)
            }
        }
    }
}

/// One-shot solve of `A x = b`.
pub fn solve_sparse(a: &CsrMatrix, b: &[f64]) -> Result<Vec<f64>> {
    if b.len() != a.nrows {
        return Err(Error::Solver(format!("right-hand side has {} rows, matrix {}", b.len(), a.nrows)));
    }
    LinearSolver::new(a)?.solve(b)
}
