//! Sparse LU on the reduced tangent with a reusable symbolic factorization.

use crate::assembly::{SparseMatrix, SparsePattern};
use crate::error::{Result, ShellError};
use faer::linalg::solvers::Solve;
use faer::sparse::linalg::solvers::{Lu, SymbolicLu};
use faer::sparse::{SparseColMatRef, SymbolicSparseColMat};
use faer::Mat;

pub struct LinearSolver {
    symbolic_mat: SymbolicSparseColMat<usize>,
    symbolic_lu: SymbolicLu<usize>,
}

/// A numeric factorization ready for repeated solves.
pub struct Factorization {
    lu: Lu<usize, f64>,
    n: usize,
}

impl LinearSolver {
    pub fn new(pattern: &SparsePattern) -> Result<LinearSolver> {
        let symbolic_mat =
            SymbolicSparseColMat::new_checked(pattern.n, pattern.n, pattern.col_ptr.clone(), None, pattern.row_idx.clone());
        let symbolic_lu = SymbolicLu::try_new(symbolic_mat.as_ref())
            .map_err(|e| ShellError::NonFinite(format!("symbolic factorization failed: {e:?}")))?;
        Ok(LinearSolver { symbolic_mat, symbolic_lu })
    }

    pub fn factorize(&self, m: &SparseMatrix) -> Result<Factorization> {
        if m.values.iter().any(|v| !v.is_finite()) {
            return Err(ShellError::NonFinite("tangent matrix".into()));
        }
        let mat = SparseColMatRef::new(self.symbolic_mat.as_ref(), &m.values);
        let lu = Lu::try_new_with_symbolic(self.symbolic_lu.clone(), mat).map_err(|e| ShellError::SingularSystem {
            message: format!("LU factorization failed: {e:?}"),
            rigid_modes: 0,
        })?;
        Ok(Factorization { lu, n: self.symbolic_mat.nrows() })
    }
}

impl Factorization {
    /// Solves K x = b for several right-hand sides at once.
    pub fn solve_many(&self, rhs: &[&[f64]]) -> Result<Vec<Vec<f64>>> {
        let mut b = Mat::<f64>::from_fn(self.n, rhs.len(), |i, j| rhs[j][i]);
        self.lu.solve_in_place(b.as_mut());
        let out: Vec<Vec<f64>> = (0..rhs.len()).map(|j| (0..self.n).map(|i| b[(i, j)]).collect()).collect();
        if out.iter().flatten().any(|v| !v.is_finite()) {
            return Err(ShellError::SingularSystem { message: "tangent is numerically singular".into(), rigid_modes: 0 });
        }
        Ok(out)
    }

    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        Ok(self.solve_many(&[rhs])?.remove(0))
    }
}
