//! Sparse direct solves, backed by faer's supernodal LU with fill-reducing ordering.

use faer::linalg::solvers::Solve;
use faer::sparse::{SparseColMat, Triplet};
use faer::Mat;

use crate::error::{Error, Result};
use crate::sparse::SparseMatrix;

pub struct SparseLu {
    matrix: SparseMatrix,
    lu: faer::sparse::linalg::solvers::Lu<usize, f64>,
}

impl SparseLu {
    pub fn factor(matrix: SparseMatrix) -> Result<Self> {
        if matrix.nrows() != matrix.ncols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        let mut triplets = Vec::with_capacity(matrix.nnz());
        for i in 0..matrix.nrows() {
            for (j, v) in matrix.row(i) {
                triplets.push(Triplet::new(i, j, v));
            }
        }
        let a = SparseColMat::<usize, f64>::try_new_from_triplets(
            matrix.nrows(),
            matrix.ncols(),
            &triplets,
        )
        .map_err(|e| Error::Solver {
            reason: format!("sparse assembly failed: {e:?}"),
            residual: f64::NAN,
        })?;
        let lu = a.sp_lu().map_err(|e| Error::Solver {
            reason: format!("sparse LU failed: {e:?}"),
            residual: f64::NAN,
        })?;
        Ok(SparseLu { matrix, lu })
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    fn solve_raw(&self, rhs: &[f64]) -> Vec<f64> {
        let mut x = Mat::from_fn(rhs.len(), 1, |i, _| rhs[i]);
        self.lu.solve_in_place(x.as_mut());
        (0..rhs.len()).map(|i| x[(i, 0)]).collect()
    }

    fn residual(&self, x: &[f64], rhs: &[f64]) -> Vec<f64> {
        (0..rhs.len())
            .map(|i| rhs[i] - self.matrix.row(i).map(|(j, v)| v * x[j]).sum::<f64>())
            .collect()
    }

    /// Solves `A x = rhs` with up to `refinements` steps of iterative
    /// refinement. Returns the solution and the final max-norm residual.
    pub fn solve(&self, rhs: &[f64], refinements: usize) -> Result<(Vec<f64>, f64)> {
        if rhs.len() != self.matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.matrix.nrows(),
                got: rhs.len(),
            });
        }
        let mut x = self.solve_raw(rhs);
        let mut res = self.residual(&x, rhs);
        let mut norm = max_abs(&res);
        for _ in 0..refinements {
            let dx = self.solve_raw(&res);
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, b)| a + b).collect();
            let trial_res = self.residual(&trial, rhs);
            let trial_norm = max_abs(&trial_res);
            if !(trial_norm < norm) {
                break;
            }
            x = trial;
            res = trial_res;
            norm = trial_norm;
        }
        if !norm.is_finite() || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::Solver {
                reason: "singular system".into(),
                residual: norm,
            });
        }
        Ok((x, norm))
    }
}

pub(crate) fn max_abs(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}
