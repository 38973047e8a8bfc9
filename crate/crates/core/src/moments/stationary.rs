//! Stationary first and second moments from generator closure.
//!
//! The stationary mean solves `B m + c = 0`. The raw second moments solve the
//! generalized Lyapunov equation
//!
//! ```text
//! B M + M Bᵀ + Σ_k C_k M C_kᵀ + c mᵀ + m cᵀ + D = 0
//! ```
//!
//! which is assembled on the packed upper triangle of `M` and handed to a
//! sparse direct solver.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::chain::{ip, OperatorSet};
use crate::error::{Error, Result};
use crate::linsolve::{max_abs, SparseLu};
use crate::sparse::SparseMatrix;

/// Absolute residual target for the fixed-point mode.
pub const FIXED_POINT_TOL: f64 = 1e-10;
pub const FIXED_POINT_MAX_ITERS: usize = 200;
/// Relative tolerance on the smallest covariance eigenvalue, scaled by the trace.
pub const PSD_TOL: f64 = 1e-8;
pub const MAX_N: usize = 512;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LyapunovMethod {
    /// Sparse LU on the full vectorized operator including the noise term.
    #[default]
    Direct,
    /// Lagged noise term, inner Lyapunov equation solved directly.
    FixedPoint,
}

/// Means and raw second moments, stationary or at a given time.
#[derive(Debug, Clone)]
pub struct MomentSolution {
    pub mean: DVector<f64>,
    pub second: DMatrix<f64>,
    /// Max-norm residual of the defining equations.
    pub residual: f64,
    pub iterations: usize,
    pub time: Option<f64>,
}

impl MomentSolution {
    pub fn n(&self) -> usize {
        (self.mean.len() - 1) / 2
    }

    pub fn covariance(&self) -> DMatrix<f64> {
        &self.second - &self.mean * self.mean.transpose()
    }

    /// Raw second moment `⟨z_a z_b⟩`.
    #[inline]
    pub fn at(&self, a: usize, b: usize) -> f64 {
        self.second[(a, b)]
    }
}

pub fn solve_stationary_mean(ops: &OperatorSet) -> Result<DVector<f64>> {
    check_size(ops)?;
    let lu = SparseLu::factor(ops.b.clone())?;
    let rhs: Vec<f64> = ops.c.iter().map(|v| -v).collect();
    let (m, residual) = lu.solve(&rhs, 2)?;
    let scale = 1.0 + max_abs(&rhs);
    if residual > 1e-12 * scale {
        return Err(Error::Solver {
            reason: "stationary mean residual too large".into(),
            residual,
        });
    }
    Ok(DVector::from_vec(m))
}

pub fn solve_stationary_second_moments(
    ops: &OperatorSet,
    mean: &DVector<f64>,
) -> Result<MomentSolution> {
    solve_stationary_second_moments_with(ops, mean, LyapunovMethod::Direct)
}

/// Convenience: mean and second moments in one call.
pub fn solve_stationary(ops: &OperatorSet) -> Result<MomentSolution> {
    let mean = solve_stationary_mean(ops)?;
    solve_stationary_second_moments(ops, &mean)
}

pub fn solve_stationary_second_moments_with(
    ops: &OperatorSet,
    mean: &DVector<f64>,
    method: LyapunovMethod,
) -> Result<MomentSolution> {
    check_size(ops)?;
    let dim = ops.dim();
    if mean.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            got: mean.len(),
        });
    }
    let packing = Packing::new(dim);
    let rhs = forcing_rhs(ops, mean, &packing);

    let (second, iterations) = match method {
        LyapunovMethod::Direct => {
            let lu = SparseLu::factor(assemble(ops, &packing, true))?;
            let (x, _) = lu.solve(&rhs, 3)?;
            (packing.unpack(&x), 1)
        }
        LyapunovMethod::FixedPoint => fixed_point(ops, mean, &packing, &rhs)?,
    };

    let residual = ops.second_moment_rhs(mean, &second).amax();
    let scale = 1.0 + second.amax();
    if !(residual <= 1e-9 * scale) {
        return Err(Error::Solver {
            reason: "Lyapunov residual above tolerance".into(),
            residual,
        });
    }
    log::debug!("stationary second moments: dim {dim}, residual {residual:.3e}, {iterations} iterations");
    let sol = MomentSolution {
        mean: mean.clone(),
        second,
        residual,
        iterations,
        time: None,
    };
    check_psd(&sol)?;
    Ok(sol)
}

fn check_size(ops: &OperatorSet) -> Result<()> {
    if ops.n > MAX_N {
        return Err(Error::InvalidParameter(format!(
            "exact solver supports n <= {MAX_N} (got {})",
            ops.n
        )));
    }
    Ok(())
}

fn fixed_point(
    ops: &OperatorSet,
    mean: &DVector<f64>,
    packing: &Packing,
    rhs: &[f64],
) -> Result<(DMatrix<f64>, usize)> {
    let lu = SparseLu::factor(assemble(ops, packing, false))?;
    let mut second = DMatrix::zeros(ops.dim(), ops.dim());
    let mut residual = f64::INFINITY;
    for it in 1..=FIXED_POINT_MAX_ITERS {
        let noise = ops.noise_term(&second);
        let lagged: Vec<f64> = rhs
            .iter()
            .zip(packing.pack(&noise))
            .map(|(r, q)| r - q)
            .collect();
        let (x, _) = lu.solve(&lagged, 1)?;
        second = packing.unpack(&x);
        residual = ops.second_moment_rhs(mean, &second).amax();
        if residual <= FIXED_POINT_TOL {
            return Ok((second, it));
        }
        if !residual.is_finite() {
            break;
        }
    }
    Err(Error::NoConvergence {
        iterations: FIXED_POINT_MAX_ITERS,
        residual,
    })
}

/// Covariance must be PSD up to `PSD_TOL · trace`.
pub fn check_psd(sol: &MomentSolution) -> Result<()> {
    let cov = sol.covariance();
    let asym = (&cov - cov.transpose()).amax();
    if asym > 1e-12 * (1.0 + cov.amax()) {
        return Err(Error::NotPositiveSemidefinite(format!(
            "asymmetry {asym:.3e}"
        )));
    }
    let tol = PSD_TOL * cov.trace().abs().max(f64::MIN_POSITIVE);
    let shifted = &cov + DMatrix::identity(cov.nrows(), cov.ncols()) * tol;
    if shifted.cholesky().is_none() {
        return Err(Error::NotPositiveSemidefinite(format!(
            "no Cholesky factor at shift {tol:.3e}"
        )));
    }
    Ok(())
}

/// Index map for the packed upper triangle `a ≤ b`.
pub(crate) struct Packing {
    dim: usize,
}

impl Packing {
    pub fn new(dim: usize) -> Self {
        Packing { dim }
    }

    pub fn len(&self) -> usize {
        self.dim * (self.dim + 1) / 2
    }

    #[inline]
    pub fn index(&self, a: usize, b: usize) -> usize {
        let (a, b) = if a <= b { (a, b) } else { (b, a) };
        a * (2 * self.dim - a + 1) / 2 + (b - a)
    }

    pub fn pack(&self, m: &DMatrix<f64>) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for a in 0..self.dim {
            for b in a..self.dim {
                out[self.index(a, b)] = m[(a, b)];
            }
        }
        out
    }

    pub fn unpack(&self, v: &[f64]) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for a in 0..self.dim {
            for b in a..self.dim {
                let x = v[self.index(a, b)];
                m[(a, b)] = x;
                m[(b, a)] = x;
            }
        }
        m
    }
}

fn forcing_rhs(ops: &OperatorSet, mean: &DVector<f64>, packing: &Packing) -> Vec<f64> {
    let mut rhs = vec![0.0; packing.len()];
    for a in 0..ops.dim() {
        for b in a..ops.dim() {
            let mut f = ops.c[a] * mean[b] + mean[a] * ops.c[b];
            if a == b {
                f += ops.d[a];
            }
            rhs[packing.index(a, b)] = -f;
        }
    }
    rhs
}

/// Vectorized `M ↦ B M + M Bᵀ (+ Σ C_k M C_kᵀ)` on the packed upper triangle.
fn assemble(ops: &OperatorSet, packing: &Packing, with_noise: bool) -> SparseMatrix {
    let dim = ops.dim();
    let n = ops.n;
    let g = ops.gamma;
    let mut triplets = Vec::with_capacity(packing.len() * 8);
    let mut row: Vec<(usize, f64)> = Vec::with_capacity(16);
    for a in 0..dim {
        for b in a..dim {
            row.clear();
            for (k, v) in ops.b.row(a) {
                row.push((packing.index(k, b), v));
            }
            for (k, v) in ops.b.row(b) {
                row.push((packing.index(a, k), v));
            }
            if with_noise && a >= n {
                let x = a - n;
                if a == b {
                    if x < n {
                        row.push((packing.index(ip(n, x + 1), ip(n, x + 1)), g));
                    }
                    if x > 0 {
                        row.push((packing.index(ip(n, x - 1), ip(n, x - 1)), g));
                    }
                } else if b == a + 1 {
                    row.push((packing.index(a, b), -g));
                }
            }
            let r = packing.index(a, b);
            triplets.extend(row.iter().map(|&(c, v)| (r, c, v)));
        }
    }
    SparseMatrix::from_triplets(packing.len(), packing.len(), &triplets)
}
