//! The microscopic model: state layout, linear drift / linear noise operators,
//! and pointwise energies and currents.
//!
//! Everything here is in microscopic time: the diffusive `n²` factor of the
//! generator is applied only by the time-evolution routines.
//!
//! State layout is `z = (r_1, …, r_n, p_0, …, p_n)`, so `r_x` sits at
//! [`ir`]`(x) = x - 1` and `p_x` at [`ip`]`(n, x) = n + x`.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::params::ChainParams;
use crate::sparse::SparseMatrix;

/// Position of `r_x` (`1 ≤ x ≤ n`) in the state vector.
#[inline]
pub fn ir(x: usize) -> usize {
    debug_assert!(x >= 1);
    x - 1
}

/// Position of `p_x` (`0 ≤ x ≤ n`) in the state vector.
#[inline]
pub fn ip(n: usize, x: usize) -> usize {
    n + x
}

/// A microscopic configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n: usize,
    z: Vec<f64>,
}

impl StateVector {
    pub fn zeros(n: usize) -> Self {
        StateVector {
            n,
            z: vec![0.0; 2 * n + 1],
        }
    }

    pub fn from_vec(n: usize, z: Vec<f64>) -> Result<Self> {
        if z.len() != 2 * n + 1 {
            return Err(Error::DimensionMismatch {
                expected: 2 * n + 1,
                got: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("state entries must be finite".into()));
        }
        Ok(StateVector { n, z })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.z
    }

    #[inline]
    pub fn r(&self, x: usize) -> f64 {
        self.z[ir(x)]
    }

    #[inline]
    pub fn p(&self, x: usize) -> f64 {
        self.z[self.n + x]
    }

    #[inline]
    pub fn set_r(&mut self, x: usize, v: f64) {
        self.z[ir(x)] = v;
    }

    #[inline]
    pub fn set_p(&mut self, x: usize, v: f64) {
        let n = self.n;
        self.z[n + x] = v;
    }

    pub fn is_finite(&self) -> bool {
        self.z.iter().all(|v| v.is_finite())
    }

    pub fn to_dvector(&self) -> DVector<f64> {
        DVector::from_column_slice(&self.z)
    }

    /// `½‖z‖²`, which equals the total energy `Σ_x ℰ_x`.
    pub fn total_energy(&self) -> f64 {
        0.5 * self.z.iter().map(|v| v * v).sum::<f64>()
    }
}

/// One multiplicative exchange channel acting on `(p_x, p_{x+1})`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExchangePair {
    pub left: usize,
}

/// Linear SDE `dz = (B z + c) ds + Σ_k C_k z dw_k + D^{1/2} dw̃` in microscopic time.
#[derive(Debug, Clone)]
pub struct OperatorSet {
    pub n: usize,
    pub gamma: f64,
    pub gamma_tilde: f64,
    pub tau: f64,
    pub t_minus: f64,
    pub t_plus: f64,
    pub b: SparseMatrix,
    pub c: DVector<f64>,
    pub exchange_pairs: Vec<ExchangePair>,
    /// Diagonal of the additive noise covariance.
    pub d: DVector<f64>,
}

/// Builds the drift, noise channels and additive covariance for tension
/// `tau_value`.
pub fn assemble_operators(params: &ChainParams, tau_value: f64) -> Result<OperatorSet> {
    params.validate()?;
    if !tau_value.is_finite() {
        return Err(Error::InvalidParameter("tension must be finite".into()));
    }
    let n = params.n;
    let dim = params.dim();
    let g = params.gamma;
    let gb = 0.5 * (params.gamma + params.gamma_tilde);
    let mut t = Vec::with_capacity(7 * n);

    for x in 1..=n {
        t.push((ir(x), ip(n, x), 1.0));
        t.push((ir(x), ip(n, x - 1), -1.0));
    }
    // p_0
    t.push((ip(n, 0), ir(1), 1.0));
    t.push((ip(n, 0), ip(n, 0), -gb));
    for x in 1..n {
        t.push((ip(n, x), ir(x + 1), 1.0));
        t.push((ip(n, x), ir(x), -1.0));
        t.push((ip(n, x), ip(n, x), -g));
    }
    // p_n
    t.push((ip(n, n), ir(n), -1.0));
    t.push((ip(n, n), ip(n, n), -gb));
    let b = SparseMatrix::from_triplets(dim, dim, &t);

    let mut c = DVector::zeros(dim);
    c[ip(n, n)] = tau_value;

    let mut d = DVector::zeros(dim);
    d[ip(n, 0)] = params.gamma_tilde * params.t_minus;
    d[ip(n, n)] = params.gamma_tilde * params.t_plus;

    Ok(OperatorSet {
        n,
        gamma: params.gamma,
        gamma_tilde: params.gamma_tilde,
        tau: tau_value,
        t_minus: params.t_minus,
        t_plus: params.t_plus,
        b,
        c,
        exchange_pairs: (0..n).map(|left| ExchangePair { left }).collect(),
        d,
    })
}

/// Symmetric quadratic observable `f(z) = zᵀ Q z + lᵀ z + k`.
#[derive(Debug, Clone)]
pub struct QuadraticForm {
    pub q: DMatrix<f64>,
    pub l: DVector<f64>,
    pub k: f64,
}

impl QuadraticForm {
    pub fn zero(dim: usize) -> Self {
        QuadraticForm {
            q: DMatrix::zeros(dim, dim),
            l: DVector::zeros(dim),
            k: 0.0,
        }
    }

    /// Monomial `z_a z_b`.
    pub fn product(dim: usize, a: usize, b: usize) -> Self {
        let mut f = Self::zero(dim);
        f.q[(a, b)] += 0.5;
        f.q[(b, a)] += 0.5;
        f
    }

    /// Monomial `z_a`.
    pub fn linear(dim: usize, a: usize) -> Self {
        let mut f = Self::zero(dim);
        f.l[a] = 1.0;
        f
    }

    pub fn eval(&self, z: &DVector<f64>) -> f64 {
        z.dot(&(&self.q * z)) + self.l.dot(z) + self.k
    }
}

impl OperatorSet {
    pub fn dim(&self) -> usize {
        2 * self.n + 1
    }

    /// Drift `B z + c`.
    pub fn drift(&self, z: &DVector<f64>) -> DVector<f64> {
        self.b.mul_vec(z) + &self.c
    }

    /// `C_k z` for channel `k`.
    pub fn apply_channel(&self, k: usize, z: &DVector<f64>) -> DVector<f64> {
        let s = self.gamma.sqrt();
        let x = self.exchange_pairs[k].left;
        let (i, j) = (ip(self.n, x), ip(self.n, x + 1));
        let mut out = DVector::zeros(z.len());
        out[i] = -s * z[j];
        out[j] = s * z[i];
        out
    }

    /// Dense `C_k`.
    pub fn channel_matrix(&self, k: usize) -> DMatrix<f64> {
        let s = self.gamma.sqrt();
        let x = self.exchange_pairs[k].left;
        let (i, j) = (ip(self.n, x), ip(self.n, x + 1));
        let mut c = DMatrix::zeros(self.dim(), self.dim());
        c[(i, j)] = -s;
        c[(j, i)] = s;
        c
    }

    /// `Σ_k C_k M C_kᵀ` for symmetric `M`.
    pub fn noise_term(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = DMatrix::zeros(m.nrows(), m.ncols());
        self.add_noise_term(m, &mut out, 1.0);
        out
    }

    /// `out += scale · Σ_k C_k M C_kᵀ`.
    pub fn add_noise_term(&self, m: &DMatrix<f64>, out: &mut DMatrix<f64>, scale: f64) {
        let g = self.gamma * scale;
        for pair in &self.exchange_pairs {
            let (i, j) = (ip(self.n, pair.left), ip(self.n, pair.left + 1));
            out[(i, i)] += g * m[(j, j)];
            out[(j, j)] += g * m[(i, i)];
            out[(i, j)] -= g * m[(j, i)];
            out[(j, i)] -= g * m[(i, j)];
        }
    }

    /// Generator (divided by `n²`) applied to a quadratic observable, evaluated at `z`.
    pub fn generator_quadratic(&self, f: &QuadraticForm, z: &DVector<f64>) -> f64 {
        let grad = 2.0 * (&f.q * z) + &f.l;
        let mut out = grad.dot(&self.drift(z));
        for k in 0..self.exchange_pairs.len() {
            let cz = self.apply_channel(k, z);
            out += cz.dot(&(&f.q * &cz));
        }
        for i in 0..self.dim() {
            out += f.q[(i, i)] * self.d[i];
        }
        out
    }

    /// Right-hand side of the raw second-moment equation,
    /// `B M + M Bᵀ + Σ C_k M C_kᵀ + c mᵀ + m cᵀ + D`.
    pub fn second_moment_rhs(&self, mean: &DVector<f64>, m: &DMatrix<f64>) -> DMatrix<f64> {
        let bm = self.b.mul_dense(m);
        let mut out = &bm + bm.transpose();
        self.add_noise_term(m, &mut out, 1.0);
        let cm = &self.c * mean.transpose();
        out += &cm + cm.transpose();
        for i in 0..self.dim() {
            out[(i, i)] += self.d[i];
        }
        out
    }
}

fn check_site(n: usize, x: usize) -> Result<()> {
    if x > n {
        Err(Error::IndexOutOfRange { index: x, max: n })
    } else {
        Ok(())
    }
}

/// `ℰ_x = p_x²/2 + r_x²/2` for `x ≥ 1`, `ℰ_0 = p_0²/2`.
pub fn site_energy(z: &StateVector, x: usize) -> Result<f64> {
    check_site(z.n(), x)?;
    let p = z.p(x);
    let r = if x == 0 { 0.0 } else { z.r(x) };
    Ok(0.5 * (p * p + r * r))
}

/// Instantaneous bond current `j_{x,x+1} = -p_x r_{x+1} + (γ/2)(p_x² - p_{x+1}²)`.
pub fn bulk_current(z: &StateVector, x: usize, gamma: f64) -> Result<f64> {
    if x + 1 > z.n() {
        return Err(Error::IndexOutOfRange {
            index: x,
            max: z.n() - 1,
        });
    }
    let (p, q) = (z.p(x), z.p(x + 1));
    Ok(-p * z.r(x + 1) + 0.5 * gamma * (p * p - q * q))
}

/// Boundary currents `(j_{-1,0}, j_{n,n+1})`.
pub fn boundary_currents(z: &StateVector, params: &ChainParams, tau_value: f64) -> (f64, f64) {
    let (p0, pn) = (z.p(0), z.p(z.n()));
    let left = 0.5 * params.gamma_tilde * (params.t_minus - p0 * p0);
    let right = -0.5 * params.gamma_tilde * (params.t_plus - pn * pn) - tau_value * pn;
    (left, right)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(n: usize, g: f64, gt: f64, tau: f64) -> ChainParams {
        ChainParams::new(n, g, gt, tau, 1.0, 2.0).unwrap()
    }

    #[test]
    fn drift_rows_n2() {
        let ops = assemble_operators(&params(2, 1.0, 1.0, 0.0), 0.0).unwrap();
        let n = 2;
        // p_1: (r_2 - r_1) - p_1
        assert_eq!(ops.b.get(ip(n, 1), ir(2)), 1.0);
        assert_eq!(ops.b.get(ip(n, 1), ir(1)), -1.0);
        assert_eq!(ops.b.get(ip(n, 1), ip(n, 1)), -1.0);
        assert_eq!(ops.b.row(ip(n, 1)).count(), 3);
        // p_0: r_1 - p_0
        assert_eq!(ops.b.get(ip(n, 0), ir(1)), 1.0);
        assert_eq!(ops.b.get(ip(n, 0), ip(n, 0)), -1.0);
        assert_eq!(ops.b.row(ip(n, 0)).count(), 2);
        // p_2: -r_2 - p_2
        assert_eq!(ops.b.get(ip(n, 2), ir(2)), -1.0);
        assert_eq!(ops.b.get(ip(n, 2), ip(n, 2)), -1.0);
        assert_eq!(ops.b.row(ip(n, 2)).count(), 2);
        // r_1: p_1 - p_0
        assert_eq!(ops.b.get(ir(1), ip(n, 1)), 1.0);
        assert_eq!(ops.b.get(ir(1), ip(n, 0)), -1.0);
    }

    #[test]
    fn forcing_has_single_entry() {
        for &(n, tau) in &[(2, 0.7), (7, -1.3), (30, 2.0)] {
            let ops = assemble_operators(&params(n, 1.3, 0.4, tau), tau).unwrap();
            let nz: Vec<usize> = (0..ops.dim()).filter(|&i| ops.c[i] != 0.0).collect();
            assert_eq!(nz, vec![ip(n, n)]);
            assert_eq!(ops.c[ip(n, n)], tau);
            assert_eq!(ops.exchange_pairs.len(), n);
            assert_eq!(ops.d[ip(n, 0)], 0.4 * 1.0);
            assert_eq!(ops.d[ip(n, n)], 0.4 * 2.0);
        }
    }

    #[test]
    fn channels_are_antisymmetric() {
        let ops = assemble_operators(&params(5, 2.0, 0.5, 0.3), 0.3).unwrap();
        for k in 0..5 {
            let c = ops.channel_matrix(k);
            assert_eq!(&c + c.transpose(), DMatrix::zeros(11, 11));
            let z = DVector::from_fn(11, |i, _| (i as f64 * 0.37).sin());
            assert!(z.dot(&(&c * &z)).abs() < 1e-15);
            assert_eq!(ops.apply_channel(k, &z), &c * &z);
        }
    }

    #[test]
    fn noise_term_matches_dense() {
        let ops = assemble_operators(&params(4, 1.7, 0.5, 0.3), 0.3).unwrap();
        let a = DMatrix::from_fn(9, 9, |i, j| ((i * 7 + j * 3) as f64).cos());
        let m = &a * a.transpose();
        let mut dense = DMatrix::zeros(9, 9);
        for k in 0..4 {
            let c = ops.channel_matrix(k);
            dense += &c * &m * c.transpose();
        }
        assert!((ops.noise_term(&m) - dense).amax() < 1e-12);
    }

    #[test]
    fn energies_and_currents() {
        let n = 5;
        let mut z = StateVector::zeros(n);
        assert_eq!(site_energy(&z, 3).unwrap(), 0.0);
        assert_eq!(bulk_current(&z, 2, 1.0).unwrap(), 0.0);
        z.set_p(3, 2.0);
        assert_eq!(site_energy(&z, 3).unwrap(), 2.0);
        assert!(site_energy(&z, 6).is_err());
        assert!(bulk_current(&z, 5, 1.0).is_err());

        let mut z = StateVector::zeros(n);
        z.set_p(2, 1.0);
        z.set_p(3, 1.0);
        z.set_r(3, 1.0);
        assert_eq!(bulk_current(&z, 2, 0.8).unwrap(), -1.0);

        let p = ChainParams::new(n, 1.0, 2.0, 0.0, 1.5, 0.5).unwrap();
        let mut z = StateVector::zeros(n);
        z.set_p(0, 1.5f64.sqrt());
        z.set_p(n, 0.5f64.sqrt());
        let (l, r) = boundary_currents(&z, &p, 0.0);
        assert!(l.abs() < 1e-15 && r.abs() < 1e-15);
    }

    #[test]
    fn site_energies_sum_to_half_norm() {
        let n = 6;
        let z = StateVector::from_vec(n, (0..13).map(|i| (i as f64 * 1.3).sin() * 2.0).collect())
            .unwrap();
        let sum: f64 = (0..=n).map(|x| site_energy(&z, x).unwrap()).sum();
        assert!((sum - z.total_energy()).abs() < 1e-13);
    }

    #[test]
    fn state_rejects_bad_input() {
        assert!(StateVector::from_vec(3, vec![0.0; 6]).is_err());
        assert!(StateVector::from_vec(3, vec![f64::INFINITY; 7]).is_err());
    }
}
