//! Tridiagonal solves for the implicit diffusion steps.

/// Solves `a_i x_{i-1} + b_i x_i + c_i x_{i+1} = d_i` by the Thomas
/// algorithm; `a[0]` and `c[len-1]` are ignored.
pub fn thomas(a: &[f64], b: &[f64], c: &[f64], d: &[f64]) -> Vec<f64> {
    let len = b.len();
    assert!(a.len() == len && c.len() == len && d.len() == len);
    if len == 0 {
        return Vec::new();
    }
    let mut cp = vec![0.0; len];
    let mut dp = vec![0.0; len];
    cp[0] = c[0] / b[0];
    dp[0] = d[0] / b[0];
    for i in 1..len {
        let denom = b[i] - a[i] * cp[i - 1];
        cp[i] = c[i] / denom;
        dp[i] = (d[i] - a[i] * dp[i - 1]) / denom;
    }
    let mut x = vec![0.0; len];
    x[len - 1] = dp[len - 1];
    for i in (0..len - 1).rev() {
        x[i] = dp[i] - cp[i] * x[i + 1];
    }
    x
}

/// Crank–Nicolson system for `∂_t v = κ ∂²_{uu} v + s` with Dirichlet data,
/// uniform grid of `m + 1` nodes, fixed `κ`, `dt`.
#[derive(Debug, Clone)]
pub struct CrankNicolson {
    m: usize,
    lambda: f64,
}

impl CrankNicolson {
    pub fn new(m: usize, kappa: f64, dt: f64) -> Self {
        let du = 1.0 / m as f64;
        CrankNicolson {
            m,
            lambda: 0.5 * kappa * dt / (du * du),
        }
    }

    /// Advances `v` (length `m + 1`) one step. `left`/`right` are the new
    /// boundary values; `source` holds `dt · s` at interior nodes (length
    /// `m + 1`, end entries ignored).
    pub fn step(&self, v: &[f64], left: f64, right: f64, source: Option<&[f64]>) -> Vec<f64> {
        let m = self.m;
        let l = self.lambda;
        let k = m - 1;
        let a = vec![-l; k];
        let b = vec![1.0 + 2.0 * l; k];
        let c = vec![-l; k];
        let mut d = vec![0.0; k];
        for i in 1..m {
            let mut rhs = v[i] + l * (v[i - 1] - 2.0 * v[i] + v[i + 1]);
            if let Some(s) = source {
                rhs += s[i];
            }
            d[i - 1] = rhs;
        }
        d[0] += l * left;
        d[k - 1] += l * right;
        let interior = thomas(&a, &b, &c, &d);
        let mut out = Vec::with_capacity(m + 1);
        out.push(left);
        out.extend(interior);
        out.push(right);
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn thomas_matches_dense_solve() {
        let a = [0.0, 1.0, -0.5, 2.0];
        let b = [4.0, 5.0, 3.0, 6.0];
        let c = [1.0, -1.0, 0.5, 0.0];
        let x = [1.0, -2.0, 0.5, 3.0];
        let d: Vec<f64> = (0..4)
            .map(|i| {
                let mut s = b[i] * x[i];
                if i > 0 {
                    s += a[i] * x[i - 1];
                }
                if i < 3 {
                    s += c[i] * x[i + 1];
                }
                s
            })
            .collect();
        let got = thomas(&a, &b, &c, &d);
        for (g, e) in got.iter().zip(x) {
            assert!((g - e).abs() < 1e-14);
        }
    }

    #[test]
    fn linear_profile_is_fixed() {
        let m = 16;
        let cn = CrankNicolson::new(m, 0.7, 0.3);
        let v: Vec<f64> = (0..=m).map(|i| 2.0 * i as f64 / m as f64 - 0.5).collect();
        let w = cn.step(&v, -0.5, 1.5, None);
        for (a, b) in v.iter().zip(&w) {
            assert!((a - b).abs() < 1e-14);
        }
    }
}
