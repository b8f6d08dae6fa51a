//! Tridiagonal systems: LU with partial pivoting, and bordered solves for
//! the extended Newton systems of continuation.

use crate::error::{Error, Result};

/// `sub[i]` is entry `(i+1, i)`, `sup[i]` is entry `(i, i+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub sub: Vec<f64>,
    pub main: Vec<f64>,
    pub sup: Vec<f64>,
}

impl TridiagonalSystem {
    pub fn zeros(n: usize) -> Self {
        TridiagonalSystem {
            sub: vec![0.0; n.saturating_sub(1)],
            main: vec![0.0; n],
            sup: vec![0.0; n.saturating_sub(1)],
        }
    }

    pub fn len(&self) -> usize {
        self.main.len()
    }

    pub fn is_empty(&self) -> bool {
        self.main.is_empty()
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        assert_eq!(x.len(), n, "vector length does not match the system");
        (0..n)
            .map(|i| {
                let mut y = self.main[i] * x[i];
                if i > 0 {
                    y += self.sub[i - 1] * x[i - 1];
                }
                if i + 1 < n {
                    y += self.sup[i] * x[i + 1];
                }
                y
            })
            .collect()
    }

    /// Solve `T x = rhs` by Gaussian elimination with partial pivoting.
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n, "right-hand side length does not match the system");
        if n == 0 {
            return Ok(Vec::new());
        }
        let dl = &self.sub;
        let mut d = self.main.clone();
        let mut du = self.sup.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        let mut b = rhs.to_vec();
        let singular = |i: usize| Error::SingularLinearization(format!("zero pivot in tridiagonal solve at row {i}"));
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    return Err(singular(i));
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                b[i + 1] -= fact * b[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let tmp = d[i + 1];
                d[i + 1] = du[i] - fact * tmp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = tmp;
                let tb = b[i];
                b[i] = b[i + 1];
                b[i + 1] = tb - fact * b[i + 1];
            }
        }
        if d[n - 1] == 0.0 {
            return Err(singular(n - 1));
        }
        b[n - 1] /= d[n - 1];
        if n > 1 {
            b[n - 2] = (b[n - 2] - du[n - 2] * b[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            b[i] = (b[i] - du[i] * b[i + 1] - du2[i] * b[i + 2]) / d[i];
        }
        if b.iter().any(|v| !v.is_finite()) {
            return Err(Error::SingularLinearization("tridiagonal solve produced non-finite values".into()));
        }
        Ok(b)
    }
}

/// Solve the bordered system `[T col; row d] [x; y] = [rhs; rhs_last]` by
/// block elimination, with one step of iterative refinement.
pub fn solve_bordered(
    t: &TridiagonalSystem,
    col: &[f64],
    row: &[f64],
    d: f64,
    rhs: &[f64],
    rhs_last: f64,
) -> Result<(Vec<f64>, f64)> {
    let z = t.solve(col)?;
    let schur = d - dot(row, &z);
    let scale = d.abs() + row.iter().zip(&z).map(|(a, b)| (a * b).abs()).sum::<f64>();
    if schur.abs() <= 1e-14 * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::SingularLinearization("bordered system has a vanishing Schur complement".into()));
    }
    let once = |f: &[f64], g: f64| -> Result<(Vec<f64>, f64)> {
        let w = t.solve(f)?;
        let y = (g - dot(row, &w)) / schur;
        Ok((w.iter().zip(&z).map(|(wi, zi)| wi - y * zi).collect(), y))
    };
    let (mut x, mut y) = once(rhs, rhs_last)?;
    let tx = t.mul_vec(&x);
    let r: Vec<f64> = (0..x.len()).map(|i| rhs[i] - tx[i] - col[i] * y).collect();
    let r_last = rhs_last - dot(row, &x) - d * y;
    let (dx, dy) = once(&r, r_last)?;
    for (xi, dxi) in x.iter_mut().zip(dx) {
        *xi += dxi;
    }
    y += dy;
    Ok((x, y))
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}
