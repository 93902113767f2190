use super::SparseMatrix;
use crate::{Error, Result};

/// Default relative residual tolerance of [`solve_spd`].
pub const PCG_TOL: f64 = 1e-12;

/// Outcome of a conjugate-gradient solve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveStats {
    pub iterations: usize,
    pub residual: f64,
}

/// Solves `A x = b` for SPD `A` by Jacobi-preconditioned conjugate gradients.
pub fn solve_spd(a: &SparseMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut x = vec![0.0; a.dim()];
    let free = vec![true; a.dim()];
    pcg_masked(a, b, &free, &mut x, tol)?;
    Ok(x)
}

/// Conjugate gradients on the rows flagged in `free`.
///
/// Entries of `x` outside `free` are prescribed values and are moved to the
/// right-hand side; free entries of `x` are the initial guess. The residual
/// is measured relative to the reduced right-hand side `b_f − A_fc x_c`.
pub fn pcg_masked(a: &SparseMatrix, b: &[f64], free: &[bool], x: &mut [f64], tol: f64) -> Result<SolveStats> {
    let n = a.dim();
    for len in [b.len(), free.len(), x.len()] {
        if len != n {
            return Err(Error::Dimension { expected: n, got: len });
        }
    }
    if !(tol > 0.0) {
        return Err(Error::Solver(format!("tolerance {tol} must be positive")));
    }
    let diag = a.diag();
    for i in 0..n {
        if free[i] && !(diag[i] > 0.0) {
            return Err(Error::Solver(format!("non-positive diagonal {} at row {i}", diag[i])));
        }
    }

    // Reduced right-hand side with the free part of x zeroed.
    let mut xc: Vec<f64> = x.iter().zip(free).map(|(&v, &f)| if f { 0.0 } else { v }).collect();
    let mut ax = a.mul(&xc);
    let mut r: Vec<f64> = (0..n).map(|i| if free[i] { b[i] - ax[i] } else { 0.0 }).collect();
    let bnorm = norm(&r);
    if bnorm == 0.0 {
        for i in 0..n {
            if free[i] {
                x[i] = 0.0;
            }
        }
        return Ok(SolveStats { iterations: 0, residual: 0.0 });
    }
    // Residual of the initial guess.
    xc.copy_from_slice(x);
    for i in 0..n {
        if !free[i] {
            xc[i] = 0.0;
        }
    }
    a.mul_into(&xc, &mut ax);
    for i in 0..n {
        if free[i] {
            r[i] -= ax[i];
        }
    }

    let mut z: Vec<f64> = (0..n).map(|i| if free[i] { r[i] / diag[i] } else { 0.0 }).collect();
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut ap = vec![0.0; n];
    let cap = 10 * n.max(1);
    let target = tol * bnorm;
    for it in 0..=cap {
        let rn = norm(&r);
        if rn <= target {
            return Ok(SolveStats { iterations: it, residual: rn / bnorm });
        }
        if it == cap {
            break;
        }
        a.mul_into(&p, &mut ap);
        for i in 0..n {
            if !free[i] {
                ap[i] = 0.0;
            }
        }
        let pap = dot(&p, &ap);
        if !(pap > 0.0) {
            return Err(Error::Solver(format!("breakdown at iteration {it} (pᵀAp = {pap:e})")));
        }
        let alpha = rz / pap;
        for i in 0..n {
            if free[i] {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
                z[i] = r[i] / diag[i];
            }
        }
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for i in 0..n {
            p[i] = z[i] + beta * p[i];
        }
    }
    Err(Error::Solver(format!(
        "no convergence within {cap} iterations (relative residual {:e})",
        norm(&r) / bnorm
    )))
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Dense Cholesky solve; used as an oracle and for small Schur systems.
pub fn dense_cholesky_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut l = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > 0.0) {
                    return Err(Error::Solver(format!("matrix is not positive definite at pivot {i}")));
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let s: f64 = (0..i).map(|k| l[i][k] * y[k]).sum();
        y[i] = (b[i] - s) / l[i][i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| l[k][i] * x[k]).sum();
        x[i] = (y[i] - s) / l[i][i];
    }
    Ok(x)
}

/// Dense LU solve with partial pivoting.
pub fn dense_lu_solve(a: &[Vec<f64>], b: &[f64]) -> Result<Vec<f64>> {
    let n = b.len();
    let mut m: Vec<Vec<f64>> = a.to_vec();
    let mut x = b.to_vec();
    for c in 0..n {
        let piv = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .expect("non-empty range");
        if m[piv][c] == 0.0 {
            return Err(Error::Solver(format!("singular matrix at column {c}")));
        }
        m.swap(c, piv);
        x.swap(c, piv);
        for i in c + 1..n {
            let f = m[i][c] / m[c][c];
            if f != 0.0 {
                for k in c..n {
                    m[i][k] -= f * m[c][k];
                }
                x[i] -= f * x[c];
            }
        }
    }
    for i in (0..n).rev() {
        let s: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (x[i] - s) / m[i][i];
    }
    Ok(x)
}

/// Dense solve of `A_ff x_f = b_f − A_fc x_c` (oracle for [`pcg_masked`]).
pub fn dense_masked_solve(a: &SparseMatrix, b: &[f64], free: &[bool], x: &mut [f64]) -> Result<()> {
    let d = a.to_dense();
    let idx: Vec<usize> = (0..a.dim()).filter(|&i| free[i]).collect();
    let sub: Vec<Vec<f64>> = idx.iter().map(|&i| idx.iter().map(|&j| d[i][j]).collect()).collect();
    let rhs: Vec<f64> = idx
        .iter()
        .map(|&i| b[i] - (0..a.dim()).filter(|&j| !free[j]).map(|j| d[i][j] * x[j]).sum::<f64>())
        .collect();
    let sol = dense_cholesky_solve(&sub, &rhs)?;
    for (k, &i) in idx.iter().enumerate() {
        x[i] = sol[k];
    }
    Ok(())
}
