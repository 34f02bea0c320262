//! Small dense kernels: symmetric eigen-decomposition by cyclic Jacobi
//! rotations, an SPD linear solve, and the Frobenius distance used by the
//! stopping rules.

use crate::error::{Error, Result};
use crate::matrix::{norm, Matrix};

const MAX_SWEEPS: usize = 100;
const SYMMETRY_TOL: f64 = 1e-8;
const PIVOT_TOL: f64 = 1e-12;
const SIGN_TOL: f64 = 1e-10;

/// Eigenvalues in ascending order with matching unit eigenvectors (rows).
#[derive(Clone, Debug)]
pub struct SymmetricEigen {
    pub values: Vec<f64>,
    pub vectors: Matrix,
}

fn check_symmetric(w: &Matrix) -> Result<()> {
    let (r, c) = w.shape();
    if r != c || r == 0 {
        return Err(Error::invalid(format!(
            "expected a non-empty square matrix, got {r}x{c}"
        )));
    }
    if !w.is_finite() {
        return Err(Error::invalid("matrix has non-finite entries"));
    }
    let scale = w.frobenius_norm();
    for i in 0..r {
        for j in (i + 1)..r {
            if (w[(i, j)] - w[(j, i)]).abs() > SYMMETRY_TOL * scale {
                return Err(Error::invalid(format!(
                    "matrix is not symmetric at ({i}, {j})"
                )));
            }
        }
    }
    Ok(())
}

/// Flips `v` so its first component with magnitude above 1e-10 is positive.
pub fn canonical_sign(v: &mut [f64]) {
    if let Some(&first) = v.iter().find(|x| x.abs() > SIGN_TOL) {
        if first < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
    }
}

/// Full eigen-decomposition of a symmetric matrix. The input is symmetrized
/// as `(w + w^T) / 2` first. Ties in eigenvalue keep the lower original
/// diagonal position first, and every eigenvector follows
/// [`canonical_sign`].
pub fn symmetric_eigen(w: &Matrix) -> Result<SymmetricEigen> {
    check_symmetric(w)?;
    let n = w.rows();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            a[(i, j)] = 0.5 * (w[(i, j)] + w[(j, i)]);
        }
    }
    // columns of q accumulate the rotations
    let mut q = Matrix::identity(n);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)] * a[(i, j)])
            .sum();
        let diag: f64 = (0..n).map(|i| a[(i, i)] * a[(i, i)]).sum();
        if off <= f64::EPSILON * f64::EPSILON * diag || off == 0.0 {
            break;
        }
        for p in 0..n {
            for r in (p + 1)..n {
                let apr = a[(p, r)];
                if apr == 0.0 {
                    continue;
                }
                let theta = (a[(r, r)] - a[(p, p)]) / (2.0 * apr);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[(k, p)];
                    let akr = a[(k, r)];
                    a[(k, p)] = c * akp - s * akr;
                    a[(k, r)] = s * akp + c * akr;
                }
                for k in 0..n {
                    let apk = a[(p, k)];
                    let ark = a[(r, k)];
                    a[(p, k)] = c * apk - s * ark;
                    a[(r, k)] = s * apk + c * ark;
                }
                for k in 0..n {
                    let qkp = q[(k, p)];
                    let qkr = q[(k, r)];
                    q[(k, p)] = c * qkp - s * qkr;
                    q[(k, r)] = s * qkp + c * qkr;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].total_cmp(&a[(j, j)]).then(i.cmp(&j)));
    let values = order.iter().map(|&i| a[(i, i)]).collect();
    let mut vectors = Matrix::zeros(n, n);
    for (row, &i) in order.iter().enumerate() {
        let v = vectors.row_mut(row);
        for k in 0..n {
            v[k] = q[(k, i)];
        }
        let len = norm(v);
        v.iter_mut().for_each(|x| *x /= len);
        canonical_sign(v);
    }
    Ok(SymmetricEigen { values, vectors })
}

/// Smallest eigenvalue of a symmetric matrix and its unit eigenvector.
pub fn smallest_eigenpair(w: &Matrix) -> Result<(f64, Vec<f64>)> {
    let eig = symmetric_eigen(w)?;
    Ok((eig.values[0], eig.vectors.row(0).to_vec()))
}

/// Solves `b x = rhs` for symmetric positive definite `b` by LDL^T
/// factorization. A pivot at or below `1e-12` times the largest diagonal
/// entry is reported as [`Error::Singular`].
pub fn solve_spd(b: &Matrix, rhs: &[f64]) -> Result<Vec<f64>> {
    let n = b.rows();
    if b.cols() != n || rhs.len() != n || n == 0 {
        return Err(Error::invalid(format!(
            "solve_spd needs square b and matching rhs, got {:?} and {}",
            b.shape(),
            rhs.len()
        )));
    }
    if !b.is_finite() || rhs.iter().any(|x| !x.is_finite()) {
        return Err(Error::invalid("solve_spd input has non-finite entries"));
    }
    let scale = (0..n).map(|i| b[(i, i)].abs()).fold(0.0, f64::max);
    // unit lower triangle in l, pivots in d
    let mut l = Matrix::identity(n);
    let mut d = vec![0.0; n];
    for j in 0..n {
        let mut dj = b[(j, j)];
        for k in 0..j {
            dj -= l[(j, k)] * l[(j, k)] * d[k];
        }
        if !(dj > PIVOT_TOL * scale) {
            return Err(Error::Singular {
                pivot: j,
                value: dj,
            });
        }
        d[j] = dj;
        for i in (j + 1)..n {
            let mut s = 0.5 * (b[(i, j)] + b[(j, i)]);
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)] * d[k];
            }
            l[(i, j)] = s / dj;
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut s = rhs[i];
        for k in 0..i {
            s -= l[(i, k)] * y[k];
        }
        y[i] = s;
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let mut s = y[i] / d[i];
        for k in (i + 1)..n {
            s -= l[(k, i)] * x[k];
        }
        x[i] = s;
    }
    Ok(x)
}

/// `||a - b||_F`.
pub fn frob_diff(a: &Matrix, b: &Matrix) -> Result<f64> {
    if a.shape() != b.shape() {
        return Err(Error::invalid(format!(
            "shape mismatch: {:?} vs {:?}",
            a.shape(),
            b.shape()
        )));
    }
    Ok(a.as_slice()
        .iter()
        .zip(b.as_slice())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}
