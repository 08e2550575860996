//! Small dense linear algebra for symmetric tridiagonal operators: full
//! eigendecomposition (implicit-shift QL) and complex tridiagonal solves.
//!
//! These are the classical textbook routines; the operators here are small
//! enough (≤ a few thousand sites) that dense O(n²)–O(n³) methods are the
//! right tool.

use num_complex::Complex64;

use crate::error::{QpError, Result};

/// Eigenvalues and (optionally) eigenvectors of a symmetric tridiagonal
/// matrix with diagonal `d` and off-diagonal `e` (`e.len() == d.len() - 1`).
pub struct TridiagEigen {
    /// Ascending eigenvalues.
    pub values: Vec<f64>,
    /// Column-major eigenvectors: `vectors[k][i]` is component i of the k-th
    /// eigenvector. Empty when vectors were not requested.
    pub vectors: Vec<Vec<f64>>,
}

/// Implicit-shift QL with eigenvector accumulation (tql2).
pub fn tridiag_eigen(diag: &[f64], off: &[f64], want_vectors: bool) -> Result<TridiagEigen> {
    let n = diag.len();
    if n == 0 {
        return Err(QpError::domain("empty matrix"));
    }
    if off.len() + 1 != n {
        return Err(QpError::domain("off-diagonal length must be n-1"));
    }
    let mut d = diag.to_vec();
    let mut e = off.to_vec();
    e.push(0.0);

    // z: identity, becomes eigenvectors (row-major z[i][k])
    let mut z: Vec<Vec<f64>> = if want_vectors {
        (0..n)
            .map(|i| (0..n).map(|k| if i == k { 1.0 } else { 0.0 }).collect())
            .collect()
    } else {
        Vec::new()
    };

    for l in 0..n {
        let mut iter = 0;
        loop {
            // find a small off-diagonal to split at
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > 50 {
                return Err(QpError::numeric("tridiagonal QL failed to converge"));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c) = (1.0f64, 1.0f64);
            let mut p = 0.0f64;
            for i in (l..m).rev() {
                let mut f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if want_vectors {
                    for row in z.iter_mut() {
                        f = row[i + 1];
                        row[i + 1] = s * row[i] + c * f;
                        row[i] = c * row[i] - s * f;
                    }
                }
            }
            if r == 0.0 && m > l + 1 {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }

    // sort ascending, permuting vectors along
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].partial_cmp(&d[b]).unwrap());
    let values: Vec<f64> = order.iter().map(|&k| d[k]).collect();
    let vectors = if want_vectors {
        order
            .iter()
            .map(|&k| (0..n).map(|i| z[i][k]).collect())
            .collect()
    } else {
        Vec::new()
    };
    Ok(TridiagEigen { values, vectors })
}

/// Solve (T - z) x = b for complex z with T symmetric tridiagonal, by the
/// Thomas algorithm with the standard partial-pivot-free recursion. The
/// shifted matrix is diagonally dominant enough for Im z ≠ 0.
pub fn tridiag_solve_shifted(
    diag: &[f64],
    off: &[f64],
    z: Complex64,
    b: &[Complex64],
) -> Result<Vec<Complex64>> {
    let n = diag.len();
    if n == 0 || off.len() + 1 != n || b.len() != n {
        return Err(QpError::domain("tridiagonal solve shape mismatch"));
    }
    let mut c_prime = vec![Complex64::new(0.0, 0.0); n];
    let mut d_prime = vec![Complex64::new(0.0, 0.0); n];
    let a0 = Complex64::new(diag[0], 0.0) - z;
    if a0.norm() == 0.0 {
        return Err(QpError::numeric("singular tridiagonal system"));
    }
    c_prime[0] = Complex64::new(if n > 1 { off[0] } else { 0.0 }, 0.0) / a0;
    d_prime[0] = b[0] / a0;
    for i in 1..n {
        let ai = Complex64::new(diag[i], 0.0) - z;
        let li = Complex64::new(off[i - 1], 0.0);
        let denom = ai - li * c_prime[i - 1];
        if denom.norm() == 0.0 {
            return Err(QpError::numeric("singular tridiagonal system"));
        }
        c_prime[i] = if i + 1 < n {
            Complex64::new(off[i], 0.0) / denom
        } else {
            Complex64::new(0.0, 0.0)
        };
        d_prime[i] = (b[i] - li * d_prime[i - 1]) / denom;
    }
    let mut x = vec![Complex64::new(0.0, 0.0); n];
    x[n - 1] = d_prime[n - 1];
    for i in (0..n - 1).rev() {
        x[i] = d_prime[i] - c_prime[i] * x[i + 1];
    }
    Ok(x)
}
