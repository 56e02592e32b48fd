//! Symmetric eigendecomposition via cyclic Jacobi rotations.
//!
//! Dimensions here are small (covariance matrices of at most a few dozen
//! columns, Gram matrices of a few dozen rows in tests), where Jacobi is
//! simple and accurate.

use ndarray::Array2;

use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigenvalues (descending) and eigenvectors (rows, matching order) of a
/// symmetric matrix.
pub fn symmetric_eigen(a: &Array2<f64>) -> Result<(Vec<f64>, Array2<f64>)> {
    let n = a.nrows();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            what: "symmetric matrix columns",
            expected: n,
            actual: a.ncols(),
        });
    }

    let mut m = a.clone();
    // Accumulated rotations: columns of v are the eigenvectors of a.
    let mut v = Array2::<f64>::eye(n);

    let scale: f64 = a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1.0);
    let threshold = 1e-14 * scale;

    for _ in 0..MAX_SWEEPS {
        let off: f64 = off_diagonal_norm(&m);
        if off < threshold {
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = m[[p, q]];
                if apq.abs() <= threshold / (n as f64) {
                    continue;
                }
                let (c, s) = jacobi_rotation(m[[p, p]], m[[q, q]], apq);
                apply_rotation(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    let mut pairs: Vec<(f64, usize)> = (0..n).map(|i| (m[[i, i]], i)).collect();
    pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());

    let eigenvalues: Vec<f64> = pairs.iter().map(|&(val, _)| val).collect();
    let mut vectors = Array2::<f64>::zeros((n, n));
    for (row, &(_, col)) in pairs.iter().enumerate() {
        for i in 0..n {
            vectors[[row, i]] = v[[i, col]];
        }
    }
    Ok((eigenvalues, vectors))
}

fn off_diagonal_norm(m: &Array2<f64>) -> f64 {
    let n = m.nrows();
    let mut sum = 0.0;
    for p in 0..n {
        for q in p + 1..n {
            sum += m[[p, q]] * m[[p, q]];
        }
    }
    (2.0 * sum).sqrt()
}

/// Rotation (c, s) annihilating the (p, q) entry.
fn jacobi_rotation(app: f64, aqq: f64, apq: f64) -> (f64, f64) {
    let theta = (aqq - app) / (2.0 * apq);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    (c, t * c)
}

fn apply_rotation(m: &mut Array2<f64>, v: &mut Array2<f64>, p: usize, q: usize, c: f64, s: f64) {
    let n = m.nrows();
    for i in 0..n {
        let mip = m[[i, p]];
        let miq = m[[i, q]];
        m[[i, p]] = c * mip - s * miq;
        m[[i, q]] = s * mip + c * miq;
    }
    for j in 0..n {
        let mpj = m[[p, j]];
        let mqj = m[[q, j]];
        m[[p, j]] = c * mpj - s * mqj;
        m[[q, j]] = s * mpj + c * mqj;
    }
    for i in 0..n {
        let vip = v[[i, p]];
        let viq = v[[i, q]];
        v[[i, p]] = c * vip - s * viq;
        v[[i, q]] = s * vip + c * viq;
    }
}
