//! Small dense helpers on top of nalgebra used by the EFIM code and the oracle.

use nalgebra::{DMatrix, SymmetricEigen};

/// `g(v) = v v^T`.
pub fn outer(v: &[f64]) -> DMatrix<f64> {
    let n = v.len();
    DMatrix::from_fn(n, n, |i, j| v[i] * v[j])
}

pub fn symmetrize(m: &DMatrix<f64>) -> DMatrix<f64> {
    (m + m.transpose()) * 0.5
}

/// Eigenvalues of the symmetric part, ascending.
pub fn sym_eigenvalues(m: &DMatrix<f64>) -> Vec<f64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    let mut ev: Vec<f64> = SymmetricEigen::new(symmetrize(m))
        .eigenvalues
        .iter()
        .copied()
        .collect();
    ev.sort_by(|a, b| a.total_cmp(b));
    ev
}

pub fn spectral_norm_sym(m: &DMatrix<f64>) -> f64 {
    sym_eigenvalues(m)
        .iter()
        .fold(0.0_f64, |acc, e| acc.max(e.abs()))
}

/// True when the smallest eigenvalue is below `rtol` times the largest (or the matrix vanishes).
pub fn is_singular(m: &DMatrix<f64>, rtol: f64) -> bool {
    let ev = sym_eigenvalues(m);
    let max = ev.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    if max == 0.0 || !max.is_finite() {
        return true;
    }
    ev[0] < rtol * max
}

/// Moore-Penrose inverse of a symmetric matrix; eigenvalues below `rtol * max|eig|` are dropped.
pub fn pinv_sym(m: &DMatrix<f64>, rtol: f64) -> DMatrix<f64> {
    let n = m.nrows();
    if n == 0 {
        return DMatrix::zeros(0, 0);
    }
    let eig = SymmetricEigen::new(symmetrize(m));
    let max = eig.eigenvalues.iter().fold(0.0_f64, |a, e| a.max(e.abs()));
    let mut out = DMatrix::zeros(n, n);
    if max == 0.0 {
        return out;
    }
    for (i, &e) in eig.eigenvalues.iter().enumerate() {
        if e.abs() > rtol * max {
            let v = eig.eigenvectors.column(i);
            out += (v * v.transpose()) / e;
        }
    }
    out
}

/// `||a - b||_2 / ||b||_2` for symmetric matrices.
pub fn relative_spectral_error(approx: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let den = spectral_norm_sym(reference);
    let num = spectral_norm_sym(&(approx - reference));
    if den == 0.0 {
        if num == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        num / den
    }
}

/// Relative spectral error after scaling both matrices by `diag(reference)^{-1/2}` on each side.
/// Makes the comparison insensitive to the units of mixed parameter blocks.
pub fn equilibrated_error(approx: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let n = reference.nrows();
    let s: Vec<f64> = (0..n)
        .map(|i| {
            let d = reference[(i, i)];
            if d > 0.0 {
                1.0 / d.sqrt()
            } else {
                1.0
            }
        })
        .collect();
    let scale = |m: &DMatrix<f64>| DMatrix::from_fn(n, n, |i, j| m[(i, j)] * s[i] * s[j]);
    relative_spectral_error(&scale(approx), &scale(reference))
}

/// Largest multiplicative deviation of `approx` from a positive definite `reference`:
/// with `reference = L L^T`, the eigenvalues `e` of `L^{-1} approx L^{-T}` give
/// `max(e_max - 1, 1/e_min - 1)`. Infinite when `reference` is not positive definite.
pub fn whitened_gap(approx: &DMatrix<f64>, reference: &DMatrix<f64>) -> f64 {
    let Some(chol) = symmetrize(reference).cholesky() else {
        return f64::INFINITY;
    };
    let l = chol.l();
    let Some(linv) = l.clone().try_inverse() else {
        return f64::INFINITY;
    };
    let w = &linv * symmetrize(approx) * linv.transpose();
    let ev = sym_eigenvalues(&w);
    let lo = ev[0];
    let hi = ev[ev.len() - 1];
    if lo <= 0.0 {
        return f64::INFINITY;
    }
    (hi - 1.0).max(1.0 / lo - 1.0).max(0.0)
}

/// Symmetric 2x2 from its three entries.
pub fn sym2(a: f64, b: f64, d: f64) -> DMatrix<f64> {
    DMatrix::from_row_slice(2, 2, &[a, b, b, d])
}

pub fn trace_inverse_2x2(m: &DMatrix<f64>) -> f64 {
    let det = m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)];
    (m[(0, 0)] + m[(1, 1)]) / det
}
