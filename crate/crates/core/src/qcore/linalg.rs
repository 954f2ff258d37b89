use alloc::vec::Vec;

use nalgebra::SymmetricEigen;

use super::{CMatrix, C64};
use crate::error::{bail, Result};

pub fn kron(a: &CMatrix, b: &CMatrix) -> CMatrix {
    a.kronecker(b)
}

pub fn is_hermitian(m: &CMatrix, tol: f64) -> bool {
    if !m.is_square() {
        return false;
    }
    let n = m.nrows();
    (0..n).all(|i| (i..n).all(|j| (m[(i, j)] - m[(j, i)].conj()).norm() <= tol))
}

/// Eigenvalues (ascending) and matching eigenvector columns of a Hermitian
/// matrix. The input is symmetrized first to absorb rounding asymmetry.
pub fn hermitian_eigen(m: &CMatrix) -> (Vec<f64>, CMatrix) {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let eig = SymmetricEigen::new(sym);
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = CMatrix::from_fn(m.nrows(), order.len(), |r, k| {
        eig.eigenvectors[(r, order[k])]
    });
    (values, vectors)
}

pub fn min_eigenvalue(m: &CMatrix) -> f64 {
    let sym = (m + m.adjoint()) * C64::new(0.5, 0.0);
    sym.symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

/// Integer square root of a bipartite dimension `d²`.
pub fn sqrt_dim(n: usize) -> Result<usize> {
    let d = libm::round(libm::sqrt(n as f64)) as usize;
    if d * d != n || d == 0 {
        bail!(InvalidArgument, "dimension {n} is not a perfect square");
    }
    Ok(d)
}

/// Partial transpose on the second factor of an operator on `C^d ⊗ C^d`.
pub fn partial_transpose_b(m: &CMatrix, d: usize) -> CMatrix {
    CMatrix::from_fn(d * d, d * d, |r, s| {
        let (i, j) = (r / d, r % d);
        let (k, l) = (s / d, s % d);
        m[(i * d + l, k * d + j)]
    })
}

/// `X = tr_B[rho (1 ⊗ op)]`, so that `tr(rho (A ⊗ op)) = tr(A X)`.
pub fn partial_trace_b_with(rho: &CMatrix, op: &CMatrix, d: usize) -> CMatrix {
    let mut x = CMatrix::zeros(d, d);
    for i in 0..d {
        for k in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for j in 0..d {
                for l in 0..d {
                    acc += rho[(i * d + j, k * d + l)] * op[(l, j)];
                }
            }
            x[(i, k)] = acc;
        }
    }
    x
}

/// `Y = tr_A[rho (op ⊗ 1)]`, so that `tr(rho (op ⊗ B)) = tr(B Y)`.
pub fn partial_trace_a_with(rho: &CMatrix, op: &CMatrix, d: usize) -> CMatrix {
    let mut y = CMatrix::zeros(d, d);
    for j in 0..d {
        for l in 0..d {
            let mut acc = C64::new(0.0, 0.0);
            for i in 0..d {
                for k in 0..d {
                    acc += rho[(i * d + j, k * d + l)] * op[(k, i)];
                }
            }
            y[(j, l)] = acc;
        }
    }
    y
}

/// `tr(a b)` without forming the product.
pub(crate) fn trace_product(a: &CMatrix, b: &CMatrix) -> C64 {
    let n = a.nrows();
    let mut acc = C64::new(0.0, 0.0);
    for i in 0..n {
        for k in 0..n {
            acc += a[(i, k)] * b[(k, i)];
        }
    }
    acc
}

pub(crate) fn identity(n: usize) -> CMatrix {
    CMatrix::identity(n, n)
}

/// Largest entrywise `|a − b|`.
pub fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max)
}
