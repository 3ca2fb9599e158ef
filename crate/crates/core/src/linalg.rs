//! Small-matrix linear algebra helpers shared by the analysis and homotopy
//! layers. All matrices are dense `nalgebra` types of dimension ≲ 70.

use crate::scalar::Scalar;
use crate::C64;
use nalgebra::{DMatrix, DVector};

/// Eigenvalues of a general complex matrix via the Schur decomposition.
pub fn eigvals_c(m: &DMatrix<C64>) -> Vec<C64> {
    if m.nrows() == 0 {
        return Vec::new();
    }
    // For a complex matrix the Schur form is triangular, so the eigenvalues
    // sit on its diagonal.
    m.clone().schur().eigenvalues().map_or_else(
        || m.clone().schur().unpack().1.diagonal().iter().copied().collect(),
        |v| v.iter().copied().collect(),
    )
}

/// Eigenvalues of a general matrix over either field, reported as complex.
pub fn eigvals<S: Scalar>(m: &DMatrix<S>) -> Vec<C64> {
    eigvals_c(&m.map(|x| x.to_c64()))
}

/// Full eigen-decomposition of a real symmetric matrix, eigenvalues ascending,
/// eigenvectors as the matching columns of an orthogonal matrix.
pub fn symmetric_eig(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let se = m.clone().symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let vals: Vec<f64> = order.iter().map(|&i| se.eigenvalues[i]).collect();
    let mut vecs = DMatrix::zeros(n, n);
    for (j, &i) in order.iter().enumerate() {
        vecs.set_column(j, &se.eigenvectors.column(i));
    }
    (vals, vecs)
}

/// Determinant via LU.
pub fn det<S: Scalar>(m: &DMatrix<S>) -> S {
    m.clone().lu().determinant()
}

/// Sign of the determinant of a real matrix: ±1, or 0 if it vanishes
/// (relative to the matrix scale).
pub fn sgn_det(m: &DMatrix<f64>) -> i32 {
    let d = det(m);
    let scale = m.amax().max(1.0);
    let n = m.nrows() as f64;
    if d.abs() <= f64::EPSILON * scale.powi(m.nrows() as i32) * n * 64.0 {
        0
    } else if d > 0.0 {
        1
    } else {
        -1
    }
}

/// Linear solve with LU, falling back to an SVD pseudo-inverse when the
/// factorization fails. Returns `(solution, lu_was_singular)`.
pub fn solve<S: Scalar>(m: &DMatrix<S>, rhs: &DVector<S>) -> (DVector<S>, bool) {
    if let Some(x) = m.clone().lu().solve(rhs) {
        if x.iter().all(|v| v.mag().is_finite()) {
            return (x, false);
        }
    }
    let svd = m.clone().svd(true, true);
    let x = svd
        .solve(rhs, 1e-13 * spectral_norm(m).max(1.0))
        .unwrap_or_else(|_| DVector::zeros(m.ncols()));
    (x, true)
}

/// Largest singular value.
pub fn spectral_norm<S: Scalar>(m: &DMatrix<S>) -> f64 {
    if m.nrows() == 0 || m.ncols() == 0 {
        return 0.0;
    }
    m.clone().svd(false, false).singular_values[0]
}

/// Orthonormal basis of the (right) kernel at a relative singular-value
/// threshold; columns of the returned matrix.
pub fn kernel_basis<S: Scalar>(m: &DMatrix<S>, rank_tol: f64) -> DMatrix<S> {
    let n = m.ncols();
    let svd = m.clone().svd(false, true);
    let vt = svd.v_t.expect("svd with v_t");
    let smax = svd.singular_values.max();
    let cut = rank_tol * smax.max(f64::MIN_POSITIVE);
    let mut cols: Vec<usize> = Vec::new();
    for i in 0..svd.singular_values.len() {
        if svd.singular_values[i] <= cut {
            cols.push(i);
        }
    }
    // Rows of V^H beyond the rank also span kernel directions (rectangular case).
    for i in svd.singular_values.len()..n.min(vt.nrows()) {
        cols.push(i);
    }
    let mut basis = DMatrix::zeros(n, cols.len());
    for (j, &i) in cols.iter().enumerate() {
        basis.set_column(j, &vt.row(i).transpose().map(|x| x.cj()));
    }
    basis
}

/// ⟨u, v⟩ = Σ u_i conj(v_i), linear in the first argument.
pub fn dot<S: Scalar>(u: &DVector<S>, v: &DVector<S>) -> S {
    let mut acc = S::zero();
    for i in 0..u.len() {
        acc += u[i] * v[i].cj();
    }
    acc
}

pub fn inf_norm<S: Scalar>(v: &DVector<S>) -> f64 {
    v.iter().map(|x| x.mag()).fold(0.0, f64::max)
}

pub fn max_abs_mat<S: Scalar>(m: &DMatrix<S>) -> f64 {
    m.iter().map(|x| x.mag()).fold(0.0, f64::max)
}
