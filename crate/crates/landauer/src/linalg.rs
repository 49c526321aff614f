//! Thin dense linear-algebra layer: `ndarray` containers in, `faer` kernels
//! inside. Everything here is crate-private plumbing; sizes range from M×M
//! scattering blocks (M ≤ 8) to N×N finite-lattice problems (N ≈ 3000).

use faer::prelude::SpSolver;
use faer::{Mat, Side};
use faer_ext::{IntoFaer, IntoFaerComplex, IntoNdarray, IntoNdarrayComplex};
use ndarray::{Array1, Array2, ArrayView2};

use crate::C64;

fn to_faer_c(a: ArrayView2<'_, C64>) -> Mat<faer::complex_native::c64> {
    if let Some(_s) = a.as_slice() {
        a.into_faer_complex().to_owned()
    } else {
        let owned = a.to_owned();
        owned.view().into_faer_complex().to_owned()
    }
}

fn to_faer_r(a: ArrayView2<'_, f64>) -> Mat<f64> {
    if let Some(_s) = a.as_slice() {
        a.into_faer().to_owned()
    } else {
        let owned = a.to_owned();
        owned.view().into_faer().to_owned()
    }
}

/// Eigendecomposition of a complex Hermitian matrix. Returns eigenvalues in
/// ascending order and the unitary matrix of eigenvectors as columns.
pub(crate) fn eigh_c(a: ArrayView2<'_, C64>) -> (Array1<f64>, Array2<C64>) {
    let fa = to_faer_c(a);
    let evd = fa.as_ref().selfadjoint_eigendecomposition(Side::Lower);
    let n = a.nrows();
    let s = evd.s();
    let vals = Array1::from_iter((0..n).map(|i| s.column_vector().read(i).re));
    let vecs = evd.u().into_ndarray_complex().to_owned();
    (vals, vecs)
}

/// Eigendecomposition of a real symmetric matrix (ascending eigenvalues).
#[cfg_attr(not(test), allow(dead_code))]
pub(crate) fn eigh_r(a: ArrayView2<'_, f64>) -> (Array1<f64>, Array2<f64>) {
    let fa = to_faer_r(a);
    let evd = fa.as_ref().selfadjoint_eigendecomposition(Side::Lower);
    let n = a.nrows();
    let s = evd.s();
    let vals = Array1::from_iter((0..n).map(|i| s.column_vector().read(i)));
    let vecs = evd.u().into_ndarray().to_owned();
    (vals, vecs)
}

/// Solves `a x = b` for square complex `a` by LU with partial pivoting.
pub(crate) fn solve_c(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> Array2<C64> {
    let fa = to_faer_c(a);
    let fb = to_faer_c(b);
    let x = fa.partial_piv_lu().solve(&fb);
    x.as_ref().into_ndarray_complex().to_owned()
}

/// Determinant of a square complex matrix.
pub(crate) fn det_c(a: ArrayView2<'_, C64>) -> C64 {
    let fa = to_faer_c(a);
    let d = fa.determinant();
    C64::new(d.re, d.im)
}

/// Singular values in descending order.
pub(crate) fn singular_values(a: ArrayView2<'_, C64>) -> Array1<f64> {
    let fa = to_faer_c(a);
    let svd = fa.svd();
    let s = svd.s_diagonal();
    Array1::from_iter((0..s.nrows()).map(|i| s.read(i).re))
}

/// 2-norm condition number estimate via SVD (intended for small matrices).
pub(crate) fn cond_2(a: ArrayView2<'_, C64>) -> f64 {
    let s = singular_values(a);
    let smax = s[0];
    let smin = s[s.len() - 1];
    if smin == 0.0 {
        f64::INFINITY
    } else {
        smax / smin
    }
}

/// Dense complex matrix product through faer (ndarray's fallback matmul is too
/// slow at N ≈ 10³).
pub(crate) fn matmul_c(a: ArrayView2<'_, C64>, b: ArrayView2<'_, C64>) -> Array2<C64> {
    let fa = to_faer_c(a);
    let fb = to_faer_c(b);
    let fc = fa * fb;
    fc.as_ref().into_ndarray_complex().to_owned()
}

pub(crate) fn matmul_r(a: ArrayView2<'_, f64>, b: ArrayView2<'_, f64>) -> Array2<f64> {
    let fa = to_faer_r(a);
    let fb = to_faer_r(b);
    let fc = fa * fb;
    fc.as_ref().into_ndarray().to_owned()
}

/// Conjugate transpose.
pub(crate) fn adjoint(a: ArrayView2<'_, C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

/// Max absolute entry of `a a† − I`; the unitarity residual.
pub(crate) fn unitarity_residual(a: ArrayView2<'_, C64>) -> f64 {
    let aad = matmul_c(a, adjoint(a).view());
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let expected = if i == j { C64::new(1.0, 0.0) } else { C64::new(0.0, 0.0) };
            worst = worst.max((aad[[i, j]] - expected).norm());
        }
    }
    worst
}

/// Max absolute entry of `a − a†`.
pub(crate) fn hermiticity_residual(a: ArrayView2<'_, C64>) -> f64 {
    let n = a.nrows();
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            worst = worst.max((a[[i, j]] - a[[j, i]].conj()).norm());
        }
    }
    worst
}
