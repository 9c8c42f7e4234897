//! Thin shims over LAPACK (divide-and-conquer eigensolvers, LU solves) and
//! CBLAS (matrix products) for dense complex linear algebra.
//!
//! All public entry points take and return row-major `ndarray` containers;
//! the column-major conventions of the Fortran interfaces are handled here
//! and nowhere else.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use num_complex::Complex64;

use crate::error::{Error, Result};

// Link the system OpenBLAS; lapack-sys and cblas-sys only declare symbols.
use openblas_src as _;

use cblas_sys::{CBLAS_LAYOUT, CBLAS_TRANSPOSE};
use lapack_sys::__BindgenComplex;

fn as_fortran(ptr: *mut Complex64) -> *mut __BindgenComplex<f64> {
    // Complex64 is repr(C) { re: f64, im: f64 }, identical to the bindgen type.
    ptr.cast()
}

fn as_cblas(ptr: *const Complex64) -> *const [f64; 2] {
    ptr.cast()
}

fn as_cblas_mut(ptr: *mut Complex64) -> *mut [f64; 2] {
    ptr.cast()
}

fn square_dim<T>(a: &ArrayView2<T>, context: &'static str) -> Result<usize> {
    let (r, c) = a.dim();
    if r != c {
        return Err(Error::DimensionMismatch {
            context,
            left: r,
            right: c,
        });
    }
    if r == 0 {
        return Err(Error::InvalidArgument(format!("{context}: empty matrix")));
    }
    Ok(r)
}

fn contiguous<T: Clone>(a: &ArrayView2<T>) -> Vec<T> {
    a.as_standard_layout().iter().cloned().collect()
}

/// True when every entry has an exactly zero imaginary part, so the real
/// symmetric eigensolver (about four times faster than the Hermitian one)
/// applies without changing the operator.
pub fn is_exactly_real(a: &ArrayView2<Complex64>) -> bool {
    a.iter().all(|z| z.im == 0.0)
}

/// Eigendecomposition of a real symmetric matrix via `dsyevd`.
///
/// Returns eigenvalues in ascending order and eigenvectors as the columns of
/// the second component.
pub fn eigh_real(a: &ArrayView2<f64>) -> Result<(Array1<f64>, Array2<f64>)> {
    let n = square_dim(a, "eigh_real")?;
    let ni = n as i32;
    // A row-major buffer read as column-major is the transpose; for the
    // symmetric input both triangles agree, so no copy-transpose is needed.
    let mut buf = contiguous(a);
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;

    // Workspace query.
    let mut work_probe = [0.0f64];
    let mut iwork_probe = [0i32];
    let query = -1i32;
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work_probe.as_mut_ptr(),
            &query,
            iwork_probe.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd (query)",
            info,
        });
    }
    let lwork = work_probe[0] as i32;
    let liwork = iwork_probe[0];
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevd_(
            &jobz,
            &uplo,
            &ni,
            buf.as_mut_ptr(),
            &ni,
            w.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "dsyevd",
            info,
        });
    }
    // Column j of the Fortran output is eigenvector j; reinterpreting the
    // buffer as row-major and transposing restores column convention.
    let vectors = Array2::from_shape_vec((n, n), buf)
        .expect("dsyevd output has n*n entries")
        .t()
        .to_owned();
    Ok((Array1::from_vec(w), vectors))
}

/// Eigendecomposition of a Hermitian matrix via `zheevd`, falling back to
/// `dsyevd` when the matrix is exactly real.
///
/// Returns eigenvalues in ascending order and eigenvectors as columns.
pub fn eigh(a: &ArrayView2<Complex64>) -> Result<(Array1<f64>, Array2<Complex64>)> {
    let n = square_dim(a, "eigh")?;
    if is_exactly_real(a) {
        let re = a.mapv(|z| z.re);
        let (w, v) = eigh_real(&re.view())?;
        return Ok((w, v.mapv(|x| Complex64::new(x, 0.0))));
    }
    let ni = n as i32;
    // Row-major read as column-major gives the transpose, which for a
    // Hermitian matrix is the conjugate; eigenvectors come out conjugated
    // and are fixed up below.
    let mut buf = contiguous(a);
    let mut w = vec![0.0f64; n];
    let mut info: i32 = 0;
    let jobz = b'V' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;

    let mut work_probe = [Complex64::new(0.0, 0.0)];
    let mut rwork_probe = [0.0f64];
    let mut iwork_probe = [0i32];
    let query = -1i32;
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &ni,
            as_fortran(buf.as_mut_ptr()),
            &ni,
            w.as_mut_ptr(),
            as_fortran(work_probe.as_mut_ptr()),
            &query,
            rwork_probe.as_mut_ptr(),
            &query,
            iwork_probe.as_mut_ptr(),
            &query,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd (query)",
            info,
        });
    }
    let lwork = work_probe[0].re as i32;
    let lrwork = rwork_probe[0] as i32;
    let liwork = iwork_probe[0];
    let mut work = vec![Complex64::new(0.0, 0.0); lwork.max(1) as usize];
    let mut rwork = vec![0.0f64; lrwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::zheevd_(
            &jobz,
            &uplo,
            &ni,
            as_fortran(buf.as_mut_ptr()),
            &ni,
            w.as_mut_ptr(),
            as_fortran(work.as_mut_ptr()),
            &lwork,
            rwork.as_mut_ptr(),
            &lrwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zheevd",
            info,
        });
    }
    // The buffer holds eigenvectors of conj(A); conjugate-transpose yields
    // eigenvectors of A as columns.
    let vectors = Array2::from_shape_vec((n, n), buf)
        .expect("zheevd output has n*n entries")
        .t()
        .mapv(|z| z.conj());
    Ok((Array1::from_vec(w), vectors))
}

/// Solves the dense linear system `a x = b` via `zgesv` (LU with partial
/// pivoting). `a` need not be Hermitian. Production code goes through the
/// eigendecomposition; this is the independent oracle the resolvent tests
/// check against.
#[cfg(test)]
pub fn solve(a: &ArrayView2<Complex64>, b: &ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
    let n = square_dim(a, "solve")?;
    if b.len() != n {
        return Err(Error::DimensionMismatch {
            context: "solve rhs",
            left: n,
            right: b.len(),
        });
    }
    let ni = n as i32;
    let one = 1i32;
    // zgesv wants column-major storage; copy with an explicit transpose.
    let mut buf = vec![Complex64::new(0.0, 0.0); n * n];
    for j in 0..n {
        for i in 0..n {
            buf[i + j * n] = a[[i, j]];
        }
    }
    let mut rhs: Vec<Complex64> = b.iter().cloned().collect();
    let mut ipiv = vec![0i32; n];
    let mut info: i32 = 0;
    unsafe {
        lapack_sys::zgesv_(
            &ni,
            &one,
            as_fortran(buf.as_mut_ptr()),
            &ni,
            ipiv.as_mut_ptr(),
            as_fortran(rhs.as_mut_ptr()),
            &ni,
            &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Lapack {
            routine: "zgesv",
            info,
        });
    }
    Ok(Array1::from_vec(rhs))
}

const ONE: [f64; 2] = [1.0, 0.0];
const ZERO: [f64; 2] = [0.0, 0.0];

fn gemm(
    trans_a: CBLAS_TRANSPOSE,
    a: &ArrayView2<Complex64>,
    b: &ArrayView2<Complex64>,
) -> Result<Array2<Complex64>> {
    let (ar, ac) = a.dim();
    let (br, bc) = b.dim();
    // op(A) is m x k.
    let (m, k) = match trans_a {
        CBLAS_TRANSPOSE::CblasNoTrans => (ar, ac),
        _ => (ac, ar),
    };
    if k != br {
        return Err(Error::DimensionMismatch {
            context: "matmul inner",
            left: k,
            right: br,
        });
    }
    let n = bc;
    let a_buf = contiguous(a);
    let b_buf = contiguous(b);
    let mut c = vec![Complex64::new(0.0, 0.0); m * n];
    unsafe {
        cblas_sys::cblas_zgemm(
            CBLAS_LAYOUT::CblasRowMajor,
            trans_a,
            CBLAS_TRANSPOSE::CblasNoTrans,
            m as i32,
            n as i32,
            k as i32,
            &ONE,
            as_cblas(a_buf.as_ptr()),
            ac as i32,
            as_cblas(b_buf.as_ptr()),
            bc as i32,
            &ZERO,
            as_cblas_mut(c.as_mut_ptr()),
            n as i32,
        );
    }
    Ok(Array2::from_shape_vec((m, n), c).expect("gemm output has m*n entries"))
}

/// `a * b`.
pub fn matmul(a: &ArrayView2<Complex64>, b: &ArrayView2<Complex64>) -> Result<Array2<Complex64>> {
    gemm(CBLAS_TRANSPOSE::CblasNoTrans, a, b)
}

/// `a^H * b` (conjugate transpose on the left factor).
pub fn adj_matmul(
    a: &ArrayView2<Complex64>,
    b: &ArrayView2<Complex64>,
) -> Result<Array2<Complex64>> {
    gemm(CBLAS_TRANSPOSE::CblasConjTrans, a, b)
}

/// `a * b^H` (conjugate transpose on the right factor).
pub fn matmul_adj(
    a: &ArrayView2<Complex64>,
    b: &ArrayView2<Complex64>,
) -> Result<Array2<Complex64>> {
    let bh = adjoint(b);
    matmul(a, &bh.view())
}

/// Conjugate transpose.
pub fn adjoint(a: &ArrayView2<Complex64>) -> Array2<Complex64> {
    let mut out = Array2::zeros((a.ncols(), a.nrows()));
    for ((i, j), z) in a.indexed_iter() {
        out[[j, i]] = z.conj();
    }
    out
}

fn gemv(
    trans: CBLAS_TRANSPOSE,
    a: &ArrayView2<Complex64>,
    x: &ArrayView1<Complex64>,
) -> Result<Array1<Complex64>> {
    let (m, n) = a.dim();
    let (x_len, y_len) = match trans {
        CBLAS_TRANSPOSE::CblasNoTrans => (n, m),
        _ => (m, n),
    };
    if x.len() != x_len {
        return Err(Error::DimensionMismatch {
            context: "matvec",
            left: x_len,
            right: x.len(),
        });
    }
    let a_buf = contiguous(a);
    let x_buf: Vec<Complex64> = x.iter().cloned().collect();
    let mut y = vec![Complex64::new(0.0, 0.0); y_len];
    unsafe {
        cblas_sys::cblas_zgemv(
            CBLAS_LAYOUT::CblasRowMajor,
            trans,
            m as i32,
            n as i32,
            &ONE,
            as_cblas(a_buf.as_ptr()),
            n as i32,
            as_cblas(x_buf.as_ptr()),
            1,
            &ZERO,
            as_cblas_mut(y.as_mut_ptr()),
            1,
        );
    }
    Ok(Array1::from_vec(y))
}

/// `a * x`.
pub fn matvec(a: &ArrayView2<Complex64>, x: &ArrayView1<Complex64>) -> Result<Array1<Complex64>> {
    gemv(CBLAS_TRANSPOSE::CblasNoTrans, a, x)
}

/// `a^H * x`.
pub fn adj_matvec(
    a: &ArrayView2<Complex64>,
    x: &ArrayView1<Complex64>,
) -> Result<Array1<Complex64>> {
    gemv(CBLAS_TRANSPOSE::CblasConjTrans, a, x)
}

/// Sesquilinear inner product `sum_i conj(x_i) y_i`.
pub fn dot(x: &ArrayView1<Complex64>, y: &ArrayView1<Complex64>) -> Complex64 {
    x.iter().zip(y.iter()).map(|(a, b)| a.conj() * b).sum()
}

/// Euclidean norm.
pub fn vec_norm(x: &ArrayView1<Complex64>) -> f64 {
    x.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Frobenius norm.
pub fn frob_norm(a: &ArrayView2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// `exp(-i * factor * h)` for Hermitian `h`, via eigendecomposition.
pub fn hermitian_exp(h: &ArrayView2<Complex64>, factor: f64) -> Result<Array2<Complex64>> {
    let (w, v) = eigh(h)?;
    // Scale eigenvector columns by the phases, then multiply by V^H.
    let mut scaled = v.clone();
    for (j, lam) in w.iter().enumerate() {
        let phase = Complex64::new(0.0, -factor * lam).exp();
        scaled.column_mut(j).mapv_inplace(|z| z * phase);
    }
    matmul_adj(&scaled.view(), &v.view())
}

/// Deterministic pseudo-random complex vector for cheap operator identity
/// probes on matrices too large for full Frobenius verification.
pub(crate) fn probe_vector(dim: usize, seed: u64) -> Array1<Complex64> {
    let mut state = seed.wrapping_add(0x9e37_79b9_7f4a_7c15);
    let mut next = move || {
        state = state.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = state;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z = z ^ (z >> 31);
        // Map to [-1, 1).
        (z >> 11) as f64 / (1u64 << 52) as f64 - 1.0
    };
    let mut v = Array1::zeros(dim);
    for i in 0..dim {
        let re = next();
        let im = next();
        v[i] = Complex64::new(re, im);
    }
    let n = vec_norm(&v.view());
    if n > 0.0 {
        v.mapv_inplace(|z| z / n);
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn real_symmetric_eigendecomposition() {
        let a = array![[2.0, 1.0], [1.0, 2.0]];
        let (w, v) = eigh_real(&a.view()).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 3.0, epsilon = 1e-12);
        // Columns are eigenvectors.
        for j in 0..2 {
            let col = v.column(j);
            let hx = a.dot(&col);
            for i in 0..2 {
                assert_abs_diff_eq!(hx[i], w[j] * col[i], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn hermitian_eigendecomposition_matches_reconstruction() {
        let a = array![
            [c(1.0, 0.0), c(0.0, -1.0), c(0.5, 0.25)],
            [c(0.0, 1.0), c(-0.5, 0.0), c(1.0, 0.0)],
            [c(0.5, -0.25), c(1.0, 0.0), c(0.25, 0.0)]
        ];
        let (w, v) = eigh(&a.view()).unwrap();
        assert!(w.windows(2).into_iter().all(|p| p[0] <= p[1]));
        // A = V diag(w) V^H.
        let mut scaled = v.clone();
        for (j, lam) in w.iter().enumerate() {
            scaled.column_mut(j).mapv_inplace(|z| z * lam);
        }
        let rebuilt = matmul_adj(&scaled.view(), &v.view()).unwrap();
        assert!(frob_norm(&(&rebuilt - &a).view()) < 1e-12);
        // V^H V = I.
        let gram = adj_matmul(&v.view(), &v.view()).unwrap();
        let eye = Array2::<Complex64>::eye(3);
        assert!(frob_norm(&(&gram - &eye).view()) < 1e-12);
    }

    #[test]
    fn real_matrices_route_through_the_real_solver() {
        let a = array![
            [c(2.0, 0.0), c(1.0, 0.0)],
            [c(1.0, 0.0), c(2.0, 0.0)]
        ];
        assert!(is_exactly_real(&a.view()));
        let (w, _) = eigh(&a.view()).unwrap();
        assert_abs_diff_eq!(w[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(w[1], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn solve_inverts_a_general_complex_system() {
        let a = array![
            [c(1.0, 1.0), c(2.0, 0.0)],
            [c(0.0, -1.0), c(1.0, 3.0)]
        ];
        let x_true = array![c(0.5, -0.5), c(1.0, 2.0)];
        let b = matvec(&a.view(), &x_true.view()).unwrap();
        let x = solve(&a.view(), &b.view()).unwrap();
        for i in 0..2 {
            assert!((x[i] - x_true[i]).norm() < 1e-12);
        }
    }

    #[test]
    fn adjoint_products_match_hand_expansion() {
        let a = array![[c(1.0, 2.0), c(0.0, 1.0)], [c(3.0, 0.0), c(1.0, -1.0)]];
        let b = array![[c(0.0, 1.0), c(1.0, 0.0)], [c(2.0, 2.0), c(0.0, 0.0)]];
        let ab = matmul(&a.view(), &b.view()).unwrap();
        let ahb = adj_matmul(&a.view(), &b.view()).unwrap();
        let abh = matmul_adj(&a.view(), &b.view()).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut s1 = c(0.0, 0.0);
                let mut s2 = c(0.0, 0.0);
                let mut s3 = c(0.0, 0.0);
                for k in 0..2 {
                    s1 += a[[i, k]] * b[[k, j]];
                    s2 += a[[k, i]].conj() * b[[k, j]];
                    s3 += a[[i, k]] * b[[j, k]].conj();
                }
                assert!((ab[[i, j]] - s1).norm() < 1e-13);
                assert!((ahb[[i, j]] - s2).norm() < 1e-13);
                assert!((abh[[i, j]] - s3).norm() < 1e-13);
            }
        }
    }

    #[test]
    fn hermitian_exp_is_unitary_and_matches_phases() {
        let h = array![
            [c(1.0, 0.0), c(0.0, -0.7)],
            [c(0.0, 0.7), c(-0.3, 0.0)]
        ];
        let t = 0.83;
        let u = hermitian_exp(&h.view(), t).unwrap();
        let gram = adj_matmul(&u.view(), &u.view()).unwrap();
        let eye = Array2::<Complex64>::eye(2);
        assert!(frob_norm(&(&gram - &eye).view()) < 1e-13);
        // exp(-itH) applied to an eigenvector multiplies it by a phase.
        let (w, v) = eigh(&h.view()).unwrap();
        let col = v.column(0).to_owned();
        let ux = matvec(&u.view(), &col.view()).unwrap();
        let phase = Complex64::new(0.0, -t * w[0]).exp();
        for i in 0..2 {
            assert!((ux[i] - phase * col[i]).norm() < 1e-13);
        }
    }

    #[test]
    fn probe_vectors_are_normalized_and_deterministic() {
        let v1 = probe_vector(16, 7);
        let v2 = probe_vector(16, 7);
        let v3 = probe_vector(16, 8);
        assert_abs_diff_eq!(vec_norm(&v1.view()), 1.0, epsilon = 1e-12);
        assert_eq!(v1, v2);
        assert!(v1 != v3);
    }
}
