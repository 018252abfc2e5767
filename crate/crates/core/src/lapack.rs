//! Thin FFI wrapper around LAPACK's `dsyevr` for dense real-symmetric
//! eigenproblems. Only the pieces the crate needs: the lowest-k eigenpairs
//! and full eigenvalue ranges for small matrices.

use crate::error::{Error, Result};
use std::os::raw::{c_char, c_int};

#[link(name = "lapack")]
extern "C" {
    fn dsyevr_(
        jobz: *const c_char,
        range: *const c_char,
        uplo: *const c_char,
        n: *const c_int,
        a: *mut f64,
        lda: *const c_int,
        vl: *const f64,
        vu: *const f64,
        il: *const c_int,
        iu: *const c_int,
        abstol: *const f64,
        m: *mut c_int,
        w: *mut f64,
        z: *mut f64,
        ldz: *const c_int,
        isuppz: *mut c_int,
        work: *mut f64,
        lwork: *const c_int,
        iwork: *mut c_int,
        liwork: *const c_int,
        info: *mut c_int,
    );
}

/// Lowest `k` eigenvalues (ascending) and eigenvectors of a symmetric matrix
/// given in row-major order (symmetry makes the storage order immaterial).
/// The input slice is consumed as LAPACK workspace.
pub(crate) fn lowest_eigenpairs(
    a: &mut [f64],
    n: usize,
    k: usize,
) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    assert_eq!(a.len(), n * n);
    assert!(k >= 1 && k <= n);
    let (values, vectors) = driver(a, n, 1, k, true)?;
    let vectors = vectors
        .chunks_exact(n)
        .take(k)
        .map(|chunk| chunk.to_vec())
        .collect();
    Ok((values, vectors))
}

/// All eigenvalues (ascending) of a symmetric matrix, no eigenvectors.
pub(crate) fn eigenvalues(a: &mut [f64], n: usize) -> Result<Vec<f64>> {
    assert_eq!(a.len(), n * n);
    let (values, _) = driver(a, n, 1, n, false)?;
    Ok(values)
}

fn driver(
    a: &mut [f64],
    n: usize,
    il: usize,
    iu: usize,
    want_vectors: bool,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let k = iu - il + 1;
    let jobz = if want_vectors { b'V' } else { b'N' } as c_char;
    let range = b'I' as c_char;
    let uplo = b'L' as c_char;
    let nn = n as c_int;
    let vl = 0.0f64;
    let vu = 0.0f64;
    let il = il as c_int;
    let iu = iu as c_int;
    let abstol = 0.0f64;
    let mut m: c_int = 0;
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; if want_vectors { n * k } else { 1 }];
    let ldz = nn.max(1);
    let mut isuppz = vec![0 as c_int; 2 * k.max(1)];
    let mut info: c_int = 0;

    // Workspace query.
    let mut work_probe = [0.0f64];
    let mut iwork_probe = [0 as c_int];
    let query = -1 as c_int;
    unsafe {
        dsyevr_(
            &jobz, &range, &uplo, &nn, a.as_mut_ptr(), &nn, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ldz, isuppz.as_mut_ptr(), work_probe.as_mut_ptr(),
            &query, iwork_probe.as_mut_ptr(), &query, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver { info });
    }
    let lwork = work_probe[0] as c_int;
    let liwork = iwork_probe[0];
    let mut work = vec![0.0f64; lwork as usize];
    let mut iwork = vec![0 as c_int; liwork as usize];
    unsafe {
        dsyevr_(
            &jobz, &range, &uplo, &nn, a.as_mut_ptr(), &nn, &vl, &vu, &il, &iu, &abstol, &mut m,
            w.as_mut_ptr(), z.as_mut_ptr(), &ldz, isuppz.as_mut_ptr(), work.as_mut_ptr(), &lwork,
            iwork.as_mut_ptr(), &liwork, &mut info,
        );
    }
    if info != 0 {
        return Err(Error::Eigensolver { info });
    }
    if (m as usize) < k {
        return Err(Error::Eigensolver { info: -1 });
    }
    w.truncate(k);
    Ok((w, z))
}
