//! Dense Hermitian/symmetric eigendecompositions.
//!
//! With the `lapack` feature this calls the system LAPACK (`zheevd`/`dsyevd`)
//! on column-major buffers reused across calls; without it, nalgebra's pure
//! Rust symmetric eigensolver is used. Both paths are deterministic.

use crate::util::C64;
use crate::{DbdError, Result};

/// Reusable workspaces for in-place eigendecompositions.
#[derive(Debug, Default)]
pub struct EigWorkspace {
    #[cfg(feature = "lapack")]
    zwork: Vec<C64>,
    #[cfg(feature = "lapack")]
    rwork: Vec<f64>,
    #[cfg(feature = "lapack")]
    dwork: Vec<f64>,
    #[cfg(feature = "lapack")]
    iwork: Vec<i32>,
}

impl EigWorkspace {
    pub fn new() -> Self {
        Self::default()
    }
}

#[cfg(feature = "lapack")]
mod lapack_ffi {
    use super::C64;

    extern "C" {
        pub fn zheevd_(
            jobz: *const u8,
            uplo: *const u8,
            n: *const i32,
            a: *mut C64,
            lda: *const i32,
            w: *mut f64,
            work: *mut C64,
            lwork: *const i32,
            rwork: *mut f64,
            lrwork: *const i32,
            iwork: *mut i32,
            liwork: *const i32,
            info: *mut i32,
        );
        pub fn dsyevd_(
            jobz: *const u8,
            uplo: *const u8,
            n: *const i32,
            a: *mut f64,
            lda: *const i32,
            w: *mut f64,
            work: *mut f64,
            lwork: *const i32,
            iwork: *mut i32,
            liwork: *const i32,
            info: *mut i32,
        );
        pub fn zherk_(
            uplo: *const u8,
            trans: *const u8,
            n: *const i32,
            k: *const i32,
            alpha: *const f64,
            a: *const C64,
            lda: *const i32,
            beta: *const f64,
            c: *mut C64,
            ldc: *const i32,
        );
        pub fn openblas_set_num_threads(n: i32);
    }
}

#[cfg(feature = "lapack")]
fn init_blas_threads() {
    use std::sync::Once;
    static ONCE: Once = Once::new();
    // Single-threaded BLAS keeps solves deterministic and composes with the
    // sweep runner's own worker pool.
    ONCE.call_once(|| unsafe { lapack_ffi::openblas_set_num_threads(1) });
}

/// Eigendecomposition of a Hermitian matrix stored column-major in `a`
/// (full, both triangles). On return `a` holds the eigenvectors (column `k`
/// is the eigenvector of `w[k]`), `w` the ascending eigenvalues.
#[cfg(feature = "lapack")]
pub fn eigh_inplace(a: &mut [C64], n: usize, w: &mut [f64], ws: &mut EigWorkspace) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    debug_assert!(w.len() >= n);
    if n == 0 {
        return Ok(());
    }
    init_blas_threads();
    let nn = n as i32;
    let lwork = (2 * n + n * n) as i32;
    let lrwork = (1 + 5 * n + 2 * n * n) as i32;
    let liwork = (3 + 5 * n) as i32;
    ws.zwork.resize(lwork as usize, C64::new(0.0, 0.0));
    ws.rwork.resize(lrwork as usize, 0.0);
    ws.iwork.resize(liwork as usize, 0);
    let mut info = 0i32;
    unsafe {
        lapack_ffi::zheevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            ws.zwork.as_mut_ptr(),
            &lwork,
            ws.rwork.as_mut_ptr(),
            &lrwork,
            ws.iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(DbdError::Solver(format!("zheevd failed with info={info}")));
    }
    Ok(())
}

#[cfg(not(feature = "lapack"))]
pub fn eigh_inplace(a: &mut [C64], n: usize, w: &mut [f64], _ws: &mut EigWorkspace) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| a[c * n + r]);
    let se = m.symmetric_eigen();
    // sort ascending to match the LAPACK contract
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    for (k, &src) in order.iter().enumerate() {
        w[k] = se.eigenvalues[src];
        for r in 0..n {
            a[k * n + r] = se.eigenvectors[(r, src)];
        }
    }
    Ok(())
}

/// Real symmetric eigendecomposition, same contract as [`eigh_inplace`].
#[cfg(feature = "lapack")]
pub fn eigh_real_inplace(
    a: &mut [f64],
    n: usize,
    w: &mut [f64],
    ws: &mut EigWorkspace,
) -> Result<()> {
    debug_assert_eq!(a.len(), n * n);
    if n == 0 {
        return Ok(());
    }
    init_blas_threads();
    let nn = n as i32;
    let lwork = (1 + 6 * n + 2 * n * n) as i32;
    let liwork = (3 + 5 * n) as i32;
    ws.dwork.resize(lwork as usize, 0.0);
    ws.iwork.resize(liwork as usize, 0);
    let mut info = 0i32;
    unsafe {
        lapack_ffi::dsyevd_(
            b"V".as_ptr(),
            b"L".as_ptr(),
            &nn,
            a.as_mut_ptr(),
            &nn,
            w.as_mut_ptr(),
            ws.dwork.as_mut_ptr(),
            &lwork,
            ws.iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 {
        return Err(DbdError::Solver(format!("dsyevd failed with info={info}")));
    }
    Ok(())
}

#[cfg(not(feature = "lapack"))]
pub fn eigh_real_inplace(
    a: &mut [f64],
    n: usize,
    w: &mut [f64],
    _ws: &mut EigWorkspace,
) -> Result<()> {
    if n == 0 {
        return Ok(());
    }
    let m = nalgebra::DMatrix::from_fn(n, n, |r, c| a[c * n + r]);
    let se = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| se.eigenvalues[i].total_cmp(&se.eigenvalues[j]));
    for (k, &src) in order.iter().enumerate() {
        w[k] = se.eigenvalues[src];
        for r in 0..n {
            a[k * n + r] = se.eigenvectors[(r, src)];
        }
    }
    Ok(())
}

/// Rank-k Hermitian update `c += sign * a a^H` (column-major buffers, `a` is
/// `n x k`), filling both triangles of `c`.
pub fn herk_update(c: &mut [C64], n: usize, a: &[C64], k: usize, sign: f64) {
    if k == 0 || n == 0 {
        return;
    }
    #[cfg(feature = "lapack")]
    {
        init_blas_threads();
        let nn = n as i32;
        let kk = k as i32;
        let one = 1.0f64;
        unsafe {
            lapack_ffi::zherk_(
                b"L".as_ptr(),
                b"N".as_ptr(),
                &nn,
                &kk,
                &sign,
                a.as_ptr(),
                &nn,
                &one,
                c.as_mut_ptr(),
                &nn,
            );
        }
        // zherk only touches the lower triangle: mirror it.
        for col in 0..n {
            for row in (col + 1)..n {
                c[row * n + col] = c[col * n + row].conj();
            }
        }
    }
    #[cfg(not(feature = "lapack"))]
    {
        for j in 0..k {
            let col = &a[j * n..(j + 1) * n];
            for ci in 0..n {
                let s = sign * col[ci].conj();
                let dst = &mut c[ci * n..(ci + 1) * n];
                for (ri, v) in col.iter().enumerate() {
                    dst[ri] += v * s;
                }
            }
        }
    }
}

/// Real rank-k update `c += sign * a a^T`, filling both triangles.
pub fn syrk_update(c: &mut [f64], n: usize, a: &[f64], k: usize, sign: f64) {
    for j in 0..k {
        let col = &a[j * n..(j + 1) * n];
        for ci in 0..n {
            let s = sign * col[ci];
            let dst = &mut c[ci * n..(ci + 1) * n];
            for (ri, v) in col.iter().enumerate() {
                dst[ri] += v * s;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    #[test]
    fn complex_eig_reconstructs_matrix() {
        let n = 12;
        let mut rng = crate::util::stream_rng(1, "eig", 0);
        let mut h = vec![C64::new(0.0, 0.0); n * n];
        for r in 0..n {
            for c in r..n {
                let z = if r == c {
                    C64::new(rng.random::<f64>() - 0.5, 0.0)
                } else {
                    C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5)
                };
                h[c * n + r] = z;
                h[r * n + c] = z.conj();
            }
        }
        let mut vecs = h.clone();
        let mut w = vec![0.0; n];
        let mut ws = EigWorkspace::new();
        eigh_inplace(&mut vecs, n, &mut w, &mut ws).unwrap();
        // ascending eigenvalues
        for i in 1..n {
            assert!(w[i] >= w[i - 1]);
        }
        // H v = w v
        for k in 0..n {
            for r in 0..n {
                let mut hv = C64::new(0.0, 0.0);
                for c in 0..n {
                    hv += h[c * n + r] * vecs[k * n + c];
                }
                assert!((hv - w[k] * vecs[k * n + r]).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn herk_matches_naive() {
        let n = 7;
        let k = 3;
        let mut rng = crate::util::stream_rng(2, "herk", 0);
        let a: Vec<C64> = (0..n * k)
            .map(|_| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5))
            .collect();
        let mut c = vec![C64::new(0.0, 0.0); n * n];
        herk_update(&mut c, n, &a, k, 1.0);
        for r in 0..n {
            for cc in 0..n {
                let mut want = C64::new(0.0, 0.0);
                for j in 0..k {
                    want += a[j * n + r] * a[j * n + cc].conj();
                }
                assert!((c[cc * n + r] - want).norm() < 1e-12);
            }
        }
    }
}
