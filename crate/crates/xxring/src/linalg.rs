//! Dense linear-algebra utilities: a small row-major matrix type, symmetric
//! eigensolvers, determinants, and deterministic summation.
//!
//! Two eigensolver backends are used. Production chains (L x L hopping
//! matrices, L <= a few hundred) go through nalgebra's pure-Rust symmetric QR,
//! which is fast at these sizes and deterministic. The exact-diagonalization
//! oracle needs only the lowest eigenpairs of matrices up to dimension ~3432
//! (L = 14 at Sz = 0), where LAPACK's MRRR routine `dsyevr` is an order of
//! magnitude faster than a full decomposition; nalgebra remains as a fallback
//! if LAPACK reports a failure.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

// openblas-src only contributes link flags for the system BLAS/LAPACK; the
// explicit use keeps the dependency from being dropped at link time.
use openblas_src as _;

/// Dense square matrix, row-major. Rows are contiguous, which is the access
/// pattern of the correlator sweeps (they scan rows of 2G - I).
#[derive(Debug, Clone, PartialEq)]
pub struct Mat {
    n: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(n: usize) -> Self {
        Mat {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Mat { n, data }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.n + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn max_asymmetry(&self) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..self.n {
            for j in (i + 1)..self.n {
                worst = worst.max((self.get(i, j) - self.get(j, i)).abs());
            }
        }
        worst
    }
}

/// Eigendecomposition of a symmetric matrix: eigenvalues ascending, the k-th
/// column of `vectors` is the eigenvector of `values[k]`.
pub struct EigenDecomposition {
    pub values: Vec<f64>,
    /// Row-major: `vectors.get(i, k)` is component i of eigenvector k.
    pub vectors: Mat,
}

/// Full symmetric eigendecomposition (nalgebra backend), eigenvalues sorted
/// ascending with an index-stable tie break so results are reproducible.
///
/// Rejects matrices whose asymmetry exceeds `1e-12 * max(1, |T|_max)`.
pub fn eigh(t: &Mat) -> Result<EigenDecomposition> {
    let scale = t.data.iter().fold(0.0f64, |a, &x| a.max(x.abs())).max(1.0);
    let asym = t.max_asymmetry();
    if asym > 1e-12 * scale {
        return Err(Error::NotSymmetric { max_asym: asym });
    }
    let n = t.n;
    let m = DMatrix::from_fn(n, n, |i, j| t.get(i, j));
    let se = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        se.eigenvalues[a]
            .partial_cmp(&se.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
            .then(a.cmp(&b))
    });
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let vectors = Mat::from_fn(n, |i, k| se.eigenvectors[(i, order[k])]);
    Ok(EigenDecomposition { values, vectors })
}

/// Lowest `m` eigenpairs of a symmetric matrix given as a packed n*n slice
/// (contents destroyed). Tries LAPACK `dsyevr`; on failure falls back to the
/// full nalgebra decomposition. Returns (eigenvalues ascending, eigenvectors
/// column-by-column concatenated, each of length n).
pub fn lowest_eigenpairs(a: &mut [f64], n: usize, m: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    assert_eq!(a.len(), n * n);
    assert!(m >= 1 && m <= n);
    if let Some(out) = dsyevr_lowest(a, n, m) {
        return Ok(out);
    }
    // Fallback: full decomposition. Slow but unconditional.
    let mat = Mat {
        n,
        data: a.to_vec(),
    };
    let eig = eigh(&mat)?;
    let values = eig.values[..m].to_vec();
    let mut vectors = Vec::with_capacity(n * m);
    for k in 0..m {
        for i in 0..n {
            vectors.push(eig.vectors.get(i, k));
        }
    }
    Ok((values, vectors))
}

/// MRRR eigensolver for the `il..=iu = 1..=m` smallest eigenpairs.
/// Returns None if LAPACK signals an error (caller falls back).
fn dsyevr_lowest(a: &mut [f64], n: usize, m: usize) -> Option<(Vec<f64>, Vec<f64>)> {
    let nn = n as i32;
    let mm = m as i32;
    let mut w = vec![0.0f64; n];
    let mut z = vec![0.0f64; n * m];
    let mut isuppz = vec![0i32; 2 * m.max(1)];
    let mut found = 0i32;
    let mut info = 0i32;
    let (vl, vu) = (0.0f64, 0.0f64);
    let (il, iu) = (1i32, mm);
    let abstol = -1.0f64; // default tolerance: most accurate supported
    let jobz = b'V' as std::ffi::c_char;
    let range = b'I' as std::ffi::c_char;
    let uplo = b'L' as std::ffi::c_char;

    // Workspace query, then the real call.
    let (mut wkopt, mut iwkopt) = (0.0f64, 0i32);
    let (qlwork, qliwork) = (-1i32, -1i32);
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &nn,
            a.as_mut_ptr(),
            &nn,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut found,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &nn,
            isuppz.as_mut_ptr(),
            &mut wkopt,
            &qlwork,
            &mut iwkopt,
            &qliwork,
            &mut info,
        );
    }
    if info != 0 {
        return None;
    }
    let lwork = wkopt as i32;
    let liwork = iwkopt;
    let mut work = vec![0.0f64; lwork.max(1) as usize];
    let mut iwork = vec![0i32; liwork.max(1) as usize];
    unsafe {
        lapack_sys::dsyevr_(
            &jobz,
            &range,
            &uplo,
            &nn,
            a.as_mut_ptr(),
            &nn,
            &vl,
            &vu,
            &il,
            &iu,
            &abstol,
            &mut found,
            w.as_mut_ptr(),
            z.as_mut_ptr(),
            &nn,
            isuppz.as_mut_ptr(),
            work.as_mut_ptr(),
            &lwork,
            iwork.as_mut_ptr(),
            &liwork,
            &mut info,
        );
    }
    if info != 0 || found != mm {
        return None;
    }
    w.truncate(m);
    Some((w, z))
}

/// Signed log-magnitude representation of a determinant:
/// `det = sign * exp(log_abs)`, with `sign = 0` meaning an exactly zero
/// determinant. Avoids underflow for the long disorder-localized sweeps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogDet {
    pub sign: f64,
    pub log_abs: f64,
}

impl LogDet {
    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.log_abs.exp()
        }
    }
}

/// Determinant via LU with partial pivoting; `a` is destroyed.
/// This is the reference path used by the naive per-pair correlator and the
/// property tests that pin the incremental sweep.
pub fn det_lu(a: &mut [f64], n: usize) -> LogDet {
    assert_eq!(a.len(), n * n);
    let mut sign = 1.0f64;
    let mut log_abs = 0.0f64;
    for k in 0..n {
        // Pivot search in column k.
        let mut p = k;
        let mut pmax = a[k * n + k].abs();
        for r in (k + 1)..n {
            let v = a[r * n + k].abs();
            if v > pmax {
                pmax = v;
                p = r;
            }
        }
        if pmax == 0.0 {
            return LogDet {
                sign: 0.0,
                log_abs: f64::NEG_INFINITY,
            };
        }
        if p != k {
            for c in 0..n {
                a.swap(k * n + c, p * n + c);
            }
            sign = -sign;
        }
        let pivot = a[k * n + k];
        sign *= pivot.signum();
        log_abs += pivot.abs().ln();
        for r in (k + 1)..n {
            let factor = a[r * n + k] / pivot;
            if factor != 0.0 {
                for c in (k + 1)..n {
                    a[r * n + c] -= factor * a[k * n + c];
                }
            }
        }
    }
    LogDet { sign, log_abs }
}

/// Pairwise (tree) summation with a fixed reduction shape. For a given input
/// slice the result is bitwise reproducible, which the ensemble contract
/// relies on for worker-count independence.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    const BASE: usize = 8;
    if xs.len() <= BASE {
        let mut s = 0.0;
        for &x in xs {
            s += x;
        }
        return s;
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}
