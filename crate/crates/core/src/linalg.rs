//! Dense kernels for the damped normal equations.
//!
//! `nalgebra`'s own Cholesky is unblocked and its `tr_mul` is dot-product
//! based, both of which dominate Levenberg–Marquardt epochs once the network
//! has a few thousand weights. These routines work on column-major
//! `DMatrix<f64>` storage and push the O(n³) work through `matrixmultiply`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

const BLOCK: usize = 64;

/// `C = alpha * A * B + beta * C` on raw strided storage.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    alpha: f64,
    a: *const f64,
    rsa: isize,
    csa: isize,
    b: *const f64,
    rsb: isize,
    csb: isize,
    beta: f64,
    c: *mut f64,
    rsc: isize,
    csc: isize,
) {
    if m == 0 || n == 0 {
        return;
    }
    // SAFETY: callers pass pointers into live matrices whose extents cover
    // the (m, k, n) strided ranges; C does not alias A or B.
    unsafe { matrixmultiply::dgemm(m, k, n, alpha, a, rsa, csa, b, rsb, csb, beta, c, rsc, csc) }
}

/// `JᵀJ` for an `m × p` matrix.
pub fn gram_cols(j: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, p) = j.shape();
    let mut c = DMatrix::zeros(p, p);
    let a = j.as_ptr();
    gemm(p, m, p, 1.0, a, m as isize, 1, a, 1, m as isize, 0.0, c.as_mut_ptr(), 1, p as isize);
    c
}

/// `C += JᵀJ` for an `m × p` block `J` and a `p × p` accumulator `C`.
pub fn gram_cols_add(j: &DMatrix<f64>, c: &mut DMatrix<f64>) {
    let (m, p) = j.shape();
    assert_eq!(c.shape(), (p, p), "gram accumulator shape");
    let a = j.as_ptr();
    gemm(p, m, p, 1.0, a, m as isize, 1, a, 1, m as isize, 1.0, c.as_mut_ptr(), 1, p as isize);
}

/// `JJᵀ` for an `m × p` matrix.
pub fn gram_rows(j: &DMatrix<f64>) -> DMatrix<f64> {
    let (m, p) = j.shape();
    let mut c = DMatrix::zeros(m, m);
    let a = j.as_ptr();
    gemm(m, p, m, 1.0, a, 1, m as isize, a, m as isize, 1, 0.0, c.as_mut_ptr(), 1, m as isize);
    c
}

/// `Jᵀ v`.
pub fn mul_transpose_vec(j: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    j.column_iter().map(|col| col.iter().zip(v).map(|(a, b)| a * b).sum()).collect()
}

/// `J v`.
pub fn mul_vec(j: &DMatrix<f64>, v: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; j.nrows()];
    for (col, &x) in j.column_iter().zip(v) {
        if x != 0.0 {
            for (o, a) in out.iter_mut().zip(col.iter()) {
                *o += a * x;
            }
        }
    }
    out
}

/// In-place lower Cholesky factorisation `A = LLᵀ` of a symmetric positive
/// definite matrix. Only the lower triangle is read; on success it holds `L`
/// and the strict upper triangle is zeroed.
pub fn cholesky_in_place(a: &mut DMatrix<f64>) -> Result<()> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::Dimension { what: "cholesky input (square)", expected: n, got: a.ncols() });
    }
    let ld = n;
    let data = a.as_mut_slice();
    let mut k = 0;
    while k < n {
        let kb = BLOCK.min(n - k);
        factor_panel(data, ld, n, k, kb)?;
        // trailing update of the lower triangle, one block column at a time
        let ptr = data.as_mut_ptr();
        let mut jb = k + kb;
        while jb < n {
            let w = BLOCK.min(n - jb);
            let rows = n - jb;
            // A[jb.., jb..jb+w] -= L[jb.., k..k+kb] * L[jb..jb+w, k..k+kb]ᵀ
            // SAFETY: the panel (columns k..k+kb) and the target block
            // (columns jb.., jb >= k+kb) are disjoint regions of `data`.
            let l_rows = unsafe { ptr.add(jb + k * ld) } as *const f64;
            let l_cols = l_rows;
            let c = unsafe { ptr.add(jb + jb * ld) };
            gemm(rows, kb, w, -1.0, l_rows, 1, ld as isize, l_cols, ld as isize, 1, 1.0, c, 1, ld as isize);
            jb += w;
        }
        k += kb;
    }
    for j in 1..n {
        for i in 0..j {
            data[i + j * ld] = 0.0;
        }
    }
    Ok(())
}

/// Factors the diagonal block `[k, k+kb)` and solves the panel below it.
fn factor_panel(a: &mut [f64], ld: usize, n: usize, k: usize, kb: usize) -> Result<()> {
    for j in k..k + kb {
        // column j, rows j..n, minus contributions of panel columns k..j
        for l in k..j {
            let ajl = a[j + l * ld];
            if ajl == 0.0 {
                continue;
            }
            let (left, right) = a.split_at_mut(j * ld);
            let src = &left[l * ld + j..l * ld + n];
            let dst = &mut right[j..n];
            for (d, s) in dst.iter_mut().zip(src) {
                *d -= ajl * s;
            }
        }
        let d = a[j + j * ld];
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Factorization(format!("matrix is not positive definite (pivot {j} = {d:e})")));
        }
        let s = d.sqrt();
        a[j + j * ld] = s;
        let inv = 1.0 / s;
        for v in &mut a[j * ld + j + 1..j * ld + n] {
            *v *= inv;
        }
    }
    Ok(())
}

/// Solves `LLᵀ x = b` in place given the lower factor `L`.
pub fn cholesky_solve(l: &DMatrix<f64>, b: &mut [f64]) {
    let n = l.nrows();
    let d = l.as_slice();
    // forward: L y = b (column oriented)
    for j in 0..n {
        let yj = b[j] / d[j + j * n];
        b[j] = yj;
        if yj != 0.0 {
            for i in j + 1..n {
                b[i] -= d[i + j * n] * yj;
            }
        }
    }
    // backward: Lᵀ x = y (row of Lᵀ is a column of L)
    for j in (0..n).rev() {
        let col = &d[j * n + j + 1..j * n + n];
        let s: f64 = col.iter().zip(&b[j + 1..n]).map(|(a, x)| a * x).sum();
        b[j] = (b[j] - s) / d[j + j * n];
    }
}
