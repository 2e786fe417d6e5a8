//! Minimal dense symmetric kernels: Cholesky factorization, an extreme
//! eigenvalue by Cholesky bisection, and orthonormalization for the
//! covariate projector.

/// In-place lower Cholesky of a symmetric positive definite matrix stored
/// row-major. Only the lower triangle is read and written; the upper triangle
/// is left as-is. Returns `Err(pivot)` when the matrix is not positive
/// definite at that pivot.
pub fn cholesky_in_place(a: &mut [f64], n: usize) -> Result<(), usize> {
    debug_assert_eq!(a.len(), n * n);
    for i in 0..n {
        for j in 0..i {
            let (head, tail) = a.split_at_mut(i * n);
            let row_j = &head[j * n..j * n + j];
            let row_i = &tail[..j];
            let mut sum = tail[j];
            for (x, y) in row_i.iter().zip(row_j) {
                sum -= x * y;
            }
            tail[j] = sum / head[j * n + j];
        }
        let row_i = &a[i * n..i * n + i];
        let sum_sq: f64 = row_i.iter().map(|v| v * v).sum();
        let d = a[i * n + i] - sum_sq;
        if d <= 0.0 || !d.is_finite() {
            return Err(i);
        }
        a[i * n + i] = d.sqrt();
    }
    Ok(())
}

/// `out = L v` for a lower-triangular `l` (row-major n×n, upper ignored),
/// using only the leading `n` rows/columns.
pub fn lower_tri_mul(l: &[f64], dim: usize, n: usize, v: &[f64], out: &mut [f64]) {
    debug_assert!(n <= dim && v.len() >= n && out.len() >= n);
    for i in 0..n {
        let row = &l[i * dim..i * dim + i + 1];
        let mut acc = 0.0;
        for (k, &lv) in row.iter().enumerate() {
            acc += lv * v[k];
        }
        out[i] = acc;
    }
}

/// Smallest eigenvalue of a dense symmetric matrix, located by bisecting on
/// the largest shift `sigma` for which `A - sigma I` stays positive definite.
/// The bracket comes from Gershgorin discs; `tol` is absolute.
pub fn min_symmetric_eigenvalue(a: &[f64], n: usize, tol: f64) -> f64 {
    debug_assert_eq!(a.len(), n * n);
    let mut lo = f64::INFINITY;
    let mut hi = f64::INFINITY;
    for i in 0..n {
        let mut radius = 0.0;
        for j in 0..n {
            if j != i {
                radius += a[i * n + j].abs();
            }
        }
        lo = lo.min(a[i * n + i] - radius);
        hi = hi.min(a[i * n + i]);
    }
    // widen so the invariant (lo is PD shift, hi is not) holds strictly
    let mut lo = lo - 1.0;
    let mut hi = hi + tol;
    let mut scratch = vec![0.0; n * n];
    while hi - lo > tol {
        let mid = 0.5 * (lo + hi);
        scratch.copy_from_slice(a);
        for i in 0..n {
            scratch[i * n + i] -= mid;
        }
        if cholesky_in_place(&mut scratch, n).is_ok() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Orthonormal basis of the column space of the row-major `n x q` matrix `w`,
/// by modified Gram-Schmidt with one re-orthogonalization pass. Returns the
/// basis column-major (each basis vector contiguous), or `Err(column)` when a
/// column is (numerically) linearly dependent on the ones before it.
pub fn orthonormal_columns(w: &[f64], n: usize, q: usize) -> Result<Vec<f64>, usize> {
    debug_assert_eq!(w.len(), n * q);
    let mut basis = vec![0.0; n * q];
    for col in 0..q {
        let mut v: Vec<f64> = (0..n).map(|r| w[r * q + col]).collect();
        let norm0 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        for _pass in 0..2 {
            for prev in 0..col {
                let b = &basis[prev * n..(prev + 1) * n];
                let proj: f64 = b.iter().zip(&v).map(|(x, y)| x * y).sum();
                for (vi, bi) in v.iter_mut().zip(b) {
                    *vi -= proj * bi;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm <= norm0 * 1e-10 || norm == 0.0 {
            return Err(col);
        }
        for (dst, vi) in basis[col * n..(col + 1) * n].iter_mut().zip(&v) {
            *dst = vi / norm;
        }
    }
    Ok(basis)
}
