//! Small dense kernels used on hot paths: LU determinants on scratch buffers,
//! orthogonality checks and re-projection.

use nalgebra::DMatrix;

/// Determinant of a row-major `k × k` buffer, destroyed in the process.
pub fn det_in_place(a: &mut [f64], k: usize) -> f64 {
    debug_assert_eq!(a.len(), k * k);
    let mut det = 1.0;
    for col in 0..k {
        let mut piv = col;
        let mut best = a[col * k + col].abs();
        for r in col + 1..k {
            let v = a[r * k + col].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best == 0.0 {
            return 0.0;
        }
        if piv != col {
            for c in col..k {
                a.swap(col * k + c, piv * k + c);
            }
            det = -det;
        }
        let p = a[col * k + col];
        det *= p;
        for r in col + 1..k {
            let f = a[r * k + col] / p;
            if f != 0.0 {
                for c in col + 1..k {
                    a[r * k + c] -= f * a[col * k + c];
                }
            }
        }
    }
    det
}

/// Determinant of the submatrix of `m` picked out by 0-based `rows` and `cols`.
pub fn sub_det(m: &DMatrix<f64>, rows: &[usize], cols: &[usize], scratch: &mut Vec<f64>) -> f64 {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    if k == 0 {
        return 1.0;
    }
    scratch.clear();
    for &r in rows {
        for &c in cols {
            scratch.push(m[(r, c)]);
        }
    }
    det_in_place(scratch, k)
}

/// As [`sub_det`], reading from a row-major buffer of the given width.
pub fn sub_det_row_major(m: &[f64], width: usize, rows: &[usize], cols: &[usize], scratch: &mut Vec<f64>) -> f64 {
    let k = rows.len();
    debug_assert_eq!(k, cols.len());
    if k == 0 {
        return 1.0;
    }
    scratch.clear();
    for &r in rows {
        let row = &m[r * width..(r + 1) * width];
        scratch.extend(cols.iter().map(|&c| row[c]));
    }
    det_in_place(scratch, k)
}

pub fn det(m: &DMatrix<f64>) -> f64 {
    assert!(m.is_square());
    let k = m.nrows();
    if k == 0 {
        return 1.0;
    }
    let mut buf: Vec<f64> = Vec::with_capacity(k * k);
    for r in 0..k {
        for c in 0..k {
            buf.push(m[(r, c)]);
        }
    }
    det_in_place(&mut buf, k)
}

/// Largest entry of |M Mᵀ − I|.
pub fn orthogonality_defect(m: &DMatrix<f64>) -> f64 {
    let p = m * m.transpose();
    let mut worst: f64 = 0.0;
    for r in 0..p.nrows() {
        for c in 0..p.ncols() {
            let target = if r == c { 1.0 } else { 0.0 };
            worst = worst.max((p[(r, c)] - target).abs());
        }
    }
    worst
}

/// Nearest orthogonal matrix (polar factor).
pub fn reproject_orthogonal(m: &DMatrix<f64>) -> DMatrix<f64> {
    let svd = m.clone().svd(true, true);
    let u = svd.u.expect("svd u");
    let vt = svd.v_t.expect("svd vt");
    u * vt
}

/// `diag(I_k, b)` with `b` square.
pub fn direct_sum_identity(k: usize, b: &DMatrix<f64>) -> DMatrix<f64> {
    let n = k + b.nrows();
    let mut out = DMatrix::identity(n, n);
    out.view_mut((k, k), (b.nrows(), b.ncols())).copy_from(b);
    out
}
