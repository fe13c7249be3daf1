//! Small dense linear algebra: Householder least squares, determinants,
//! and a Jacobi eigensolver for symmetric matrices. Everything here works on
//! row-major `Vec<T>` buffers; the systems involved are a handful of rows by
//! at most a handful of columns, so no pivoting heroics are needed.

use crate::num::Real;

/// Row-major dense matrix.
#[derive(Debug, Clone)]
pub struct Mat<T> {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<T>,
}

impl<T: Real> Mat<T> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![T::zero(); rows * cols],
        }
    }

    pub fn from_rows(rows: &[Vec<T>]) -> Self {
        let r = rows.len();
        let c = if r == 0 { 0 } else { rows[0].len() };
        let mut data = Vec::with_capacity(r * c);
        for row in rows {
            assert_eq!(row.len(), c);
            data.extend_from_slice(row);
        }
        Self { rows: r, cols: c, data }
    }

    #[inline]
    pub fn at(&self, i: usize, j: usize) -> T {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn at_mut(&mut self, i: usize, j: usize) -> &mut T {
        &mut self.data[i * self.cols + j]
    }
}

/// Least squares `min ||A x - b||` via Householder QR. Returns `None` when a
/// column collapses (rank deficiency up to `tiny` relative to the column norm).
pub fn lstsq<T: Real>(a: &Mat<T>, b: &[T]) -> Option<Vec<T>> {
    assert_eq!(a.rows, b.len());
    assert!(a.rows >= a.cols);
    let (m, n) = (a.rows, a.cols);
    let mut r = a.clone();
    let mut y = b.to_vec();
    let tiny = T::from_f64(1e-300);

    for k in 0..n {
        // Householder vector for column k below the diagonal.
        let mut norm = T::zero();
        for i in k..m {
            norm = norm + r.at(i, k) * r.at(i, k);
        }
        norm = norm.sqrt();
        if norm <= tiny {
            return None;
        }
        let alpha = if r.at(k, k) >= T::zero() { -norm } else { norm };
        let mut v = vec![T::zero(); m - k];
        v[0] = r.at(k, k) - alpha;
        for i in k + 1..m {
            v[i - k] = r.at(i, k);
        }
        let vtv: T = v.iter().map(|&x| x * x).sum();
        if vtv <= tiny {
            return None;
        }
        *r.at_mut(k, k) = alpha;
        for i in k + 1..m {
            *r.at_mut(i, k) = T::zero();
        }
        // Apply reflector to remaining columns and to y.
        for j in k + 1..n {
            let mut dot = T::zero();
            for i in k..m {
                dot = dot + v[i - k] * r.at(i, j);
            }
            let f = (T::one() + T::one()) * dot / vtv;
            for i in k..m {
                let upd = r.at(i, j) - f * v[i - k];
                *r.at_mut(i, j) = upd;
            }
        }
        let mut dot = T::zero();
        for i in k..m {
            dot = dot + v[i - k] * y[i];
        }
        let f = (T::one() + T::one()) * dot / vtv;
        for i in k..m {
            y[i] = y[i] - f * v[i - k];
        }
    }

    // Back substitution on the upper-triangular n x n block.
    let mut x = vec![T::zero(); n];
    for k in (0..n).rev() {
        let mut s = y[k];
        for j in k + 1..n {
            s = s - r.at(k, j) * x[j];
        }
        let diag = r.at(k, k);
        if diag.abs() <= tiny {
            return None;
        }
        x[k] = s / diag;
    }
    Some(x)
}

/// Determinant by Gaussian elimination with partial pivoting.
pub fn determinant<T: Real>(a: &Mat<T>) -> T {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let mut det = T::one();
    for k in 0..n {
        let mut piv = k;
        for i in k + 1..n {
            if m.at(i, k).abs() > m.at(piv, k).abs() {
                piv = i;
            }
        }
        if m.at(piv, k) == T::zero() {
            return T::zero();
        }
        if piv != k {
            for j in 0..n {
                let t = m.at(k, j);
                *m.at_mut(k, j) = m.at(piv, j);
                *m.at_mut(piv, j) = t;
            }
            det = -det;
        }
        det = det * m.at(k, k);
        for i in k + 1..n {
            let f = m.at(i, k) / m.at(k, k);
            for j in k..n {
                let upd = m.at(i, j) - f * m.at(k, j);
                *m.at_mut(i, j) = upd;
            }
        }
    }
    det
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, ascending.
pub fn symmetric_eigenvalues<T: Real>(a: &Mat<T>) -> Vec<T> {
    assert_eq!(a.rows, a.cols);
    let n = a.rows;
    let mut m = a.clone();
    let eps = T::epsilon() * T::from_f64(16.0);
    for _sweep in 0..64 {
        let mut off = T::zero();
        for i in 0..n {
            for j in i + 1..n {
                off = off + m.at(i, j).abs();
            }
        }
        let scale: T = (0..n).map(|i| m.at(i, i).abs()).sum::<T>() + T::one();
        if off <= eps * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m.at(p, q);
                if apq.abs() <= eps * scale {
                    continue;
                }
                let theta = (m.at(q, q) - m.at(p, p)) / ((T::one() + T::one()) * apq);
                let t = {
                    let s = if theta >= T::zero() { T::one() } else { -T::one() };
                    s / (theta.abs() + (theta * theta + T::one()).sqrt())
                };
                let c = T::one() / (t * t + T::one()).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = m.at(k, p);
                    let akq = m.at(k, q);
                    *m.at_mut(k, p) = c * akp - s * akq;
                    *m.at_mut(k, q) = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = m.at(p, k);
                    let aqk = m.at(q, k);
                    *m.at_mut(p, k) = c * apk - s * aqk;
                    *m.at_mut(q, k) = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<T> = (0..n).map(|i| m.at(i, i)).collect();
    ev.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ev
}
