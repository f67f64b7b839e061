//! Dense least squares by Householder QR.

use crate::scalar::Scalar;

/// Solves `min ||A c - b||` for column-major `cols` (each of length `b.len()`).
///
/// Columns that are numerically dependent on earlier ones get a zero
/// coefficient instead of blowing up.
pub(crate) fn lstsq<T: Scalar>(cols: &[Vec<T>], b: &[T]) -> Vec<T> {
    let m = b.len();
    let n = cols.len();
    let mut a: Vec<Vec<T>> = cols.to_vec();
    let mut rhs = b.to_vec();
    let norms: Vec<T> = a.iter().map(|c| c.iter().map(|v| *v * *v).sum::<T>().sqrt()).collect();
    let mut pivot_ok = vec![false; n];
    let mut row = 0;
    let mut rows_of = vec![usize::MAX; n];

    for j in 0..n {
        if row >= m {
            break;
        }
        let tail: T = a[j][row..].iter().map(|v| *v * *v).sum::<T>().sqrt();
        let eps = T::epsilon().sqrt() * T::lit(1e-3);
        if !(tail > eps * norms[j].max(T::one())) {
            continue;
        }
        let alpha = if a[j][row] > T::zero() { -tail } else { tail };
        let mut v: Vec<T> = a[j][row..].to_vec();
        v[0] = v[0] - alpha;
        let vnorm2: T = v.iter().map(|x| *x * *x).sum();
        if vnorm2 > T::zero() {
            let reflect = |col: &mut [T]| {
                let d: T = col.iter().zip(&v).map(|(c, vi)| *c * *vi).sum();
                let f = T::lit(2.0) * d / vnorm2;
                for (c, vi) in col.iter_mut().zip(&v) {
                    *c = *c - f * *vi;
                }
            };
            for col in a.iter_mut().skip(j) {
                reflect(&mut col[row..]);
            }
            reflect(&mut rhs[row..]);
        }
        pivot_ok[j] = true;
        rows_of[j] = row;
        row += 1;
    }

    // Back substitution over the accepted pivots.
    let mut coef = vec![T::zero(); n];
    for j in (0..n).rev() {
        if !pivot_ok[j] {
            continue;
        }
        let r = rows_of[j];
        let mut s = rhs[r];
        for k in j + 1..n {
            if pivot_ok[k] {
                s = s - a[k][r] * coef[k];
            }
        }
        coef[j] = s / a[j][r];
    }
    coef
}
