use super::tensor::Matrix;
use crate::error::{invalid, Error, Result};
use crate::real::Real;

/// `|det K| / max|K_ij|^W` below this is treated as singular.
pub const SINGULAR_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct LuInverse<T> {
    pub inverse: Matrix<T>,
    pub log_abs_det: f64,
    pub sign: i8,
}

/// Inverts a square matrix by LU factorisation with partial pivoting.
///
/// The factorisation runs in `f64` regardless of `T`.
pub fn lu_invert_logdet<T: Real>(k: &Matrix<T>) -> Result<LuInverse<T>> {
    if !k.is_square() {
        return Err(invalid(format!(
            "cannot invert a {}x{} matrix",
            k.rows(),
            k.cols()
        )));
    }
    let n = k.rows();
    let mut a: Vec<f64> = k.data().iter().map(|v| v.as_f64()).collect();
    if a.iter().any(|v| !v.is_finite()) {
        return Err(invalid("matrix has non-finite entries"));
    }
    let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1i8;
    let mut log_abs_det = 0.0;

    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i * n + col].abs().total_cmp(&a[j * n + col].abs()))
            .unwrap_or(col);
        let p = a[pivot * n + col];
        if p == 0.0 || scale == 0.0 {
            return Err(Error::Singular {
                log_abs_det: f64::NEG_INFINITY,
            });
        }
        if pivot != col {
            for j in 0..n {
                a.swap(col * n + j, pivot * n + j);
            }
            perm.swap(col, pivot);
            sign = -sign;
        }
        if p < 0.0 {
            sign = -sign;
        }
        log_abs_det += p.abs().ln();
        for row in col + 1..n {
            let f = a[row * n + col] / p;
            a[row * n + col] = f;
            for j in col + 1..n {
                a[row * n + j] -= f * a[col * n + j];
            }
        }
    }
    if log_abs_det - n as f64 * scale.ln() < SINGULAR_THRESHOLD.ln() {
        return Err(Error::Singular { log_abs_det });
    }

    // Solve L U x = P e_j for every column j.
    let mut inv = vec![0.0f64; n * n];
    let mut col = vec![0.0f64; n];
    for j in 0..n {
        for (i, c) in col.iter_mut().enumerate() {
            *c = if perm[i] == j { 1.0 } else { 0.0 };
        }
        for i in 0..n {
            let mut s = col[i];
            for m in 0..i {
                s -= a[i * n + m] * col[m];
            }
            col[i] = s;
        }
        for i in (0..n).rev() {
            let mut s = col[i];
            for m in i + 1..n {
                s -= a[i * n + m] * col[m];
            }
            col[i] = s / a[i * n + i];
        }
        for i in 0..n {
            inv[i * n + j] = col[i];
        }
    }
    Ok(LuInverse {
        inverse: Matrix::new(n, n, inv.into_iter().map(T::lit).collect())?,
        log_abs_det,
        sign,
    })
}
