//! Dense least-squares helpers.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Relative singular-value cutoff for the minimum-norm solve.
pub const RANK_RTOL: f64 = 1e-10;

/// Minimum-norm least squares via SVD, truncating singular values below
/// `RANK_RTOL * s_max`.
pub fn lstsq(x: &DMatrix<f64>, y: &DVector<f64>) -> Result<DVector<f64>> {
    if x.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let svd = x.clone().svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Err(Error::SingularDesign);
    }
    svd.solve(y, smax * RANK_RTOL)
        .map_err(|_| Error::SingularDesign)
}

/// Solve `(XᵀX + λI) b = Xᵀy`.
pub fn ridge(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> Result<DVector<f64>> {
    if x.ncols() == 0 {
        return Ok(DVector::zeros(0));
    }
    let xt = x.transpose();
    let mut gram = &xt * x;
    for i in 0..gram.nrows() {
        gram[(i, i)] += lambda;
    }
    let rhs = &xt * y;
    match gram.clone().cholesky() {
        Some(ch) => Ok(ch.solve(&rhs)),
        None => {
            let svd = gram.svd(true, true);
            let smax = svd.singular_values.max();
            if !(smax > 0.0) {
                return Err(Error::SingularDesign);
            }
            svd.solve(&rhs, smax * RANK_RTOL)
                .map_err(|_| Error::SingularDesign)
        }
    }
}

pub fn mse(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>) -> f64 {
    if x.nrows() == 0 {
        return 0.0;
    }
    let r = y - x * b;
    r.norm_squared() / x.nrows() as f64
}

/// Root-mean-square of each column; zero columns get scale 1.
pub fn column_rms(x: &DMatrix<f64>) -> Vec<f64> {
    let n = x.nrows().max(1) as f64;
    x.column_iter()
        .map(|c| {
            let s = (c.norm_squared() / n).sqrt();
            if s > 0.0 && s.is_finite() {
                s
            } else {
                1.0
            }
        })
        .collect()
}

pub fn scale_columns(x: &DMatrix<f64>, scale: &[f64]) -> DMatrix<f64> {
    let mut out = x.clone();
    for (j, mut c) in out.column_iter_mut().enumerate() {
        c /= scale[j];
    }
    out
}

pub fn select_columns(x: &DMatrix<f64>, cols: &[usize]) -> DMatrix<f64> {
    x.select_columns(cols)
}

pub fn select_rows(x: &DMatrix<f64>, rows: &[usize]) -> DMatrix<f64> {
    x.select_rows(rows)
}

pub fn select_entries(y: &DVector<f64>, rows: &[usize]) -> DVector<f64> {
    DVector::from_iterator(rows.len(), rows.iter().map(|&i| y[i]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        assert!((lstsq(&x, &y).unwrap()[0] - 2.0).abs() < 1e-14);
        assert!((ridge(&x, &y, 1.0).unwrap()[0] - 28.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn minimum_norm_on_duplicate_columns() {
        let x = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let b = lstsq(&x, &y).unwrap();
        assert!((b[0] - 1.0).abs() < 1e-12 && (b[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn zero_design_is_singular() {
        let x = DMatrix::zeros(3, 2);
        let y = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert!(matches!(lstsq(&x, &y), Err(Error::SingularDesign)));
    }
}
