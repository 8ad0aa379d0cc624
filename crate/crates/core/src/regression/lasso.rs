//! Lasso by cyclic coordinate descent.
//!
//! Objective: `‖y − Xb‖² / (2n) + λ‖b‖₁`. Iteration stops once the duality
//! gap falls below `GAP_TOL` or after `MAX_SWEEPS` passes.

use nalgebra::{DMatrix, DVector};

pub const GAP_TOL: f64 = 1e-10;
pub const MAX_SWEEPS: usize = 20_000;

fn soft(z: f64, t: f64) -> f64 {
    if z > t {
        z - t
    } else if z < -t {
        z + t
    } else {
        0.0
    }
}

pub fn duality_gap(x: &DMatrix<f64>, y: &DVector<f64>, b: &DVector<f64>, lambda: f64) -> f64 {
    let n = x.nrows() as f64;
    let r = y - x * b;
    let primal = r.norm_squared() / (2.0 * n) + lambda * b.lp_norm(1);
    let corr = x.transpose() * &r;
    let cmax = corr.amax() / n;
    let s = if cmax > lambda { lambda / cmax } else { 1.0 };
    let theta = &r * (s / n);
    let dual = theta.dot(y) - n * theta.norm_squared() / 2.0;
    primal - dual
}

pub fn lasso(x: &DMatrix<f64>, y: &DVector<f64>, lambda: f64) -> DVector<f64> {
    let (n, p) = x.shape();
    let nf = n as f64;
    let mut b = DVector::zeros(p);
    if p == 0 || n == 0 {
        return b;
    }
    // covariance updates: g = Xᵀ(y − Xb)/n
    let gram = x.tr_mul(x) / nf;
    let mut g = x.tr_mul(y) / nf;
    for sweep in 0..MAX_SWEEPS {
        for j in 0..p {
            let sq = gram[(j, j)];
            if sq == 0.0 {
                continue;
            }
            let old = b[j];
            let new = soft(g[j] + sq * old, lambda) / sq;
            if new != old {
                g.axpy(old - new, &gram.column(j), 1.0);
                b[j] = new;
            }
        }
        if sweep % 10 == 9 && duality_gap(x, y, &b, lambda) < GAP_TOL {
            break;
        }
    }
    b
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn large_penalty_zeroes_everything() {
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        assert_eq!(lasso(&x, &y, 100.0)[0], 0.0);
    }

    #[test]
    fn one_column_closed_form() {
        // b = soft(x·y/n, λ) / (x·x/n) = (28/3 − 1) / (14/3)
        let x = DMatrix::from_row_slice(3, 1, &[1.0, 2.0, 3.0]);
        let y = DVector::from_vec(vec![2.0, 4.0, 6.0]);
        let b = lasso(&x, &y, 1.0);
        assert!((b[0] - 25.0 / 14.0).abs() < 1e-12);
        assert!(duality_gap(&x, &y, &b, 1.0) < GAP_TOL);
    }
}
