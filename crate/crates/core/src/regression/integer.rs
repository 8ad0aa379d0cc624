//! Exact search for small-integer coefficient vectors.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub const MAX_COLUMNS: usize = 12;
pub const MAX_VAR_BOUND: i64 = 10;
/// MSE values closer than this (relative) count as ties.
pub const TIE_RTOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct IntegerFit {
    pub coefficients: Vec<i64>,
    pub mse: f64,
}

impl IntegerFit {
    pub fn nonzeros(&self) -> usize {
        self.coefficients.iter().filter(|&&c| c != 0).count()
    }
}

pub fn mse_of(x: &DMatrix<f64>, y: &DVector<f64>, c: &[i64]) -> f64 {
    let n = x.nrows().max(1) as f64;
    let mut total = 0.0;
    for i in 0..x.nrows() {
        let mut r = y[i];
        for (j, &cj) in c.iter().enumerate() {
            if cj != 0 {
                r -= cj as f64 * x[(i, j)];
            }
        }
        total += r * r;
    }
    total / n
}

pub fn mse_tie(a: f64, b: f64) -> bool {
    (a - b).abs() <= TIE_RTOL * (1.0 + a.abs().max(b.abs()))
}

/// Strict preference: lower MSE, then fewer nonzeros, then lexicographically
/// smaller vector.
pub fn prefer(a: &IntegerFit, b: &IntegerFit) -> bool {
    if !mse_tie(a.mse, b.mse) {
        return a.mse < b.mse;
    }
    let (na, nb) = (a.nonzeros(), b.nonzeros());
    if na != nb {
        return na < nb;
    }
    a.coefficients < b.coefficients
}

struct Search<'a> {
    x: &'a DMatrix<f64>,
    y: &'a DVector<f64>,
    bound: i64,
    max_active: usize,
    /// Orthonormal bases of the trailing column blocks `X[:, k..]`.
    tails: Vec<DMatrix<f64>>,
    best: Option<IntegerFit>,
    current: Vec<i64>,
}

impl Search<'_> {
    /// Lower bound on the MSE reachable from a residual once columns `k..`
    /// are free: the part of the residual outside their span.
    fn lower_bound(&self, k: usize, r: &DVector<f64>) -> f64 {
        let q = &self.tails[k];
        let proj = if q.ncols() == 0 {
            r.clone()
        } else {
            r - q * (q.transpose() * r)
        };
        proj.norm_squared() / self.x.nrows().max(1) as f64
    }

    fn visit(&mut self, k: usize, r: DVector<f64>, active: usize) {
        let p = self.x.ncols();
        if k == p {
            let cand = IntegerFit {
                coefficients: self.current.clone(),
                mse: mse_of(self.x, self.y, &self.current),
            };
            if self.best.as_ref().is_none_or(|b| prefer(&cand, b)) {
                self.best = Some(cand);
            }
            return;
        }
        if let Some(b) = &self.best {
            let lb = self.lower_bound(k, &r);
            let slack = 1e-9 * (1.0 + b.mse) + 1e-12 * r.norm_squared();
            if lb > b.mse + slack {
                return;
            }
        }
        let values: Vec<i64> = if active >= self.max_active {
            vec![0]
        } else {
            (-self.bound..=self.bound).collect()
        };
        let col = self.x.column(k).into_owned();
        for v in values {
            self.current[k] = v;
            let next = if v == 0 { r.clone() } else { &r - &col * v as f64 };
            self.visit(k + 1, next, active + usize::from(v != 0));
        }
        self.current[k] = 0;
    }
}

/// Integer vector in `[-var_bound, var_bound]^p` with at most `max_active`
/// nonzeros minimizing the training MSE, by depth-first branch and bound.
pub fn fit_integer_bounded(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    var_bound: i64,
    max_active: usize,
) -> Result<IntegerFit> {
    let p = x.ncols();
    if p > MAX_COLUMNS || !(0..=MAX_VAR_BOUND).contains(&var_bound) {
        return Err(Error::SearchSpaceTooLarge(format!(
            "{p} columns with var_bound {var_bound} (limits: {MAX_COLUMNS} columns, var_bound {MAX_VAR_BOUND})"
        )));
    }
    let mut tails = Vec::with_capacity(p + 1);
    for k in 0..=p {
        let block = x.columns(k, p - k).into_owned();
        tails.push(orthonormal_basis(&block));
    }
    let mut s = Search {
        x,
        y,
        bound: var_bound,
        max_active,
        tails,
        best: None,
        current: vec![0; p],
    };
    s.visit(0, y.clone(), 0);
    Ok(s.best.expect("the zero vector is always feasible"))
}

fn orthonormal_basis(a: &DMatrix<f64>) -> DMatrix<f64> {
    if a.ncols() == 0 || a.nrows() == 0 {
        return DMatrix::zeros(a.nrows(), 0);
    }
    let svd = a.clone().svd(true, false);
    let u = svd.u.expect("requested U");
    let smax = svd.singular_values.max();
    let keep: Vec<usize> = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > smax * 1e-12)
        .map(|(i, _)| i)
        .collect();
    u.select_columns(&keep)
}

/// Plain enumeration of every admissible vector; the reference for tests.
pub fn exhaustive(x: &DMatrix<f64>, y: &DVector<f64>, var_bound: i64, max_active: usize) -> IntegerFit {
    let p = x.ncols();
    let width = (2 * var_bound + 1) as u64;
    let total = width.pow(p as u32);
    let mut best: Option<IntegerFit> = None;
    for code in 0..total {
        let mut c = vec![0i64; p];
        let mut rest = code;
        for slot in c.iter_mut().rev() {
            *slot = (rest % width) as i64 - var_bound;
            rest /= width;
        }
        if c.iter().filter(|&&v| v != 0).count() > max_active {
            continue;
        }
        let cand = IntegerFit { mse: mse_of(x, y, &c), coefficients: c };
        if best.as_ref().is_none_or(|b| prefer(&cand, b)) {
            best = Some(cand);
        }
    }
    best.expect("nonempty search space")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn recovers_planted_vector() {
        let x = DMatrix::from_row_slice(4, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 2.0, 0.7, -0.2, 1.1, 2.0, 1.0, -3.0]);
        let c = DVector::from_vec(vec![1.0, -1.0, 2.0]);
        let y = &x * &c;
        let fit = fit_integer_bounded(&x, &y, 3, 3).unwrap();
        assert_eq!(fit.coefficients, vec![1, -1, 2]);
        assert!(fit.mse < 1e-20);
    }

    #[test]
    fn zero_bound_gives_zero_vector() {
        let x = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
        let y = DVector::from_vec(vec![1.0, 3.0]);
        let fit = fit_integer_bounded(&x, &y, 0, 2).unwrap();
        assert_eq!(fit.coefficients, vec![0, 0]);
        assert!((fit.mse - 5.0).abs() < 1e-12);
    }

    #[test]
    fn oversized_search_is_refused() {
        let x = DMatrix::zeros(2, 13);
        let y = DVector::zeros(2);
        assert!(matches!(fit_integer_bounded(&x, &y, 1, 2), Err(Error::SearchSpaceTooLarge(_))));
    }
}
