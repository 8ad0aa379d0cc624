//! Sparse regression of one basis term on the monomial design.
//!
//! Fits run on columns scaled to unit RMS; coefficients are reported in the
//! original column units.

pub mod integer;
pub mod lasso;
pub mod linalg;
pub mod rationalize;

use std::fmt;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::Rational;
use crate::rng;

pub use integer::{fit_integer_bounded, IntegerFit};
pub use rationalize::rationalize;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RegKind {
    Ridge,
    Lasso,
    None,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizerSpec {
    pub kind: RegKind,
    pub lambda: f64,
}

impl RegularizerSpec {
    pub const NONE: RegularizerSpec = RegularizerSpec { kind: RegKind::None, lambda: 0.0 };

    pub fn ridge(lambda: f64) -> Self {
        RegularizerSpec { kind: RegKind::Ridge, lambda }
    }

    pub fn lasso(lambda: f64) -> Self {
        RegularizerSpec { kind: RegKind::Lasso, lambda }
    }

    /// The λ grid: ridge {1e-8, 1e-4, 1e-2}, lasso {1e-6, 1e-4, 1e-2}, and
    /// the unregularized fit.
    pub fn default_grid() -> Vec<RegularizerSpec> {
        let mut g: Vec<_> = [1e-8, 1e-4, 1e-2].into_iter().map(Self::ridge).collect();
        g.extend([1e-6, 1e-4, 1e-2].into_iter().map(Self::lasso));
        g.push(Self::NONE);
        g
    }
}

impl fmt::Display for RegularizerSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            RegKind::None => f.write_str("none"),
            RegKind::Ridge => write!(f, "ridge({:e})", self.lambda),
            RegKind::Lasso => write!(f, "lasso({:e})", self.lambda),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub target_index: usize,
    pub spec: RegularizerSpec,
    pub coefficients: Vec<f64>,
    pub surviving: Vec<usize>,
    pub train_mse: f64,
    pub cv_score: f64,
    pub sample_complexity: usize,
}

/// Raw fit on the given design, no rescaling.
pub fn fit(x: &DMatrix<f64>, y: &DVector<f64>, spec: &RegularizerSpec) -> Result<DVector<f64>> {
    if x.nrows() == 0 {
        return Err(Error::TooFewRows { have: 0, need: 1 });
    }
    if spec.lambda < 0.0 || !spec.lambda.is_finite() {
        return Err(Error::InvalidConfig(format!("negative penalty in {spec}")));
    }
    match spec.kind {
        RegKind::None => linalg::lstsq(x, y),
        RegKind::Ridge => linalg::ridge(x, y, spec.lambda),
        RegKind::Lasso => Ok(lasso::lasso(x, y, spec.lambda)),
    }
}

/// Fit on a column subset after scaling to unit RMS; returns the full-length
/// coefficient vector in original units.
pub fn fit_subset(x: &DMatrix<f64>, y: &DVector<f64>, cols: &[usize], spec: &RegularizerSpec) -> Result<Vec<f64>> {
    let mut out = vec![0.0; x.ncols()];
    if cols.is_empty() {
        return Ok(out);
    }
    let sub = linalg::select_columns(x, cols);
    let scale = linalg::column_rms(&sub);
    let b = fit(&linalg::scale_columns(&sub, &scale), y, spec)?;
    for (k, &j) in cols.iter().enumerate() {
        out[j] = b[k] / scale[k];
    }
    Ok(out)
}

pub fn mse_of(x: &DMatrix<f64>, y: &DVector<f64>, coef: &[f64]) -> f64 {
    linalg::mse(x, y, &DVector::from_column_slice(coef))
}

fn support(coef: &[f64]) -> Vec<usize> {
    coef.iter()
        .enumerate()
        .filter(|(_, &c)| c != 0.0)
        .map(|(j, _)| j)
        .collect()
}

/// Seeded fold assignment: shuffled rows dealt round-robin.
pub fn folds(rows: usize, k: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..rows).collect();
    rng::shuffle(&mut rng::stream(seed, "folds", 0), &mut order);
    let mut out = vec![Vec::new(); k];
    for (pos, i) in order.into_iter().enumerate() {
        out[pos % k].push(i);
    }
    for f in &mut out {
        f.sort_unstable();
    }
    out
}

fn reg_strength(s: &RegularizerSpec) -> (u8, f64) {
    let rank = match s.kind {
        RegKind::Ridge => 0,
        RegKind::Lasso => 1,
        RegKind::None => 2,
    };
    (rank, s.lambda)
}

/// Held-out MSE tie tolerance for model selection.
const CV_TIE_RTOL: f64 = 1e-9;

/// Mean held-out MSE per spec; the best spec is refit on all rows.
pub fn cross_validate(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    specs: &[RegularizerSpec],
    k: usize,
    seed: u64,
) -> Result<(RegularizerSpec, FitResult)> {
    if k < 2 || x.nrows() < k {
        return Err(Error::TooFewRows { have: x.nrows(), need: k.max(2) });
    }
    if specs.is_empty() {
        return Err(Error::InvalidConfig("empty regularizer grid".into()));
    }
    let parts = folds(x.nrows(), k, seed);
    let all: Vec<usize> = (0..x.ncols()).collect();
    let mut best: Option<(RegularizerSpec, f64)> = None;
    for spec in specs {
        let mut total = 0.0;
        for held in &parts {
            let train: Vec<usize> = (0..x.nrows()).filter(|i| held.binary_search(i).is_err()).collect();
            let xt = linalg::select_rows(x, &train);
            let yt = linalg::select_entries(y, &train);
            let coef = fit_subset(&xt, &yt, &all, spec)?;
            let xh = linalg::select_rows(x, held);
            let yh = linalg::select_entries(y, held);
            total += mse_of(&xh, &yh, &coef);
        }
        let score = total / k as f64;
        let replace = match &best {
            None => true,
            Some((b, bs)) => {
                let tie = (score - bs).abs() <= CV_TIE_RTOL * score.max(*bs);
                if tie {
                    stronger(spec, b)
                } else {
                    score < *bs
                }
            }
        };
        if replace {
            best = Some((*spec, score));
        }
    }
    let (spec, score) = best.expect("nonempty grid");
    let coef = fit_subset(x, y, &all, &spec)?;
    let fr = FitResult {
        target_index: 0,
        spec,
        train_mse: mse_of(x, y, &coef),
        surviving: support(&coef),
        coefficients: coef,
        cv_score: score,
        sample_complexity: x.nrows(),
    };
    Ok((spec, fr))
}

/// Tie-break: larger λ first, then ridge, lasso, none.
fn stronger(a: &RegularizerSpec, b: &RegularizerSpec) -> bool {
    let (ra, la) = reg_strength(a);
    let (rb, lb) = reg_strength(b);
    if la != lb {
        return la > lb;
    }
    ra < rb
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SparsifyOptions {
    /// Columns whose scaled coefficient falls below this fraction of the
    /// largest are eliminated.
    pub drop_threshold: f64,
    pub epsilon: f64,
    /// A further column is removed whenever the refit stays below this MSE.
    pub minimal_tolerance: f64,
}

impl Default for SparsifyOptions {
    fn default() -> Self {
        SparsifyOptions { drop_threshold: 1e-3, epsilon: 1e-3, minimal_tolerance: 1e-9 }
    }
}

fn scaled_magnitudes(x: &DMatrix<f64>, coef: &[f64], cols: &[usize]) -> Vec<(usize, f64)> {
    let rms = linalg::column_rms(x);
    cols.iter().map(|&j| (j, coef[j].abs() * rms[j])).collect()
}

/// Iterative elimination. An exactly underdetermined fit is first replaced by
/// its sparsest exact solution (see [`sparsest_exact`]). Then the smallest scaled coefficient is dropped
/// while it sits below `drop_threshold` of the largest and the refit keeps
/// MSE ≤ ε; finally the exact search is repeated and single columns are
/// removed, smallest first, whenever the refit stays under
/// `minimal_tolerance`.
pub fn sparsify(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    start: &FitResult,
    spec: &RegularizerSpec,
    opts: &SparsifyOptions,
) -> Result<FitResult> {
    if start.train_mse > opts.epsilon {
        return Err(Error::NoSparseModel { mse: start.train_mse, epsilon: opts.epsilon });
    }
    let mut cols = start.surviving.clone();
    let mut coef = start.coefficients.clone();
    let mut mse = start.train_mse;
    if let Some(c2) = sparsest_exact(x, y, &cols, opts)? {
        mse = mse_of(x, y, &c2);
        cols = support(&c2);
        coef = c2;
    }
    loop {
        let mags = scaled_magnitudes(x, &coef, &cols);
        let top = mags.iter().map(|m| m.1).fold(0.0, f64::max);
        let Some(&(j, m)) = mags.iter().min_by(|a, b| a.1.total_cmp(&b.1)) else { break };
        if m >= opts.drop_threshold * top {
            break;
        }
        let trial: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
        let c2 = fit_subset(x, y, &trial, spec)?;
        let m2 = mse_of(x, y, &c2);
        if m2 > opts.epsilon {
            break;
        }
        cols = support_within(&c2, &trial);
        coef = c2;
        mse = m2;
    }
    loop {
        if let Some(c2) = null_space_search(x, y, &cols, opts, false)? {
            let trial = support(&c2);
            if trial.len() < cols.len() {
                mse = mse_of(x, y, &c2);
                cols = trial;
                coef = c2;
                continue;
            }
        }
        let mut mags = scaled_magnitudes(x, &coef, &cols);
        mags.sort_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)));
        let mut dropped = false;
        for (j, _) in mags {
            let trial: Vec<usize> = cols.iter().copied().filter(|&c| c != j).collect();
            let c2 = fit_subset(x, y, &trial, spec)?;
            let m2 = mse_of(x, y, &c2);
            if m2 <= opts.minimal_tolerance.min(opts.epsilon) {
                cols = support_within(&c2, &trial);
                coef = c2;
                mse = m2;
                dropped = true;
                break;
            }
        }
        if !dropped {
            break;
        }
    }
    Ok(FitResult {
        surviving: cols,
        coefficients: coef,
        train_mse: mse,
        ..start.clone()
    })
}

/// Singular values below this fraction of the largest span the exact
/// solution set searched by [`sparsest_exact`].
pub const NULL_RTOL: f64 = 1e-7;
/// Largest number of zero patterns [`sparsest_exact`] will try.
/// Null-space weight above which a column counts as part of a relation.
pub const INVOLVEMENT_TOL: f64 = 1e-3;
pub const SUBSET_CAP: u128 = 200_000;
/// Largest support tried by [`smallest_exact_support`].
const MAX_SCREEN_SUPPORT: usize = 8;

/// Sparsest exact solution on the columns `cols`.
///
/// The exact solutions form `c0 + N·λ` with `N` spanning the numerical null
/// space of dimension `k`; a sparsest member vanishes on `k` coordinates that
/// fix `λ`, so every `k`-subset is tried. Among equally sparse candidates the
/// smallest coefficient L1 norm wins, then the smaller support. Returns `None` when the solution is
/// unique, the design is short or no candidate refits below
/// `minimal_tolerance`. When the subset count exceeds [`SUBSET_CAP`] the
/// search falls back to [`smallest_exact_support`].
pub fn sparsest_exact(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cols: &[usize],
    opts: &SparsifyOptions,
) -> Result<Option<Vec<f64>>> {
    null_space_search(x, y, cols, opts, true)
}

fn null_space_search(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cols: &[usize],
    opts: &SparsifyOptions,
    fallback: bool,
) -> Result<Option<Vec<f64>>> {
    let p = cols.len();
    if p < 2 || x.nrows() < p {
        return Ok(None);
    }
    let sub = linalg::select_columns(x, cols);
    let scale = linalg::column_rms(&sub);
    let svd = linalg::scale_columns(&sub, &scale).svd(true, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return Ok(None);
    }
    let null: Vec<usize> = (0..p).filter(|&i| svd.singular_values[i] <= NULL_RTOL * smax).collect();
    let k = null.len();
    if k == 0 {
        return Ok(None);
    }
    let c0 = match svd.solve(y, NULL_RTOL * smax) {
        Ok(c) => c,
        Err(_) => return Ok(None),
    };
    let vt = svd.v_t.as_ref().expect("requested V");
    let n = DMatrix::from_fn(p, k, |i, j| vt[(null[j], i)]);
    // rows outside the null space cannot be zeroed
    let rows: Vec<usize> = (0..p).filter(|&i| n.row(i).norm() > NULL_RTOL).collect();
    if rows.len() < k {
        return Ok(None);
    }
    let q = rows.len();
    if crate::query::binomial(q as u64, k as u64) > SUBSET_CAP {
        return if fallback { smallest_exact_support(x, y, cols, opts) } else { Ok(None) };
    }
    let mut best: Option<(Vec<usize>, f64)> = None;
    let mut pick: Vec<usize> = (0..k).collect();
    let mut zeros = vec![0; k];
    let mut a = vec![0.0; k * k];
    let mut lambda = vec![0.0; k];
    let mut c = vec![0.0; p];
    loop {
        for i in 0..k {
            zeros[i] = rows[pick[i]];
        }
        for i in 0..k {
            for j in 0..k {
                a[i * k + j] = n[(zeros[i], j)];
            }
            lambda[i] = -c0[zeros[i]];
        }
        if solve_dense(&mut a, &mut lambda, k) {
            let mut top = 0.0f64;
            for i in 0..p {
                let mut v = c0[i];
                for j in 0..k {
                    v += n[(i, j)] * lambda[j];
                }
                c[i] = v;
                top = top.max(v.abs());
            }
            if top > 0.0 {
                let cut = 1e-8 * top;
                let mut len = 0;
                let mut l1 = 0.0;
                for i in 0..p {
                    if c[i].abs() > cut {
                        len += 1;
                        l1 += (c[i] / scale[i]).abs();
                    }
                }
                let supp = || (0..p).filter(|&i| c[i].abs() > cut).collect::<Vec<usize>>();
                let better = match &best {
                    None => true,
                    Some((b, bl1)) => {
                        if len != b.len() {
                            len < b.len()
                        } else if (l1 - bl1).abs() > 1e-9 * l1.max(*bl1) {
                            l1 < *bl1
                        } else {
                            supp() < *b
                        }
                    }
                };
                if better {
                    best = Some((supp(), l1));
                }
            }
        }
        // next k-subset in lexicographic order
        let mut i = k;
        while i > 0 && pick[i - 1] == q - k + i - 1 {
            i -= 1;
        }
        if i == 0 {
            break;
        }
        pick[i - 1] += 1;
        for j in i..k {
            pick[j] = pick[j - 1] + 1;
        }
    }
    let Some((supp, _)) = best else { return Ok(None) };
    let chosen: Vec<usize> = supp.iter().map(|&i| cols[i]).collect();
    let c = fit_subset(x, y, &chosen, &RegularizerSpec::NONE)?;
    if mse_of(x, y, &c) <= opts.minimal_tolerance.min(opts.epsilon) {
        Ok(Some(c))
    } else {
        Ok(None)
    }
}

/// Gaussian elimination with partial pivoting on the row-major `k`×`k`
/// matrix `a`; the solution overwrites `b`. False when `a` is singular.
fn solve_dense(a: &mut [f64], b: &mut [f64], k: usize) -> bool {
    for col in 0..k {
        let piv = (col..k).max_by(|&r, &s| a[r * k + col].abs().total_cmp(&a[s * k + col].abs())).unwrap();
        if !(a[piv * k + col].abs() > 0.0) {
            return false;
        }
        if piv != col {
            for j in 0..k {
                a.swap(piv * k + j, col * k + j);
            }
            b.swap(piv, col);
        }
        let d = a[col * k + col];
        for r in col + 1..k {
            let f = a[r * k + col] / d;
            if f != 0.0 {
                for j in col..k {
                    a[r * k + j] -= f * a[col * k + j];
                }
                b[r] -= f * b[col];
            }
        }
    }
    for col in (0..k).rev() {
        let mut v = b[col];
        for j in col + 1..k {
            v -= a[col * k + j] * b[j];
        }
        b[col] = v / a[col * k + col];
    }
    b.iter().all(|v| v.is_finite())
}

/// Exact fit on the fewest columns of `cols`, trying supports by increasing
/// size until [`SUBSET_CAP`] subsets have been screened. Screening solves the
/// normal equations of the RMS-scaled design; a hit is confirmed by a full
/// refit. Ties on size go to the smaller coefficient L1 norm, then the
/// smaller support.
fn smallest_exact_support(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    cols: &[usize],
    opts: &SparsifyOptions,
) -> Result<Option<Vec<f64>>> {
    let p = cols.len();
    let n = x.nrows() as f64;
    let tol = opts.minimal_tolerance.min(opts.epsilon);
    let sub = linalg::select_columns(x, cols);
    let scale = linalg::column_rms(&sub);
    let scaled = linalg::scale_columns(&sub, &scale);
    let gram = scaled.transpose() * &scaled;
    let xty = scaled.transpose() * y;
    let yy = y.dot(y);
    let mut spent: u128 = 0;
    let mut g = [0.0; MAX_SCREEN_SUPPORT * MAX_SCREEN_SUPPORT];
    let mut b = [0.0; MAX_SCREEN_SUPPORT];
    let mut c = [0.0; MAX_SCREEN_SUPPORT];
    for size in 1..p.min(MAX_SCREEN_SUPPORT + 1) {
        let count = crate::query::binomial(p as u64, size as u64);
        if spent + count > SUBSET_CAP {
            break;
        }
        spent += count;
        let mut best: Option<(f64, Vec<f64>)> = None;
        let mut idx: Vec<usize> = (0..size).collect();
        loop {
            for i in 0..size {
                b[i] = xty[idx[i]];
                for j in 0..size {
                    g[i * size + j] = gram[(idx[i], idx[j])];
                }
            }
            if solve_spd(&mut g[..size * size], &b[..size], &mut c[..size]) {
                let explained: f64 = (0..size).map(|i| c[i] * b[i]).sum();
                if (yy - explained) / n <= tol {
                    let l1: f64 = (0..size).map(|i| (c[i] / scale[idx[i]]).abs()).sum();
                    let better = best.as_ref().is_none_or(|(bl1, _)| l1 < *bl1 && (bl1 - l1) > 1e-9 * bl1.max(l1));
                    if better {
                        let chosen: Vec<usize> = idx.iter().map(|&i| cols[i]).collect();
                        let full = fit_subset(x, y, &chosen, &RegularizerSpec::NONE)?;
                        if mse_of(x, y, &full) <= tol {
                            best = Some((l1, full));
                        }
                    }
                }
            }
            let mut i = size;
            while i > 0 && idx[i - 1] == p - size + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..size {
                idx[j] = idx[j - 1] + 1;
            }
        }
        if let Some((_, c)) = best {
            return Ok(Some(c));
        }
    }
    Ok(None)
}

/// In-place Cholesky solve of the row-major system `g c = b`; false when `g`
/// is not numerically positive definite.
fn solve_spd(g: &mut [f64], b: &[f64], c: &mut [f64]) -> bool {
    let s = b.len();
    for j in 0..s {
        let mut d = g[j * s + j];
        for k in 0..j {
            d -= g[j * s + k] * g[j * s + k];
        }
        if !(d > 1e-14 * g[j * s + j].abs().max(f64::MIN_POSITIVE)) {
            return false;
        }
        let d = d.sqrt();
        g[j * s + j] = d;
        for i in j + 1..s {
            let mut v = g[i * s + j];
            for k in 0..j {
                v -= g[i * s + k] * g[j * s + k];
            }
            g[i * s + j] = v / d;
        }
    }
    for i in 0..s {
        let mut v = b[i];
        for k in 0..i {
            v -= g[i * s + k] * c[k];
        }
        c[i] = v / g[i * s + i];
    }
    for i in (0..s).rev() {
        let mut v = c[i];
        for k in i + 1..s {
            v -= g[k * s + i] * c[k];
        }
        c[i] = v / g[i * s + i];
    }
    true
}

/// Columns carrying weight in the numerical null space of `x`, i.e. those
/// that take part in some exact linear relation.
pub fn null_involvement(x: &DMatrix<f64>) -> Vec<bool> {
    let p = x.ncols();
    if p == 0 || x.nrows() < p {
        return vec![true; p];
    }
    let scale = linalg::column_rms(x);
    let svd = linalg::scale_columns(x, &scale).svd(false, true);
    let smax = svd.singular_values.max();
    if !(smax > 0.0) {
        return vec![true; p];
    }
    let vt = svd.v_t.as_ref().expect("requested V");
    let null: Vec<usize> = (0..p).filter(|&i| svd.singular_values[i] <= NULL_RTOL * smax).collect();
    (0..p)
        .map(|j| null.iter().map(|&i| vt[(i, j)].powi(2)).sum::<f64>().sqrt() > INVOLVEMENT_TOL)
        .collect()
}

fn support_within(coef: &[f64], cols: &[usize]) -> Vec<usize> {
    cols.iter().copied().filter(|&j| coef[j] != 0.0).collect()
}

/// Settings for the full fit → sparsify → snap chain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegressionConfig {
    pub specs: Vec<RegularizerSpec>,
    pub folds: usize,
    pub sparsify: SparsifyOptions,
    pub max_denominator: u64,
    pub seed: u64,
}

impl Default for RegressionConfig {
    fn default() -> Self {
        RegressionConfig {
            specs: RegularizerSpec::default_grid(),
            folds: 5,
            sparsify: SparsifyOptions::default(),
            max_denominator: 100,
            seed: 0,
        }
    }
}

/// Sparse model with snapped coefficients.
#[derive(Clone, Debug, PartialEq)]
pub struct SnappedModel {
    pub fit: FitResult,
    pub rational: Vec<(usize, Rational)>,
    pub rational_mse: f64,
}

impl SnappedModel {
    pub fn dense(&self, p: usize) -> Vec<f64> {
        let mut v = vec![0.0; p];
        for (j, q) in &self.rational {
            v[*j] = q.to_f64();
        }
        v
    }
}

/// Snap surviving coefficients after an unregularized refit on the support.
/// The snapped model is rejected when its MSE exceeds ε.
pub fn snap(x: &DMatrix<f64>, y: &DVector<f64>, fit: &FitResult, cfg: &RegressionConfig) -> Result<SnappedModel> {
    let refit = fit_subset(x, y, &fit.surviving, &RegularizerSpec::NONE)?;
    let mut rational = Vec::new();
    for &j in &fit.surviving {
        let q = rationalize(refit[j], cfg.max_denominator)?;
        if !q.is_zero() {
            rational.push((j, q));
        }
    }
    let mut dense = vec![0.0; x.ncols()];
    for (j, q) in &rational {
        dense[*j] = q.to_f64();
    }
    let rational_mse = mse_of(x, y, &dense);
    if rational_mse > cfg.sparsify.epsilon {
        return Err(Error::NoSparseModel { mse: rational_mse, epsilon: cfg.sparsify.epsilon });
    }
    Ok(SnappedModel { fit: fit.clone(), rational, rational_mse })
}

fn single_fit(x: &DMatrix<f64>, y: &DVector<f64>, spec: &RegularizerSpec) -> Result<(RegularizerSpec, FitResult)> {
    let all: Vec<usize> = (0..x.ncols()).collect();
    let coef = fit_subset(x, y, &all, spec)?;
    let train_mse = mse_of(x, y, &coef);
    Ok((
        *spec,
        FitResult {
            target_index: 0,
            spec: *spec,
            train_mse,
            surviving: support(&coef),
            coefficients: coef,
            cv_score: train_mse,
            sample_complexity: x.nrows(),
        },
    ))
}

/// Cross-validate, sparsify and snap. A single-entry grid skips the
/// cross-validation.
pub fn run(x: &DMatrix<f64>, y: &DVector<f64>, cfg: &RegressionConfig) -> Result<SnappedModel> {
    let (spec, full) = match cfg.specs.as_slice() {
        [only] => single_fit(x, y, only)?,
        specs => cross_validate(x, y, specs, cfg.folds, cfg.seed)?,
    };
    let sparse = sparsify(x, y, &full, &spec, &cfg.sparsify)?;
    snap(x, y, &sparse, cfg)
}

/// Smallest training prefix whose rerun gives the same support and the same
/// snapped coefficients, located by doubling then bisection over prefixes
/// (stability is taken as monotone in the prefix length). Prefix reruns use
/// the reference model's regularizer without cross-validation. Returns the
/// row count when no shorter prefix agrees.
pub fn stability_sample_complexity(
    x: &DMatrix<f64>,
    y: &DVector<f64>,
    reference: &SnappedModel,
    cfg: &RegressionConfig,
) -> usize {
    let m = x.nrows();
    let cfg = &RegressionConfig { specs: vec![reference.fit.spec], ..cfg.clone() };
    let lo_start = (reference.rational.len() + 1).min(m);
    let stable = |len: usize| -> bool {
        let rows: Vec<usize> = (0..len).collect();
        let xp = linalg::select_rows(x, &rows);
        let yp = linalg::select_entries(y, &rows);
        match run(&xp, &yp, cfg) {
            Ok(model) => model.rational == reference.rational,
            Err(_) => false,
        }
    };
    let mut lo = lo_start.saturating_sub(1);
    let mut hi = lo_start;
    while hi < m && !stable(hi) {
        lo = hi;
        hi = (hi * 2).min(m);
    }
    if hi >= m {
        hi = m;
        if lo == m {
            return m;
        }
    }
    // invariant: stable(hi) or hi == m; lo unstable
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if stable(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    hi
}
