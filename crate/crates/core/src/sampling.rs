//! Black-box oracles and correlated sample tables.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{eval, ClosedForm, Env, Expr, ExprError, NativeFn};
use crate::query::{input_vars, monomial_to_expr, random_vars, Monomial, TermBasis};
use crate::rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const REAL: Interval = Interval {
        lo: f64::NEG_INFINITY,
        hi: f64::INFINITY,
    };

    pub fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn symmetric(half_width: f64) -> Self {
        Interval::new(-half_width, half_width)
    }

    pub fn intersect(&self, o: &Interval) -> Option<Interval> {
        let lo = self.lo.max(o.lo);
        let hi = self.hi.min(o.hi);
        (lo < hi).then_some(Interval { lo, hi })
    }

    pub fn contains(&self, v: f64) -> bool {
        v >= self.lo && v <= self.hi
    }

    pub fn is_bounded(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite()
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// A program `f` observed only through its values.
#[derive(Clone)]
pub struct Oracle {
    pub name: String,
    pub arity: usize,
    /// Natural domain per coordinate; points outside are never drawn.
    pub domain: Vec<Interval>,
    pub closed_form: Option<ClosedForm>,
    f: NativeFn,
}

impl fmt::Debug for Oracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Oracle")
            .field("name", &self.name)
            .field("arity", &self.arity)
            .field("domain", &self.domain)
            .field("closed_form", &self.closed_form.as_ref().map(|c| c.body.to_string()))
            .finish()
    }
}

impl Oracle {
    pub fn from_fn(name: &str, arity: usize, domain: Vec<Interval>, f: NativeFn) -> Self {
        Oracle {
            name: name.to_string(),
            arity,
            domain,
            closed_form: None,
            f,
        }
    }

    pub fn from_closed_form(name: &str, closed: ClosedForm, domain: Vec<Interval>) -> Self {
        let c = closed.clone();
        let f: NativeFn = Arc::new(move |args: &[f64]| c.eval(args));
        Oracle {
            name: name.to_string(),
            arity: closed.arity(),
            domain,
            closed_form: Some(closed),
            f,
        }
    }

    pub fn call(&self, args: &[f64]) -> std::result::Result<f64, ExprError> {
        let v = (self.f)(args)?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(ExprError::NonFinite)
        }
    }

    pub fn native(&self) -> NativeFn {
        self.f.clone()
    }

    /// Evaluator that rejects points outside the domain and non-finite
    /// values.
    pub fn checked_native(&self) -> NativeFn {
        let f = self.f.clone();
        let domain = self.domain.clone();
        Arc::new(move |args: &[f64]| {
            for (p, d) in args.iter().zip(&domain) {
                if !d.contains(*p) {
                    return Err(ExprError::Domain(format!("query point {p} outside the domain {d}")));
                }
            }
            let v = f(args)?;
            if v.is_finite() {
                Ok(v)
            } else {
                Err(ExprError::NonFinite)
            }
        })
    }

    /// Sampling region per coordinate: the box intersected with the domain.
    pub fn region(&self, sample_box: &Interval) -> Result<Vec<Interval>> {
        (0..self.arity)
            .map(|i| {
                let d = self.domain.get(i).copied().unwrap_or(Interval::REAL);
                d.intersect(sample_box).ok_or_else(|| {
                    Error::InvalidConfig(format!(
                        "box {sample_box} does not meet the domain {d} of `{}`",
                        self.name
                    ))
                })
            })
            .collect()
    }
}

/// Truncated series implementations mirroring a straightforward C loop.
pub fn taylor_program(series: &str, terms: usize) -> Result<Oracle> {
    let n = terms.max(1);
    let f: NativeFn = match series {
        // sum_{k<n} (-x)^k / k!, then 1/(1 + sum)
        "sigmoid" => Arc::new(move |a: &[f64]| {
            let mut sum = 1.0;
            let mut trm = 1.0;
            let neg_x = -a[0];
            for k in 1..n {
                trm *= neg_x / k as f64;
                sum += trm;
            }
            Ok(1.0 / (1.0 + sum))
        }),
        "exp" => Arc::new(move |a: &[f64]| {
            let mut sum = 1.0;
            let mut trm = 1.0;
            for k in 1..n {
                trm *= a[0] / k as f64;
                sum += trm;
            }
            Ok(sum)
        }),
        "sin" => Arc::new(move |a: &[f64]| {
            let x = a[0];
            let mut trm = x;
            let mut sum = x;
            for k in 1..n {
                trm *= -x * x / ((2 * k) as f64 * (2 * k + 1) as f64);
                sum += trm;
            }
            Ok(sum)
        }),
        "cos" => Arc::new(move |a: &[f64]| {
            let x = a[0];
            let mut trm = 1.0;
            let mut sum = 1.0;
            for k in 1..n {
                trm *= -x * x / ((2 * k - 1) as f64 * (2 * k) as f64);
                sum += trm;
            }
            Ok(sum)
        }),
        other => return Err(Error::UnknownSeries(other.to_string())),
    };
    Ok(Oracle::from_fn(
        &format!("taylor:{series}:{n}"),
        1,
        vec![Interval::REAL],
        f,
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SamplingConfig {
    pub m: usize,
    #[serde(rename = "box")]
    pub sample_box: Interval,
    pub seed: u64,
    pub max_retries: usize,
    pub train_fraction: f64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        SamplingConfig {
            m: 100,
            sample_box: Interval::symmetric(10.0),
            seed: 0,
            max_retries: 100,
            train_fraction: 0.8,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub x: Vec<f64>,
    pub r: Vec<f64>,
}

/// Evaluated monomials, one row per draw.
#[derive(Clone, Debug)]
pub struct SampleTable {
    pub headers: Vec<String>,
    pub values: DMatrix<f64>,
    pub draws: Vec<Draw>,
    pub seed: u64,
}

impl SampleTable {
    pub fn rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn select_rows(&self, idx: &[usize]) -> SampleTable {
        SampleTable {
            headers: self.headers.clone(),
            values: self.values.select_rows(idx),
            draws: idx.iter().map(|&i| self.draws[i].clone()).collect(),
            seed: self.seed,
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(&self.headers).map_err(|e| Error::Io(e.to_string()))?;
        for row in self.values.row_iter() {
            let rec: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
            w.write_record(&rec).map_err(|e| Error::Io(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(e.to_string()))
    }

    pub fn draw_log(&self) -> String {
        let mut out = String::new();
        for d in &self.draws {
            out.push_str(&serde_json::to_string(d).unwrap_or_default());
            out.push('\n');
        }
        out
    }
}

/// Variable bindings for one draw.
pub fn draw_env(arity: usize, draw: &Draw) -> Env {
    let mut env = Env::new();
    for (v, x) in input_vars(arity).iter().zip(&draw.x) {
        env.vars.insert(v.clone(), *x);
    }
    for (v, r) in random_vars(arity).iter().zip(&draw.r) {
        env.vars.insert(v.clone(), *r);
    }
    env
}

/// Environment binding the variables of `draw` and the function symbol to
/// the oracle.
pub fn oracle_env(oracle: &Oracle, function: &str, draw: &Draw) -> Env {
    draw_env(oracle.arity, draw).with_native(function, oracle.arity, oracle.checked_native())
}

/// Values of the basis atoms at one draw.
pub fn eval_basis(
    oracle: &Oracle,
    basis: &TermBasis,
    draw: &Draw,
) -> std::result::Result<Vec<f64>, ExprError> {
    let env = draw_env(oracle.arity, draw);
    basis
        .terms
        .iter()
        .map(|t| match t {
            Expr::Func(_, args) => {
                let point = args
                    .iter()
                    .map(|a| eval(a, &env))
                    .collect::<std::result::Result<Vec<_>, _>>()?;
                for (i, p) in point.iter().enumerate() {
                    if let Some(d) = oracle.domain.get(i) {
                        if !d.contains(*p) {
                            return Err(ExprError::Domain(format!(
                                "query point {p} outside the domain {d}"
                            )));
                        }
                    }
                }
                oracle.call(&point)
            }
            other => eval(other, &env),
        })
        .collect()
}

/// Draw one `(x, r)` pair uniformly from the sampling region.
pub fn draw_point(rng: &mut impl rand::RngCore, region: &[Interval]) -> Draw {
    let x = region.iter().map(|iv| rng::uniform(rng, iv.lo, iv.hi)).collect();
    let r = region.iter().map(|iv| rng::uniform(rng, iv.lo, iv.hi)).collect();
    Draw { x, r }
}

/// Draw rows until `cfg.m` are accepted; a row is redrawn whenever any basis
/// term or monomial fails to evaluate to a finite number.
pub fn draw_samples(
    oracle: &Oracle,
    basis: &TermBasis,
    monomials: &[Monomial],
    cfg: &SamplingConfig,
) -> Result<SampleTable> {
    draw_samples_from(oracle, basis, monomials, cfg, "samples")
}

pub fn draw_samples_from(
    oracle: &Oracle,
    basis: &TermBasis,
    monomials: &[Monomial],
    cfg: &SamplingConfig,
    label: &str,
) -> Result<SampleTable> {
    if cfg.m == 0 {
        return Err(Error::InvalidConfig("m must be at least 1".into()));
    }
    if basis.arity() != oracle.arity {
        return Err(Error::InvalidConfig(format!(
            "queries have arity {} but `{}` has arity {}",
            basis.arity(),
            oracle.name,
            oracle.arity
        )));
    }
    let region = oracle.region(&cfg.sample_box)?;
    let mut rng = rng::stream(cfg.seed, label, 0);
    let k = monomials.len();
    let mut data = Vec::with_capacity(cfg.m * k);
    let mut draws = Vec::with_capacity(cfg.m);
    let mut failures = 0usize;
    while draws.len() < cfg.m {
        let draw = draw_point(&mut rng, &region);
        let row = eval_basis(oracle, basis, &draw).and_then(|vals| {
            monomials
                .iter()
                .map(|m| {
                    let v = m.eval(&vals);
                    if v.is_finite() {
                        Ok(v)
                    } else {
                        Err(ExprError::NonFinite)
                    }
                })
                .collect::<std::result::Result<Vec<_>, _>>()
        });
        match row {
            Ok(vals) => {
                failures = 0;
                data.extend(vals);
                draws.push(draw);
            }
            Err(e) => {
                failures += 1;
                if failures >= cfg.max_retries {
                    return Err(Error::SamplingExhausted {
                        retries: failures,
                        last: e.to_string(),
                    });
                }
            }
        }
    }
    let headers = monomials
        .iter()
        .map(|m| monomial_to_expr(m, basis).to_string())
        .collect();
    Ok(SampleTable {
        headers,
        values: DMatrix::from_row_slice(cfg.m, k, &data),
        draws,
        seed: cfg.seed,
    })
}

/// Seeded row partition: the first `floor(train_fraction * m)` rows of a
/// shuffled order train, the rest test.
pub fn split(table: &SampleTable, train_fraction: f64, seed: u64) -> Result<(SampleTable, SampleTable)> {
    let m = table.rows();
    if m < 5 {
        return Err(Error::TooFewRows { have: m, need: 5 });
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidConfig("train_fraction must lie in (0, 1)".into()));
    }
    let n_train = (train_fraction * m as f64).floor() as usize;
    if n_train == 0 || n_train == m {
        return Err(Error::TooFewRows { have: m, need: 5 });
    }
    let mut order: Vec<usize> = (0..m).collect();
    rng::shuffle(&mut rng::stream(seed, "split", 0), &mut order);
    let (train, test) = order.split_at(n_train);
    let mut train = train.to_vec();
    let mut test = test.to_vec();
    train.sort_unstable();
    test.sort_unstable();
    Ok((table.select_rows(&train), table.select_rows(&test)))
}
