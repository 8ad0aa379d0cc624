//! End-to-end property discovery: one sparse model per basis term.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{canonicalize, simplify_rational, split_coefficient, Expr, Rational};
use crate::query::{
    default_query_class, gen_monomials, input_vars, monomial_to_expr, parse_queries, Monomial, QueryFunction, TermBasis,
    DEFAULT_MONOMIAL_CAP,
};
use crate::regression::{self, integer, RegressionConfig, RegularizerSpec, SnappedModel, SparsifyOptions};
use crate::sampling::{draw_samples, split, Interval, Oracle, SamplingConfig};

pub const FUNCTION_SYMBOL: &str = "f";

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Candidate,
    VerifiedNumeric,
    VerifiedSymbolic,
    Unverified,
}

impl Status {
    pub fn is_verified(self) -> bool {
        matches!(self, Status::VerifiedNumeric | Status::VerifiedSymbolic)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Regression,
    Integer,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct InferConfig {
    /// Query list in the expression grammar; empty selects the default class.
    pub queries: Vec<String>,
    pub max_degree: u32,
    /// Sample count; `None` means `max(100, 3·|MON|)`.
    pub m: Option<usize>,
    pub epsilon: f64,
    pub max_denominator: u64,
    pub method: Method,
    pub var_bound: i64,
    pub max_active_terms: usize,
    pub seed: u64,
    #[serde(rename = "box")]
    pub sample_box: Interval,
    pub train_fraction: f64,
    pub max_retries: usize,
    pub monomial_cap: usize,
    /// Add raw input and randomness variables to the basis; `None` means
    /// only for functions of several arguments.
    pub raw_vars: Option<bool>,
    pub folds: usize,
    pub drop_threshold: f64,
    pub minimal_tolerance: f64,
    pub ridge_grid: Vec<f64>,
    pub lasso_grid: Vec<f64>,
}

impl Default for InferConfig {
    fn default() -> Self {
        InferConfig {
            queries: Vec::new(),
            max_degree: 2,
            m: None,
            epsilon: 1e-3,
            max_denominator: 100,
            method: Method::Regression,
            var_bound: 3,
            max_active_terms: 6,
            seed: 0,
            sample_box: Interval::symmetric(10.0),
            train_fraction: 0.8,
            max_retries: 100,
            monomial_cap: DEFAULT_MONOMIAL_CAP,
            raw_vars: None,
            folds: 5,
            drop_threshold: 1e-3,
            minimal_tolerance: 1e-9,
            ridge_grid: vec![1e-8, 1e-4, 1e-2],
            lasso_grid: vec![1e-6, 1e-4, 1e-2],
        }
    }
}

impl InferConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidConfig("epsilon must be positive".into()));
        }
        if self.max_degree < 1 {
            return Err(Error::InvalidConfig("max_degree must be at least 1".into()));
        }
        if !(self.sample_box.lo < self.sample_box.hi) {
            return Err(Error::InvalidConfig(format!("empty box {}", self.sample_box)));
        }
        if self.max_denominator < 1 {
            return Err(Error::InvalidConfig("max_denominator must be at least 1".into()));
        }
        if let Some(0) = self.m {
            return Err(Error::InvalidConfig("m must be at least 1".into()));
        }
        Ok(())
    }

    pub fn regression(&self) -> RegressionConfig {
        let mut specs: Vec<RegularizerSpec> = self.ridge_grid.iter().map(|&l| RegularizerSpec::ridge(l)).collect();
        specs.extend(self.lasso_grid.iter().map(|&l| RegularizerSpec::lasso(l)));
        specs.push(RegularizerSpec::NONE);
        RegressionConfig {
            specs,
            folds: self.folds,
            sparsify: SparsifyOptions {
                drop_threshold: self.drop_threshold,
                epsilon: self.epsilon,
                minimal_tolerance: self.minimal_tolerance,
            },
            max_denominator: self.max_denominator,
            seed: self.seed,
        }
    }

    pub fn query_list(&self, arity: usize) -> Result<Vec<QueryFunction>> {
        if self.queries.is_empty() {
            Ok(default_query_class(arity))
        } else {
            parse_queries(&self.queries.join(","), arity)
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Recovery {
    /// Right-hand side of `f(x) = …`.
    pub expr: Expr,
    /// Must not vanish for the recovery to apply.
    pub denominator: Expr,
}

/// An implicit identity `Σ c_V·V = 0` over basis atoms.
#[derive(Clone, Debug, PartialEq)]
pub struct Property {
    pub id: usize,
    /// Basis term used as regressand.
    pub target: Expr,
    pub identity: Expr,
    pub coefficients: Vec<(Expr, Rational)>,
    pub queries_used: Vec<QueryFunction>,
    pub recovery: Option<Recovery>,
    pub train_mse: f64,
    pub test_residual: f64,
    pub status: Status,
    pub sample_complexity: usize,
    /// The identity pins `f` to a constant.
    pub degenerate: bool,
    /// Ids of structurally equal properties merged into this one.
    pub members: Vec<usize>,
}

impl Property {
    /// Build from an identity, normalizing scale and sign.
    pub fn from_identity(id: usize, target: Expr, identity: &Expr, basis: Option<&TermBasis>) -> Result<Self> {
        let identity = normalize_identity(identity)?;
        let coefficients = terms_of(&identity);
        let queries_used = basis.map(|b| queries_in(&identity, b)).unwrap_or_default();
        let degenerate = is_degenerate(&coefficients);
        let mut p = Property {
            id,
            target,
            identity,
            coefficients,
            queries_used,
            recovery: None,
            train_mse: 0.0,
            test_residual: 0.0,
            status: Status::Candidate,
            sample_complexity: 0,
            degenerate,
            members: vec![id],
        };
        p.recovery = solve_recovery(&p, function_arity(&p.identity)).ok();
        Ok(p)
    }

    pub fn arity(&self) -> usize {
        function_arity(&self.identity)
    }
}

/// Argument count of the first `f` application, 1 if there is none.
pub fn function_arity(e: &Expr) -> usize {
    let mut n = None;
    e.walk(&mut |x| {
        if let Expr::Func(name, args) = x {
            if name.as_ref() == FUNCTION_SYMBOL {
                n.get_or_insert(args.len());
            }
        }
    });
    n.unwrap_or(1)
}

/// Canonical terms of an identity as `(monomial, coefficient)` pairs.
pub fn terms_of(identity: &Expr) -> Vec<(Expr, Rational)> {
    match identity {
        Expr::Sum(ts) => ts
            .iter()
            .map(|t| {
                let (q, m) = split_coefficient(t);
                (m, q)
            })
            .collect(),
        Expr::Const(q) if q.is_zero() => Vec::new(),
        other => {
            let (q, m) = split_coefficient(other);
            vec![(m, q)]
        }
    }
}

fn gcd(a: i128, b: i128) -> i128 {
    let (mut a, mut b) = (a.abs(), b.abs());
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Scale to coprime integer coefficients with the first canonical term
/// positive.
pub fn normalize_identity(e: &Expr) -> Result<Expr> {
    let c = canonicalize(e)?;
    let terms = terms_of(&c);
    if terms.is_empty() {
        return Ok(c);
    }
    let mut lcm: i128 = 1;
    for (_, q) in &terms {
        let d = q.denom();
        lcm = lcm
            .checked_mul(d / gcd(lcm, d))
            .ok_or(Error::Expr(crate::expr::ExprError::Overflow))?;
    }
    let mut g: i128 = 0;
    for (_, q) in &terms {
        g = gcd(g, q.numer() * (lcm / q.denom()));
    }
    let mut scale = Rational::new(lcm, g.max(1))?;
    if terms[0].1.is_negative() {
        scale = scale.neg()?;
    }
    let scaled: Vec<Expr> = terms
        .iter()
        .map(|(m, q)| Ok(Expr::Product(vec![Expr::Const(q.mul(&scale)?), m.clone()])))
        .collect::<Result<_>>()?;
    Ok(canonicalize(&Expr::Sum(scaled))?)
}

fn is_degenerate(terms: &[(Expr, Rational)]) -> bool {
    let with_f: Vec<_> = terms.iter().filter(|(m, _)| m.contains_func(FUNCTION_SYMBOL)).collect();
    with_f.len() == 1
        && matches!(with_f[0].0, Expr::Func(..))
        && terms.iter().all(|(m, _)| m.contains_func(FUNCTION_SYMBOL) || m.is_one())
}

fn queries_in(identity: &Expr, basis: &TermBasis) -> Vec<QueryFunction> {
    let mut used = Vec::new();
    for (term, origin) in basis.terms.iter().zip(&basis.origin) {
        if let Some(qi) = origin {
            let mut hit = false;
            identity.walk(&mut |e| hit |= e == term);
            if hit {
                used.push(basis.queries[*qi].clone());
            }
        }
    }
    used
}

/// `f(x)` for the given arity.
pub fn input_atom(arity: usize) -> Expr {
    Expr::func(FUNCTION_SYMBOL, input_vars(arity).into_iter().map(Expr::Var).collect())
}

/// Exponent of `atom` in a canonical monomial.
fn atom_power(mono: &Expr, atom: &Expr) -> i64 {
    match mono {
        e if e == atom => 1,
        Expr::Power(b, k) if b.as_ref() == atom => *k,
        Expr::Product(fs) => fs.iter().map(|f| atom_power(f, atom)).sum(),
        _ => 0,
    }
}

fn strip_atom(mono: &Expr, atom: &Expr) -> Expr {
    match mono {
        e if e == atom => Expr::one(),
        Expr::Product(fs) => {
            let rest: Vec<Expr> = fs.iter().filter(|f| *f != atom).cloned().collect();
            Expr::Product(rest)
        }
        other => other.clone(),
    }
}

/// Solve the identity for `f(x)` when it enters every term linearly.
pub fn solve_recovery(p: &Property, arity: usize) -> Result<Recovery> {
    let atom = input_atom(arity);
    let mut cofactor = Vec::new();
    let mut rest = Vec::new();
    for (m, q) in &p.coefficients {
        match atom_power(m, &atom) {
            0 => rest.push(Expr::Product(vec![Expr::Const(*q), m.clone()])),
            1 => cofactor.push(Expr::Product(vec![Expr::Const(*q), strip_atom(m, &atom)])),
            k => {
                return Err(Error::NotSolvable(format!("{atom} appears with degree {k}")));
            }
        }
    }
    if cofactor.is_empty() {
        return Err(Error::NotSolvable(format!("{atom} does not appear")));
    }
    let den = simplify_rational(&Expr::Sum(cofactor))?;
    if den.is_zero() {
        return Err(Error::NotSolvable("cofactor vanishes".into()));
    }
    let num = Expr::Sum(rest);
    let expr = simplify_rational(&Expr::Quotient(Box::new(-num), Box::new(den.clone())))?;
    Ok(Recovery { expr, denominator: den })
}

/// Merge structurally equal identities; the representative keeps the lowest
/// id and lists all members.
pub fn dedupe(props: Vec<Property>) -> Vec<Property> {
    let mut out: Vec<Property> = Vec::new();
    for p in props {
        if let Some(rep) = out.iter_mut().find(|r| r.identity == p.identity) {
            rep.members.extend(p.members);
            rep.members.sort_unstable();
            rep.members.dedup();
        } else {
            out.push(p);
        }
    }
    out.sort_by_key(|p| p.id);
    out
}

/// `(rsr, verified, unverified)`.
pub fn count_report(props: &[Property]) -> (usize, usize, usize) {
    let verified = props.iter().filter(|p| p.status.is_verified()).count();
    let unverified = props.iter().filter(|p| p.status == Status::Unverified).count();
    let rsr = props
        .iter()
        .filter(|p| p.status.is_verified() && p.recovery.is_some())
        .count();
    (rsr, verified, unverified)
}

/// Per-row normalized residual `Σ c·V / max(1, max |V|)`.
pub fn normalized_residual(coefs: &[f64], values: &[f64]) -> f64 {
    let mut s = 0.0;
    let mut scale: f64 = 1.0;
    for (c, v) in coefs.iter().zip(values) {
        s += c * v;
        scale = scale.max(v.abs());
    }
    s / scale
}

#[derive(Clone, Debug, Default)]
pub struct InferOutput {
    pub properties: Vec<Property>,
    pub mean_errors: BTreeMap<usize, f64>,
    pub sample_complexities: BTreeMap<usize, usize>,
    pub error: Option<String>,
    /// Number of samples drawn.
    pub m: usize,
    pub monomials: usize,
}

struct Prepared {
    basis: TermBasis,
    monomials: Vec<Monomial>,
    monomial_exprs: Vec<Expr>,
    train: DMatrix<f64>,
    test: DMatrix<f64>,
    m: usize,
}

fn prepare(oracle: &Oracle, cfg: &InferConfig) -> Result<Prepared> {
    cfg.validate()?;
    let queries = cfg.query_list(oracle.arity)?;
    if queries[0].arity() != oracle.arity {
        return Err(Error::InvalidQuery(format!(
            "queries have arity {} but `{}` takes {}",
            queries[0].arity(),
            oracle.name,
            oracle.arity
        )));
    }
    let raw = cfg.raw_vars.unwrap_or(oracle.arity > 1);
    let basis = TermBasis::new(FUNCTION_SYMBOL, &queries, raw)?;
    let monomials = gen_monomials(basis.len(), cfg.max_degree, cfg.monomial_cap)?;
    let m = cfg.m.unwrap_or_else(|| (3 * monomials.len()).max(100));
    let sampling = SamplingConfig {
        m,
        sample_box: cfg.sample_box,
        seed: cfg.seed,
        max_retries: cfg.max_retries,
        train_fraction: cfg.train_fraction,
    };
    let table = draw_samples(oracle, &basis, &monomials, &sampling)?;
    let (train, test) = split(&table, cfg.train_fraction, cfg.seed)?;
    let monomial_exprs = monomials.iter().map(|mo| monomial_to_expr(mo, &basis)).collect();
    Ok(Prepared {
        basis,
        monomials,
        monomial_exprs,
        train: train.values,
        test: test.values,
        m,
    })
}

/// Rows scaled by `1 / max(1, max |V|)`.
fn row_normalize(x: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = x.clone();
    for mut row in out.row_iter_mut() {
        let s = row.iter().fold(1.0f64, |a, v| a.max(v.abs()));
        row /= s;
    }
    out
}

struct Candidate {
    target: usize,
    /// Target column; coefficients over all monomials, identity form (target has +1).
    coefs: Vec<(usize, Rational)>,
    train_mse: f64,
    model: Option<SnappedModel>,
    x: DMatrix<f64>,
    y: DVector<f64>,
}

/// `exact_only` fits without regularization and skips cross-validation.
fn fit_target(
    prep: &Prepared,
    weighted: &DMatrix<f64>,
    target_col: usize,
    cfg: &InferConfig,
    exact_only: bool,
) -> Result<Option<Candidate>> {
    let cols: Vec<usize> = (0..prep.monomial_exprs.len()).filter(|&j| j != target_col).collect();
    let x = weighted.select_columns(&cols);
    let y = weighted.column(target_col).into_owned();
    if !in_span(&x, &y, cfg.epsilon) {
        return Ok(None);
    }
    let (rational, train_mse, model) = match cfg.method {
        Method::Regression => {
            let mut rcfg = target_regression(cfg, target_col);
            if exact_only {
                rcfg.specs = vec![RegularizerSpec::NONE];
            }
            let model = match regression::run(&x, &y, &rcfg) {
                Ok(m) => m,
                Err(Error::NoSparseModel { .. }) => return Ok(None),
                Err(e) => return Err(e),
            };
            (model.rational.clone(), model.rational_mse, Some(model))
        }
        Method::Integer => {
            let fit = integer::fit_integer_bounded(&x, &y, cfg.var_bound, cfg.max_active_terms)?;
            if fit.mse > cfg.epsilon {
                return Ok(None);
            }
            let rational = fit
                .coefficients
                .iter()
                .enumerate()
                .filter(|(_, &c)| c != 0)
                .map(|(j, &c)| (j, Rational::from(c)))
                .collect();
            (rational, fit.mse, None)
        }
    };
    let mut coefs = vec![(target_col, Rational::ONE)];
    for (j, q) in rational {
        coefs.push((cols[j], q.neg()?));
    }
    Ok(Some(Candidate { target: target_col, coefs, train_mse, model, x, y }))
}

/// Unregularized least squares bounds every regularized fit from below, so a
/// residual above ε rules the target out.
fn in_span(x: &DMatrix<f64>, y: &DVector<f64>, epsilon: f64) -> bool {
    match regression::linalg::lstsq(x, y) {
        Ok(b) => regression::linalg::mse(x, y, &b) <= epsilon,
        Err(_) => true,
    }
}

fn divides(a: &Monomial, b: &Monomial) -> bool {
    a.exponents.iter().zip(&b.exponents).all(|(p, q)| p <= q)
}

fn target_regression(cfg: &InferConfig, t: usize) -> RegressionConfig {
    RegressionConfig { seed: crate::rng::derive_seed(cfg.seed, "target", t as u64), ..cfg.regression() }
}

fn test_residual(test: &DMatrix<f64>, coefs: &[(usize, f64)]) -> f64 {
    if test.nrows() == 0 {
        return 0.0;
    }
    let mut total = 0.0;
    let mut c = Vec::with_capacity(coefs.len());
    let mut v = Vec::with_capacity(coefs.len());
    for row in test.row_iter() {
        c.clear();
        v.clear();
        for &(j, q) in coefs {
            c.push(q);
            v.push(row[j]);
        }
        total += normalized_residual(&c, &v).abs();
    }
    total / test.nrows() as f64
}

fn admit(prep: &Prepared, cand: Candidate, cfg: &InferConfig, kept: &mut Vec<(Property, Candidate)>) -> Result<()> {
    let identity = Expr::Sum(
        cand.coefs
            .iter()
            .map(|(j, q)| Expr::Product(vec![Expr::Const(*q), prep.monomial_exprs[*j].clone()]))
            .collect(),
    );
    let target = prep.monomial_exprs[cand.target].clone();
    let mut p = Property::from_identity(kept.len(), target, &identity, Some(&prep.basis))?;
    if !p.identity.contains_func(FUNCTION_SYMBOL) || p.coefficients.is_empty() {
        return Ok(());
    }
    let scaled: Vec<(usize, f64)> = p
        .coefficients
        .iter()
        .map(|(mono, q)| {
            let j = prep
                .monomial_exprs
                .iter()
                .position(|e| e == mono)
                .expect("identity monomials come from the basis");
            (j, q.to_f64())
        })
        .collect();
    p.train_mse = cand.train_mse;
    p.test_residual = test_residual(&prep.test, &scaled);
    if p.train_mse <= cfg.epsilon && p.test_residual <= cfg.epsilon {
        kept.push((p, cand));
    }
    Ok(())
}

/// Discover implicit identities satisfied by `oracle`.
pub fn infer(oracle: &Oracle, cfg: &InferConfig) -> Result<InferOutput> {
    let prep = prepare(oracle, cfg)?;
    let weighted = row_normalize(&prep.train);
    let term_cols: Vec<usize> = prep
        .basis
        .terms
        .iter()
        .map(|t| {
            prep.monomial_exprs
                .iter()
                .position(|e| e == t)
                .ok_or_else(|| Error::InvalidConfig("basis term missing from monomials".into()))
        })
        .collect::<Result<_>>()?;
    let results: Vec<Result<Option<Candidate>>> = term_cols
        .par_iter()
        .map(|&col| fit_target(&prep, &weighted, col, cfg, false))
        .collect();
    let mut kept: Vec<(Property, Candidate)> = Vec::new();
    for r in results {
        if let Some(cand) = r? {
            admit(&prep, cand, cfg, &mut kept)?;
        }
    }
    // Higher-degree monomials in an exact relation as regressands, skipping
    // multiples of terms already tied up in an identity.
    let involved = regression::null_involvement(&weighted);
    for col in 0..prep.monomials.len() {
        let mono = &prep.monomials[col];
        if mono.degree() < 2 || !involved[col] {
            continue;
        }
        let covered = kept.iter().any(|(_, c)| {
            c.coefs
                .iter()
                .any(|(j, _)| !prep.monomials[*j].is_constant() && divides(&prep.monomials[*j], mono))
        });
        if covered {
            continue;
        }
        if let Some(cand) = fit_target(&prep, &weighted, col, cfg, true)? {
            admit(&prep, cand, cfg, &mut kept)?;
        }
    }
    let props: Vec<Property> = kept.iter().map(|(p, _)| p.clone()).collect();
    let mut properties = dedupe(props);
    let complexities: Vec<usize> = properties
        .par_iter()
        .map(|p| {
            let cand = &kept[p.id].1;
            match &cand.model {
                Some(model) => {
                    regression::stability_sample_complexity(&cand.x, &cand.y, model, &target_regression(cfg, cand.target))
                }
                None => cand.x.nrows(),
            }
        })
        .collect();
    let mut out = InferOutput { m: prep.m, monomials: prep.monomial_exprs.len(), ..Default::default() };
    for (p, sc) in properties.iter_mut().zip(complexities) {
        p.sample_complexity = sc;
        out.mean_errors.insert(p.id, p.test_residual);
        out.sample_complexities.insert(p.id, sc);
    }
    if properties.is_empty() {
        out.error = Some(format!(
            "no property with error below {} over {} monomials",
            cfg.epsilon,
            prep.monomial_exprs.len()
        ));
    }
    out.properties = properties;
    Ok(out)
}

/// Property from a user-supplied identity string.
pub fn property_from_text(id: usize, text: &str) -> Result<Property> {
    let rel = crate::expr::parse_relation(text)?;
    let e = rel.residual()?;
    let arity = function_arity(&e);
    let mut p = Property::from_identity(id, input_atom(arity), &e, None)?;
    p.recovery = solve_recovery(&p, arity).ok();
    Ok(p)
}

/// Parse `f(x) = …` style recovery text back into an expression.
pub fn parse_recovery(text: &str) -> Result<Expr> {
    let rel = crate::expr::parse_relation(text)?;
    Ok(canonicalize(&rel.rhs)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CoefficientRecord {
    pub monomial: String,
    pub rational: String,
}

/// Serialized form of a [`Property`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropertyRecord {
    pub id: usize,
    pub identity: String,
    pub recovery: Option<String>,
    pub side_condition: Option<String>,
    pub queries: Vec<String>,
    pub coefficients: Vec<CoefficientRecord>,
    pub train_mse: f64,
    pub test_residual: f64,
    pub status: Status,
    pub sample_complexity: usize,
    #[serde(default)]
    pub degenerate: bool,
    #[serde(default)]
    pub members: Vec<usize>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub verification: Vec<crate::verification::VerifyOutcome>,
}

impl Property {
    pub fn to_record(&self, verification: &[crate::verification::VerifyOutcome]) -> PropertyRecord {
        let atom = input_atom(self.arity());
        PropertyRecord {
            id: self.id,
            identity: format!("{} = 0", self.identity),
            recovery: self.recovery.as_ref().map(|r| format!("{atom} = {}", r.expr)),
            side_condition: self.recovery.as_ref().map(|r| format!("{} != 0", r.denominator)),
            queries: self.queries_used.iter().map(|q| q.name.clone()).collect(),
            coefficients: self
                .coefficients
                .iter()
                .map(|(m, q)| CoefficientRecord { monomial: m.to_string(), rational: q.to_string() })
                .collect(),
            train_mse: self.train_mse,
            test_residual: self.test_residual,
            status: self.status,
            sample_complexity: self.sample_complexity,
            degenerate: self.degenerate,
            members: self.members.clone(),
            verification: verification.to_vec(),
        }
    }

    /// Rebuild from a record; the identity text is authoritative and the
    /// query list is re-parsed.
    pub fn from_record(rec: &PropertyRecord) -> Result<Self> {
        let mut p = property_from_text(rec.id, &rec.identity)?;
        if !rec.queries.is_empty() {
            p.queries_used = parse_queries(&rec.queries.join(","), p.arity())?;
        }
        p.train_mse = rec.train_mse;
        p.test_residual = rec.test_residual;
        p.status = rec.status;
        p.sample_complexity = rec.sample_complexity;
        if !rec.members.is_empty() {
            p.members = rec.members.clone();
        }
        Ok(p)
    }
}
