//! Query functions and the monomial basis built from them.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expr::{canonicalize, parse, Expr, Symbol};

pub const DEFAULT_MONOMIAL_CAP: usize = 20_000;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QueryKind {
    Additive,
    Multiplicative,
    Extended,
}

/// A query `q(x, r)`: one coordinate expression per argument of `f`.
#[derive(Clone, Debug, PartialEq)]
pub struct QueryFunction {
    pub name: String,
    pub point: Vec<Expr>,
    pub kind: QueryKind,
}

impl QueryFunction {
    pub fn new(point: Vec<Expr>, kind: QueryKind) -> Result<Self> {
        let point = point
            .iter()
            .map(canonicalize)
            .collect::<std::result::Result<Vec<_>, _>>()?;
        let name = if point.len() == 1 {
            point[0].to_string()
        } else {
            let parts: Vec<String> = point.iter().map(|e| e.to_string()).collect();
            format!("({})", parts.join(", "))
        };
        Ok(QueryFunction { name, point, kind })
    }

    pub fn arity(&self) -> usize {
        self.point.len()
    }

    /// The basis atom `f(q(x, r))`.
    pub fn atom(&self, f: &str) -> Expr {
        Expr::func(f, self.point.clone())
    }
}

impl fmt::Display for QueryFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// Input variable names: `x` for unary functions, then `x, y, z, w`, then
/// `x1, x2, ...` beyond four arguments.
pub fn input_vars(arity: usize) -> Vec<Symbol> {
    const NAMES: [&str; 4] = ["x", "y", "z", "w"];
    if arity <= NAMES.len() {
        NAMES[..arity].iter().map(|s| Symbol::from(*s)).collect()
    } else {
        (1..=arity).map(|i| Symbol::from(format!("x{i}"))).collect()
    }
}

/// Randomness variable names: `r` for unary functions, else `r1, r2, ...`.
pub fn random_vars(arity: usize) -> Vec<Symbol> {
    if arity == 1 {
        vec![Symbol::from("r")]
    } else {
        (1..=arity).map(|i| Symbol::from(format!("r{i}"))).collect()
    }
}

/// The five classic queries `x+r, x-r, x*r, x, r`, applied coordinatewise
/// for functions of several arguments.
pub fn default_query_class(arity: usize) -> Vec<QueryFunction> {
    let xs = input_vars(arity.max(1));
    let rs = random_vars(arity.max(1));
    let coords = |g: &dyn Fn(Expr, Expr) -> Expr| -> Vec<Expr> {
        xs.iter()
            .zip(&rs)
            .map(|(x, r)| g(Expr::Var(x.clone()), Expr::Var(r.clone())))
            .collect()
    };
    let spec: [(&dyn Fn(Expr, Expr) -> Expr, QueryKind); 5] = [
        (&|x, r| x + r, QueryKind::Additive),
        (&|x, r| x - r, QueryKind::Additive),
        (&|x, r| x * r, QueryKind::Multiplicative),
        (&|x, _| x, QueryKind::Additive),
        (&|_, r| r, QueryKind::Additive),
    ];
    spec.iter()
        .map(|(g, kind)| QueryFunction::new(coords(*g), *kind).expect("default queries are canonical"))
        .collect()
}

/// Query arguments beyond the classic set, for unary functions over `x` and `r`
/// (`r` also plays the role of a symbolic constant `k`).
pub fn extended_query_library() -> Vec<QueryFunction> {
    [
        "x^2",
        "x^3",
        "x^4",
        "sqrt(x*r)",
        "x/(1 + x)",
        "x*r/(x + r)",
        "x + r - x*r",
        "x + log(r)",
        "sqrt(x^2 + r^2)",
        "1 - 1/x",
    ]
    .iter()
    .map(|s| {
        QueryFunction::new(vec![parse(s).expect("library entries parse")], QueryKind::Extended)
            .expect("library entries canonicalize")
    })
    .collect()
}

fn classify(point: &[Expr]) -> QueryKind {
    let defaults = default_query_class(point.len());
    defaults
        .iter()
        .find(|q| q.point == point)
        .map(|q| q.kind)
        .unwrap_or(QueryKind::Extended)
}

/// Split on commas that are not nested inside parentheses.
fn split_top_level(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' => depth += 1,
            ')' => depth -= 1,
            ',' if depth == 0 => {
                out.push(std::mem::take(&mut cur));
                continue;
            }
            _ => {}
        }
        cur.push(c);
    }
    out.push(cur);
    out.into_iter()
        .map(|s| s.trim().to_string())
        .filter(|s| !s.is_empty())
        .collect()
}

/// Parse a comma-separated query list such as `x+r,x-r,r`. Functions of
/// several arguments take parenthesized tuples: `(x+r1, y+r2),(x, y)`.
pub fn parse_queries(text: &str, arity: usize) -> Result<Vec<QueryFunction>> {
    let mut out: Vec<QueryFunction> = Vec::new();
    for item in split_top_level(text) {
        let point: Vec<Expr> = if arity == 1 {
            vec![parse(&item).map_err(|e| Error::InvalidQuery(format!("{item}: {e}")))?]
        } else {
            let inner = item
                .strip_prefix('(')
                .and_then(|s| s.strip_suffix(')'))
                .ok_or_else(|| Error::InvalidQuery(format!("{item}: expected a tuple")))?;
            split_top_level(inner)
                .iter()
                .map(|c| parse(c).map_err(|e| Error::InvalidQuery(format!("{item}: {e}"))))
                .collect::<Result<_>>()?
        };
        if point.len() != arity {
            return Err(Error::InvalidQuery(format!(
                "{item}: expected {arity} coordinate(s), got {}",
                point.len()
            )));
        }
        let allowed: Vec<Symbol> = input_vars(arity).into_iter().chain(random_vars(arity)).collect();
        for e in &point {
            if let Some(v) = e.free_vars().into_iter().find(|v| !allowed.contains(v)) {
                return Err(Error::InvalidQuery(format!("{item}: unknown variable `{v}`")));
            }
            if !e.func_symbols().is_empty() {
                return Err(Error::InvalidQuery(format!(
                    "{item}: function symbols are not allowed inside queries"
                )));
            }
        }
        let kind = classify(&point);
        let q = QueryFunction::new(point, kind)?;
        if !out.iter().any(|o| o.point == q.point) {
            out.push(q);
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidQuery("empty query list".into()));
    }
    Ok(out)
}

/// Ordered list of basis atoms: `f(q(x, r))` per query, then raw variables
/// when requested. `origin[i]` is the index of the query behind term `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct TermBasis {
    pub function: String,
    pub terms: Vec<Expr>,
    pub origin: Vec<Option<usize>>,
    pub queries: Vec<QueryFunction>,
}

impl TermBasis {
    pub fn new(function: &str, queries: &[QueryFunction], raw_vars: bool) -> Result<Self> {
        let arity = queries.first().map(|q| q.arity()).unwrap_or(1);
        let mut terms: Vec<Expr> = Vec::new();
        let mut origin = Vec::new();
        for (i, q) in queries.iter().enumerate() {
            if q.arity() != arity {
                return Err(Error::InvalidQuery(format!("{q}: mixed arities")));
            }
            let atom = canonicalize(&q.atom(function))?;
            if !terms.contains(&atom) {
                terms.push(atom);
                origin.push(Some(i));
            }
        }
        if raw_vars {
            for v in input_vars(arity).into_iter().chain(random_vars(arity)) {
                let atom = Expr::Var(v);
                if !terms.contains(&atom) {
                    terms.push(atom);
                    origin.push(None);
                }
            }
        }
        if terms.is_empty() {
            return Err(Error::InvalidQuery("empty basis".into()));
        }
        Ok(TermBasis {
            function: function.to_string(),
            terms,
            origin,
            queries: queries.to_vec(),
        })
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.queries.first().map(|q| q.arity()).unwrap_or(1)
    }
}

/// Exponent vector over a basis.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Monomial {
    pub exponents: Vec<u32>,
}

impl Monomial {
    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    pub fn is_constant(&self) -> bool {
        self.degree() == 0
    }

    /// Indices of basis terms with a positive exponent.
    pub fn support(&self) -> Vec<usize> {
        self.exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn eval(&self, values: &[f64]) -> f64 {
        self.exponents
            .iter()
            .zip(values)
            .filter(|(&e, _)| e > 0)
            .map(|(&e, &v)| v.powi(e as i32))
            .product()
    }
}

pub fn binomial(n: u64, k: u64) -> u128 {
    let k = k.min(n.saturating_sub(k));
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.saturating_mul((n - i) as u128) / (i as u128 + 1);
    }
    acc
}

/// All monomials of degree `1..=d` over `n` basis terms, grouped by degree
/// in combinations-with-replacement order, followed by the constant.
pub fn gen_monomials(n: usize, d: u32, cap: usize) -> Result<Vec<Monomial>> {
    if n == 0 || d == 0 {
        return Err(Error::InvalidConfig(
            "monomial generation needs a nonempty basis and degree >= 1".into(),
        ));
    }
    let count = binomial(n as u64 + d as u64, d as u64);
    if count > cap as u128 {
        return Err(Error::CombinatorialBlowup { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    for deg in 1..=d {
        let mut idx = vec![0usize; deg as usize];
        loop {
            let mut exps = vec![0u32; n];
            for &i in &idx {
                exps[i] += 1;
            }
            out.push(Monomial { exponents: exps });
            // next non-decreasing index tuple
            let mut pos = deg as usize;
            while pos > 0 && idx[pos - 1] == n - 1 {
                pos -= 1;
            }
            if pos == 0 {
                break;
            }
            idx[pos - 1] += 1;
            let v = idx[pos - 1];
            for slot in idx.iter_mut().skip(pos) {
                *slot = v;
            }
        }
    }
    out.push(Monomial {
        exponents: vec![0; n],
    });
    Ok(out)
}

pub fn monomial_to_expr(m: &Monomial, basis: &TermBasis) -> Expr {
    let factors: Vec<Expr> = m
        .exponents
        .iter()
        .zip(&basis.terms)
        .filter(|(&e, _)| e > 0)
        .map(|(&e, t)| t.clone().pow(e as i64))
        .collect();
    if factors.is_empty() {
        return Expr::one();
    }
    canonicalize(&Expr::Product(factors)).expect("monomials over atoms canonicalize")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names(qs: &[QueryFunction]) -> Vec<String> {
        qs.iter().map(|q| q.name.clone()).collect()
    }

    #[test]
    fn unary_default_class() {
        let qs = default_query_class(1);
        assert_eq!(qs.len(), 5);
        assert_eq!(
            qs.iter().map(|q| q.point[0].clone()).collect::<Vec<_>>(),
            ["x+r", "x-r", "x*r", "x", "r"].map(|s| parse(s).unwrap()).to_vec()
        );
        let additive: Vec<_> = qs.iter().filter(|q| q.kind == QueryKind::Additive).collect();
        assert_eq!(additive.len(), 4);
    }

    #[test]
    fn binary_default_class_components() {
        let qs = default_query_class(2);
        let mut comps: Vec<Expr> = qs.iter().flat_map(|q| q.point.clone()).collect();
        comps.sort();
        let mut want: Vec<Expr> = ["x+r1", "y+r2", "x-r1", "y-r2", "x*r1", "y*r2", "x", "y", "r1", "r2"]
            .iter()
            .map(|s| parse(s).unwrap())
            .collect();
        want.sort();
        assert_eq!(comps, want);
    }

    #[test]
    fn extended_library_contents() {
        let lib = extended_query_library();
        let pts: Vec<Expr> = lib.iter().map(|q| q.point[0].clone()).collect();
        for s in ["x^2", "sqrt(x*r)", "x*r/(x+r)"] {
            assert!(pts.contains(&parse(s).unwrap()), "{s}");
        }
        assert!(lib.len() >= 10);
    }

    #[test]
    fn worked_monomial_example() {
        let ms = gen_monomials(2, 2, DEFAULT_MONOMIAL_CAP).unwrap();
        let exps: Vec<Vec<u32>> = ms.iter().map(|m| m.exponents.clone()).collect();
        assert_eq!(
            exps,
            vec![vec![1, 0], vec![0, 1], vec![2, 0], vec![1, 1], vec![0, 2], vec![0, 0]]
        );
    }

    #[test]
    fn monomial_counts() {
        assert_eq!(gen_monomials(2, 1, 100).unwrap().len(), 3);
        assert_eq!(gen_monomials(4, 3, 100).unwrap().len(), 35);
        assert!(matches!(
            gen_monomials(30, 4, DEFAULT_MONOMIAL_CAP),
            Err(Error::CombinatorialBlowup { .. })
        ));
    }

    #[test]
    fn monomial_expressions() {
        let qs = parse_queries("x+r, x, r", 1).unwrap();
        let basis = TermBasis::new("f", &qs, false).unwrap();
        let m = Monomial { exponents: vec![1, 1, 1] };
        assert_eq!(monomial_to_expr(&m, &basis), parse("f(x)*f(x+r)*f(r)").unwrap());
        let c = Monomial { exponents: vec![0, 0, 0] };
        assert_eq!(monomial_to_expr(&c, &basis), Expr::one());
        let m = Monomial { exponents: vec![0, 1, 1] };
        assert_eq!(monomial_to_expr(&m, &basis), parse("f(x)*f(r)").unwrap());
    }

    #[test]
    fn parses_query_lists() {
        let qs = parse_queries("x+r,x-r,r", 1).unwrap();
        assert_eq!(names(&qs), vec!["r + x", "x - r", "r"]);
        assert_eq!(qs[0].kind, QueryKind::Additive);
        let qs = parse_queries("(x+r1, y+r2), (x, y)", 2).unwrap();
        assert_eq!(qs.len(), 2);
        assert!(parse_queries("x+q", 1).is_err());
        assert!(parse_queries("(x, y)", 1).is_err());
        assert_eq!(parse_queries("x^2", 1).unwrap()[0].kind, QueryKind::Extended);
    }

    #[test]
    fn raw_variables_extend_the_basis() {
        let basis = TermBasis::new("f", &default_query_class(1), true).unwrap();
        assert_eq!(basis.len(), 7);
        assert_eq!(basis.origin[5], None);
    }
}
