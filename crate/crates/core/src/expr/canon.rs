use std::cmp::{Ordering, Reverse};
use std::collections::BTreeMap;

use super::{Expr, ExprError, Rational};

/// Bring `e` into canonical form.
///
/// Sums and products are flattened, like terms and like factors are
/// collected, constants are folded, quotients become negative powers and
/// integer powers distribute over products. Sum terms are ordered by
/// descending degree and then by the structural order on [`Expr`]; product
/// factors carry their rational coefficient first. A numeric coefficient of a
/// single sum is distributed into it; otherwise products are never expanded.
pub fn canonicalize(e: &Expr) -> Result<Expr, ExprError> {
    match e {
        Expr::Const(_) | Expr::Var(_) => Ok(e.clone()),
        Expr::Func(name, args) => Ok(Expr::Func(
            name.clone(),
            args.iter().map(canonicalize).collect::<Result<_, _>>()?,
        )),
        Expr::Builtin(b, args) => Ok(Expr::Builtin(
            *b,
            args.iter().map(canonicalize).collect::<Result<_, _>>()?,
        )),
        Expr::Sum(children) => {
            let cs = children
                .iter()
                .map(canonicalize)
                .collect::<Result<Vec<_>, _>>()?;
            build_sum(cs)
        }
        Expr::Product(_) => {
            let mut leaves = Vec::new();
            raw_factors(e, &mut leaves);
            let cs = leaves
                .into_iter()
                .map(canonicalize)
                .collect::<Result<Vec<_>, _>>()?;
            build_product(cs)
        }
        Expr::Power(base, k) => build_power(canonicalize(base)?, *k),
        Expr::Quotient(n, d) => {
            let num = canonicalize(n)?;
            let den = build_power(canonicalize(d)?, -1)?;
            build_product(vec![num, den])
        }
    }
}

fn raw_factors<'a>(e: &'a Expr, out: &mut Vec<&'a Expr>) {
    match e {
        Expr::Product(fs) => fs.iter().for_each(|f| raw_factors(f, out)),
        other => out.push(other),
    }
}

/// Split a canonical term into its rational coefficient and the remaining
/// monomial. Pure constants return `Const(1)` as the monomial.
pub fn split_coefficient(term: &Expr) -> (Rational, Expr) {
    match term {
        Expr::Const(q) => (*q, Expr::one()),
        Expr::Product(fs) => match fs.first() {
            Some(Expr::Const(q)) => {
                let rest: Vec<Expr> = fs[1..].to_vec();
                let mono = if rest.len() == 1 {
                    rest.into_iter().next().unwrap()
                } else {
                    Expr::Product(rest)
                };
                (*q, mono)
            }
            _ => (Rational::ONE, term.clone()),
        },
        _ => (Rational::ONE, term.clone()),
    }
}

/// Total degree of a term in its atoms; negative powers count negatively.
pub fn term_degree(e: &Expr) -> i64 {
    match e {
        Expr::Const(_) => 0,
        Expr::Var(_) | Expr::Func(..) | Expr::Builtin(..) => 1,
        Expr::Power(b, k) => k.saturating_mul(term_degree(b)),
        Expr::Product(fs) => fs.iter().map(term_degree).sum(),
        Expr::Sum(ts) => ts.iter().map(term_degree).max().unwrap_or(0),
        Expr::Quotient(n, d) => term_degree(n) - term_degree(d),
    }
}

fn join_term(coeff: Rational, mono: Expr) -> Expr {
    if mono.is_one() {
        return Expr::Const(coeff);
    }
    if coeff.is_one() {
        return mono;
    }
    match mono {
        Expr::Product(fs) => {
            let mut v = Vec::with_capacity(fs.len() + 1);
            v.push(Expr::Const(coeff));
            v.extend(fs);
            Expr::Product(v)
        }
        other => Expr::Product(vec![Expr::Const(coeff), other]),
    }
}

fn sum_order(a: &(Expr, Rational), b: &(Expr, Rational)) -> Ordering {
    (Reverse(term_degree(&a.0)), &a.0, a.1).cmp(&(Reverse(term_degree(&b.0)), &b.0, b.1))
}

fn build_sum(children: Vec<Expr>) -> Result<Expr, ExprError> {
    let mut collected: BTreeMap<Expr, Rational> = BTreeMap::new();
    let mut stack = children;
    while let Some(c) = stack.pop() {
        match c {
            Expr::Sum(inner) => stack.extend(inner),
            term => {
                let (q, mono) = split_coefficient(&term);
                let slot = collected.entry(mono).or_insert(Rational::ZERO);
                *slot = slot.add(&q)?;
            }
        }
    }
    let mut terms: Vec<(Expr, Rational)> =
        collected.into_iter().filter(|(_, q)| !q.is_zero()).collect();
    terms.sort_by(sum_order);
    let mut out: Vec<Expr> = terms.into_iter().map(|(m, q)| join_term(q, m)).collect();
    Ok(match out.len() {
        0 => Expr::zero(),
        1 => out.pop().unwrap(),
        _ => Expr::Sum(out),
    })
}

fn build_product(children: Vec<Expr>) -> Result<Expr, ExprError> {
    let mut coeff = Rational::ONE;
    let mut bases: BTreeMap<Expr, i64> = BTreeMap::new();
    let mut stack = children;
    while let Some(c) = stack.pop() {
        match c {
            Expr::Product(inner) => stack.extend(inner),
            Expr::Const(q) => coeff = coeff.mul(&q)?,
            Expr::Power(b, k) => {
                let slot = bases.entry(*b).or_insert(0);
                *slot = slot.checked_add(k).ok_or(ExprError::Overflow)?;
            }
            other => {
                let slot = bases.entry(other).or_insert(0);
                *slot = slot.checked_add(1).ok_or(ExprError::Overflow)?;
            }
        }
    }
    if coeff.is_zero() {
        return Ok(Expr::zero());
    }
    let mut factors: Vec<Expr> = Vec::new();
    for (base, k) in bases {
        match k {
            0 => {}
            1 => factors.push(base),
            _ => factors.push(Expr::Power(Box::new(base), k)),
        }
    }
    if factors.is_empty() {
        return Ok(Expr::Const(coeff));
    }
    if factors.len() == 1 {
        if coeff.is_one() {
            return Ok(factors.pop().unwrap());
        }
        // a lone sum absorbs its numeric coefficient
        if let Expr::Sum(terms) = &factors[0] {
            let scaled = terms
                .iter()
                .map(|t| {
                    let (q, mono) = split_coefficient(t);
                    Ok(join_term(q.mul(&coeff)?, mono))
                })
                .collect::<Result<Vec<_>, ExprError>>()?;
            return build_sum(scaled);
        }
    }
    let mut out = Vec::with_capacity(factors.len() + 1);
    if !coeff.is_one() {
        out.push(Expr::Const(coeff));
    }
    out.extend(factors);
    Ok(Expr::Product(out))
}

fn build_power(base: Expr, k: i64) -> Result<Expr, ExprError> {
    if k == 0 {
        return Ok(Expr::one());
    }
    if k == 1 {
        return Ok(base);
    }
    match base {
        Expr::Const(q) => {
            if q.is_zero() && k < 0 {
                return Err(ExprError::DivisionByZero);
            }
            Ok(Expr::Const(q.pow(k)?))
        }
        Expr::Power(inner, j) => {
            let e = j.checked_mul(k).ok_or(ExprError::Overflow)?;
            build_power(*inner, e)
        }
        Expr::Product(fs) => {
            let powered = fs
                .into_iter()
                .map(|f| build_power(f, k))
                .collect::<Result<Vec<_>, _>>()?;
            build_product(powered)
        }
        other => Ok(Expr::Power(Box::new(other), k)),
    }
}
