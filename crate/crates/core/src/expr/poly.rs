use std::collections::BTreeMap;

use num_integer::Integer;

use super::{canonicalize, split_coefficient, Builtin, Expr, ExprError, Rational};

const MAX_TERMS: usize = 50_000;

/// Sorted `(atom index, exponent)` pairs.
type Mono = Vec<(usize, u32)>;

#[derive(Clone, Debug, PartialEq)]
struct Poly(BTreeMap<Mono, Rational>);

impl Poly {
    fn zero() -> Self {
        Poly(BTreeMap::new())
    }

    fn constant(q: Rational) -> Self {
        let mut m = BTreeMap::new();
        if !q.is_zero() {
            m.insert(Vec::new(), q);
        }
        Poly(m)
    }

    fn atom(i: usize) -> Self {
        let mut m = BTreeMap::new();
        m.insert(vec![(i, 1)], Rational::ONE);
        Poly(m)
    }

    fn is_zero(&self) -> bool {
        self.0.is_empty()
    }

    fn as_const(&self) -> Option<Rational> {
        match self.0.len() {
            0 => Some(Rational::ZERO),
            1 => self.0.get(&Vec::new()).copied(),
            _ => None,
        }
    }

    fn check_size(&self) -> Result<(), ExprError> {
        if self.0.len() > MAX_TERMS {
            Err(ExprError::Overflow)
        } else {
            Ok(())
        }
    }

    fn add(&self, o: &Poly) -> Result<Poly, ExprError> {
        let mut out = self.0.clone();
        for (m, q) in &o.0 {
            let slot = out.entry(m.clone()).or_insert(Rational::ZERO);
            *slot = slot.add(q)?;
            if slot.is_zero() {
                out.remove(m);
            }
        }
        let p = Poly(out);
        p.check_size()?;
        Ok(p)
    }

    fn scale(&self, q: &Rational) -> Result<Poly, ExprError> {
        if q.is_zero() {
            return Ok(Poly::zero());
        }
        let mut out = BTreeMap::new();
        for (m, c) in &self.0 {
            out.insert(m.clone(), c.mul(q)?);
        }
        Ok(Poly(out))
    }

    fn mul(&self, o: &Poly) -> Result<Poly, ExprError> {
        let mut out: BTreeMap<Mono, Rational> = BTreeMap::new();
        for (ma, qa) in &self.0 {
            for (mb, qb) in &o.0 {
                let m = mono_mul(ma, mb);
                let slot = out.entry(m).or_insert(Rational::ZERO);
                *slot = slot.add(&qa.mul(qb)?)?;
            }
        }
        out.retain(|_, q| !q.is_zero());
        let p = Poly(out);
        p.check_size()?;
        Ok(p)
    }

    fn pow(&self, k: u32) -> Result<Poly, ExprError> {
        let mut acc = Poly::constant(Rational::ONE);
        let mut sq = self.clone();
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc = acc.mul(&sq)?;
            }
            e >>= 1;
            if e > 0 {
                sq = sq.mul(&sq)?;
            }
        }
        Ok(acc)
    }

    /// Exponent of each atom common to every monomial.
    fn min_exponents(&self) -> BTreeMap<usize, u32> {
        let mut it = self.0.keys();
        let Some(first) = it.next() else {
            return BTreeMap::new();
        };
        let mut common: BTreeMap<usize, u32> = first.iter().copied().collect();
        for m in it {
            let here: BTreeMap<usize, u32> = m.iter().copied().collect();
            common = common
                .into_iter()
                .filter_map(|(a, e)| here.get(&a).map(|&f| (a, e.min(f))))
                .collect();
        }
        common
    }

    fn divide_mono(&self, d: &BTreeMap<usize, u32>) -> Poly {
        let out = self
            .0
            .iter()
            .map(|(m, q)| {
                let reduced: Mono = m
                    .iter()
                    .filter_map(|&(a, e)| {
                        let e2 = e - d.get(&a).copied().unwrap_or(0);
                        (e2 > 0).then_some((a, e2))
                    })
                    .collect();
                (reduced, *q)
            })
            .collect();
        Poly(out)
    }

    /// `Some(c)` when `self == c * other`.
    fn ratio_to(&self, other: &Poly) -> Option<Rational> {
        if self.0.len() != other.0.len() || other.is_zero() {
            return None;
        }
        let mut ratio = None;
        for ((ma, qa), (mb, qb)) in self.0.iter().zip(other.0.iter()) {
            if ma != mb {
                return None;
            }
            let r = qa.div(qb).ok()?;
            match ratio {
                None => ratio = Some(r),
                Some(prev) if prev == r => {}
                Some(_) => return None,
            }
        }
        ratio
    }

    fn leading_coefficient(&self) -> Option<Rational> {
        self.0.values().next_back().copied()
    }

    fn to_expr(&self, atoms: &[Expr]) -> Expr {
        let terms: Vec<Expr> = self
            .0
            .iter()
            .map(|(m, q)| {
                let mut fs = vec![Expr::Const(*q)];
                for &(a, e) in m {
                    fs.push(Expr::Power(Box::new(atoms[a].clone()), e as i64));
                }
                Expr::Product(fs)
            })
            .collect();
        Expr::Sum(terms)
    }
}

fn mono_mul(a: &Mono, b: &Mono) -> Mono {
    let mut out = Vec::with_capacity(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() || j < b.len() {
        match (a.get(i), b.get(j)) {
            (Some(&(x, e)), Some(&(y, f))) if x == y => {
                out.push((x, e + f));
                i += 1;
                j += 1;
            }
            (Some(&(x, e)), Some(&(y, _))) if x < y => {
                out.push((x, e));
                i += 1;
            }
            (Some(_), Some(&(y, f))) => {
                out.push((y, f));
                j += 1;
            }
            (Some(&(x, e)), None) => {
                out.push((x, e));
                i += 1;
            }
            (None, Some(&(y, f))) => {
                out.push((y, f));
                j += 1;
            }
            (None, None) => break,
        }
    }
    out
}

/// Quotient of two multivariate polynomials over opaque atoms.
///
/// Only monomial factors and proportional numerator/denominator pairs are
/// cancelled, so the representation is not fully reduced; the numerator is
/// the zero polynomial exactly when the expression is formally zero.
#[derive(Clone, Debug)]
pub struct RationalFunction {
    atoms: Vec<Expr>,
    num: Poly,
    den: Poly,
}

impl RationalFunction {
    pub fn from_expr(e: &Expr) -> Result<Self, ExprError> {
        let mut table = AtomTable::default();
        let (num, den) = table.convert(e)?;
        Ok(RationalFunction {
            atoms: table.atoms,
            num,
            den,
        })
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn numerator_terms(&self) -> usize {
        self.num.0.len()
    }

    pub fn to_expr(&self) -> Result<Expr, ExprError> {
        if self.num.is_zero() {
            return Ok(Expr::zero());
        }
        if let Some(q) = self.den.as_const() {
            let inv = q.recip()?;
            return canonicalize(&self.num.scale(&inv)?.to_expr(&self.atoms));
        }
        let den = canonicalize(&self.den.to_expr(&self.atoms))?;
        let first = match &den {
            Expr::Sum(ts) => ts.first().map(|t| split_coefficient(t).0),
            t => Some(split_coefficient(t).0),
        };
        let mut s = primitive_scale(self.num.0.values().chain(self.den.0.values()))?;
        if first.is_some_and(|c| c.is_negative()) {
            s = s.neg()?;
        }
        canonicalize(&Expr::Quotient(
            Box::new(self.num.scale(&s)?.to_expr(&self.atoms)),
            Box::new(self.den.scale(&s)?.to_expr(&self.atoms)),
        ))
    }
}

/// Positive factor that turns the coefficients into coprime integers.
fn primitive_scale<'a>(coefs: impl Iterator<Item = &'a Rational>) -> Result<Rational, ExprError> {
    let (mut l, mut g) = (1i128, 0i128);
    for q in coefs {
        l = l.lcm(&q.denom());
        g = g.gcd(&q.numer().abs());
    }
    Rational::new(l, g.max(1))
}

#[derive(Default)]
struct AtomTable {
    atoms: Vec<Expr>,
    index: BTreeMap<Expr, usize>,
}

type Frac = (Poly, Poly);

impl AtomTable {
    fn atom(&mut self, e: &Expr) -> Result<Poly, ExprError> {
        let key = canonicalize(e)?;
        let i = match self.index.get(&key) {
            Some(&i) => i,
            None => {
                let i = self.atoms.len();
                self.atoms.push(key.clone());
                self.index.insert(key, i);
                i
            }
        };
        Ok(Poly::atom(i))
    }

    fn convert(&mut self, e: &Expr) -> Result<Frac, ExprError> {
        let one = || Poly::constant(Rational::ONE);
        match e {
            Expr::Const(q) => Ok((Poly::constant(*q), one())),
            Expr::Var(_) | Expr::Func(..) => Ok((self.atom(e)?, one())),
            Expr::Builtin(Builtin::Pi, _) => Ok((self.atom(e)?, one())),
            Expr::Builtin(..) => Err(ExprError::NonRationalStructure(e.to_string())),
            Expr::Sum(cs) => {
                let mut acc = (Poly::zero(), one());
                for c in cs {
                    let t = self.convert(c)?;
                    acc = add_frac(&acc, &t)?;
                }
                Ok(acc)
            }
            Expr::Product(cs) => {
                let mut acc = (one(), one());
                for c in cs {
                    let t = self.convert(c)?;
                    acc = reduce(acc.0.mul(&t.0)?, acc.1.mul(&t.1)?)?;
                    if acc.0.is_zero() {
                        return Ok((Poly::zero(), one()));
                    }
                }
                Ok(acc)
            }
            Expr::Power(b, k) => {
                let (n, d) = self.convert(b)?;
                let kk = u32::try_from(k.unsigned_abs()).map_err(|_| ExprError::Overflow)?;
                if *k >= 0 {
                    reduce(n.pow(kk)?, d.pow(kk)?)
                } else {
                    if n.is_zero() {
                        return Err(ExprError::DivisionByZero);
                    }
                    reduce(d.pow(kk)?, n.pow(kk)?)
                }
            }
            Expr::Quotient(a, b) => {
                let (an, ad) = self.convert(a)?;
                let (bn, bd) = self.convert(b)?;
                if bn.is_zero() {
                    return Err(ExprError::DivisionByZero);
                }
                reduce(an.mul(&bd)?, ad.mul(&bn)?)
            }
        }
    }
}

fn add_frac(a: &Frac, b: &Frac) -> Result<Frac, ExprError> {
    if a.1 == b.1 {
        return reduce(a.0.add(&b.0)?, a.1.clone());
    }
    if let Some(c) = b.1.ratio_to(&a.1) {
        // b.den = c * a.den
        let n = a.0.scale(&c)?.add(&b.0)?;
        return reduce(n, b.1.clone());
    }
    let n = a.0.mul(&b.1)?.add(&b.0.mul(&a.1)?)?;
    reduce(n, a.1.mul(&b.1)?)
}

fn reduce(num: Poly, den: Poly) -> Result<Frac, ExprError> {
    if num.is_zero() {
        return Ok((Poly::zero(), Poly::constant(Rational::ONE)));
    }
    if let Some(c) = num.ratio_to(&den) {
        return Ok((Poly::constant(c), Poly::constant(Rational::ONE)));
    }
    let mut common = num.min_exponents();
    let dmin = den.min_exponents();
    common = common
        .into_iter()
        .filter_map(|(a, e)| dmin.get(&a).map(|&f| (a, e.min(f))))
        .collect();
    let (num, den) = if common.is_empty() {
        (num, den)
    } else {
        (num.divide_mono(&common), den.divide_mono(&common))
    };
    let lc = den.leading_coefficient().unwrap_or(Rational::ONE);
    if lc.is_one() {
        return Ok((num, den));
    }
    let inv = lc.recip()?;
    Ok((num.scale(&inv)?, den.scale(&inv)?))
}

/// Multiply out `e` as a quotient of polynomials over its atoms (variables,
/// function applications and `pi`). Returns `Const(0)` exactly when the
/// expression is formally zero.
pub fn simplify_rational(e: &Expr) -> Result<Expr, ExprError> {
    RationalFunction::from_expr(e)?.to_expr()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{parse, ClosedForm};

    #[test]
    fn additive_identity_with_linear_closed_form() {
        let e = parse("f(x) + f(y) - f(x+y)").unwrap();
        let sub = e
            .substitute_func("f", &ClosedForm::parse(&["t"], "c*t").unwrap())
            .unwrap();
        assert_eq!(simplify_rational(&sub).unwrap(), Expr::zero());
    }

    #[test]
    fn commutativity() {
        assert_eq!(simplify_rational(&parse("a*b - b*a").unwrap()).unwrap(), Expr::zero());
    }

    #[test]
    fn squares_do_not_satisfy_the_additive_law() {
        let e = parse("f(x+r) - f(x) - f(r)").unwrap();
        let sub = e
            .substitute_func("f", &ClosedForm::parse(&["t"], "t^2").unwrap())
            .unwrap();
        assert_eq!(simplify_rational(&sub).unwrap(), parse("2*x*r").unwrap());
    }

    #[test]
    fn cancels_rational_expressions() {
        let e = parse("(x^2 - 1)/(x - 1) - x - 1").unwrap();
        // not reduced by gcd, but the numerator still vanishes after clearing
        assert_eq!(simplify_rational(&e).unwrap(), Expr::zero());
        let e = parse("1/(1/x) - x").unwrap();
        assert_eq!(simplify_rational(&e).unwrap(), Expr::zero());
    }

    #[test]
    fn mobius_addition_law() {
        // f(t) = (t - 1)/(t + 1) is not additive
        let cf = ClosedForm::parse(&["t"], "(t - 1)/(t + 1)").unwrap();
        let e = parse("f(x) + f(r) - f(x + r)").unwrap().substitute_func("f", &cf).unwrap();
        assert!(simplify_rational(&e).unwrap() != Expr::zero());
    }

    #[test]
    fn opaque_function_atoms() {
        let e = parse("f(x + r)*g(x) - g(x)*f(r + x)").unwrap();
        assert_eq!(simplify_rational(&e).unwrap(), Expr::zero());
    }

    #[test]
    fn builtins_are_rejected() {
        assert!(matches!(
            simplify_rational(&parse("sin(x) - x").unwrap()),
            Err(ExprError::NonRationalStructure(_))
        ));
    }
}
