//! Arbitrary-precision binary floating point built on `num-bigint`.
//!
//! A [`BigFloat`] is `man * 2^exp` with an unbounded integer mantissa. Every
//! rounding operation takes an explicit precision in bits and rounds to
//! nearest. Elementary functions evaluate with guard bits on top of the
//! requested precision and round once at the end; argument reductions retry
//! with more bits when cancellation is detected.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::collections::HashMap;
use std::rc::Rc;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{Builtin, ExprError, Rational};

pub const MIN_PRECISION: u32 = 64;
pub const MAX_PRECISION: u32 = 4096;

const GUARD: u32 = 40;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BigFloat {
    man: BigInt,
    exp: i64,
}

impl BigFloat {
    pub fn zero() -> Self {
        BigFloat {
            man: BigInt::zero(),
            exp: 0,
        }
    }

    pub fn one() -> Self {
        BigFloat::from_int(1)
    }

    pub fn from_int(n: i64) -> Self {
        BigFloat::exact(BigInt::from(n), 0)
    }

    fn exact(man: BigInt, exp: i64) -> Self {
        if man.is_zero() {
            return BigFloat::zero();
        }
        let tz = man.trailing_zeros().unwrap_or(0);
        if tz > 0 {
            BigFloat {
                man: man >> tz,
                exp: exp + tz as i64,
            }
        } else {
            BigFloat { man, exp }
        }
    }

    /// Exact conversion of a finite double.
    pub fn from_f64(v: f64) -> Result<Self, ExprError> {
        if !v.is_finite() {
            return Err(ExprError::NonFinite);
        }
        if v == 0.0 {
            return Ok(BigFloat::zero());
        }
        let bits = v.to_bits();
        let negative = bits >> 63 == 1;
        let e = ((bits >> 52) & 0x7ff) as i64;
        let frac = bits & ((1u64 << 52) - 1);
        let (m, e) = if e == 0 {
            (frac, -1074)
        } else {
            (frac | (1u64 << 52), e - 1075)
        };
        let man = BigInt::from(m);
        Ok(BigFloat::exact(if negative { -man } else { man }, e))
    }

    pub fn from_rational(q: Rational, prec: u32) -> Self {
        let n = BigFloat::exact(BigInt::from(q.numer()), 0);
        if q.is_integer() {
            return n;
        }
        let d = BigFloat::exact(BigInt::from(q.denom()), 0);
        n.div(&d, prec).unwrap_or_else(|_| BigFloat::zero())
    }

    pub fn to_f64(&self) -> f64 {
        if self.man.is_zero() {
            return 0.0;
        }
        let bits = self.man.bits() as i64;
        let (m, e) = if bits > 62 {
            let sh = bits - 62;
            (self.man.abs() >> sh as u64, self.exp + sh)
        } else {
            (self.man.abs(), self.exp)
        };
        let mag = m.to_f64().unwrap_or(0.0);
        let v = libm::scalbn(mag, e.clamp(-4000, 4000) as i32);
        if self.man.is_negative() {
            -v
        } else {
            v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.man.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.man.is_negative()
    }

    pub fn signum(&self) -> i32 {
        if self.man.is_zero() {
            0
        } else if self.man.is_negative() {
            -1
        } else {
            1
        }
    }

    /// `e` such that `2^(e-1) <= |x| < 2^e`; `i64::MIN` for zero.
    pub fn magnitude(&self) -> i64 {
        if self.man.is_zero() {
            i64::MIN
        } else {
            self.man.bits() as i64 + self.exp
        }
    }

    pub fn neg(&self) -> Self {
        BigFloat {
            man: -self.man.clone(),
            exp: self.exp,
        }
    }

    pub fn abs(&self) -> Self {
        BigFloat {
            man: self.man.abs(),
            exp: self.exp,
        }
    }

    pub fn mul_pow2(&self, k: i64) -> Self {
        if self.is_zero() {
            return self.clone();
        }
        BigFloat {
            man: self.man.clone(),
            exp: self.exp + k,
        }
    }

    /// Round to nearest with `prec` significant bits.
    pub fn round(&self, prec: u32) -> Self {
        let bits = self.man.bits();
        if bits <= prec as u64 {
            return self.clone();
        }
        let sh = bits - prec as u64;
        let half = BigInt::one() << (sh - 1);
        let mag = (self.man.abs() + half) >> sh;
        let man = if self.man.is_negative() { -mag } else { mag };
        BigFloat::exact(man, self.exp + sh as i64)
    }

    pub fn add_exact(&self, o: &BigFloat) -> Self {
        if self.is_zero() {
            return o.clone();
        }
        if o.is_zero() {
            return self.clone();
        }
        let e = self.exp.min(o.exp);
        let a = &self.man << (self.exp - e) as u64;
        let b = &o.man << (o.exp - e) as u64;
        BigFloat::exact(a + b, e)
    }

    pub fn add(&self, o: &BigFloat, prec: u32) -> Self {
        if self.is_zero() {
            return o.round(prec);
        }
        if o.is_zero() {
            return self.round(prec);
        }
        let gap = self.magnitude() - o.magnitude();
        let limit = prec as i64 + 4;
        if gap > limit {
            return self.round(prec);
        }
        if -gap > limit {
            return o.round(prec);
        }
        self.add_exact(o).round(prec)
    }

    pub fn sub(&self, o: &BigFloat, prec: u32) -> Self {
        self.add(&o.neg(), prec)
    }

    pub fn mul_exact(&self, o: &BigFloat) -> Self {
        BigFloat::exact(&self.man * &o.man, self.exp + o.exp)
    }

    pub fn mul(&self, o: &BigFloat, prec: u32) -> Self {
        self.mul_exact(o).round(prec)
    }

    pub fn div(&self, o: &BigFloat, prec: u32) -> Result<Self, ExprError> {
        if o.is_zero() {
            return Err(ExprError::DivisionByZero);
        }
        if self.is_zero() {
            return Ok(BigFloat::zero());
        }
        let want = prec as i64 + 3;
        let sh = (want + o.man.bits() as i64 - self.man.bits() as i64).max(0);
        let q = (&self.man << sh as u64) / &o.man;
        Ok(BigFloat::exact(q, self.exp - sh - o.exp).round(prec))
    }

    pub fn div_int(&self, n: i64, prec: u32) -> Self {
        self.div(&BigFloat::from_int(n), prec)
            .unwrap_or_else(|_| BigFloat::zero())
    }

    pub fn sqrt(&self, prec: u32) -> Result<Self, ExprError> {
        if self.is_negative() {
            return Err(ExprError::Domain("sqrt of a negative number".into()));
        }
        if self.is_zero() {
            return Ok(BigFloat::zero());
        }
        self.root(2, prec)
    }

    pub fn cbrt(&self, prec: u32) -> Self {
        if self.is_zero() {
            return BigFloat::zero();
        }
        if self.is_negative() {
            return self.neg().cbrt(prec).neg();
        }
        self.root(3, prec).unwrap_or_else(|_| BigFloat::zero())
    }

    fn root(&self, n: u32, prec: u32) -> Result<Self, ExprError> {
        let want = n as i64 * (prec as i64 + 4);
        let mut shift = (want - self.man.bits() as i64).max(0);
        let rem = (self.exp - shift).rem_euclid(n as i64);
        shift += rem;
        let m = &self.man << shift as u64;
        let r = m.nth_root(n);
        Ok(BigFloat::exact(r, (self.exp - shift) / n as i64).round(prec))
    }

    pub fn cmp_value(&self, o: &BigFloat) -> Ordering {
        let d = self.add_exact(&o.neg());
        d.signum().cmp(&0)
    }

    pub fn is_integer(&self) -> bool {
        self.exp >= 0 || self.is_zero()
    }

    pub fn floor(&self) -> Self {
        if self.is_integer() {
            return self.clone();
        }
        let d = BigInt::one() << (-self.exp) as u64;
        BigFloat::exact(self.man.div_floor(&d), 0)
    }

    pub fn ceil(&self) -> Self {
        self.neg().floor().neg()
    }

    pub fn trunc(&self) -> Self {
        if self.is_negative() {
            self.ceil()
        } else {
            self.floor()
        }
    }

    /// Round half away from zero to an integer.
    pub fn round_integer(&self) -> Self {
        let half = BigFloat::exact(BigInt::one(), -1);
        if self.is_negative() {
            self.neg().add_exact(&half).floor().neg()
        } else {
            self.add_exact(&half).floor()
        }
    }

    pub fn to_i64(&self) -> Option<i64> {
        if !self.is_integer() {
            return None;
        }
        if self.is_zero() {
            return Some(0);
        }
        if self.magnitude() > 63 {
            return None;
        }
        (&self.man << self.exp as u64).to_i64()
    }

    fn int_value(&self) -> Option<BigInt> {
        if !self.is_integer() {
            return None;
        }
        Some(&self.man << self.exp.max(0) as u64)
    }
}

fn dominated(term: &BigFloat, sum: &BigFloat, wp: u32) -> bool {
    term.is_zero() || (!sum.is_zero() && term.magnitude() < sum.magnitude() - wp as i64 - 2)
}

thread_local! {
    static CONSTANTS: RefCell<HashMap<&'static str, BigFloat>> = RefCell::new(HashMap::new());
    static SPOUGE: RefCell<HashMap<u32, Rc<Vec<BigFloat>>>> = RefCell::new(HashMap::new());
}

fn cached(name: &'static str, prec: u32, compute: fn(u32) -> BigFloat) -> BigFloat {
    CONSTANTS.with(|c| {
        let mut map = c.borrow_mut();
        if let Some(v) = map.get(name) {
            if v.man.bits() >= prec as u64 + 8 {
                return v.round(prec);
            }
        }
        let v = compute(prec + 64);
        let out = v.round(prec);
        map.insert(name, v);
        out
    })
}

/// Fixed-point sum of `sign^k / ((2k+1) n^(2k+1))` scaled by `2^wp`.
fn arc_series_inv(n: u64, wp: u32, alternating: bool) -> BigInt {
    let one = BigInt::one() << wp as u64;
    let n2 = BigInt::from(n * n);
    let mut power = one / BigInt::from(n);
    let mut sum = BigInt::zero();
    let mut k: u64 = 0;
    while !power.is_zero() {
        let term = &power / BigInt::from(2 * k + 1);
        if alternating && k % 2 == 1 {
            sum -= term;
        } else {
            sum += term;
        }
        power /= &n2;
        k += 1;
    }
    sum
}

fn compute_pi(prec: u32) -> BigFloat {
    let wp = prec + 32;
    let s = arc_series_inv(5, wp, true) * 16 - arc_series_inv(239, wp, true) * 4;
    BigFloat::exact(s, -(wp as i64)).round(prec)
}

fn compute_ln2(prec: u32) -> BigFloat {
    let wp = prec + 32;
    let s = arc_series_inv(3, wp, false) * 2;
    BigFloat::exact(s, -(wp as i64)).round(prec)
}

pub fn pi(prec: u32) -> BigFloat {
    cached("pi", prec, compute_pi)
}

pub fn ln2(prec: u32) -> BigFloat {
    cached("ln2", prec, compute_ln2)
}

pub fn exp(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if x.is_zero() {
        return Ok(BigFloat::one());
    }
    if x.magnitude() > 40 {
        return Err(ExprError::Overflow);
    }
    let wp = prec + GUARD;
    let lp = wp + 48;
    let l2 = ln2(lp);
    let k = x.div(&l2, lp)?.round_integer();
    let r = x.add_exact(&l2.mul_exact(&k).neg()).round(lp);
    let halvings: i64 = 10;
    let r = r.mul_pow2(-halvings);
    let wp2 = wp + halvings as u32;
    let mut sum = BigFloat::one();
    let mut term = BigFloat::one();
    let mut n = 1;
    loop {
        term = term.mul(&r, wp2).div_int(n, wp2);
        if dominated(&term, &sum, wp2) {
            break;
        }
        sum = sum.add(&term, wp2);
        n += 1;
    }
    for _ in 0..halvings {
        sum = sum.mul(&sum, wp2);
    }
    let k = k.to_i64().ok_or(ExprError::Overflow)?;
    Ok(sum.mul_pow2(k).round(prec))
}

/// `2 * atanh(z)` for `|z| < 1/2`.
fn atanh_series2(z: &BigFloat, wp: u32) -> BigFloat {
    let z2 = z.mul(z, wp);
    let mut power = z.clone();
    let mut sum = z.clone();
    let mut k = 1;
    loop {
        power = power.mul(&z2, wp);
        let term = power.div_int(2 * k + 1, wp);
        if dominated(&term, &sum, wp) {
            break;
        }
        sum = sum.add(&term, wp);
        k += 1;
    }
    sum.mul_pow2(1)
}

pub fn log(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if x.signum() <= 0 {
        return Err(ExprError::Domain("log of a nonpositive number".into()));
    }
    let wp = prec + GUARD;
    let mut e = x.magnitude();
    let mut m = x.mul_pow2(-e);
    if m.to_f64() < 0.75 {
        m = m.mul_pow2(1);
        e -= 1;
    }
    let one = BigFloat::one();
    let num = m.add_exact(&one.neg());
    let den = m.add_exact(&one);
    let z = num.div(&den, wp)?;
    let series = atanh_series2(&z, wp);
    let scaled = ln2(wp + 64).mul_exact(&BigFloat::from_int(e));
    Ok(scaled.add(&series, wp).round(prec))
}

pub fn log1p(t: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let tf = t.to_f64();
    if tf <= -1.0 {
        let one = BigFloat::one();
        if t.add_exact(&one).signum() <= 0 {
            return Err(ExprError::Domain("log1p at or below -1".into()));
        }
    }
    if tf.abs() < 0.25 {
        let wp = prec + GUARD;
        let z = t.div(&t.add_exact(&BigFloat::from_int(2)), wp)?;
        return Ok(atanh_series2(&z, wp).round(prec));
    }
    log(&t.add_exact(&BigFloat::one()), prec)
}

/// Reduce modulo `pi/2`: returns `(r, q)` with `x = r + q*pi/2`, `q` in 0..4.
fn reduce_half_pi(x: &BigFloat, wp: u32) -> Result<(BigFloat, u8), ExprError> {
    if x.to_f64().abs() < 0.78 {
        return Ok((x.clone(), 0));
    }
    if x.magnitude() > 60 {
        return Err(ExprError::Overflow);
    }
    let mut extra: u32 = 32;
    loop {
        let p = wp + extra + x.magnitude().max(0) as u32;
        let half_pi = pi(p).mul_pow2(-1);
        let k = x.div(&half_pi, p)?.round_integer();
        let r = x.add_exact(&half_pi.mul_exact(&k).neg()).round(p);
        let ok = r.is_zero() || r.magnitude() > 8 - extra as i64 || extra > 4 * wp;
        if ok {
            let q = k.int_value().unwrap_or_default().mod_floor(&BigInt::from(4));
            return Ok((r.round(wp), q.to_u8().unwrap_or(0)));
        }
        extra *= 2;
    }
}

fn sin_series(r: &BigFloat, wp: u32) -> BigFloat {
    let r2 = r.mul(r, wp);
    let mut sum = r.clone();
    let mut term = r.clone();
    let mut n = 1i64;
    loop {
        term = term.mul(&r2, wp).div_int((2 * n) * (2 * n + 1), wp).neg();
        if dominated(&term, &sum, wp) {
            return sum;
        }
        sum = sum.add(&term, wp);
        n += 1;
    }
}

fn cos_series(r: &BigFloat, wp: u32) -> BigFloat {
    let r2 = r.mul(r, wp);
    let mut sum = BigFloat::one();
    let mut term = BigFloat::one();
    let mut n = 1i64;
    loop {
        term = term.mul(&r2, wp).div_int((2 * n - 1) * (2 * n), wp).neg();
        if dominated(&term, &sum, wp) {
            return sum;
        }
        sum = sum.add(&term, wp);
        n += 1;
    }
}

/// `(sin x, cos x)` at working precision.
fn sin_cos(x: &BigFloat, wp: u32) -> Result<(BigFloat, BigFloat), ExprError> {
    let (r, q) = reduce_half_pi(x, wp)?;
    let s = sin_series(&r, wp);
    let c = cos_series(&r, wp);
    Ok(match q {
        0 => (s, c),
        1 => (c, s.neg()),
        2 => (s.neg(), c.neg()),
        _ => (c.neg(), s),
    })
}

pub fn sin(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    Ok(sin_cos(x, prec + GUARD)?.0.round(prec))
}

pub fn cos(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    Ok(sin_cos(x, prec + GUARD)?.1.round(prec))
}

pub fn atan(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    if x.is_zero() {
        return Ok(BigFloat::zero());
    }
    if x.magnitude() > 0 && x.abs().cmp_value(&BigFloat::one()) == Ordering::Greater {
        let inv = BigFloat::one().div(x, wp)?;
        let half_pi = pi(wp).mul_pow2(-1);
        let a = atan(&inv, wp)?;
        let out = if x.is_negative() {
            half_pi.neg().sub(&a, wp)
        } else {
            half_pi.sub(&a, wp)
        };
        return Ok(out.round(prec));
    }
    // three halvings bring |x| below tan(pi/32)
    let one = BigFloat::one();
    let mut y = x.clone();
    for _ in 0..3 {
        let s = one.add(&y.mul(&y, wp), wp).sqrt(wp)?;
        y = y.div(&one.add(&s, wp), wp)?;
    }
    let y2 = y.mul(&y, wp);
    let mut sum = y.clone();
    let mut power = y;
    let mut k = 1i64;
    loop {
        power = power.mul(&y2, wp).neg();
        let term = power.div_int(2 * k + 1, wp);
        if dominated(&term, &sum, wp) {
            break;
        }
        sum = sum.add(&term, wp);
        k += 1;
    }
    Ok(sum.mul_pow2(3).round(prec))
}

pub fn asin(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    let one = BigFloat::one();
    match x.abs().cmp_value(&one) {
        Ordering::Greater => Err(ExprError::Domain("arcsin outside [-1, 1]".into())),
        Ordering::Equal => {
            let h = pi(prec).mul_pow2(-1);
            Ok(if x.is_negative() { h.neg() } else { h })
        }
        Ordering::Less => {
            let d = one
                .add_exact(&x.neg())
                .mul_exact(&one.add_exact(x))
                .sqrt(wp)?;
            atan(&x.div(&d, wp)?, prec)
        }
    }
}

pub fn acos(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    let one = BigFloat::one();
    if x.abs().cmp_value(&one) == Ordering::Greater {
        return Err(ExprError::Domain("arccos outside [-1, 1]".into()));
    }
    let den = one.add_exact(x);
    if den.is_zero() {
        return Ok(pi(prec));
    }
    let t = one.add_exact(&x.neg()).div(&den, wp)?.sqrt(wp)?;
    Ok(atan(&t, wp)?.mul_pow2(1).round(prec))
}

pub fn asinh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if x.is_zero() {
        return Ok(BigFloat::zero());
    }
    let wp = prec + GUARD;
    let a = x.abs();
    let one = BigFloat::one();
    let a2 = a.mul(&a, wp);
    let s = a2.add(&one, wp).sqrt(wp)?;
    // log1p(a + a^2 / (1 + sqrt(1 + a^2)))
    let t = a.add(&a2.div(&one.add(&s, wp), wp)?, wp);
    let v = log1p(&t, wp)?;
    Ok(if x.is_negative() { v.neg() } else { v }.round(prec))
}

pub fn acosh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let one = BigFloat::one();
    if x.cmp_value(&one) == Ordering::Less {
        return Err(ExprError::Domain("arccosh below 1".into()));
    }
    let wp = prec + GUARD;
    let d = x.add_exact(&one.neg());
    let s = d.mul_exact(&x.add_exact(&one)).sqrt(wp)?;
    log1p(&d.add(&s, wp), prec)
}

pub fn atanh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let one = BigFloat::one();
    if x.abs().cmp_value(&one) != Ordering::Less {
        return Err(ExprError::Domain("arctanh outside (-1, 1)".into()));
    }
    let wp = prec + GUARD;
    let t = x.mul_pow2(1).div(&one.add_exact(&x.neg()), wp)?;
    Ok(log1p(&t, wp)?.mul_pow2(-1).round(prec))
}

pub fn sinh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    if x.to_f64().abs() < 1.0 {
        let r2 = x.mul(x, wp);
        let mut sum = x.clone();
        let mut term = x.clone();
        let mut n = 1i64;
        loop {
            term = term.mul(&r2, wp).div_int((2 * n) * (2 * n + 1), wp);
            if dominated(&term, &sum, wp) {
                return Ok(sum.round(prec));
            }
            sum = sum.add(&term, wp);
            n += 1;
        }
    }
    let e = exp(x, wp)?;
    let inv = BigFloat::one().div(&e, wp)?;
    Ok(e.sub(&inv, wp).mul_pow2(-1).round(prec))
}

pub fn cosh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    let e = exp(x, wp)?;
    let inv = BigFloat::one().div(&e, wp)?;
    Ok(e.add(&inv, wp).mul_pow2(-1).round(prec))
}

pub fn tanh(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    if x.to_f64().abs() < 1.0 {
        let s = sinh(x, wp)?;
        let c = cosh(x, wp)?;
        return Ok(s.div(&c, wp)?.round(prec));
    }
    if x.to_f64().abs() * std::f64::consts::LOG2_E * 2.0 > wp as f64 + 8.0 {
        return Ok(BigFloat::from_int(x.signum() as i64));
    }
    let e = exp(&x.abs().mul_pow2(1).neg(), wp)?;
    let one = BigFloat::one();
    let v = one.sub(&e, wp).div(&one.add(&e, wp), wp)?;
    Ok(if x.is_negative() { v.neg() } else { v }.round(prec))
}

pub fn erf(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if x.is_zero() {
        return Ok(BigFloat::zero());
    }
    let xf = x.to_f64();
    if xf * xf * std::f64::consts::LOG2_E > prec as f64 + 10.0 {
        return Ok(BigFloat::from_int(x.signum() as i64));
    }
    let wp = prec + GUARD + (xf * xf * 1.5) as u32;
    let x2 = x.mul(x, wp).mul_pow2(1);
    let mut sum = x.clone();
    let mut term = x.clone();
    let mut n = 1i64;
    loop {
        term = term.mul(&x2, wp).div_int(2 * n + 1, wp);
        if (n as f64) > xf * xf && dominated(&term, &sum, wp) {
            break;
        }
        sum = sum.add(&term, wp);
        n += 1;
    }
    let scale = exp(&x.mul(x, wp).neg(), wp)?;
    let two_over_sqrt_pi = BigFloat::from_int(2).div(&pi(wp).sqrt(wp)?, wp)?;
    Ok(sum.mul(&scale, wp).mul(&two_over_sqrt_pi, wp).round(prec))
}

fn spouge_coefficients(wp: u32, a: i64) -> Rc<Vec<BigFloat>> {
    SPOUGE.with(|cache| {
        if let Some(v) = cache.borrow().get(&wp) {
            return v.clone();
        }
        let ip = 2 * wp + 32;
        let mut cs = Vec::with_capacity(a as usize);
        let two_pi = pi(ip).mul_pow2(1);
        cs.push(two_pi.sqrt(ip).unwrap_or_else(|_| BigFloat::zero()));
        let mut fact = BigFloat::one();
        for k in 1..a {
            if k > 1 {
                fact = fact.mul(&BigFloat::from_int(k - 1), ip);
            }
            let base = BigFloat::from_int(a - k);
            let l = log(&base, ip).unwrap_or_else(|_| BigFloat::zero());
            let arg = l
                .mul(&BigFloat::from_int(2 * k - 1), ip)
                .mul_pow2(-1)
                .add(&BigFloat::from_int(a - k), ip);
            let mut c = exp(&arg, ip)
                .unwrap_or_else(|_| BigFloat::zero())
                .div(&fact, ip)
                .unwrap_or_else(|_| BigFloat::zero());
            if k % 2 == 0 {
                c = c.neg();
            }
            cs.push(c);
        }
        let rc = Rc::new(cs);
        cache.borrow_mut().insert(wp, rc.clone());
        rc
    })
}

pub fn gamma(x: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if x.is_integer() && x.signum() <= 0 {
        return Err(ExprError::Domain("gamma pole".into()));
    }
    let wp = prec + GUARD;
    let half = BigFloat::exact(BigInt::one(), -1);
    if x.cmp_value(&half) == Ordering::Less {
        // reflection: gamma(x) = pi / (sin(pi x) gamma(1 - x))
        let p = pi(wp);
        let s = sin(&p.mul(x, wp), wp)?;
        let g = gamma(&BigFloat::one().add_exact(&x.neg()), wp)?;
        return Ok(p.div(&s.mul(&g, wp), wp)?.round(prec));
    }
    let a = (wp as f64 / (2.0 * std::f64::consts::PI).log2()).ceil() as i64 + 2;
    let cs = spouge_coefficients(wp, a);
    let ip = 2 * wp + 32;
    let z = x.add_exact(&BigFloat::one().neg());
    let mut sum = cs[0].clone();
    for (k, c) in cs.iter().enumerate().skip(1) {
        let den = z.add_exact(&BigFloat::from_int(k as i64));
        sum = sum.add(&c.div(&den, ip)?, ip);
    }
    let za = z.add_exact(&BigFloat::from_int(a));
    let power = log(&za, ip)?.mul(&z.add_exact(&half), ip);
    let f = exp(&power.sub(&za, ip), ip)?;
    Ok(f.mul(&sum, ip).round(prec))
}

pub fn pow(a: &BigFloat, b: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if let Some(k) = b.to_i64() {
        return powi(a, k, prec);
    }
    if a.is_zero() {
        return if b.is_negative() {
            Err(ExprError::DivisionByZero)
        } else {
            Ok(BigFloat::zero())
        };
    }
    if a.is_negative() {
        return Err(ExprError::Domain("non-integer power of a negative number".into()));
    }
    let extra = b.magnitude().max(0) as u32 + a.magnitude().unsigned_abs().min(64) as u32;
    let wp = prec + GUARD + extra;
    exp(&log(a, wp)?.mul(b, wp), prec)
}

pub fn powi(a: &BigFloat, k: i64, prec: u32) -> Result<BigFloat, ExprError> {
    if k == 0 {
        return Ok(BigFloat::one());
    }
    let wp = prec + GUARD + 64 - (k.unsigned_abs().leading_zeros());
    let mut acc = BigFloat::one();
    let mut sq = a.clone();
    let mut e = k.unsigned_abs();
    while e > 0 {
        if e & 1 == 1 {
            acc = acc.mul(&sq, wp);
        }
        e >>= 1;
        if e > 0 {
            sq = sq.mul(&sq, wp);
        }
    }
    if k < 0 {
        acc = BigFloat::one().div(&acc, wp)?;
    }
    Ok(acc.round(prec))
}

fn fmod(a: &BigFloat, b: &BigFloat, prec: u32) -> Result<BigFloat, ExprError> {
    if b.is_zero() {
        return Err(ExprError::Domain("mod by zero".into()));
    }
    let wp = (a.magnitude() - b.magnitude()).max(0) as u32 + prec + GUARD;
    let q = a.div(b, wp)?.trunc();
    let mut r = a.add_exact(&b.mul_exact(&q).neg());
    // the result carries the sign of `a` and is smaller than `|b|`
    let step = if a.is_negative() { b.abs().neg() } else { b.abs() };
    if !r.is_zero() && r.signum() != a.signum() {
        r = r.add_exact(&step);
    }
    if r.abs().cmp_value(&b.abs()) != Ordering::Less {
        r = r.add_exact(&step.neg());
    }
    Ok(r.round(prec))
}

fn distance_to_integer(x: &BigFloat) -> f64 {
    let n = x.round_integer();
    x.add_exact(&n.neg()).to_f64().abs()
}

/// Evaluate a builtin on high-precision arguments. `guard` rejects points
/// within that distance of a pole.
pub fn builtin(
    b: Builtin,
    args: &[BigFloat],
    prec: u32,
    guard: Option<f64>,
) -> Result<BigFloat, ExprError> {
    let wp = prec + GUARD;
    let g = guard.unwrap_or(0.0);
    let pole = |near: bool, what: &str| -> Result<(), ExprError> {
        if near {
            Err(ExprError::Domain(format!("too close to a pole of {what}")))
        } else {
            Ok(())
        }
    };
    let x = args.first().cloned().unwrap_or_else(BigFloat::zero);
    let out = match b {
        Builtin::Pi => pi(prec),
        Builtin::Sin => sin(&x, prec)?,
        Builtin::Cos => cos(&x, prec)?,
        Builtin::Tan | Builtin::Sec | Builtin::Cot | Builtin::Csc => {
            let (s, c) = sin_cos(&x, wp)?;
            let (num, den) = match b {
                Builtin::Tan => (s, c),
                Builtin::Sec => (BigFloat::one(), c),
                Builtin::Cot => (c, s),
                _ => (BigFloat::one(), s),
            };
            pole(den.is_zero() || den.to_f64().abs() < g, b.name())?;
            num.div(&den, prec)?
        }
        Builtin::Sinh => sinh(&x, prec)?,
        Builtin::Cosh => cosh(&x, prec)?,
        Builtin::Tanh => tanh(&x, prec)?,
        Builtin::Exp => exp(&x, prec)?,
        Builtin::Log | Builtin::Log2 | Builtin::Log10 => {
            pole(x.to_f64().abs() < g, b.name())?;
            let l = log(&x, wp)?;
            match b {
                Builtin::Log => l.round(prec),
                Builtin::Log2 => l.div(&ln2(wp), prec)?,
                _ => l.div(&log(&BigFloat::from_int(10), wp)?, prec)?,
            }
        }
        Builtin::Log1p => {
            pole((x.to_f64() + 1.0).abs() < g, "log1p")?;
            log1p(&x, prec)?
        }
        Builtin::Sqrt => x.sqrt(prec)?,
        Builtin::Cbrt => x.cbrt(prec),
        Builtin::Abs => x.abs().round(prec),
        Builtin::Sign => BigFloat::from_int(x.signum() as i64),
        Builtin::Floor => x.floor().round(prec),
        Builtin::Ceil => x.ceil().round(prec),
        Builtin::Frac => x.add_exact(&x.floor().neg()).round(prec),
        Builtin::Erf => erf(&x, prec)?,
        Builtin::Gamma => {
            let near = x.signum() <= 0 && distance_to_integer(&x) < g;
            pole(near, "gamma")?;
            gamma(&x, prec)?
        }
        Builtin::Arctan => atan(&x, prec)?,
        Builtin::Arcsin => asin(&x, prec)?,
        Builtin::Arccos => acos(&x, prec)?,
        Builtin::Arcsinh => asinh(&x, prec)?,
        Builtin::Arccosh => acosh(&x, prec)?,
        Builtin::Arctanh => atanh(&x, prec)?,
        Builtin::Pow => {
            let y = &args[1];
            if y.is_negative() {
                pole(x.to_f64().abs() < g, "pow")?;
            }
            pow(&x, y, prec)?
        }
        Builtin::Mod => fmod(&x, &args[1], prec)?,
        Builtin::Max => {
            if x.cmp_value(&args[1]) == Ordering::Less {
                args[1].round(prec)
            } else {
                x.round(prec)
            }
        }
        Builtin::Min => {
            if x.cmp_value(&args[1]) == Ordering::Greater {
                args[1].round(prec)
            } else {
                x.round(prec)
            }
        }
    };
    Ok(out)
}
