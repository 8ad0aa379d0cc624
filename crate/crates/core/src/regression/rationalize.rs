//! Best rational approximation with bounded denominator.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::expr::{ExprError, Rational};

/// Exact value of a finite double as `num / den`.
fn exact_parts(c: f64) -> (BigInt, BigInt) {
    if c == 0.0 {
        return (BigInt::zero(), BigInt::one());
    }
    let bits = c.to_bits();
    let sign: i64 = if bits >> 63 == 1 { -1 } else { 1 };
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mant, e) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    let m = BigInt::from(mant) * sign;
    if e >= 0 {
        (m << e as usize, BigInt::one())
    } else {
        let d = BigInt::one() << (-e) as usize;
        let g = m.gcd(&d);
        (m / &g, d / g)
    }
}

/// Closest `p/q` to `c` with `1 ≤ q ≤ max_den`, from the continued-fraction
/// convergents and the last admissible semiconvergent. Ties go to the
/// smaller denominator.
pub fn rationalize(c: f64, max_den: u64) -> Result<Rational> {
    if !c.is_finite() {
        return Err(ExprError::NonFinite.into());
    }
    let max_den = BigInt::from(max_den.max(1));
    let (n, d) = exact_parts(c);
    if d <= max_den {
        return to_rational(&n, &d);
    }
    let (mut p0, mut q0, mut p1, mut q1) = (BigInt::zero(), BigInt::one(), BigInt::one(), BigInt::zero());
    let (mut num, mut den) = (n.clone(), d.clone());
    loop {
        let a = num.div_floor(&den);
        let q2 = &q0 + &a * &q1;
        if q2 > max_den {
            break;
        }
        let p2 = &p0 + &a * &p1;
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let rem = &num - &a * &den;
        num = std::mem::replace(&mut den, rem);
        if den.is_zero() {
            break;
        }
    }
    let k = (&max_den - &q0) / &q1;
    let (bp, bq) = (&p0 + &k * &p1, &q0 + &k * &q1);
    // |c − p/q| compared as |n·q − p·d| / (d·q)
    let dist = |p: &BigInt, q: &BigInt| ((&n * q - p * &d).abs(), q.clone());
    let (e1, q1c) = dist(&p1, &q1);
    let (e2, q2c) = dist(&bp, &bq);
    // e1/q1 vs e2/q2
    let lhs = &e2 * &q1c;
    let rhs = &e1 * &q2c;
    if lhs < rhs {
        to_rational(&bp, &bq)
    } else {
        to_rational(&p1, &q1)
    }
}

fn to_rational(p: &BigInt, q: &BigInt) -> Result<Rational> {
    let p = p.to_i128().ok_or(Error::Expr(ExprError::Overflow))?;
    let q = q.to_i128().ok_or(Error::Expr(ExprError::Overflow))?;
    Ok(Rational::new(p, q)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(p: i128, q: i128) -> Rational {
        Rational::new(p, q).unwrap()
    }

    #[test]
    fn small_examples() {
        assert_eq!(rationalize(0.5, 100).unwrap(), r(1, 2));
        assert_eq!(rationalize(0.3333333, 10).unwrap(), r(1, 3));
        assert_eq!(rationalize(3.14159265, 113).unwrap(), r(355, 113));
        assert_eq!(rationalize(-2.0, 1).unwrap(), r(-2, 1));
        assert_eq!(rationalize(0.0, 7).unwrap(), r(0, 1));
        assert_eq!(rationalize(-0.6666666667, 100).unwrap(), r(-2, 3));
    }

    #[test]
    fn semiconvergent_beats_last_convergent() {
        // convergents of pi: 3, 22/7, 333/106; with q ≤ 15, 47/15 is a
        // semiconvergent but 22/7 stays closer
        assert_eq!(rationalize(std::f64::consts::PI, 15).unwrap(), r(22, 7));
        // 0.6 bound 2: candidates 1/2 and 1/1, 1/2 closer
        assert_eq!(rationalize(0.6, 2).unwrap(), r(1, 2));
        // 0.7 bound 2: 1/2 (0.2) vs 1/1 (0.3)
        assert_eq!(rationalize(0.7, 2).unwrap(), r(1, 2));
        assert_eq!(rationalize(0.8, 2).unwrap(), r(1, 1));
    }

    #[test]
    fn non_finite_is_rejected() {
        assert!(rationalize(f64::NAN, 10).is_err());
    }
}
