use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use super::ExprError;

/// Exact rational number over checked 128-bit integers.
///
/// Always normalized: `gcd(|num|, den) == 1` and `den > 0`. Every arithmetic
/// operation is checked and reports [`ExprError::Overflow`] instead of wrapping.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Rational {
    num: i128,
    den: i128,
}

impl Rational {
    pub const ZERO: Rational = Rational { num: 0, den: 1 };
    pub const ONE: Rational = Rational { num: 1, den: 1 };
    pub const MINUS_ONE: Rational = Rational { num: -1, den: 1 };

    pub fn new(num: i128, den: i128) -> Result<Self, ExprError> {
        if den == 0 {
            return Err(ExprError::DivisionByZero);
        }
        let g = num.gcd(&den);
        let (mut n, mut d) = (num / g, den / g);
        if d < 0 {
            n = n.checked_neg().ok_or(ExprError::Overflow)?;
            d = d.checked_neg().ok_or(ExprError::Overflow)?;
        }
        Ok(Rational { num: n, den: d })
    }

    pub const fn integer(n: i128) -> Self {
        Rational { num: n, den: 1 }
    }

    pub fn numer(&self) -> i128 {
        self.num
    }

    pub fn denom(&self) -> i128 {
        self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num == 0
    }

    pub fn is_one(&self) -> bool {
        self.num == 1 && self.den == 1
    }

    pub fn is_integer(&self) -> bool {
        self.den == 1
    }

    pub fn is_negative(&self) -> bool {
        self.num < 0
    }

    pub fn signum(&self) -> i32 {
        self.num.signum() as i32
    }

    pub fn abs(&self) -> Result<Self, ExprError> {
        Ok(Rational {
            num: self.num.checked_abs().ok_or(ExprError::Overflow)?,
            den: self.den,
        })
    }

    pub fn neg(&self) -> Result<Self, ExprError> {
        Ok(Rational {
            num: self.num.checked_neg().ok_or(ExprError::Overflow)?,
            den: self.den,
        })
    }

    pub fn add(&self, other: &Rational) -> Result<Self, ExprError> {
        let g = self.den.gcd(&other.den);
        let lhs = self
            .num
            .checked_mul(other.den / g)
            .ok_or(ExprError::Overflow)?;
        let rhs = other
            .num
            .checked_mul(self.den / g)
            .ok_or(ExprError::Overflow)?;
        let num = lhs.checked_add(rhs).ok_or(ExprError::Overflow)?;
        let den = (self.den / g)
            .checked_mul(other.den)
            .ok_or(ExprError::Overflow)?;
        Rational::new(num, den)
    }

    pub fn sub(&self, other: &Rational) -> Result<Self, ExprError> {
        self.add(&other.neg()?)
    }

    pub fn mul(&self, other: &Rational) -> Result<Self, ExprError> {
        // cross-reduce first so products stay small
        let g1 = self.num.gcd(&other.den).max(1);
        let g2 = other.num.gcd(&self.den).max(1);
        let num = (self.num / g1)
            .checked_mul(other.num / g2)
            .ok_or(ExprError::Overflow)?;
        let den = (self.den / g2)
            .checked_mul(other.den / g1)
            .ok_or(ExprError::Overflow)?;
        Rational::new(num, den)
    }

    pub fn recip(&self) -> Result<Self, ExprError> {
        Rational::new(self.den, self.num)
    }

    pub fn div(&self, other: &Rational) -> Result<Self, ExprError> {
        self.mul(&other.recip()?)
    }

    pub fn pow(&self, exp: i64) -> Result<Self, ExprError> {
        if exp == 0 {
            return Ok(Rational::ONE);
        }
        let base = if exp < 0 { self.recip()? } else { *self };
        let mut e = exp.unsigned_abs();
        let mut acc = Rational::ONE;
        let mut sq = base;
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

    pub fn to_f64(&self) -> f64 {
        self.num as f64 / self.den as f64
    }

    /// Exact conversion of a finite double; fails when the value needs more
    /// than 127 bits of numerator or denominator.
    pub fn from_f64_exact(v: f64) -> Result<Self, ExprError> {
        if !v.is_finite() {
            return Err(ExprError::NonFinite);
        }
        if v == 0.0 {
            return Ok(Rational::ZERO);
        }
        let bits = v.to_bits();
        let sign = if bits >> 63 == 1 { -1i128 } else { 1 };
        let exp = ((bits >> 52) & 0x7ff) as i32;
        let frac = bits & ((1u64 << 52) - 1);
        let (mant, e) = if exp == 0 {
            (frac as i128, -1074)
        } else {
            ((frac | (1u64 << 52)) as i128, exp - 1075)
        };
        if e >= 0 {
            if e > 70 {
                return Err(ExprError::Overflow);
            }
            Rational::new(sign * (mant << e), 1)
        } else {
            let shift = -e;
            let tz = mant.trailing_zeros() as i32;
            let s = shift.min(tz);
            let (m, sh) = (mant >> s, shift - s);
            if sh > 125 {
                return Err(ExprError::Overflow);
            }
            Rational::new(sign * m, 1i128 << sh)
        }
    }

    pub fn cmp_value(&self, other: &Rational) -> Ordering {
        // sign first; cross multiplication may overflow so fall back to f64
        match (self.num.signum(), other.num.signum()) {
            (a, b) if a != b => return a.cmp(&b),
            _ => {}
        }
        match (
            self.num.checked_mul(other.den),
            other.num.checked_mul(self.den),
        ) {
            (Some(a), Some(b)) => a.cmp(&b),
            _ => self
                .to_f64()
                .partial_cmp(&other.to_f64())
                .unwrap_or(Ordering::Equal),
        }
    }
}

impl Default for Rational {
    fn default() -> Self {
        Rational::ZERO
    }
}

impl Ord for Rational {
    fn cmp(&self, other: &Self) -> Ordering {
        self.cmp_value(other)
            .then_with(|| self.den.cmp(&other.den))
    }
}

impl PartialOrd for Rational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl From<i64> for Rational {
    fn from(v: i64) -> Self {
        Rational::integer(v as i128)
    }
}

impl fmt::Display for Rational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == 1 {
            write!(f, "{}", self.num)
        } else {
            write!(f, "{}/{}", self.num, self.den)
        }
    }
}

impl FromStr for Rational {
    type Err = ExprError;

    /// Accepts `p`, `p/q` and finite decimal literals such as `-0.125`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let bad = || ExprError::InvalidLiteral(s.to_string());
        if let Some((p, q)) = s.split_once('/') {
            let p: i128 = p.trim().parse().map_err(|_| bad())?;
            let q: i128 = q.trim().parse().map_err(|_| bad())?;
            return Rational::new(p, q);
        }
        if let Some((int, frac)) = s.split_once('.') {
            let negative = int.trim_start().starts_with('-');
            let digits = frac.len() as u32;
            if digits > 36 || !frac.chars().all(|c| c.is_ascii_digit()) {
                return Err(bad());
            }
            let int_part: i128 = match int.trim() {
                "" | "-" | "+" => 0,
                t => t.parse().map_err(|_| bad())?,
            };
            let frac_part: i128 = if frac.is_empty() {
                0
            } else {
                frac.parse().map_err(|_| bad())?
            };
            let scale = 10i128.checked_pow(digits).ok_or(ExprError::Overflow)?;
            let mag = int_part
                .checked_abs()
                .and_then(|a| a.checked_mul(scale))
                .and_then(|a| a.checked_add(frac_part))
                .ok_or(ExprError::Overflow)?;
            return Rational::new(if negative { -mag } else { mag }, scale);
        }
        let n: i128 = s.parse().map_err(|_| bad())?;
        Ok(Rational::integer(n))
    }
}

impl Serialize for Rational {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Rational {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
