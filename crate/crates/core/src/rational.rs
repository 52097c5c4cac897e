//! Exact rational helpers shared by every module.
//!
//! All real values in the laboratory are carried as [`BigRational`]; nothing
//! here goes through binary floating point except the explicit `to_f64`
//! conversions used for reporting.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("invalid rational literal `{0}`")]
pub struct ParseRationalError(pub String);

/// Parses `3/32`, `-7`, `0.125`, `1e-6` or `2.5E3` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ParseRationalError> {
    let s = text.trim();
    let err = || ParseRationalError(text.to_string());
    if s.is_empty() {
        return Err(err());
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num.trim().parse().map_err(|_| err())?;
        let d: BigInt = den.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => {
            let e: i64 = s[pos + 1..].parse().map_err(|_| err())?;
            (&s[..pos], e)
        }
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = digits.split_once('.').unwrap_or((digits, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let joined = format!("{int_part}{frac_part}");
    let n: BigInt = if joined.is_empty() {
        BigInt::zero()
    } else {
        joined.parse().map_err(|_| err())?
    };
    let scale = exp - frac_part.len() as i64;
    let ten = BigInt::from(10u32);
    let mut value = Rational::from_integer(n);
    if scale >= 0 {
        value *= Rational::from_integer(num_traits::pow(ten, scale as usize));
    } else {
        value /= Rational::from_integer(num_traits::pow(ten, (-scale) as usize));
    }
    Ok(if negative { -value } else { value })
}

/// Exact `2^e`.
pub fn pow2(e: i64) -> Rational {
    let p = BigInt::one() << e.unsigned_abs();
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

/// Exact `base^e` for a small integer base.
pub fn pow_int(base: u32, e: i64) -> Rational {
    let p = num_traits::pow(BigInt::from(base), e.unsigned_abs() as usize);
    if e >= 0 {
        Rational::from_integer(p)
    } else {
        Rational::new(BigInt::one(), p)
    }
}

fn bits(n: &BigInt) -> i64 {
    n.bits() as i64
}

/// `b` such that `2^b <= |x| < 2^(b+1)`. Panics on zero.
pub fn floor_log2_abs(x: &Rational) -> i64 {
    assert!(!x.is_zero(), "floor_log2 of zero");
    let a = x.numer().abs();
    let d = x.denom().clone();
    let guess = bits(&a) - bits(&d);
    // |x| >= 2^guess  <=>  a >= d * 2^guess
    let ge = if guess >= 0 {
        a >= (&d << guess as usize)
    } else {
        (&a << (-guess) as usize) >= d
    };
    if ge {
        guess
    } else {
        guess - 1
    }
}

/// Smallest `j` with `2^j >= x`, for `x > 0`.
pub fn ceil_log2(x: &Rational) -> i64 {
    assert!(x.is_positive(), "ceil_log2 of non-positive value");
    let b = floor_log2_abs(x);
    if *x == pow2(b) {
        b
    } else {
        b + 1
    }
}

/// Rounds a non-negative rational to the nearest integer, ties to even.
pub fn round_half_even(x: &Rational) -> BigInt {
    debug_assert!(!x.is_negative());
    let (q, r) = x.numer().div_rem(x.denom());
    let twice = &r << 1usize;
    match twice.cmp(x.denom()) {
        Ordering::Less => q,
        Ordering::Greater => q + 1,
        Ordering::Equal => {
            if q.is_even() {
                q
            } else {
                q + 1
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Down,
    Up,
}

/// Rounds `x` to `bits` significant binary digits toward -inf (`Down`) or
/// +inf (`Up`). Used for outward-rounded interval endpoints.
pub fn round_significant(x: &Rational, bits: u32, dir: Direction) -> Rational {
    if x.is_zero() || bits == 0 {
        return x.clone();
    }
    let b = floor_log2_abs(x);
    // scale so that the integer part carries `bits` digits
    let shift = bits as i64 - 1 - b;
    let scaled = x * pow2(shift);
    if scaled.is_integer() {
        return x.clone();
    }
    let n = match dir {
        Direction::Down => scaled.floor(),
        Direction::Up => scaled.ceil(),
    };
    n * pow2(-shift)
}

/// Integer square root bounds: returns `(lo, hi)` with `lo <= sqrt(x) <= hi`
/// and `hi - lo <= 2^-bits` for `x >= 0`.
pub fn sqrt_bounds(x: &Rational, bits: u32) -> (Rational, Rational) {
    assert!(!x.is_negative(), "square root of a negative value");
    if x.is_zero() {
        return (Rational::zero(), Rational::zero());
    }
    // sqrt(p/q) = sqrt(p*q*4^bits) / (q*2^bits)
    let p = x.numer().to_biguint().expect("non-negative");
    let q = x.denom().to_biguint().expect("positive");
    let radicand: BigUint = (&p * &q) << (2 * bits as usize);
    let root = radicand.sqrt();
    let exact = &root * &root == radicand;
    let den = BigInt::from_biguint(Sign::Plus, q << bits as usize);
    let lo = Rational::new(BigInt::from_biguint(Sign::Plus, root.clone()), den.clone());
    let hi = if exact {
        lo.clone()
    } else {
        Rational::new(BigInt::from_biguint(Sign::Plus, root + 1u32), den)
    };
    (lo, hi)
}

pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

/// Exact rational value of a finite `f64`.
pub fn from_f64(x: f64) -> Option<Rational> {
    Rational::from_float(x)
}

/// Extended non-negative rational, used for condition numbers that may be
/// infinite.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ExtRational {
    Finite(Rational),
    Infinite,
}

impl ExtRational {
    pub fn is_infinite(&self) -> bool {
        matches!(self, ExtRational::Infinite)
    }

    pub fn finite(&self) -> Option<&Rational> {
        match self {
            ExtRational::Finite(r) => Some(r),
            ExtRational::Infinite => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            ExtRational::Finite(r) => to_f64(r),
            ExtRational::Infinite => f64::INFINITY,
        }
    }

    /// `max{1, 1/rho}` with `rho = 0` mapping to infinity.
    pub fn mu_from_rho(rho: &Rational) -> ExtRational {
        if rho.is_zero() {
            ExtRational::Infinite
        } else {
            let inv = rho.recip();
            ExtRational::Finite(if inv < Rational::one() { Rational::one() } else { inv })
        }
    }
}

impl PartialOrd for ExtRational {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(match (self, other) {
            (ExtRational::Infinite, ExtRational::Infinite) => Ordering::Equal,
            (ExtRational::Infinite, _) => Ordering::Greater,
            (_, ExtRational::Infinite) => Ordering::Less,
            (ExtRational::Finite(a), ExtRational::Finite(b)) => a.cmp(b),
        })
    }
}

impl fmt::Display for ExtRational {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtRational::Finite(r) => write!(f, "{r}"),
            ExtRational::Infinite => f.write_str("inf"),
        }
    }
}
