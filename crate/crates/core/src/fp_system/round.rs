use std::fmt;

use num_bigint::{BigInt, BigUint, Sign};
use num_traits::{One, Signed, Zero};

use super::{ArithOp, FpError, FpFormat, OverflowMode};
use crate::rational::{floor_log2_abs, pow_int, round_half_even, Rational};

/// An element `±m·β^(e−t)` of a floating-point system.
///
/// Nonzero values are normalized, `β^(t−1) <= m <= β^t − 1`; zero is stored
/// with `m = 0`, `e = 0` and a positive sign.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FpNumber {
    negative: bool,
    mantissa: BigUint,
    exponent: i64,
    format: FpFormat,
}

impl FpNumber {
    pub fn zero(format: &FpFormat) -> Self {
        FpNumber {
            negative: false,
            mantissa: BigUint::zero(),
            exponent: 0,
            format: format.clone(),
        }
    }

    /// Builds a normalized element, checking every representation invariant.
    pub fn from_parts(
        negative: bool,
        mantissa: BigUint,
        exponent: i64,
        format: &FpFormat,
    ) -> Result<Self, FpError> {
        if mantissa.is_zero() {
            return Ok(Self::zero(format));
        }
        let beta = BigUint::from(format.base());
        let top = num_traits::pow(beta, format.precision() as usize);
        let bottom = num_traits::pow(BigUint::from(format.base()), format.precision() as usize - 1);
        if mantissa < bottom || mantissa >= top {
            return Err(FpError::InvalidParameter(format!(
                "mantissa {mantissa} not normalized for {format}"
            )));
        }
        if format.emin().is_some_and(|lo| exponent < lo)
            || format.emax().is_some_and(|hi| exponent > hi)
        {
            return Err(FpError::InvalidParameter(format!(
                "exponent {exponent} outside {format}"
            )));
        }
        Ok(FpNumber {
            negative,
            mantissa,
            exponent,
            format: format.clone(),
        })
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.negative
    }

    pub fn mantissa(&self) -> &BigUint {
        &self.mantissa
    }

    pub fn exponent(&self) -> i64 {
        self.exponent
    }

    pub fn format(&self) -> &FpFormat {
        &self.format
    }

    /// Base-β digits `d_1 … d_t` of the mantissa, most significant first.
    pub fn digits(&self) -> Vec<u32> {
        let t = self.format.precision() as usize;
        if self.is_zero() {
            return vec![0; t];
        }
        let mut digits = self.mantissa.to_radix_be(self.format.base());
        while digits.len() < t {
            digits.insert(0, 0);
        }
        digits.into_iter().map(u32::from).collect()
    }

    pub fn value(&self) -> Rational {
        if self.is_zero() {
            return Rational::zero();
        }
        let m = Rational::from_integer(BigInt::from_biguint(Sign::Plus, self.mantissa.clone()));
        let v = m * pow_int(
            self.format.base(),
            self.exponent - self.format.precision() as i64,
        );
        if self.negative {
            -v
        } else {
            v
        }
    }
}

impl fmt::Display for FpNumber {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value())
    }
}

/// `e` with `β^(e−1) <= a < β^e`, for `a > 0`.
fn exponent_of(a: &Rational, base: u32) -> i64 {
    if base == 2 {
        return floor_log2_abs(a) + 1;
    }
    let estimate = floor_log2_abs(a) as f64 / (base as f64).log2();
    let mut e = estimate.floor() as i64 + 1;
    while pow_int(base, e - 1) > *a {
        e -= 1;
    }
    while pow_int(base, e) <= *a {
        e += 1;
    }
    e
}

fn largest(format: &FpFormat, negative: bool) -> FpNumber {
    let beta = BigUint::from(format.base());
    let m = num_traits::pow(beta, format.precision() as usize) - BigUint::one();
    FpNumber {
        negative,
        mantissa: m,
        exponent: format.emax().expect("bounded above"),
        format: format.clone(),
    }
}

fn smallest(format: &FpFormat, negative: bool) -> FpNumber {
    let m = num_traits::pow(BigUint::from(format.base()), format.precision() as usize - 1);
    FpNumber {
        negative,
        mantissa: m,
        exponent: format.emin().expect("bounded below"),
        format: format.clone(),
    }
}

/// Rounds `x` to the nearest element of `format`, ties to even mantissa.
///
/// Out-of-range inputs either saturate to the nearest nonzero element or
/// report which bound failed.
pub fn round(x: &Rational, format: &FpFormat, mode: OverflowMode) -> Result<FpNumber, FpError> {
    if x.is_zero() {
        return Ok(FpNumber::zero(format));
    }
    let negative = x.is_negative();
    let a = x.abs();
    if let Some(hi) = format.max_value() {
        if a > hi {
            return match mode {
                OverflowMode::Saturate => Ok(largest(format, negative)),
                OverflowMode::Error => Err(FpError::Overflow {
                    value: Box::new(x.clone()),
                    bound: Box::new(hi),
                }),
            };
        }
    }
    if let Some(lo) = format.min_positive() {
        if a < lo {
            return match mode {
                OverflowMode::Saturate => Ok(smallest(format, negative)),
                OverflowMode::Error => Err(FpError::Underflow {
                    value: Box::new(x.clone()),
                    bound: Box::new(lo),
                }),
            };
        }
    }
    let base = format.base();
    let t = format.precision() as i64;
    let mut e = exponent_of(&a, base);
    let scaled = &a * pow_int(base, t - e);
    let mut m = round_half_even(&scaled)
        .to_biguint()
        .expect("non-negative mantissa");
    let top = num_traits::pow(BigUint::from(base), t as usize);
    if m == top {
        m = num_traits::pow(BigUint::from(base), t as usize - 1);
        e += 1;
    }
    Ok(FpNumber {
        negative,
        mantissa: m,
        exponent: e,
        format: format.clone(),
    })
}

/// `fl(x)` as a rational, saturating on overflow/underflow.
pub fn round_value(x: &Rational, format: &FpFormat) -> Rational {
    round(x, format, OverflowMode::Saturate)
        .expect("saturating rounding is total")
        .value()
}

/// Standard-model operation: exact `a ∘ b`, then rounding into `format`.
pub fn fp_apply(op: ArithOp, a: &Rational, b: &Rational, format: &FpFormat) -> Result<Rational, FpError> {
    fp_apply_with(op, a, b, format, OverflowMode::Saturate)
}

pub fn fp_apply_with(
    op: ArithOp,
    a: &Rational,
    b: &Rational,
    format: &FpFormat,
    mode: OverflowMode,
) -> Result<Rational, FpError> {
    let exact = op.apply(a, b)?;
    Ok(round(&exact, format, mode)?.value())
}

/// Relative error `|approx − exact| / |exact|`; `None` when `exact = 0` and
/// `approx` is not.
pub fn relative_error(approx: &Rational, exact: &Rational) -> Option<Rational> {
    if exact.is_zero() {
        return approx.is_zero().then(Rational::zero);
    }
    Some(((approx - exact) / exact).abs())
}

/// Approximate bit size of a rational, for diagnostics.
pub fn bit_size(x: &Rational) -> u64 {
    x.numer().bits() + x.denom().bits()
}
