use num_bigint::BigInt;
use num_traits::One;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

use super::{round, ArithOp, FpError, FpFormat, OverflowMode};
use crate::rational::{pow2, Rational};

/// Sampled and corner perturbations use `|δ| <= ε(1−2^-SHRINK_EXPONENT)` so
/// that the strict bound `|δ| < ε` holds exactly.
pub const SHRINK_EXPONENT: i64 = 20;

/// `1 − η` with `η = 2^-20`.
pub fn shrink_factor() -> Rational {
    Rational::one() - pow2(-SHRINK_EXPONENT)
}

/// Uniform `δ` on a 2^33-point lattice of `[−ε(1−η), ε(1−η)]`.
pub fn sample_delta<R: Rng + ?Sized>(rng: &mut R, eps: &Rational) -> Rational {
    let half: i64 = 1 << 32;
    let r: i64 = rng.gen_range(0..=2 * half);
    let unit = Rational::new(BigInt::from(r - half), BigInt::from(half));
    eps * shrink_factor() * unit
}

/// A model of arithmetic used by straight-line procedures (grid decoding,
/// Hero's iteration, repeated squaring). Every `apply` counts one operation.
pub trait Arithmetic {
    type Value: Clone;

    /// Lifts an exactly representable built-in constant.
    fn constant(&mut self, c: &Rational) -> Self::Value;

    fn apply(&mut self, op: ArithOp, a: &Self::Value, b: &Self::Value) -> Result<Self::Value, FpError>;

    fn ops(&self) -> u64;
}

#[derive(Debug, Default, Clone)]
pub struct ExactArithmetic {
    ops: u64,
}

impl ExactArithmetic {
    pub fn new() -> Self {
        Self::default()
    }
}

impl Arithmetic for ExactArithmetic {
    type Value = Rational;

    fn constant(&mut self, c: &Rational) -> Rational {
        c.clone()
    }

    fn apply(&mut self, op: ArithOp, a: &Rational, b: &Rational) -> Result<Rational, FpError> {
        self.ops += 1;
        op.apply(a, b)
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}

/// Standard model with round-to-nearest into a fixed format.
#[derive(Debug, Clone)]
pub struct RoundingArithmetic {
    format: FpFormat,
    mode: OverflowMode,
    ops: u64,
}

impl RoundingArithmetic {
    pub fn new(format: FpFormat) -> Self {
        RoundingArithmetic {
            format,
            mode: OverflowMode::Saturate,
            ops: 0,
        }
    }

    pub fn with_mode(format: FpFormat, mode: OverflowMode) -> Self {
        RoundingArithmetic { format, mode, ops: 0 }
    }

    pub fn format(&self) -> &FpFormat {
        &self.format
    }
}

impl Arithmetic for RoundingArithmetic {
    type Value = Rational;

    fn constant(&mut self, c: &Rational) -> Rational {
        round(c, &self.format, OverflowMode::Saturate)
            .expect("saturating")
            .value()
    }

    fn apply(&mut self, op: ArithOp, a: &Rational, b: &Rational) -> Result<Rational, FpError> {
        self.ops += 1;
        let exact = op.apply(a, b)?;
        Ok(round(&exact, &self.format, self.mode)?.value())
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}

/// Standard model where each result is multiplied by a random `(1+δ)`,
/// `|δ| < ε`: one seeded sample from the set of ε-computations.
#[derive(Debug, Clone)]
pub struct RandomArithmetic {
    eps: Rational,
    rng: ChaCha8Rng,
    ops: u64,
}

impl RandomArithmetic {
    pub fn new(eps: Rational, rng: ChaCha8Rng) -> Self {
        RandomArithmetic { eps, rng, ops: 0 }
    }
}

impl Arithmetic for RandomArithmetic {
    type Value = Rational;

    fn constant(&mut self, c: &Rational) -> Rational {
        c.clone()
    }

    fn apply(&mut self, op: ArithOp, a: &Rational, b: &Rational) -> Result<Rational, FpError> {
        self.ops += 1;
        let exact = op.apply(a, b)?;
        let delta = sample_delta(&mut self.rng, &self.eps);
        Ok(exact * (Rational::one() + delta))
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}
