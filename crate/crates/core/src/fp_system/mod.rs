//! Floating-point number systems and the standard model of arithmetic.
//!
//! Values are exact rationals throughout; a format only decides where
//! rounding lands. Unbounded exponent ranges are first-class and are the
//! default for perturbation work.

mod arith;
mod bounds;
mod format;
mod round;

use std::fmt;
use std::str::FromStr;

use num_traits::Zero;
use thiserror::Error;

use crate::rational::Rational;

pub use arith::{
    sample_delta, shrink_factor, Arithmetic, ExactArithmetic, RandomArithmetic,
    RoundingArithmetic, SHRINK_EXPONENT,
};
pub use bounds::{gamma_bound, in_fk_range, magnitude, magnitude_vec, size_of, ExtNat, SizeInfo};
pub use format::FpFormat;
pub use round::{
    bit_size, fp_apply, fp_apply_with, relative_error, round, round_value, FpNumber,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FpError {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("overflow: |{value}| exceeds the largest element {bound}")]
    Overflow { value: Box<Rational>, bound: Box<Rational> },
    #[error("underflow: 0 < |{value}| below the smallest positive element {bound}")]
    Underflow { value: Box<Rational>, bound: Box<Rational> },
    #[error("division by zero")]
    Domain,
    #[error("precondition violated: {0}")]
    PreconditionViolated(String),
}

/// What rounding does with values outside `Range(F)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum OverflowMode {
    /// Map to the nearest nonzero element.
    #[default]
    Saturate,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ArithOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl ArithOp {
    pub const ALL: [ArithOp; 4] = [ArithOp::Add, ArithOp::Sub, ArithOp::Mul, ArithOp::Div];

    /// Exact result; `Div` by zero is a domain error.
    pub fn apply(self, a: &Rational, b: &Rational) -> Result<Rational, FpError> {
        Ok(match self {
            ArithOp::Add => a + b,
            ArithOp::Sub => a - b,
            ArithOp::Mul => a * b,
            ArithOp::Div => {
                if b.is_zero() {
                    return Err(FpError::Domain);
                }
                a / b
            }
        })
    }

    pub fn keyword(self) -> &'static str {
        match self {
            ArithOp::Add => "add",
            ArithOp::Sub => "sub",
            ArithOp::Mul => "mul",
            ArithOp::Div => "div",
        }
    }

    pub fn symbol(self) -> char {
        match self {
            ArithOp::Add => '+',
            ArithOp::Sub => '-',
            ArithOp::Mul => '*',
            ArithOp::Div => '/',
        }
    }
}

impl fmt::Display for ArithOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.keyword())
    }
}

impl FromStr for ArithOp {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "add" | "+" => Ok(ArithOp::Add),
            "sub" | "-" => Ok(ArithOp::Sub),
            "mul" | "*" | "x" => Ok(ArithOp::Mul),
            "div" | "/" => Ok(ArithOp::Div),
            _ => Err(FpError::InvalidParameter(format!("unknown operation `{s}`"))),
        }
    }
}
