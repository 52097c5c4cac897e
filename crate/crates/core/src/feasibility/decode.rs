use num_traits::{One, Zero};

use super::grid::{CoordCode, GridCode};
use super::FeasError;
use crate::circuit::Interval;
use crate::fp_system::{Arithmetic, ArithOp, FpError};
use crate::rational::Rational;

/// Straight-line decoding of one coordinate code with `O(k)` operations.
///
/// `2^|e|` comes from repeated squaring `p_0 = 2`, `p_{j+1} = p_j²`,
/// multiplying the needed `p_j` smallest first; a negative exponent takes
/// one reciprocal. The mantissa is `Σ d_i·h_i` with `h_1 = ½` and
/// `h_i = h_{i−1}·½`. Only the constants 0, 1, 2 and ½ are used, all exact.
pub fn decode_grid_point<A: Arithmetic>(
    code: &CoordCode,
    k: u32,
    arith: &mut A,
) -> Result<A::Value, FeasError> {
    code.check(k)?;
    let CoordCode::Nonzero {
        negative,
        exponent,
        mantissa,
    } = *code
    else {
        return Ok(arith.constant(&Rational::zero()));
    };
    let fp = |e: FpError| FeasError::Arithmetic(e);
    let one = Rational::one();
    let half = Rational::new(1.into(), 2.into());

    let power = {
        let mut bits = exponent.unsigned_abs();
        let mut p = arith.constant(&Rational::from_integer(2.into()));
        let mut acc: Option<A::Value> = None;
        while bits > 0 {
            if bits & 1 == 1 {
                acc = Some(match acc {
                    None => p.clone(),
                    Some(a) => arith.apply(ArithOp::Mul, &a, &p).map_err(fp)?,
                });
            }
            bits >>= 1;
            if bits > 0 {
                p = arith.apply(ArithOp::Mul, &p, &p).map_err(fp)?;
            }
        }
        match acc {
            None => arith.constant(&one),
            Some(a) if exponent < 0 => {
                let c1 = arith.constant(&one);
                arith.apply(ArithOp::Div, &c1, &a).map_err(fp)?
            }
            Some(a) => a,
        }
    };

    let h_step = arith.constant(&half);
    let mut h = h_step.clone();
    let mut sum = h.clone();
    for i in (0..k).rev() {
        h = arith.apply(ArithOp::Mul, &h, &h_step).map_err(fp)?;
        if (mantissa >> i) & 1 == 1 {
            sum = arith.apply(ArithOp::Add, &sum, &h).map_err(fp)?;
        }
    }
    let y = arith.apply(ArithOp::Mul, &sum, &power).map_err(fp)?;
    if negative {
        let zero = arith.constant(&Rational::zero());
        arith.apply(ArithOp::Sub, &zero, &y).map_err(fp)
    } else {
        Ok(y)
    }
}

/// Decodes every coordinate of a grid code.
pub fn decode_grid_code<A: Arithmetic>(code: &GridCode, arith: &mut A) -> Result<Vec<A::Value>, FeasError> {
    code.coords
        .iter()
        .map(|c| decode_grid_point(c, code.k, arith))
        .collect()
}

/// Interval model of ε-arithmetic: every result is widened by `[1−ε, 1+ε]`.
/// Constants are exact. Encloses every run of [`crate::fp_system::RandomArithmetic`]
/// and every rounded run with unit roundoff at most ε.
#[derive(Debug, Clone)]
pub struct IntervalArithmetic {
    eps: Rational,
    ops: u64,
}

impl IntervalArithmetic {
    pub fn new(eps: Rational) -> Self {
        IntervalArithmetic { eps, ops: 0 }
    }
}

impl Arithmetic for IntervalArithmetic {
    type Value = Interval;

    fn constant(&mut self, c: &Rational) -> Interval {
        Interval::point(c.clone())
    }

    fn apply(&mut self, op: ArithOp, a: &Interval, b: &Interval) -> Result<Interval, FpError> {
        self.ops += 1;
        a.apply(op, b)
            .map(|r| r.perturb(&self.eps))
            .ok_or(FpError::Domain)
    }

    fn ops(&self) -> u64 {
        self.ops
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feasibility::{enumerate_grid, GridSpec};
    use crate::fp_system::{ExactArithmetic, FpFormat, RoundingArithmetic};

    #[test]
    fn decodes_six_exactly() {
        let c = CoordCode::from_digits(false, 3, &[1, 1, 0, 0], 3).unwrap();
        let mut a = ExactArithmetic::new();
        assert_eq!(decode_grid_point(&c, 3, &mut a).unwrap(), Rational::from_integer(6.into()));
        assert!(a.ops() <= 12);
        let mut a = ExactArithmetic::new();
        assert!(decode_grid_point(&CoordCode::Zero, 3, &mut a).unwrap().is_zero());
        assert_eq!(a.ops(), 0);
    }

    #[test]
    fn exact_decode_matches_enumeration() {
        for k in 1..=3 {
            for (code, values) in enumerate_grid(GridSpec::new(k, 1).unwrap(), 1 << 20).unwrap() {
                let mut a = ExactArithmetic::new();
                assert_eq!(decode_grid_code(&code, &mut a).unwrap(), values);
                assert!(a.ops() <= 4 * (k as u64 + 2));
            }
        }
    }

    #[test]
    fn rounded_decode_within_interval() {
        let k = 3;
        let fmt = FpFormat::binary(2 * k).unwrap();
        let eps = fmt.unit_roundoff();
        for (code, values) in enumerate_grid(GridSpec::new(k, 1).unwrap(), 1 << 20).unwrap() {
            let mut r = RoundingArithmetic::new(fmt.clone());
            let mut iv = IntervalArithmetic::new(eps.clone());
            let y = decode_grid_code(&code, &mut r).unwrap();
            let b = decode_grid_code(&code, &mut iv).unwrap();
            assert!(b[0].contains(&y[0]) && b[0].contains(&values[0]));
        }
    }
}
