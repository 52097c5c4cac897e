use num_traits::{One, Signed};

use crate::fp_system::{Arithmetic, ArithOp, ExactArithmetic, FpError, FpFormat, RoundingArithmetic};
use crate::rational::{ceil_log2, floor_log2_abs, pow2, pow_int, Rational};

/// Constant `C` in the error law `3/2^(k+1) + C·u`; the schedule asks for
/// `u <= ε/(2C)`.
pub const C_DEFAULT: u32 = 8;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HeroRun {
    pub a: Rational,
    pub epsilon: Rational,
    /// Scaled radicand in `[1, 4)`; of `1/a` on the reciprocal path.
    pub b: Rational,
    pub q: i64,
    pub reciprocal: bool,
    pub iterations: u32,
    /// `None` for exact arithmetic.
    pub u_mach_used: Option<Rational>,
    pub result: Rational,
    pub iterates: Vec<Rational>,
    pub ops: u64,
}

impl HeroRun {
    /// `3/2^(k+1) + C·u`.
    pub fn error_bound(&self) -> Rational {
        let c = Rational::from_integer(C_DEFAULT.into());
        let u = self.u_mach_used.clone().unwrap_or_default();
        Rational::from_integer(3.into()) * pow2(-(self.iterations as i64) - 1) + c * u
    }
}

/// `⌈−log₂ ε⌉ + 2`.
pub fn hero_iterations(eps: &Rational) -> u32 {
    (ceil_log2(&eps.recip()) + 2) as u32
}

/// Smallest binary precision meeting `u <= ε/(2C)`.
pub fn hero_format(eps: &Rational) -> Result<FpFormat, FpError> {
    FpFormat::binary_with_roundoff_at_most(&(eps / Rational::from_integer((2 * C_DEFAULT).into())))
}

fn check(a: &Rational, eps: &Rational) -> Result<(), FpError> {
    if !a.is_positive() {
        return Err(FpError::PreconditionViolated(format!("radicand {a} is not positive")));
    }
    if !eps.is_positive() || *eps >= Rational::one() {
        return Err(FpError::PreconditionViolated(format!("accuracy {eps} outside (0, 1)")));
    }
    Ok(())
}

/// Hero's iteration `x ← ½(x + b/x)` from `x₀ = 5/2` in the given format.
pub fn hero_sqrt(a: &Rational, eps: &Rational, fmt: &FpFormat) -> Result<HeroRun, FpError> {
    check(a, eps)?;
    let limit = eps / Rational::from_integer((2 * C_DEFAULT).into());
    if fmt.unit_roundoff() > limit {
        return Err(FpError::PreconditionViolated(format!(
            "unit roundoff {} exceeds ε/(2C) = {limit}",
            fmt.unit_roundoff()
        )));
    }
    let mut arith = RoundingArithmetic::new(fmt.clone());
    let mut run = hero_with(a, eps, &mut arith)?;
    run.u_mach_used = Some(fmt.unit_roundoff());
    Ok(run)
}

/// The same procedure over exact rationals.
pub fn hero_sqrt_exact(a: &Rational, eps: &Rational) -> Result<HeroRun, FpError> {
    check(a, eps)?;
    hero_with(a, eps, &mut ExactArithmetic::new())
}

fn hero_with<A: Arithmetic<Value = Rational>>(a: &Rational, eps: &Rational, arith: &mut A) -> Result<HeroRun, FpError> {
    let one = Rational::one();
    let read = arith.constant(a);
    let reciprocal = read < one;
    let radicand = if reciprocal {
        let c1 = arith.constant(&one);
        arith.apply(ArithOp::Div, &c1, &read)?
    } else {
        read
    };
    // a = b·4^q with b in [1, 4): a discrete exponent computation, exact in base 2
    let q = floor_log2_abs(&radicand).div_euclid(2);
    let b = &radicand * pow_int(4, -q);
    debug_assert!(b >= one && b < Rational::from_integer(4.into()));

    let iterations = hero_iterations(eps);
    let half = arith.constant(&Rational::new(1.into(), 2.into()));
    let mut x = arith.constant(&Rational::new(5.into(), 2.into()));
    let mut iterates = vec![x.clone()];
    for _ in 0..iterations {
        let ratio = arith.apply(ArithOp::Div, &b, &x)?;
        let sum = arith.apply(ArithOp::Add, &x, &ratio)?;
        x = arith.apply(ArithOp::Mul, &sum, &half)?;
        iterates.push(x.clone());
    }
    let scaled = &x * pow2(q);
    let result = if reciprocal {
        let c1 = arith.constant(&one);
        arith.apply(ArithOp::Div, &c1, &scaled)?
    } else {
        scaled
    };
    Ok(HeroRun {
        a: a.clone(),
        epsilon: eps.clone(),
        b,
        q,
        reciprocal,
        iterations,
        u_mach_used: None,
        result,
        iterates,
        ops: arith.ops(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fp_system::relative_error;
    use crate::rational::{parse_rational, sqrt_bounds};

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn oracle_error(run: &HeroRun) -> Rational {
        let (lo, hi) = sqrt_bounds(&run.a, 256);
        let e_lo = relative_error(&run.result, &lo).unwrap();
        let e_hi = relative_error(&run.result, &hi).unwrap();
        e_lo.max(e_hi)
    }

    #[test]
    fn perfect_square() {
        let eps = r(1, 100);
        let run = hero_sqrt(&r(4, 1), &eps, &hero_format(&eps).unwrap()).unwrap();
        assert_eq!(run.b, r(1, 1));
        assert_eq!(run.q, 1);
        assert_eq!(run.iterations, 9);
        assert!(oracle_error(&run) < eps);
    }

    #[test]
    fn two_and_one_half() {
        let eps = parse_rational("1e-4").unwrap();
        let fmt = hero_format(&eps).unwrap();
        let run = hero_sqrt(&r(2, 1), &eps, &fmt).unwrap();
        assert!(oracle_error(&run) < eps);
        assert!((crate::rational::to_f64(&run.result) - std::f64::consts::SQRT_2).abs() < 1e-4);
        let run = hero_sqrt(&r(1, 2), &eps, &fmt).unwrap();
        assert!(run.reciprocal);
        assert!(oracle_error(&run) < eps);
        assert!((crate::rational::to_f64(&run.result) - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-4);
    }

    #[test]
    fn schedule_is_enforced() {
        let eps = r(1, 100);
        assert!(hero_sqrt(&r(2, 1), &eps, &FpFormat::binary(5).unwrap()).is_err());
        assert!(hero_sqrt(&r(-2, 1), &eps, &hero_format(&eps).unwrap()).is_err());
        assert_eq!(hero_format(&eps).unwrap().unit_roundoff(), pow2(-11));
    }
}
