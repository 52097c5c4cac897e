use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::fp_system::ArithOp;
use crate::rational::{round_significant, Direction, Rational};

/// A closed interval `[lo, hi]` with exact rational endpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interval {
    lo: Rational,
    hi: Rational,
}

impl Interval {
    pub fn new(lo: Rational, hi: Rational) -> Self {
        assert!(lo <= hi, "interval endpoints out of order");
        Interval { lo, hi }
    }

    pub fn point(x: Rational) -> Self {
        Interval {
            lo: x.clone(),
            hi: x,
        }
    }

    pub fn lo(&self) -> &Rational {
        &self.lo
    }

    pub fn hi(&self) -> &Rational {
        &self.hi
    }

    pub fn contains(&self, x: &Rational) -> bool {
        self.lo <= *x && *x <= self.hi
    }

    pub fn contains_zero(&self) -> bool {
        !self.lo.is_positive() && !self.hi.is_negative()
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn width(&self) -> Rational {
        &self.hi - &self.lo
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval {
            lo: self.lo.clone().min(other.lo.clone()),
            hi: self.hi.clone().max(other.hi.clone()),
        }
    }

    pub fn add(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo + &o.lo,
            hi: &self.hi + &o.hi,
        }
    }

    pub fn sub(&self, o: &Interval) -> Interval {
        Interval {
            lo: &self.lo - &o.hi,
            hi: &self.hi - &o.lo,
        }
    }

    pub fn mul(&self, o: &Interval) -> Interval {
        let p = [
            &self.lo * &o.lo,
            &self.lo * &o.hi,
            &self.hi * &o.lo,
            &self.hi * &o.hi,
        ];
        Self::span(p)
    }

    /// `None` when the divisor contains zero.
    pub fn div(&self, o: &Interval) -> Option<Interval> {
        if o.contains_zero() {
            return None;
        }
        let r = Interval {
            lo: o.hi.recip(),
            hi: o.lo.recip(),
        };
        Some(self.mul(&r))
    }

    pub fn apply(&self, op: ArithOp, o: &Interval) -> Option<Interval> {
        match op {
            ArithOp::Add => Some(self.add(o)),
            ArithOp::Sub => Some(self.sub(o)),
            ArithOp::Mul => Some(self.mul(o)),
            ArithOp::Div => self.div(o),
        }
    }

    /// Product with the factor interval `[1−ε, 1+ε]`, for `0 <= ε < 1`.
    pub fn perturb(&self, eps: &Rational) -> Interval {
        let f = Interval {
            lo: Rational::one() - eps,
            hi: Rational::one() + eps,
        };
        self.mul(&f)
    }

    /// Widens endpoints outward to `bits` significant bits.
    pub fn round_outward(&self, bits: u32) -> Interval {
        Interval {
            lo: round_significant(&self.lo, bits, Direction::Down),
            hi: round_significant(&self.hi, bits, Direction::Up),
        }
    }

    fn span(values: [Rational; 4]) -> Interval {
        let mut lo = values[0].clone();
        let mut hi = values[0].clone();
        for v in &values[1..] {
            if *v < lo {
                lo = v.clone();
            }
            if *v > hi {
                hi = v.clone();
            }
        }
        Interval { lo, hi }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl From<Rational> for Interval {
    fn from(x: Rational) -> Self {
        Interval::point(x)
    }
}

impl Default for Interval {
    fn default() -> Self {
        Interval::point(Rational::zero())
    }
}
