use std::fmt;
use std::str::FromStr;

use num_traits::One;

use super::FpError;
use crate::rational::{ceil_log2, pow_int, Rational};

/// A floating-point number system `(base, precision, emin, emax)`.
///
/// Exponent bounds are optional; `None` models unrestricted exponents, in
/// which every nonzero real is in range.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FpFormat {
    base: u32,
    precision: u32,
    emin: Option<i64>,
    emax: Option<i64>,
}

impl FpFormat {
    pub fn new(
        base: u32,
        precision: u32,
        emin: Option<i64>,
        emax: Option<i64>,
    ) -> Result<Self, FpError> {
        if base < 2 {
            return Err(FpError::InvalidParameter(format!("base {base} < 2")));
        }
        if precision < 2 {
            return Err(FpError::InvalidParameter(format!(
                "precision {precision} < 2"
            )));
        }
        if let (Some(lo), Some(hi)) = (emin, emax) {
            if lo > hi {
                return Err(FpError::InvalidParameter(format!(
                    "emin {lo} > emax {hi}"
                )));
            }
        }
        Ok(FpFormat {
            base,
            precision,
            emin,
            emax,
        })
    }

    pub fn bounded(base: u32, precision: u32, emin: i64, emax: i64) -> Result<Self, FpError> {
        Self::new(base, precision, Some(emin), Some(emax))
    }

    pub fn unbounded(base: u32, precision: u32) -> Result<Self, FpError> {
        Self::new(base, precision, None, None)
    }

    /// Binary system with unrestricted exponents and unit roundoff `2^-precision`.
    pub fn binary(precision: u32) -> Result<Self, FpError> {
        Self::unbounded(2, precision)
    }

    /// Binary system with unrestricted exponents whose unit roundoff is
    /// `2^-k_mach`.
    pub fn with_k_mach(k_mach: u32) -> Result<Self, FpError> {
        Self::binary(k_mach)
    }

    /// Smallest-precision binary unbounded system with unit roundoff `<= u`.
    pub fn binary_with_roundoff_at_most(u: &Rational) -> Result<Self, FpError> {
        if *u <= Rational::from_integer(0.into()) || *u >= Rational::one() {
            return Err(FpError::InvalidParameter(format!(
                "unit roundoff target {u} outside (0,1)"
            )));
        }
        // 2^b <= u < 2^(b+1), so t = -b is the smallest t with 2^-t <= u
        let t = (-crate::rational::floor_log2_abs(u)).max(2);
        Self::binary(t as u32)
    }

    /// The testing-grid system `F_k`: base 2, `t = k+1`,
    /// `-2^k+1 <= e <= 2^(k+1)-1`.
    pub fn fk(k: u32) -> Result<Self, FpError> {
        if k < 1 {
            return Err(FpError::InvalidParameter("k must be >= 1".into()));
        }
        if k > 60 {
            return Err(FpError::InvalidParameter(format!(
                "k = {k} exceeds the supported range"
            )));
        }
        let emin = -(1i64 << k) + 1;
        let emax = (1i64 << (k + 1)) - 1;
        Self::bounded(2, k + 1, emin, emax)
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn emin(&self) -> Option<i64> {
        self.emin
    }

    pub fn emax(&self) -> Option<i64> {
        self.emax
    }

    /// `u = ½·β^(1−t)`.
    pub fn unit_roundoff(&self) -> Rational {
        pow_int(self.base, 1 - self.precision as i64) / Rational::from_integer(2.into())
    }

    /// `⌈log₂(1/u)⌉`.
    pub fn k_mach(&self) -> u32 {
        ceil_log2(&self.unit_roundoff().recip()) as u32
    }

    /// Smallest positive element `β^(emin−1)`, if exponents are bounded below.
    pub fn min_positive(&self) -> Option<Rational> {
        self.emin.map(|e| pow_int(self.base, e - 1))
    }

    /// Largest element `β^emax·(1−β^−t)`, if exponents are bounded above.
    pub fn max_value(&self) -> Option<Rational> {
        self.emax.map(|e| {
            pow_int(self.base, e) * (Rational::one() - pow_int(self.base, -(self.precision as i64)))
        })
    }

    /// Membership in `Range(F)`: zero or a magnitude within the bounds.
    pub fn in_range(&self, x: &Rational) -> bool {
        use num_traits::{Signed, Zero};
        if x.is_zero() {
            return true;
        }
        let a = x.abs();
        if let Some(lo) = self.min_positive() {
            if a < lo {
                return false;
            }
        }
        if let Some(hi) = self.max_value() {
            if a > hi {
                return false;
            }
        }
        true
    }
}

impl fmt::Display for FpFormat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let bound = |e: Option<i64>| e.map_or_else(|| "*".to_string(), |v| v.to_string());
        write!(
            f,
            "fp {} {} {} {}",
            self.base,
            self.precision,
            bound(self.emin),
            bound(self.emax)
        )
    }
}

impl FromStr for FpFormat {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = || FpError::InvalidParameter(format!("malformed format `{s}`"));
        let parts: Vec<&str> = s.split_whitespace().collect();
        if parts.len() != 5 || parts[0] != "fp" {
            return Err(bad());
        }
        let base = parts[1].parse().map_err(|_| bad())?;
        let precision = parts[2].parse().map_err(|_| bad())?;
        let bound = |p: &str| -> Result<Option<i64>, FpError> {
            if p == "*" {
                Ok(None)
            } else {
                p.parse().map(Some).map_err(|_| bad())
            }
        };
        FpFormat::new(base, precision, bound(parts[3])?, bound(parts[4])?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn fk_parameters() {
        let f5 = FpFormat::fk(5).unwrap();
        assert_eq!(f5.base(), 2);
        assert_eq!(f5.precision(), 6);
        assert_eq!(f5.emin(), Some(-31));
        assert_eq!(f5.emax(), Some(63));
        assert_eq!(f5.unit_roundoff(), r(1, 64));

        let f1 = FpFormat::fk(1).unwrap();
        assert_eq!(f1.min_positive().unwrap(), r(1, 4));
        assert_eq!(f1.max_value().unwrap(), r(6, 1));
        assert!(FpFormat::fk(0).is_err());
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(FpFormat::new(1, 3, None, None).is_err());
        assert!(FpFormat::new(2, 1, None, None).is_err());
        assert!(FpFormat::bounded(2, 3, 4, -4).is_err());
    }

    #[test]
    fn text_form_round_trips() {
        for f in [
            FpFormat::bounded(2, 3, -4, 4).unwrap(),
            FpFormat::unbounded(10, 5).unwrap(),
            FpFormat::new(3, 4, Some(-2), None).unwrap(),
        ] {
            let s = f.to_string();
            assert_eq!(s.parse::<FpFormat>().unwrap(), f);
        }
        assert_eq!(FpFormat::unbounded(2, 3).unwrap().to_string(), "fp 2 3 * *");
        assert!("fp 2 x * *".parse::<FpFormat>().is_err());
    }

    #[test]
    fn k_mach_and_roundoff_targets() {
        assert_eq!(FpFormat::binary(7).unwrap().k_mach(), 7);
        assert_eq!(FpFormat::unbounded(10, 3).unwrap().k_mach(), 8); // u = 0.005
        let f = FpFormat::binary_with_roundoff_at_most(&r(1, 1600)).unwrap();
        assert_eq!(f.precision(), 11);
        let f = FpFormat::binary_with_roundoff_at_most(&r(1, 1024)).unwrap();
        assert_eq!(f.precision(), 10);
    }
}
