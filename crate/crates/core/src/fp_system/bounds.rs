use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use super::FpError;
use crate::rational::{ceil_log2, floor_log2_abs, pow2, ExtRational, Rational};

/// `γ_n = n·u / (1 − n·u)`, the bound on `|θ_n|` for a product of `n`
/// factors `(1+δ_i)^(±1)` with `|δ_i| <= u`.
pub fn gamma_bound(n: u64, u: &Rational) -> Result<Rational, FpError> {
    let nu = Rational::from_integer(BigInt::from(n)) * u;
    if nu >= Rational::one() {
        return Err(FpError::PreconditionViolated(format!(
            "n·u = {nu} is not below 1"
        )));
    }
    Ok(&nu / (Rational::one() - &nu))
}

/// Whether `x ∈ Range(F_k)`, decided from the binary exponent of `|x|`.
pub fn in_fk_range(x: &Rational, k: u32) -> bool {
    if x.is_zero() {
        return true;
    }
    let b = floor_log2_abs(x) as i128;
    // lower bound 2^(-2^k) holds iff 2^b >= 2^(-2^k)
    if k < 126 && b < -(1i128 << k) {
        return false;
    }
    if k >= 62 {
        return true;
    }
    // largest element 2^E (1 − 2^(−k−1)) with E = 2^(k+1) − 1 lies in [2^(E−1), 2^E)
    let top = (1i128 << (k + 1)) - 1;
    if b <= top - 2 {
        true
    } else if b >= top {
        false
    } else {
        let max = pow2(top as i64) * (Rational::one() - pow2(-(k as i64) - 1));
        x.abs() <= max
    }
}

/// `mgt(x) = min{k >= 1 | x ∈ Range(F_k)}`.
pub fn magnitude(x: &Rational) -> u32 {
    let mut k = 1;
    if !x.is_zero() {
        // skip ahead: the lower bound needs 2^k >= -b, the upper one 2^(k+1) > b + 1
        let b = floor_log2_abs(x);
        let need = b.unsigned_abs().max(1);
        let start = 64 - need.leading_zeros();
        k = start.saturating_sub(2).max(1);
    }
    while !in_fk_range(x, k) {
        k += 1;
    }
    k
}

/// `mgt` of a vector: the largest coordinate magnitude (1 for the empty vector).
pub fn magnitude_vec(xs: &[Rational]) -> u32 {
    xs.iter().map(magnitude).max().unwrap_or(1)
}

/// Natural number or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum ExtNat {
    Finite(u64),
    Infinite,
}

impl fmt::Display for ExtNat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExtNat::Finite(n) => write!(f, "{n}"),
            ExtNat::Infinite => f.write_str("inf"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SizeInfo {
    pub length: u64,
    pub log_mu: ExtNat,
    pub size: ExtNat,
}

/// `size = length + ⌈log₂ μ⌉`, infinite exactly when `μ` is.
pub fn size_of(length: u64, mu: &ExtRational) -> Result<SizeInfo, FpError> {
    let log_mu = match mu {
        ExtRational::Infinite => ExtNat::Infinite,
        ExtRational::Finite(m) => {
            if *m < Rational::one() {
                return Err(FpError::InvalidParameter(format!(
                    "condition number {m} < 1"
                )));
            }
            debug_assert!(m.is_positive());
            ExtNat::Finite(ceil_log2(m) as u64)
        }
    };
    let size = match log_mu {
        ExtNat::Finite(l) => ExtNat::Finite(length + l),
        ExtNat::Infinite => ExtNat::Infinite,
    };
    Ok(SizeInfo {
        length,
        log_mu,
        size,
    })
}
