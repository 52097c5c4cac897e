use std::fmt;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::FeasError;
use crate::rational::{pow2, Rational};

/// Largest `k` accepted by grid codes; keeps mantissas in a `u64`.
pub const MAX_K: u32 = 40;

/// The testing grid `F_k^n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct GridSpec {
    k: u32,
    n: usize,
}

impl GridSpec {
    pub fn new(k: u32, n: usize) -> Result<Self, FeasError> {
        if k == 0 || k > MAX_K {
            return Err(FeasError::InvalidParameter(format!(
                "grid level k = {k} outside 1..={MAX_K}"
            )));
        }
        if n == 0 {
            return Err(FeasError::InvalidParameter("grid needs n >= 1".into()));
        }
        Ok(GridSpec { k, n })
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn emin(&self) -> i64 {
        -(1i64 << self.k) + 1
    }

    pub fn emax(&self) -> i64 {
        (1i64 << (self.k + 1)) - 1
    }

    /// Nonzero elements of one sign: `(3·2^k − 1)·2^k`.
    fn half(&self) -> u64 {
        ((3u64 << self.k) - 1) << self.k
    }

    /// `|F_k| = 2·(3·2^k − 1)·2^k + 1`.
    pub fn per_coordinate(&self) -> u64 {
        2 * self.half() + 1
    }

    /// `|F_k|^n`, or `None` when it does not fit in 128 bits.
    pub fn cardinality(&self) -> Option<u128> {
        let c = self.per_coordinate() as u128;
        (0..self.n).try_fold(1u128, |acc, _| acc.checked_mul(c))
    }

    /// Coordinate code at position `i` of the per-coordinate order.
    pub fn coord_at(&self, i: u64) -> CoordCode {
        let half = self.half();
        if i >= 2 * half {
            return CoordCode::Zero;
        }
        let negative = i >= half;
        let j = i % half;
        CoordCode::Nonzero {
            negative,
            exponent: self.emin() + (j >> self.k) as i64,
            mantissa: (1u64 << self.k) | (j & ((1u64 << self.k) - 1)),
        }
    }

    /// Grid code at position `index` of the lexicographic order; the first
    /// coordinate is the most significant.
    pub fn code_at(&self, mut index: u128) -> GridCode {
        let c = self.per_coordinate() as u128;
        let mut coords = vec![CoordCode::Zero; self.n];
        for slot in coords.iter_mut().rev() {
            *slot = self.coord_at((index % c) as u64);
            index /= c;
        }
        GridCode { k: self.k, coords }
    }

    /// Position of a coordinate code in the per-coordinate order.
    pub fn coord_index(&self, code: &CoordCode) -> u64 {
        match *code {
            CoordCode::Zero => 2 * self.half(),
            CoordCode::Nonzero {
                negative,
                exponent,
                mantissa,
            } => {
                let j = (((exponent - self.emin()) as u64) << self.k) | (mantissa - (1u64 << self.k));
                if negative {
                    j + self.half()
                } else {
                    j
                }
            }
        }
    }
}

/// One coordinate of a grid point: zero, or `±m·2^(e−(k+1))` with
/// `2^k <= m < 2^(k+1)` (leading digit `d_1 = 1`).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CoordCode {
    Zero,
    Nonzero {
        negative: bool,
        exponent: i64,
        mantissa: u64,
    },
}

impl CoordCode {
    pub fn nonzero(negative: bool, exponent: i64, mantissa: u64, k: u32) -> Result<Self, FeasError> {
        let code = CoordCode::Nonzero {
            negative,
            exponent,
            mantissa,
        };
        code.check(k)?;
        Ok(code)
    }

    /// Builds from the digit list `d_1 … d_{k+1}`.
    pub fn from_digits(negative: bool, exponent: i64, digits: &[u8], k: u32) -> Result<Self, FeasError> {
        if digits.len() != k as usize + 1 || digits.iter().any(|&d| d > 1) {
            return Err(FeasError::InvalidCode(format!(
                "expected {} binary digits",
                k + 1
            )));
        }
        let m = digits.iter().fold(0u64, |acc, &d| (acc << 1) | d as u64);
        Self::nonzero(negative, exponent, m, k)
    }

    pub fn check(&self, k: u32) -> Result<(), FeasError> {
        if let CoordCode::Nonzero {
            exponent, mantissa, ..
        } = *self
        {
            if k == 0 || k > MAX_K {
                return Err(FeasError::InvalidParameter(format!("grid level k = {k}")));
            }
            if mantissa >> k != 1 {
                return Err(FeasError::InvalidCode(format!(
                    "mantissa {mantissa:#b} does not have k+1 = {} digits with d_1 = 1",
                    k + 1
                )));
            }
            let lo = -(1i64 << k) + 1;
            let hi = (1i64 << (k + 1)) - 1;
            if exponent < lo || exponent > hi {
                return Err(FeasError::InvalidCode(format!(
                    "exponent {exponent} outside [{lo}, {hi}]"
                )));
            }
        }
        Ok(())
    }

    /// Digits `d_1 … d_{k+1}`; all zero for the zero code.
    pub fn digits(&self, k: u32) -> Vec<u8> {
        let m = match *self {
            CoordCode::Zero => 0,
            CoordCode::Nonzero { mantissa, .. } => mantissa,
        };
        (0..=k).rev().map(|i| ((m >> i) & 1) as u8).collect()
    }

    /// Direct value `±m·2^(e−k−1)`.
    pub fn value(&self, k: u32) -> Rational {
        match *self {
            CoordCode::Zero => Rational::zero(),
            CoordCode::Nonzero {
                negative,
                exponent,
                mantissa,
            } => {
                let v = Rational::from_integer(mantissa.into()) * pow2(exponent - k as i64 - 1);
                if negative {
                    -v
                } else {
                    v
                }
            }
        }
    }

    /// Packed bits: zero-flag(1) | sign(1) | e + 2^k (k+2 bits) | d_2..d_{k+1} (k bits).
    pub fn pack(&self, k: u32) -> BigUint {
        let width = k + 2;
        match *self {
            CoordCode::Zero => BigUint::one() << (2 * k + 3) as usize,
            CoordCode::Nonzero {
                negative,
                exponent,
                mantissa,
            } => {
                let e = (exponent + (1i64 << k)) as u64;
                let mut v = BigUint::from(negative as u8);
                v = (v << width as usize) | BigUint::from(e);
                v = (v << k as usize) | BigUint::from(mantissa & ((1u64 << k) - 1));
                v
            }
        }
    }

    pub fn unpack(bits: &BigUint, k: u32) -> Result<Self, FeasError> {
        let total = 2 * k + 4;
        if bits.bits() > total as u64 {
            return Err(FeasError::InvalidCode("packed coordinate too wide".into()));
        }
        if bits.bit((2 * k + 3) as u64) {
            if bits.bits() != total as u64 || bits.count_ones() != 1 {
                return Err(FeasError::InvalidCode("zero code with payload".into()));
            }
            return Ok(CoordCode::Zero);
        }
        let field = |lo: u32, width: u32| -> u64 {
            let mask = (BigUint::one() << width as usize) - BigUint::one();
            let f: BigUint = (bits >> lo as usize) & mask;
            f.iter_u64_digits().next().unwrap_or(0)
        };
        let digits = field(0, k);
        let e = field(k, k + 2) as i64 - (1i64 << k);
        let negative = field(2 * k + 2, 1) == 1;
        Self::nonzero(negative, e, (1u64 << k) | digits, k)
    }
}

/// A point of `F_k^n` given by its per-coordinate codes.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GridCode {
    pub k: u32,
    pub coords: Vec<CoordCode>,
}

impl GridCode {
    pub fn new(k: u32, coords: Vec<CoordCode>) -> Result<Self, FeasError> {
        for c in &coords {
            c.check(k)?;
        }
        Ok(GridCode { k, coords })
    }

    pub fn values(&self) -> Vec<Rational> {
        self.coords.iter().map(|c| c.value(self.k)).collect()
    }

    pub fn coord_bits(k: u32) -> u32 {
        2 * k + 4
    }

    pub fn pack(&self) -> BigUint {
        let w = Self::coord_bits(self.k) as usize;
        self.coords
            .iter()
            .fold(BigUint::zero(), |acc, c| (acc << w) | c.pack(self.k))
    }

    pub fn unpack(bits: &BigUint, k: u32, n: usize) -> Result<Self, FeasError> {
        let w = Self::coord_bits(k) as usize;
        if bits.bits() > (w * n) as u64 {
            return Err(FeasError::InvalidCode("packed code too wide".into()));
        }
        let mask = (BigUint::one() << w) - BigUint::one();
        let coords = (0..n)
            .rev()
            .map(|j| CoordCode::unpack(&((bits >> (j * w)) & &mask), k))
            .collect::<Result<_, _>>()?;
        Ok(GridCode { k, coords })
    }

    /// Lowercase hex of the packed bits, zero-padded to whole nibbles.
    pub fn hex(&self) -> String {
        let nibbles = (Self::coord_bits(self.k) as usize * self.coords.len()).div_ceil(4);
        format!("{:0>width$}", self.pack().to_str_radix(16), width = nibbles)
    }

    pub fn from_hex(text: &str, k: u32, n: usize) -> Result<Self, FeasError> {
        let bits = BigUint::parse_bytes(text.trim().as_bytes(), 16)
            .ok_or_else(|| FeasError::InvalidCode(format!("bad hex `{text}`")))?;
        Self::unpack(&bits, k, n)
    }
}

impl fmt::Display for GridCode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.hex())
    }
}

/// Lexicographic stream over `F_k^n` with exact values.
#[derive(Debug, Clone)]
pub struct GridIter {
    spec: GridSpec,
    next: u128,
    end: u128,
}

impl Iterator for GridIter {
    type Item = (GridCode, Vec<Rational>);

    fn next(&mut self) -> Option<Self::Item> {
        if self.next >= self.end {
            return None;
        }
        let code = self.spec.code_at(self.next);
        self.next += 1;
        let values = code.values();
        Some((code, values))
    }

    fn size_hint(&self) -> (usize, Option<usize>) {
        let n = (self.end - self.next) as usize;
        (n, Some(n))
    }
}

impl ExactSizeIterator for GridIter {}

/// Points of the grid in packed-code order. Fails when `|F_k|^n > cap`.
pub fn enumerate_grid(spec: GridSpec, cap: u64) -> Result<GridIter, FeasError> {
    let total = check_cap(&spec, cap)?;
    Ok(GridIter {
        spec,
        next: 0,
        end: total,
    })
}

pub(crate) fn check_cap(spec: &GridSpec, cap: u64) -> Result<u128, FeasError> {
    match spec.cardinality() {
        Some(total) if total <= cap as u128 => Ok(total),
        total => Err(FeasError::CapExceeded {
            points: total,
            cap,
        }),
    }
}
