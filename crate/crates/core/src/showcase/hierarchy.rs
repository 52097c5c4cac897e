use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt;
use std::str::FromStr;

use num_traits::{One, Signed, Zero};

use crate::fp_system::{round_value, ExtNat, FpError, FpFormat, OverflowMode};
use crate::rational::{pow2, round_significant, sqrt_bounds, to_f64, Direction, Rational};

/// Exponent bound of the squaring format. Values that leave the range are
/// already decided (above stays `>= ½`, below stays `< ½`), so saturation
/// never changes a verdict.
pub const SQUARING_EXPONENT_RANGE: i64 = 4096;

const START_BITS: u32 = 96;
const MAX_BITS: u32 = 1 << 14;

/// Named cost functions `T(length)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CostFn {
    Linear,
    Quadratic,
    Exp,
    Constant(u32),
}

impl CostFn {
    pub fn eval(&self, length: u32) -> u32 {
        match *self {
            CostFn::Linear => length,
            CostFn::Quadratic => length.saturating_mul(length),
            CostFn::Exp => 1u32.checked_shl(length).unwrap_or(u32::MAX),
            CostFn::Constant(c) => c,
        }
    }
}

impl fmt::Display for CostFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CostFn::Linear => f.write_str("linear"),
            CostFn::Quadratic => f.write_str("quadratic"),
            CostFn::Exp => f.write_str("exp"),
            CostFn::Constant(c) => write!(f, "const-{c}"),
        }
    }
}

impl FromStr for CostFn {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, FpError> {
        match s {
            "linear" => Ok(CostFn::Linear),
            "quadratic" => Ok(CostFn::Quadratic),
            "exp" => Ok(CostFn::Exp),
            _ => s
                .strip_prefix("const-")
                .and_then(|c| c.parse().ok())
                .map(CostFn::Constant)
                .ok_or_else(|| FpError::InvalidParameter(format!("unknown cost function `{s}`"))),
        }
    }
}

/// Named precision functions `P2(s)`, continuous and increasing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum PrecisionFn {
    Identity,
    /// `P2(s) = c·s`.
    Linear(u32),
}

impl PrecisionFn {
    fn slope(&self) -> u64 {
        match *self {
            PrecisionFn::Identity => 1,
            PrecisionFn::Linear(c) => c.max(1) as u64,
        }
    }

    /// `P2(s)` for integer `s`.
    pub fn eval(&self, s: u64) -> u64 {
        self.slope().saturating_mul(s)
    }
}

impl fmt::Display for PrecisionFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PrecisionFn::Identity => f.write_str("identity"),
            PrecisionFn::Linear(c) => write!(f, "linear-{c}"),
        }
    }
}

impl FromStr for PrecisionFn {
    type Err = FpError;

    fn from_str(s: &str) -> Result<Self, FpError> {
        if s == "identity" {
            return Ok(PrecisionFn::Identity);
        }
        s.strip_prefix("linear-")
            .and_then(|c| c.parse().ok())
            .filter(|c| *c >= 1)
            .map(PrecisionFn::Linear)
            .ok_or_else(|| FpError::InvalidParameter(format!("unknown precision function `{s}`")))
    }
}

/// An instance `(n, x)` of the set `B = {x >= 0 and x^(2^T(length)) >= ½}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyInstance {
    pub n: u64,
    pub x: Rational,
    pub cost: CostFn,
    pub precision: PrecisionFn,
}

impl HierarchyInstance {
    pub fn new(n: u64, x: Rational, cost: CostFn, precision: PrecisionFn) -> Self {
        HierarchyInstance { n, x, cost, precision }
    }

    /// `bits(n) + 1`, counting `n = 0` as one bit.
    pub fn length(&self) -> u32 {
        (64 - self.n.leading_zeros()).max(1) + 1
    }

    /// Number of squarings `t = T(length)`.
    pub fn squarings(&self) -> u32 {
        self.cost.eval(self.length())
    }
}

/// Enclosure `[lo, hi]` of the boundary `x_b = (½)^(2^-t)`, computed by `t`
/// outward-rounded square roots.
pub fn boundary_enclosure(t: u32, bits: u32) -> (Rational, Rational) {
    thread_local! {
        static CACHE: RefCell<HashMap<(u32, u32), (Rational, Rational)>> = RefCell::new(HashMap::new());
    }
    if let Some(hit) = CACHE.with(|c| c.borrow().get(&(t, bits)).cloned()) {
        return hit;
    }
    let computed = compute_boundary(t, bits);
    CACHE.with(|c| c.borrow_mut().insert((t, bits), computed.clone()));
    computed
}

fn compute_boundary(t: u32, bits: u32) -> (Rational, Rational) {
    let mut lo = Rational::new(1.into(), 2.into());
    let mut hi = lo.clone();
    for _ in 0..t {
        lo = round_significant(&sqrt_bounds(&lo, bits + 4).0, bits, Direction::Down);
        hi = round_significant(&sqrt_bounds(&hi, bits + 4).1, bits, Direction::Up);
    }
    (lo, hi)
}

/// Exact membership of `(n, y)` in `B`, for the instance's cost function.
pub fn in_b(inst: &HierarchyInstance, y: &Rational) -> bool {
    if y.is_negative() {
        return false;
    }
    let t = inst.squarings();
    if t == 0 {
        return *y >= Rational::new(1.into(), 2.into());
    }
    // x_b is irrational for t >= 1, so refinement separates it from y
    let mut bits = START_BITS;
    loop {
        let (lo, hi) = boundary_enclosure(t, bits);
        if *y >= hi {
            return true;
        }
        if *y < lo {
            return false;
        }
        bits *= 2;
        assert!(bits <= MAX_BITS * 4, "boundary refinement did not separate {y}");
    }
}

pub fn exact_membership(inst: &HierarchyInstance) -> bool {
    in_b(inst, &inst.x)
}

#[derive(Debug, Clone, PartialEq)]
pub struct HierarchyCondition {
    pub xi_lo: Rational,
    pub xi_hi: Rational,
    /// `⌈log₂ μ⌉`, computed from `xi_lo` so it never underestimates.
    pub log2_mu: ExtNat,
    /// `μ = 2^(P2⁻¹(log₂(1/ξ)))` as a float; infinite on the boundary.
    pub mu: f64,
}

impl HierarchyCondition {
    pub fn xi(&self) -> Rational {
        (&self.xi_lo + &self.xi_hi) / Rational::from_integer(2.into())
    }

    pub fn ill_posed(&self) -> bool {
        self.xi_hi.is_zero()
    }
}

fn xi_enclosure(inst: &HierarchyInstance, bits: u32) -> (Rational, Rational) {
    let one = Rational::one();
    let x = &inst.x;
    if !x.is_positive() {
        return (one.clone(), one);
    }
    let t = inst.squarings();
    let (lo, hi) = if t == 0 {
        let h = Rational::new(1.into(), 2.into());
        (h.clone(), h)
    } else {
        boundary_enclosure(t, bits)
    };
    let (a, b) = if *x >= hi {
        (&one - &hi / x, &one - &lo / x)
    } else if *x < lo {
        (&lo / x - &one, &hi / x - &one)
    } else {
        (Rational::zero(), (&one - &lo / x).abs().max((&hi / x - &one).abs()))
    };
    (a.min(one.clone()), b.min(one))
}

/// `ξ(n, x) = min(1, |x_b/x − 1|)` with `ξ = 1` for `x <= 0`, and
/// `μ = 2^(P2⁻¹(log₂(1/ξ)))`.
pub fn hierarchy_condition(inst: &HierarchyInstance) -> HierarchyCondition {
    let mut bits = START_BITS;
    let (mut lo, mut hi) = xi_enclosure(inst, bits);
    // tighten until the enclosure is relatively narrow (or ξ is exactly 0)
    while !hi.is_zero() && (lo.is_zero() || &hi - &lo > &lo * pow2(-40)) && bits < MAX_BITS {
        bits *= 2;
        (lo, hi) = xi_enclosure(inst, bits);
    }
    let slope = inst.precision.slope();
    let (log2_mu, mu) = if lo.is_zero() {
        (ExtNat::Infinite, f64::INFINITY)
    } else {
        // smallest j with 2^(slope·j)·ξ_lo >= 1
        let mut j = 0u64;
        while pow2((slope * j) as i64) * &lo < Rational::one() {
            j += 1;
        }
        let mu = (1.0 / to_f64(&inst_mid(&lo, &hi))).powf(1.0 / slope as f64);
        (ExtNat::Finite(j), mu)
    };
    HierarchyCondition {
        xi_lo: lo,
        xi_hi: hi,
        log2_mu,
        mu,
    }
}

fn inst_mid(lo: &Rational, hi: &Rational) -> Rational {
    (lo + hi) / Rational::from_integer(2.into())
}

/// `size = length + ⌈log₂ μ⌉`.
pub fn hierarchy_size(inst: &HierarchyInstance) -> ExtNat {
    match hierarchy_condition(inst).log2_mu {
        ExtNat::Finite(l) => ExtNat::Finite(inst.length() as u64 + l),
        ExtNat::Infinite => ExtNat::Infinite,
    }
}

/// `k_mach = P2(size) + 3`; `None` for ill-posed instances.
pub fn hierarchy_k_mach(inst: &HierarchyInstance) -> Option<u32> {
    match hierarchy_size(inst) {
        ExtNat::Finite(s) => u32::try_from(inst.precision.eval(s) + 3).ok(),
        ExtNat::Infinite => None,
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyDecision {
    pub accept: bool,
    pub k_mach: u32,
    pub computed: Rational,
    pub ops: u64,
}

/// Reads `x` into the binary format with `u = 2^-k_mach`, squares it
/// `T(length)` times and accepts iff the result is at least ½.
pub fn hierarchy_decide(inst: &HierarchyInstance, k_mach: u32) -> Result<HierarchyDecision, FpError> {
    if k_mach < 1 {
        return Err(FpError::InvalidParameter("k_mach must be >= 1".into()));
    }
    if inst.x.is_negative() {
        return Ok(HierarchyDecision {
            accept: false,
            k_mach,
            computed: inst.x.clone(),
            ops: 0,
        });
    }
    // one-digit systems are not representable; two digits is a finer machine
    let fmt = FpFormat::bounded(2, k_mach.max(2), -SQUARING_EXPONENT_RANGE, SQUARING_EXPONENT_RANGE)?;
    let mut v = round_value(&inst.x, &fmt);
    let t = inst.squarings();
    for _ in 0..t {
        v = crate::fp_system::round(&(&v * &v), &fmt, OverflowMode::Saturate)?.value();
    }
    Ok(HierarchyDecision {
        accept: v >= Rational::new(1.into(), 2.into()),
        k_mach,
        computed: v,
        ops: t as u64,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HierarchyWitness {
    pub delta: Rational,
    pub perturbed: Rational,
    pub original_in_b: bool,
    pub perturbed_in_b: bool,
}

/// A perturbation `|δ| < u` whose exact decision on `x(1+δ)` disagrees with
/// that on `x`, when `u > ξ`; `None` when `u <= ξ`.
pub fn hierarchy_witness(inst: &HierarchyInstance, u: &Rational) -> Option<HierarchyWitness> {
    if !u.is_positive() || *u >= Rational::one() {
        return None;
    }
    let mut bits = START_BITS;
    let (lo, hi) = loop {
        let (lo, hi) = xi_enclosure(inst, bits);
        if hi < *u || lo >= *u || bits >= MAX_BITS {
            break (lo, hi);
        }
        bits *= 2;
    };
    if hi >= *u {
        return None;
    }
    let original = exact_membership(inst);
    let step = ((u - &hi) / Rational::from_integer(2.into())).min(pow2(-20));
    let magnitude = &hi + step;
    let delta = if original { -magnitude } else { magnitude };
    let perturbed = &inst.x * (Rational::one() + &delta);
    let perturbed_in_b = in_b(inst, &perturbed);
    debug_assert!(lo <= hi);
    Some(HierarchyWitness {
        delta,
        perturbed,
        original_in_b: original,
        perturbed_in_b,
    })
}
