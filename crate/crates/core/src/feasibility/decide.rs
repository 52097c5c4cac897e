use std::fmt;
use std::str::FromStr;

use num_traits::{Signed, Zero};
use rayon::prelude::*;

use super::decode::{decode_grid_code, IntervalArithmetic};
use super::grid::{check_cap, GridCode, GridSpec};
use super::FeasError;
use crate::circuit::{
    eval_exact, eval_interval_box, eval_rounded, Circuit, EvalError, EvalValue, IntervalOptions,
    PerturbationMode, Verdict,
};
use crate::fp_system::{Arithmetic, ExactArithmetic, FpFormat, RandomArithmetic, RoundingArithmetic};
use crate::rational::{pow2, Rational};
use crate::seed;

/// Default cap on the number of grid points a decision may scan.
pub const DEFAULT_GRID_CAP: u64 = 1 << 24;

const BATCH: u64 = 1 << 12;

/// Arithmetic used for decoding and evaluation at every grid point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DecideMode {
    Exact,
    /// Round to nearest in the binary format with `u = 2^-k_mach`.
    RoundNearest,
    /// Random `(1+δ)` factors with `|δ| < 2^-k_mach`, seeded per point.
    RandomRelative { seed: u64 },
    /// Certified enclosures at `ε = 2^-k_mach`.
    IntervalRelative,
}

impl DecideMode {
    pub fn name(&self) -> &'static str {
        match self {
            DecideMode::Exact => "exact",
            DecideMode::RoundNearest => "round",
            DecideMode::RandomRelative { .. } => "random",
            DecideMode::IntervalRelative => "interval",
        }
    }

    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            DecideMode::RandomRelative { .. } => DecideMode::RandomRelative { seed },
            m => m,
        }
    }
}

impl fmt::Display for DecideMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DecideMode {
    type Err = FeasError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "exact" => Ok(DecideMode::Exact),
            "round" | "round-nearest" => Ok(DecideMode::RoundNearest),
            "random" | "random-relative" => Ok(DecideMode::RandomRelative { seed: 0 }),
            "interval" | "interval-relative" => Ok(DecideMode::IntervalRelative),
            other => Err(FeasError::InvalidParameter(format!("unknown mode `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Decision {
    Yes,
    No,
    Unsure,
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Decision::Yes => "yes",
            Decision::No => "no",
            Decision::Unsure => "unsure",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DecideOptions {
    pub cap: u64,
    /// Worker threads; `None` uses the ambient rayon pool.
    pub workers: Option<usize>,
}

impl Default for DecideOptions {
    fn default() -> Self {
        DecideOptions {
            cap: DEFAULT_GRID_CAP,
            workers: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecisionRecord {
    pub verdict: Decision,
    pub k_mach: u32,
    pub k: u32,
    pub mode: PerturbationMode,
    /// Decoding plus evaluation operations over the scanned points.
    pub ops_total: u64,
    pub witness_point: Option<GridCode>,
    /// Output of the accepting evaluation at the witness.
    pub witness_output: Option<EvalValue>,
    pub points_scanned: u64,
    /// Rounded-mode points rejected because a perturbed denominator was zero.
    pub domain_errors: u64,
    pub unsure_points: u64,
}

enum PointResult {
    Accept(EvalValue),
    Reject,
    Unsure,
    Domain(EvalError),
}

fn split(index: u128) -> [u64; 2] {
    [index as u64, (index >> 64) as u64]
}

fn eval_point(
    c: &Circuit,
    spec: &GridSpec,
    index: u128,
    mode: DecideMode,
    k_mach: u32,
) -> Result<(PointResult, u64), FeasError> {
    let code = spec.code_at(index);
    let eps = pow2(-(k_mach as i64));
    let concrete = |r: Result<crate::circuit::EvalOutcome, EvalError>, decode_ops: u64| match r {
        Ok(out) => {
            let ops = decode_ops + out.ops_performed;
            if out.verdict == Verdict::In {
                (PointResult::Accept(out.value), ops)
            } else {
                (PointResult::Reject, ops)
            }
        }
        Err(e) => (PointResult::Domain(e), decode_ops + c.arith_count() as u64),
    };
    Ok(match mode {
        DecideMode::Exact => {
            let mut a = ExactArithmetic::new();
            let y = decode_grid_code(&code, &mut a)?;
            concrete(eval_exact(c, &y), a.ops())
        }
        DecideMode::RoundNearest => {
            let fmt = FpFormat::with_k_mach(k_mach).map_err(FeasError::Arithmetic)?;
            let mut a = RoundingArithmetic::new(fmt.clone());
            let y = decode_grid_code(&code, &mut a)?;
            concrete(eval_rounded(c, &y, &PerturbationMode::RoundNearest(fmt)), a.ops())
        }
        DecideMode::RandomRelative { seed } => {
            let address = split(index);
            let mut a = RandomArithmetic::new(eps.clone(), seed::rng(seed, &[address[0], address[1], 0]));
            let y = decode_grid_code(&code, &mut a)?;
            let mode = PerturbationMode::RandomRelative {
                epsilon: eps,
                seed: seed::derive(seed, &address),
            };
            concrete(eval_rounded(c, &y, &mode), a.ops())
        }
        DecideMode::IntervalRelative => {
            let mut a = IntervalArithmetic::new(eps.clone());
            let y = decode_grid_code(&code, &mut a)?;
            let out = eval_interval_box(c, &y, &eps, IntervalOptions::default())?;
            let ops = a.ops() + out.ops_performed;
            match out.verdict {
                Verdict::In => (PointResult::Accept(out.value), ops),
                Verdict::Out => (PointResult::Reject, ops),
                Verdict::Unsure => (PointResult::Unsure, ops),
            }
        }
    })
}

fn perturbation_mode(mode: DecideMode, k_mach: u32) -> Result<PerturbationMode, FeasError> {
    let eps = pow2(-(k_mach as i64));
    Ok(match mode {
        DecideMode::Exact => PerturbationMode::Exact,
        DecideMode::RoundNearest => {
            PerturbationMode::RoundNearest(FpFormat::with_k_mach(k_mach).map_err(FeasError::Arithmetic)?)
        }
        DecideMode::RandomRelative { seed } => PerturbationMode::RandomRelative { epsilon: eps, seed },
        DecideMode::IntervalRelative => PerturbationMode::IntervalRelative(eps),
    })
}

pub(crate) fn with_workers<T: Send>(workers: Option<usize>, f: impl FnOnce() -> T + Send) -> Result<T, FeasError> {
    match workers {
        None => Ok(f()),
        Some(w) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(w.max(1))
                .build()
                .map_err(|e| FeasError::InvalidParameter(e.to_string()))?;
            Ok(pool.install(f))
        }
    }
}

/// Grid-search feasibility decision at precision `k_mach`.
///
/// Scans `F_k^n` with `k = ⌊k_mach/2⌋` in packed-code order and accepts at
/// the first point whose evaluation is nonnegative. Points are evaluated in
/// parallel batches but reduced in order, so the verdict, witness and
/// counters do not depend on the worker count.
pub fn decide_feasible_grid(
    c: &Circuit,
    k_mach: u32,
    mode: DecideMode,
    opts: DecideOptions,
) -> Result<DecisionRecord, FeasError> {
    let k = k_mach / 2;
    let spec = GridSpec::new(k, c.input_arity()).map_err(|_| {
        FeasError::InvalidParameter(format!(
            "k_mach = {k_mach} with {} inputs gives no valid grid",
            c.input_arity()
        ))
    })?;
    let total = check_cap(&spec, opts.cap)?;
    let mut record = DecisionRecord {
        verdict: Decision::No,
        k_mach,
        k,
        mode: perturbation_mode(mode, k_mach)?,
        ops_total: 0,
        witness_point: None,
        witness_output: None,
        points_scanned: 0,
        domain_errors: 0,
        unsure_points: 0,
    };
    with_workers(opts.workers, || -> Result<(), FeasError> {
        let mut start = 0u128;
        while start < total {
            let len = (total - start).min(BATCH as u128) as u64;
            let results: Vec<Result<(PointResult, u64), FeasError>> = (0..len)
                .into_par_iter()
                .map(|o| eval_point(c, &spec, start + o as u128, mode, k_mach))
                .collect();
            for (o, r) in results.into_iter().enumerate() {
                let (result, ops) = r?;
                record.points_scanned += 1;
                record.ops_total += ops;
                match result {
                    PointResult::Accept(v) => {
                        record.verdict = Decision::Yes;
                        record.witness_point = Some(spec.code_at(start + o as u128));
                        record.witness_output = Some(v);
                        return Ok(());
                    }
                    PointResult::Reject => {}
                    PointResult::Unsure => record.unsure_points += 1,
                    PointResult::Domain(e) => {
                        if mode == DecideMode::Exact {
                            return Err(FeasError::Eval(e));
                        }
                        record.domain_errors += 1;
                    }
                }
            }
            start += len as u128;
        }
        if record.unsure_points > 0 {
            record.verdict = Decision::Unsure;
        }
        Ok(())
    })??;
    Ok(record)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignChangeRecord {
    pub verdict: Decision,
    pub points: Vec<Rational>,
    pub values: Vec<EvalValue>,
    pub ops_total: u64,
}

/// Zero detection on `[a, b]` from `points` equally spaced evaluations:
/// `Yes` when some value is zero or two values have opposite strict signs.
/// Under interval evaluation an enclosure containing zero without a
/// definite sign change gives `Unsure`.
pub fn decide_sign_change_1d(
    c: &Circuit,
    a: &Rational,
    b: &Rational,
    points: usize,
    mode: &PerturbationMode,
) -> Result<SignChangeRecord, FeasError> {
    if c.input_arity() != 1 {
        return Err(FeasError::InvalidParameter("sign-change scheme needs one input".into()));
    }
    if a >= b || points < 2 {
        return Err(FeasError::InvalidParameter("need a < b and at least two points".into()));
    }
    let steps = Rational::from_integer((points - 1).into());
    let xs: Vec<Rational> = (0..points)
        .map(|i| a + (b - a) * Rational::from_integer(i.into()) / &steps)
        .collect();
    let (mut pos, mut neg, mut zero, mut straddle) = (false, false, false, false);
    let mut values = Vec::with_capacity(points);
    let mut ops = 0;
    for x in &xs {
        let out = eval_rounded(c, std::slice::from_ref(x), mode)?;
        ops += out.ops_performed;
        match &out.value {
            EvalValue::Exact(v) => {
                zero |= v.is_zero();
                pos |= v.is_positive();
                neg |= v.is_negative();
            }
            EvalValue::Interval(iv) => {
                if iv.lo().is_positive() {
                    pos = true;
                } else if iv.hi().is_negative() {
                    neg = true;
                } else if iv.lo().is_zero() && iv.hi().is_zero() {
                    zero = true;
                } else {
                    straddle = true;
                }
            }
            EvalValue::Indeterminate => straddle = true,
        }
        values.push(out.value);
    }
    let verdict = if zero || (pos && neg) {
        Decision::Yes
    } else if straddle {
        Decision::Unsure
    } else {
        Decision::No
    };
    Ok(SignChangeRecord {
        verdict,
        points: xs,
        values,
        ops_total: ops,
    })
}
