use std::fmt;

use num_traits::{One, Signed, Zero};
use thiserror::Error;

use super::interval::Interval;
use super::{Circuit, Node};
use crate::fp_system::{round, sample_delta, shrink_factor, ArithOp, FpFormat, OverflowMode};
use crate::rational::Rational;
use crate::seed;

/// Which kind of node a perturbation site belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SiteKind {
    Input,
    Const,
    Arith,
}

impl SiteKind {
    fn code(self) -> u64 {
        match self {
            SiteKind::Input => 0,
            SiteKind::Const => 1,
            SiteKind::Arith => 2,
        }
    }
}

/// Direction of a corner perturbation `δ = ±ε(1−η)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Sign {
    Minus,
    Plus,
}

impl Sign {
    pub fn flip(self) -> Sign {
        match self {
            Sign::Minus => Sign::Plus,
            Sign::Plus => Sign::Minus,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Verdict {
    In,
    Out,
    Unsure,
}

impl Verdict {
    pub fn of_value(v: &Rational) -> Verdict {
        if v.is_negative() {
            Verdict::Out
        } else {
            Verdict::In
        }
    }

    pub fn of_interval(iv: &Interval) -> Verdict {
        if !iv.lo().is_negative() {
            Verdict::In
        } else if iv.hi().is_negative() {
            Verdict::Out
        } else {
            Verdict::Unsure
        }
    }

    pub fn is_determinate(self) -> bool {
        self != Verdict::Unsure
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::In => "in",
            Verdict::Out => "out",
            Verdict::Unsure => "unsure",
        })
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct AmbiguityFlags {
    pub branch_straddle: bool,
    pub denominator_straddle: bool,
}

impl AmbiguityFlags {
    pub fn any(&self) -> bool {
        self.branch_straddle || self.denominator_straddle
    }
}

impl fmt::Display for AmbiguityFlags {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if self.branch_straddle {
            parts.push("branch-straddle");
        }
        if self.denominator_straddle {
            parts.push("denominator-straddle");
        }
        f.write_str(&parts.join("|"))
    }
}

/// The realized `δ` per perturbation site, in site order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct DeltaTrace {
    pub deltas: Vec<Rational>,
}

impl DeltaTrace {
    pub fn zeros(sites: usize) -> Self {
        DeltaTrace {
            deltas: vec![Rational::zero(); sites],
        }
    }

    /// `max |δ_i|`, zero for an empty trace.
    pub fn max_abs(&self) -> Rational {
        self.deltas
            .iter()
            .map(|d| d.abs())
            .max()
            .unwrap_or_else(Rational::zero)
    }

    pub fn len(&self) -> usize {
        self.deltas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.deltas.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PerturbationMode {
    Exact,
    RoundNearest(FpFormat),
    RandomRelative { epsilon: Rational, seed: u64 },
    Corner { epsilon: Rational, directions: Vec<Sign> },
    IntervalRelative(Rational),
    /// Re-runs a recorded `δ` sequence, checking `|δ_i| < ε` at every site.
    Replay { epsilon: Rational, trace: DeltaTrace },
}

impl PerturbationMode {
    pub fn epsilon(&self) -> Option<&Rational> {
        match self {
            PerturbationMode::Exact | PerturbationMode::RoundNearest(_) => None,
            PerturbationMode::RandomRelative { epsilon, .. }
            | PerturbationMode::Corner { epsilon, .. }
            | PerturbationMode::Replay { epsilon, .. }
            | PerturbationMode::IntervalRelative(epsilon) => Some(epsilon),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            PerturbationMode::Exact => "exact",
            PerturbationMode::RoundNearest(_) => "round-nearest",
            PerturbationMode::RandomRelative { .. } => "random-relative",
            PerturbationMode::Corner { .. } => "corner",
            PerturbationMode::IntervalRelative(_) => "interval-relative",
            PerturbationMode::Replay { .. } => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EvalValue {
    Exact(Rational),
    Interval(Interval),
    Indeterminate,
}

impl fmt::Display for EvalValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EvalValue::Exact(v) => write!(f, "{v}"),
            EvalValue::Interval(iv) => write!(f, "{iv}"),
            EvalValue::Indeterminate => f.write_str("indeterminate"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EvalOutcome {
    pub value: EvalValue,
    pub verdict: Verdict,
    pub ops_performed: u64,
    pub flags: AmbiguityFlags,
    /// Realized perturbations of a concrete evaluation; `None` for enclosures.
    pub trace: Option<DeltaTrace>,
}

impl EvalOutcome {
    pub fn exact_value(&self) -> Option<&Rational> {
        match &self.value {
            EvalValue::Exact(v) => Some(v),
            _ => None,
        }
    }

    pub fn interval(&self) -> Option<&Interval> {
        match &self.value {
            EvalValue::Interval(iv) => Some(iv),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("division by zero at node {node}")]
    Domain { node: u64 },
    #[error("expected {expected} inputs, got {found}")]
    Arity { expected: usize, found: usize },
    #[error("perturbation level {0} outside the admissible range")]
    InvalidEpsilon(Rational),
    #[error("expected {expected} perturbation entries, got {found}")]
    SiteCount { expected: usize, found: usize },
    #[error("recorded perturbation {delta} at site {site} is not below {epsilon}")]
    TraceOutOfBounds {
        site: usize,
        delta: Box<Rational>,
        epsilon: Box<Rational>,
    },
}

fn check_epsilon(eps: &Rational) -> Result<(), EvalError> {
    if eps.is_positive() && *eps < Rational::one() {
        Ok(())
    } else {
        Err(EvalError::InvalidEpsilon(eps.clone()))
    }
}

fn check_arity(c: &Circuit, found: usize) -> Result<(), EvalError> {
    if c.input_arity() == found {
        Ok(())
    } else {
        Err(EvalError::Arity {
            expected: c.input_arity(),
            found,
        })
    }
}

/// Exact rational evaluation by the canonical procedure.
pub fn eval_exact(c: &Circuit, x: &[Rational]) -> Result<EvalOutcome, EvalError> {
    eval_rounded(c, x, &PerturbationMode::Exact)
}

/// Source of `δ` for one concrete evaluation, indexed by site.
enum Deltas<'a> {
    Zero,
    Round(&'a FpFormat),
    Random { eps: &'a Rational, seed: u64 },
    Fixed(Vec<Rational>),
}

/// One concrete ε-evaluation. `IntervalRelative` is forwarded to
/// [`eval_interval`] so callers can treat every mode uniformly.
pub fn eval_rounded(
    c: &Circuit,
    x: &[Rational],
    mode: &PerturbationMode,
) -> Result<EvalOutcome, EvalError> {
    check_arity(c, x.len())?;
    let deltas = match mode {
        PerturbationMode::Exact => Deltas::Zero,
        PerturbationMode::RoundNearest(fmt) => Deltas::Round(fmt),
        PerturbationMode::RandomRelative { epsilon, seed } => {
            check_epsilon(epsilon)?;
            Deltas::Random { eps: epsilon, seed: *seed }
        }
        PerturbationMode::Corner {
            epsilon,
            directions,
        } => {
            check_epsilon(epsilon)?;
            if directions.len() != c.site_count() {
                return Err(EvalError::SiteCount {
                    expected: c.site_count(),
                    found: directions.len(),
                });
            }
            let mag = epsilon * shrink_factor();
            Deltas::Fixed(
                directions
                    .iter()
                    .map(|s| match s {
                        Sign::Plus => mag.clone(),
                        Sign::Minus => -mag.clone(),
                    })
                    .collect(),
            )
        }
        PerturbationMode::Replay { epsilon, trace } => {
            check_epsilon(epsilon)?;
            if trace.len() != c.site_count() {
                return Err(EvalError::SiteCount {
                    expected: c.site_count(),
                    found: trace.len(),
                });
            }
            if let Some((site, delta)) = trace
                .deltas
                .iter()
                .enumerate()
                .find(|(_, d)| d.abs() >= *epsilon)
            {
                return Err(EvalError::TraceOutOfBounds {
                    site,
                    delta: Box::new(delta.clone()),
                    epsilon: Box::new(epsilon.clone()),
                });
            }
            Deltas::Fixed(trace.deltas.clone())
        }
        PerturbationMode::IntervalRelative(eps) => return eval_interval(c, x, eps),
    };
    concrete(c, x, &deltas)
}

fn concrete(c: &Circuit, x: &[Rational], deltas: &Deltas<'_>) -> Result<EvalOutcome, EvalError> {
    let mut values: Vec<Rational> = Vec::with_capacity(c.len());
    let mut trace = Vec::with_capacity(c.site_count());
    let mut ops = 0u64;
    for (id, node) in c.nodes().iter().enumerate() {
        let raw = match node {
            Node::Input(i) => x[*i].clone(),
            Node::Const(v) => v.clone(),
            Node::Arith { op, lhs, rhs } => {
                ops += 1;
                op.apply(&values[*lhs], &values[*rhs])
                    .map_err(|_| EvalError::Domain { node: c.label(id) })?
            }
            Node::Select {
                test,
                if_negative,
                if_nonnegative,
            } => {
                let pick = if values[*test].is_negative() {
                    if_negative
                } else {
                    if_nonnegative
                };
                values.push(values[*pick].clone());
                continue;
            }
        };
        let site = trace.len();
        let kind = node.site_kind().expect("non-select nodes are sites");
        let (value, delta) = match deltas {
            Deltas::Zero => (raw, Rational::zero()),
            Deltas::Round(fmt) => {
                let v = round(&raw, fmt, OverflowMode::Saturate)
                    .expect("saturating rounding is total")
                    .value();
                let d = if raw.is_zero() {
                    Rational::zero()
                } else {
                    &v / &raw - Rational::one()
                };
                (v, d)
            }
            Deltas::Random { eps, seed } => {
                let mut rng = seed::rng(*seed, &[c.label(id), kind.code()]);
                let d = sample_delta(&mut rng, eps);
                (&raw * (Rational::one() + &d), d)
            }
            Deltas::Fixed(ds) => {
                let d = ds[site].clone();
                (&raw * (Rational::one() + &d), d)
            }
        };
        trace.push(delta);
        values.push(value);
    }
    let v = values.swap_remove(c.output());
    Ok(EvalOutcome {
        verdict: Verdict::of_value(&v),
        value: EvalValue::Exact(v),
        ops_performed: ops,
        flags: AmbiguityFlags::default(),
        trace: Some(DeltaTrace { deltas: trace }),
    })
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct IntervalOptions {
    /// Round endpoints outward to this many significant bits after every
    /// node; `None` keeps them exact.
    pub precision_bits: Option<u32>,
}

/// Enclosure of every ε-evaluation of `c` at `x`.
pub fn eval_interval(c: &Circuit, x: &[Rational], eps: &Rational) -> Result<EvalOutcome, EvalError> {
    eval_interval_with(c, x, eps, IntervalOptions::default())
}

pub fn eval_interval_with(
    c: &Circuit,
    x: &[Rational],
    eps: &Rational,
    opts: IntervalOptions,
) -> Result<EvalOutcome, EvalError> {
    let boxes: Vec<Interval> = x.iter().cloned().map(Interval::point).collect();
    eval_interval_box(c, &boxes, eps, opts)
}

/// Enclosure of every ε-evaluation at every point of the box `x`, for
/// `0 < ε <= 1`.
pub fn eval_interval_box(
    c: &Circuit,
    x: &[Interval],
    eps: &Rational,
    opts: IntervalOptions,
) -> Result<EvalOutcome, EvalError> {
    check_arity(c, x.len())?;
    // closed factors [1-ε, 1+ε]; ε = 1 is a valid (if coarse) enclosure
    if !eps.is_positive() || *eps > Rational::one() {
        return Err(EvalError::InvalidEpsilon(eps.clone()));
    }
    let mut flags = AmbiguityFlags::default();
    let mut values: Vec<Option<Interval>> = Vec::with_capacity(c.len());
    let finish = |iv: Interval| {
        let p = iv.perturb(eps);
        match opts.precision_bits {
            Some(bits) => p.round_outward(bits),
            None => p,
        }
    };
    for node in c.nodes() {
        let v = match node {
            Node::Input(i) => Some(finish(x[*i].clone())),
            Node::Const(v) => Some(finish(Interval::point(v.clone()))),
            Node::Arith { op, lhs, rhs } => match (&values[*lhs], &values[*rhs]) {
                (Some(a), Some(b)) => match a.apply(*op, b) {
                    Some(r) => Some(finish(r)),
                    None => {
                        flags.denominator_straddle = true;
                        None
                    }
                },
                (_, None) if *op == ArithOp::Div => {
                    flags.denominator_straddle = true;
                    None
                }
                _ => None,
            },
            Node::Select {
                test,
                if_negative,
                if_nonnegative,
            } => {
                let neg = &values[*if_negative];
                let nonneg = &values[*if_nonnegative];
                match &values[*test] {
                    Some(t) if t.hi().is_negative() => neg.clone(),
                    Some(t) if !t.lo().is_negative() => nonneg.clone(),
                    _ => {
                        flags.branch_straddle = true;
                        match (neg, nonneg) {
                            (Some(a), Some(b)) => Some(a.hull(b)),
                            _ => None,
                        }
                    }
                }
            }
        };
        values.push(v);
    }
    let (value, verdict) = match values.swap_remove(c.output()) {
        Some(iv) => {
            let verdict = Verdict::of_interval(&iv);
            (EvalValue::Interval(iv), verdict)
        }
        None => (EvalValue::Indeterminate, Verdict::Unsure),
    };
    Ok(EvalOutcome {
        value,
        verdict,
        ops_performed: c.arith_count() as u64,
        flags,
        trace: None,
    })
}
