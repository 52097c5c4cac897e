//! One CSV row per unit of work. Sweeps reuse these producers so that a
//! sweep row and the equivalent single command print the same cells.

use std::path::Path;

use anyhow::{anyhow, Context};
use fplab::circuit::{eval_rounded, parse_circuit, Circuit, EvalError, PerturbationMode, Verdict};
use fplab::condition::{
    feasibility_condition_estimate, rho_eval_bracket, BracketOptions, EstimateDirection, EstimateOptions,
};
use fplab::feasibility::{decide_feasible_grid, decide_sign_change_1d, DecideMode, DecideOptions, Decision, FeasError};
use fplab::fp_system::{ExtNat, FpError, FpFormat};
use fplab::rational::{ceil_log2, pow2, sqrt_bounds};
use fplab::showcase::{
    hero_format, hero_sqrt, hero_sqrt_exact, hierarchy_condition, hierarchy_decide, hierarchy_k_mach,
    hierarchy_witness, exact_membership, CostFn, HierarchyInstance, PrecisionFn,
};
use fplab::{ExtRational, Rational};
use num_traits::Signed;

use crate::args::{Expect, Mode};
use crate::table::{approx, ext_approx, opt, point, sci, u_of, yes_no, Row, Stopwatch};
use crate::Failure;

pub const EVAL_HEADER: &[&str] = &[
    "command", "circuit", "point", "mode", "seed", "k_mach", "u_mach", "value", "verdict", "ops", "flags",
    "expected", "expect_ok", "wall_ms",
];

pub const CONDITION_HEADER: &[&str] = &[
    "command", "circuit", "kind", "point", "k", "bounded", "tol", "seed", "verdict", "rho_lo", "rho_hi", "mu_lo",
    "mu_hi", "mu_approx", "direction", "certified_lo", "certified_hi", "k_mach", "u_mach", "evaluations",
    "partial", "wall_ms",
];

pub const DECIDE_HEADER: &[&str] = &[
    "command", "circuit", "mode", "seed", "k_mach", "u_mach", "k", "verdict", "witness", "witness_point",
    "witness_output", "points_scanned", "unsure_points", "domain_errors", "ops_total", "expected", "expect_ok",
    "wall_ms",
];

pub const SIGN1D_HEADER: &[&str] = &[
    "command", "circuit", "mode", "seed", "k_mach", "u_mach", "from", "to", "points", "verdict", "expected",
    "expect_ok", "ops_total", "wall_ms",
];

pub const SQRT_HEADER: &[&str] = &[
    "command", "a", "epsilon", "mode", "seed", "k_mach", "u_mach", "iterations", "b", "q", "reciprocal", "result",
    "rel_error", "error_bound", "within_bound", "within_eps", "ops", "wall_ms",
];

pub const HIERARCHY_HEADER: &[&str] = &[
    "command", "n", "x", "cost", "precision", "length", "t", "xi", "mu", "log2_mu", "size", "rule_k_mach",
    "k_mach", "u_mach", "verdict", "exact", "correct", "witness_delta", "expected", "expect_ok", "ops", "wall_ms",
];

pub fn usage(msg: impl Into<String>) -> Failure {
    Failure::Usage(msg.into())
}

fn feas_failure(e: FeasError, what: &str) -> Failure {
    match e {
        FeasError::InvalidParameter(m) => usage(format!("{what}: {m}")),
        FeasError::Arithmetic(FpError::InvalidParameter(m) | FpError::PreconditionViolated(m)) => {
            usage(format!("{what}: {m}"))
        }
        FeasError::Eval(EvalError::Arity { expected, found }) => {
            usage(format!("{what}: circuit takes {expected} inputs, point has {found}"))
        }
        other => Failure::Runtime(anyhow!(other).context(what.to_string())),
    }
}

fn eval_failure(e: EvalError, what: &str) -> Failure {
    feas_failure(FeasError::Eval(e), what)
}

fn fp_failure(e: FpError, what: &str) -> Failure {
    feas_failure(FeasError::Arithmetic(e), what)
}

/// A parsed circuit with the name printed in CSV rows.
#[derive(Debug, Clone)]
pub struct Named {
    pub name: String,
    pub circuit: Circuit,
}

impl Named {
    pub fn new(circuit: Circuit) -> Self {
        Named {
            name: circuit.name().unwrap_or("anonymous").to_string(),
            circuit,
        }
    }
}

pub fn load_circuit(path: &Path) -> Result<Named, Failure> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| usage(format!("cannot read circuit {}: {e}", path.display())))?;
    let circuit = parse_circuit(&text)
        .with_context(|| format!("in circuit file {}", path.display()))
        .map_err(Failure::Runtime)?;
    let name = match circuit.name() {
        Some(n) => n.to_string(),
        None => path.file_stem().map_or_else(|| path.display().to_string(), |s| s.to_string_lossy().into()),
    };
    Ok(Named { name, circuit })
}

pub fn load_circuits(paths: &[std::path::PathBuf]) -> Result<Vec<Named>, Failure> {
    if paths.is_empty() {
        return Err(usage("at least one --circuit is required"));
    }
    paths.iter().map(|p| load_circuit(p)).collect()
}

fn expectation(expect: Option<Expect>, yes: Option<bool>) -> (String, String, Option<bool>) {
    match expect {
        None => (String::new(), String::new(), None),
        Some(e) => {
            let ok = yes.is_some_and(|y| e.holds(y));
            (e.to_string(), yes_no(ok), Some(ok))
        }
    }
}

fn need_kmach(mode: Mode, k: Option<u32>) -> Result<u32, Failure> {
    k.ok_or_else(|| usage(format!("mode `{mode}` needs --kmach")))
}

/// Perturbation mode for one evaluation, with the `k_mach`/`u_mach` cells.
fn perturbation(mode: Mode, k: Option<u32>, seed: u64) -> Result<(PerturbationMode, String, String), Failure> {
    if mode == Mode::Exact {
        return Ok((PerturbationMode::Exact, "inf".into(), "0".into()));
    }
    let k = need_kmach(mode, k)?;
    let eps = pow2(-(k as i64));
    let pm = match mode {
        Mode::Round => PerturbationMode::RoundNearest(FpFormat::with_k_mach(k).map_err(|e| fp_failure(e, "round mode"))?),
        Mode::Random => {
            if k == 0 {
                return Err(usage("random mode needs k_mach >= 1"));
            }
            PerturbationMode::RandomRelative { epsilon: eps, seed }
        }
        Mode::Interval => PerturbationMode::IntervalRelative(eps),
        Mode::Exact => unreachable!(),
    };
    Ok((pm, k.to_string(), u_of(k)))
}

#[allow(clippy::too_many_arguments)]
pub fn eval_row(
    c: &Named,
    x: &[Rational],
    mode: Mode,
    k: Option<u32>,
    seed: u64,
    expect: Option<Expect>,
    timing: bool,
) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let (pm, k_cell, u_cell) = perturbation(mode, k, seed)?;
    let out = eval_rounded(&c.circuit, x, &pm).map_err(|e| eval_failure(e, &format!("evaluating {} at {}", c.name, point(x))))?;
    let yes = out.verdict.is_determinate().then_some(out.verdict == Verdict::In);
    let (expected, ok_cell, ok) = expectation(expect, yes);
    Ok(Row {
        cells: vec![
            "eval".into(),
            c.name.clone(),
            point(x),
            mode.to_string(),
            seed.to_string(),
            k_cell,
            u_cell,
            out.value.to_string(),
            out.verdict.to_string(),
            out.ops_performed.to_string(),
            out.flags.to_string(),
            expected,
            ok_cell,
            clock.cell(),
        ],
        expectation: ok,
    })
}

/// Smallest `k` with `2^-k <= r`, as `k_mach`/`u_mach` cells.
fn precision_cells(r: &Rational) -> (String, String) {
    if !r.is_positive() {
        return ("inf".into(), "0".into());
    }
    let k = ceil_log2(&r.recip()).max(0) as u32;
    (k.to_string(), u_of(k))
}

pub fn condition_row(c: &Named, x: &[Rational], tol: &Rational, seed: u64, timing: bool) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let opts = BracketOptions {
        seed,
        ..BracketOptions::with_tol(tol.clone())
    };
    let b = rho_eval_bracket(&c.circuit, x, &opts)
        .map_err(|e| eval_failure(e, &format!("bracketing {} at {}", c.name, point(x))))?;
    let (k_cell, u_cell) = precision_cells(&b.rho_lo);
    Ok(Row {
        cells: vec![
            "condition".into(),
            c.name.clone(),
            "eval".into(),
            point(x),
            String::new(),
            String::new(),
            tol.to_string(),
            seed.to_string(),
            b.verdict.to_string(),
            b.rho_lo.to_string(),
            b.rho_hi.to_string(),
            b.mu_lo.to_string(),
            b.mu_hi.to_string(),
            ext_approx(&b.mu_hi),
            String::new(),
            yes_no(b.certified_lo),
            yes_no(b.certified_hi),
            k_cell,
            u_cell,
            b.evaluations.to_string(),
            String::new(),
            clock.cell(),
        ],
        expectation: None,
    })
}

/// `⌈log₂(16 μ²)⌉`, the precision at which the grid decider is correct.
pub fn decider_k_mach(mu: &ExtRational) -> Option<u32> {
    mu.finite()
        .map(|m| ceil_log2(&(Rational::from_integer(16.into()) * m * m)).max(1) as u32)
}

#[allow(clippy::too_many_arguments)]
pub fn estimate_row(
    c: &Named,
    k: u32,
    bounded: bool,
    tol: &Rational,
    cap: u64,
    seed: u64,
    timing: bool,
) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let opts = EstimateOptions {
        cap,
        workers: None,
        bracket: BracketOptions {
            seed,
            ..BracketOptions::with_tol(tol.clone())
        },
    };
    let est = feasibility_condition_estimate(&c.circuit, k, bounded, &opts)
        .map_err(|e| feas_failure(e, &format!("estimating the condition of {}", c.name)))?;
    let feasible = est.direction == EstimateDirection::UpperBoundOnMu;
    let (mu_lo, mu_hi) = if feasible {
        (String::new(), est.value.to_string())
    } else {
        (est.value.to_string(), String::new())
    };
    let (k_cell, u_cell) = match decider_k_mach(&est.value) {
        Some(km) => (km.to_string(), u_of(km)),
        None => ("inf".into(), "0".into()),
    };
    Ok(Row {
        cells: vec![
            "condition".into(),
            c.name.clone(),
            if bounded { "bfeas" } else { "feas" }.into(),
            opt(est.best_point.as_ref().map(|g| point(&g.values()))),
            k.to_string(),
            yes_no(bounded),
            tol.to_string(),
            seed.to_string(),
            yes_no(feasible),
            est.rho.to_string(),
            est.rho.to_string(),
            mu_lo,
            mu_hi,
            ext_approx(&est.value),
            est.direction.to_string(),
            String::new(),
            String::new(),
            k_cell,
            u_cell,
            est.samples_used.to_string(),
            yes_no(est.partial),
            clock.cell(),
        ],
        expectation: None,
    })
}

fn decide_mode(mode: Mode, seed: u64) -> DecideMode {
    match mode {
        Mode::Exact => DecideMode::Exact,
        Mode::Round => DecideMode::RoundNearest,
        Mode::Random => DecideMode::RandomRelative { seed },
        Mode::Interval => DecideMode::IntervalRelative,
    }
}

fn decision_yes(d: Decision) -> Option<bool> {
    match d {
        Decision::Yes => Some(true),
        Decision::No => Some(false),
        Decision::Unsure => None,
    }
}

#[allow(clippy::too_many_arguments)]
pub fn decide_row(
    c: &Named,
    k_mach: u32,
    mode: Mode,
    seed: u64,
    cap: u64,
    expect: Option<Expect>,
    timing: bool,
) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let opts = DecideOptions { cap, workers: None };
    let rec = decide_feasible_grid(&c.circuit, k_mach, decide_mode(mode, seed), opts)
        .map_err(|e| feas_failure(e, &format!("deciding {} at k_mach {k_mach}", c.name)))?;
    let (expected, ok_cell, ok) = expectation(expect, decision_yes(rec.verdict));
    Ok(Row {
        cells: vec![
            "decide".into(),
            c.name.clone(),
            mode.to_string(),
            seed.to_string(),
            k_mach.to_string(),
            if mode == Mode::Exact { "0".into() } else { u_of(k_mach) },
            rec.k.to_string(),
            rec.verdict.to_string(),
            opt(rec.witness_point.as_ref().map(|w| w.hex())),
            opt(rec.witness_point.as_ref().map(|w| point(&w.values()))),
            opt(rec.witness_output.as_ref()),
            rec.points_scanned.to_string(),
            rec.unsure_points.to_string(),
            rec.domain_errors.to_string(),
            rec.ops_total.to_string(),
            expected,
            ok_cell,
            clock.cell(),
        ],
        expectation: ok,
    })
}

#[allow(clippy::too_many_arguments)]
pub fn sign1d_row(
    c: &Named,
    from: &Rational,
    to: &Rational,
    points: usize,
    mode: Mode,
    k: Option<u32>,
    seed: u64,
    expect: Option<Expect>,
    timing: bool,
) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let (pm, k_cell, u_cell) = perturbation(mode, k, seed)?;
    let rec = decide_sign_change_1d(&c.circuit, from, to, points, &pm)
        .map_err(|e| feas_failure(e, &format!("scanning {} on [{from}, {to}]", c.name)))?;
    let (expected, ok_cell, ok) = expectation(expect, decision_yes(rec.verdict));
    Ok(Row {
        cells: vec![
            "sign1d".into(),
            c.name.clone(),
            mode.to_string(),
            seed.to_string(),
            k_cell,
            u_cell,
            from.to_string(),
            to.to_string(),
            points.to_string(),
            rec.verdict.to_string(),
            expected,
            ok_cell,
            rec.ops_total.to_string(),
            clock.cell(),
        ],
        expectation: ok,
    })
}

/// Upper bound on `|r − √a| / √a` from a 256-bit enclosure of `√a`.
pub fn sqrt_relative_error(a: &Rational, r: &Rational) -> Rational {
    let (lo, hi) = sqrt_bounds(a, 256);
    if *r >= hi {
        (r - &lo) / &lo
    } else if *r <= lo {
        (&hi - r) / &lo
    } else {
        (&hi - &lo) / &lo
    }
}

pub fn sqrt_row(a: &Rational, eps: &Rational, mode: Mode, k: Option<u32>, seed: u64, timing: bool) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let what = format!("square root of {a} at accuracy {eps}");
    let run = match mode {
        Mode::Exact => hero_sqrt_exact(a, eps),
        Mode::Round => {
            let fmt = match k {
                Some(k) => FpFormat::with_k_mach(k),
                None => hero_format(eps),
            }
            .map_err(|e| fp_failure(e, &what))?;
            hero_sqrt(a, eps, &fmt)
        }
        other => return Err(usage(format!("sqrt supports modes exact and round, not `{other}`"))),
    }
    .map_err(|e| fp_failure(e, &what))?;
    let err = sqrt_relative_error(a, &run.result);
    let bound = run.error_bound();
    let (k_cell, u_cell) = match &run.u_mach_used {
        Some(u) => (ceil_log2(&u.recip()).to_string(), u.to_string()),
        None => ("inf".into(), "0".into()),
    };
    Ok(Row {
        cells: vec![
            "sqrt".into(),
            a.to_string(),
            eps.to_string(),
            mode.to_string(),
            seed.to_string(),
            k_cell,
            u_cell,
            run.iterations.to_string(),
            approx(&run.b),
            run.q.to_string(),
            yes_no(run.reciprocal),
            format!("{:.15e}", fplab::rational::to_f64(&run.result)),
            approx(&err),
            approx(&bound),
            yes_no(err <= bound),
            yes_no(err < *eps),
            run.ops.to_string(),
            clock.cell(),
        ],
        expectation: None,
    })
}

pub fn parse_cost(s: Option<&str>) -> Result<CostFn, Failure> {
    s.unwrap_or("linear").parse().map_err(|e: FpError| usage(e.to_string()))
}

pub fn parse_precision(s: Option<&str>) -> Result<PrecisionFn, Failure> {
    s.unwrap_or("identity").parse().map_err(|e: FpError| usage(e.to_string()))
}

pub fn hierarchy_row(inst: &HierarchyInstance, k: Option<u32>, expect: Option<Expect>, timing: bool) -> Result<Row, Failure> {
    let clock = Stopwatch::start(timing);
    let cond = hierarchy_condition(inst);
    let rule = hierarchy_k_mach(inst);
    let k_mach = k
        .or(rule)
        .ok_or_else(|| usage(format!("x = {} lies on the boundary; give --kmach", inst.x)))?;
    let d = hierarchy_decide(inst, k_mach).map_err(|e| fp_failure(e, "hierarchy decide"))?;
    let exact = exact_membership(inst);
    let witness = hierarchy_witness(inst, &pow2(-(k_mach as i64)));
    let size = match cond.log2_mu {
        ExtNat::Finite(l) => ExtNat::Finite(inst.length() as u64 + l),
        ExtNat::Infinite => ExtNat::Infinite,
    };
    let (expected, ok_cell, ok) = expectation(expect, Some(d.accept));
    Ok(Row {
        cells: vec![
            "hierarchy".into(),
            inst.n.to_string(),
            inst.x.to_string(),
            inst.cost.to_string(),
            inst.precision.to_string(),
            inst.length().to_string(),
            inst.squarings().to_string(),
            approx(&cond.xi()),
            sci(cond.mu),
            cond.log2_mu.to_string(),
            size.to_string(),
            opt(rule),
            k_mach.to_string(),
            u_of(k_mach),
            yes_no(d.accept),
            yes_no(exact),
            yes_no(d.accept == exact),
            opt(witness.map(|w| approx(&w.delta))),
            expected,
            ok_cell,
            d.ops.to_string(),
            clock.cell(),
        ],
        expectation: ok,
    })
}
