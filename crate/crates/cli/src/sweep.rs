//! Seeded sweeps. Jobs are listed in a fixed order, run in parallel and
//! collected in that order, so the CSV does not depend on the worker count.

use fplab::circuit::{random_circuit, RandomCircuitSpec};
use fplab::rational::{pow2, Rational};
use fplab::seed::rng;
use fplab::showcase::{boundary_enclosure, CostFn, HierarchyInstance, PrecisionFn};
use num_traits::{One, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::args::{Mode, SweepArgs, SweepTarget};
use crate::commands::{
    condition_row, decide_row, eval_row, hierarchy_row, load_circuits, parse_cost, parse_precision, sqrt_row, usage,
    Named, CONDITION_HEADER, DECIDE_HEADER, EVAL_HEADER, HIERARCHY_HEADER, SQRT_HEADER,
};
use crate::table::{Row, Table};
use crate::Failure;

const POINT_STREAM: u64 = 0x706f_696e;
const RADICAND_STREAM: u64 = 0x7261_6469;
const INSTANCE_STREAM: u64 = 0x696e_7374;

/// Small selection circuits without division: every grid point evaluates.
pub fn sweep_circuit_spec() -> RandomCircuitSpec {
    RandomCircuitSpec {
        inputs: 1,
        nodes: 8,
        allow_select: true,
        allow_div: false,
        max_degree: 16,
    }
}

/// Coordinates `m/256` with `|m| <= 1024`.
pub fn random_point(seed: u64, arity: usize) -> Vec<Rational> {
    let mut g = rng(seed, &[POINT_STREAM]);
    (0..arity)
        .map(|_| Rational::new(g.gen_range(-1024i64..=1024).into(), 256.into()))
        .collect()
}

/// `2^e·(1 + m/2^20)` with `-8 <= e < 8`, so within `[2^-8, 2^8)`.
pub fn random_radicand(seed: u64) -> Rational {
    let mut g = rng(seed, &[RADICAND_STREAM]);
    let e = g.gen_range(-8i64..8);
    let m = g.gen_range(0i64..1 << 20);
    pow2(e) * (Rational::one() + Rational::new(m.into(), (1i64 << 20).into()))
}

/// A hierarchy instance; one in five lies within `2^-8..2^-28` (relative)
/// of the boundary.
pub fn random_instance(seed: u64, cost: Option<CostFn>, precision: Option<PrecisionFn>) -> HierarchyInstance {
    let mut g = rng(seed, &[INSTANCE_STREAM]);
    let cost = cost.unwrap_or_else(|| match g.gen_range(0..4) {
        0 => CostFn::Linear,
        1 => CostFn::Quadratic,
        2 => CostFn::Exp,
        _ => CostFn::Constant(g.gen_range(0..6)),
    });
    let n = match cost {
        CostFn::Exp => g.gen_range(0..32),
        _ => g.gen_range(0..1024),
    };
    let precision = precision.unwrap_or_else(|| {
        if g.gen_bool(0.5) {
            PrecisionFn::Identity
        } else {
            PrecisionFn::Linear(g.gen_range(1..4))
        }
    });
    let mut inst = HierarchyInstance::new(n, Rational::zero(), cost, precision);
    inst.x = if g.gen_bool(0.2) {
        let (lo, _) = boundary_enclosure(inst.squarings(), 80);
        let xb = fplab::rational::round_significant(&lo, 30, fplab::rational::Direction::Down);
        let shift = pow2(-g.gen_range(8..28));
        if g.gen_bool(0.5) {
            xb * (Rational::one() + shift)
        } else {
            xb * (Rational::one() - shift)
        }
    } else {
        Rational::new(g.gen_range(0i64..=1 << 40).into(), (1i64 << 39).into())
    };
    inst
}

fn circuits(args: &SweepArgs, seeds: &[u64]) -> Result<Vec<(Named, Vec<u64>)>, Failure> {
    if args.circuit.is_empty() {
        let spec = sweep_circuit_spec();
        Ok(seeds
            .iter()
            .map(|&s| (Named::new(random_circuit(&spec, s)), vec![s]))
            .collect())
    } else {
        Ok(load_circuits(&args.circuit)?
            .into_iter()
            .map(|c| (c, seeds.to_vec()))
            .collect())
    }
}

fn kmach_list(args: &SweepArgs) -> Option<Vec<u32>> {
    args.kmach.as_ref().map(|k| k.0.clone())
}

fn run_jobs<J: Sync>(jobs: Vec<J>, f: impl Fn(&J) -> Result<Row, Failure> + Sync + Send) -> Result<Vec<Row>, Failure> {
    jobs.par_iter().map(f).collect()
}

pub fn sweep(args: &SweepArgs, cap: u64) -> Result<Table, Failure> {
    if args.seeds == 0 {
        return Err(usage("--seeds must be at least 1"));
    }
    let seeds: Vec<u64> = (0..args.seeds).map(|i| args.common.seed.wrapping_add(i)).collect();
    let timing = args.common.timing;
    let expect = args.expect;
    match args.target {
        SweepTarget::Decide => {
            let ks = kmach_list(args).ok_or_else(|| usage("sweep over decide needs --kmach"))?;
            let mode = args.mode.unwrap_or(Mode::Round);
            let mut jobs = Vec::new();
            for (c, ss) in circuits(args, &seeds)? {
                for &s in &ss {
                    for &k in &ks {
                        jobs.push((c.clone(), s, k));
                    }
                }
            }
            let rows = run_jobs(jobs, |(c, s, k)| decide_row(c, *k, mode, *s, cap, expect, timing))?;
            Ok(Table::new(DECIDE_HEADER, rows))
        }
        SweepTarget::Eval => {
            let mode = args.mode.unwrap_or(Mode::Random);
            let ks: Vec<Option<u32>> = match (mode, kmach_list(args)) {
                (Mode::Exact, _) => vec![None],
                (_, Some(ks)) => ks.into_iter().map(Some).collect(),
                (m, None) => return Err(usage(format!("sweep over eval in mode `{m}` needs --kmach"))),
            };
            let mut jobs = Vec::new();
            for (c, ss) in circuits(args, &seeds)? {
                for &s in &ss {
                    let x = random_point(s, c.circuit.input_arity());
                    for &k in &ks {
                        jobs.push((c.clone(), x.clone(), s, k));
                    }
                }
            }
            let rows = run_jobs(jobs, |(c, x, s, k)| eval_row(c, x, mode, *k, *s, expect, timing))?;
            Ok(Table::new(EVAL_HEADER, rows))
        }
        SweepTarget::Condition => {
            let tol = args.tol.as_ref().map_or_else(fplab::condition::default_tol, |t| t.0.clone());
            let mut jobs = Vec::new();
            for (c, ss) in circuits(args, &seeds)? {
                for &s in &ss {
                    jobs.push((c.clone(), random_point(s, c.circuit.input_arity()), s));
                }
            }
            let rows = run_jobs(jobs, |(c, x, s)| condition_row(c, x, &tol, *s, timing))?;
            Ok(Table::new(CONDITION_HEADER, rows))
        }
        SweepTarget::Sqrt => {
            let mode = args.mode.unwrap_or(Mode::Round);
            let eps: Vec<Rational> = if args.epsilon.is_empty() {
                vec![Rational::new(1.into(), 100.into()), Rational::new(1.into(), 10_000.into())]
            } else {
                args.epsilon.iter().map(|e| e.0.clone()).collect()
            };
            let ks: Vec<Option<u32>> = kmach_list(args).map_or_else(|| vec![None], |ks| ks.into_iter().map(Some).collect());
            let mut jobs = Vec::new();
            for &s in &seeds {
                let a = random_radicand(s);
                for e in &eps {
                    for &k in &ks {
                        jobs.push((a.clone(), e.clone(), s, k));
                    }
                }
            }
            let rows = run_jobs(jobs, |(a, e, s, k)| sqrt_row(a, e, mode, *k, *s, timing))?;
            Ok(Table::new(SQRT_HEADER, rows))
        }
        SweepTarget::Hierarchy => {
            let cost = args.cost.as_deref().map(|c| parse_cost(Some(c))).transpose()?;
            let precision = args.precision.as_deref().map(|p| parse_precision(Some(p))).transpose()?;
            let ks: Vec<Option<u32>> = kmach_list(args).map_or_else(|| vec![None], |ks| ks.into_iter().map(Some).collect());
            let mut jobs = Vec::new();
            for &s in &seeds {
                let inst = random_instance(s, cost, precision);
                for &k in &ks {
                    jobs.push((inst.clone(), k));
                }
            }
            let rows = run_jobs(jobs, |(inst, k)| hierarchy_row(inst, *k, expect, timing))?;
            Ok(Table::new(HIERARCHY_HEADER, rows))
        }
    }
}
