//! Deterministic experiment runner for the `fplab` laboratory.
//!
//! Each command writes one CSV table. Identical arguments (including the
//! seed) give byte-identical output for any worker count; the `wall_ms`
//! column stays `0` unless `--timing` is passed.
//!
//! Exit status: `0` success, `1` an `--expect` assertion failed, `2` usage
//! error (bad flags or config, unreadable inputs, violated preconditions),
//! `3` runtime error (malformed circuit, evaluation failure, cap exceeded).

pub mod args;
pub mod commands;
pub mod report;
pub mod sweep;
pub mod table;

use std::ffi::OsString;
use std::io::Write;

use anyhow::Context;
use clap::Parser;
use fplab::feasibility::DEFAULT_GRID_CAP;
use fplab::rational::Rational;
use rayon::prelude::*;

use args::{Cli, Command, Common, Mode};
use commands::usage;
use fplab::showcase::HierarchyInstance;
use table::Table;

/// Environment variable holding the default grid cap.
pub const GRID_CAP_ENV: &str = "FPLAB_GRID_CAP";
const ESTIMATE_CAP: u64 = 1 << 16;

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Runtime(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Runtime(e)
    }
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Usage(_) => 2,
            Failure::Runtime(_) => 3,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Runtime(e) => write!(f, "error: {e:#}"),
        }
    }
}

/// What a command produced.
#[derive(Debug, Clone, PartialEq)]
pub enum Output {
    Csv(Table),
    Text(String),
}

impl Output {
    pub fn expectation_failures(&self) -> usize {
        match self {
            Output::Csv(t) => t.expectation_failures(),
            Output::Text(_) => 0,
        }
    }

    pub fn bytes(&self) -> anyhow::Result<Vec<u8>> {
        match self {
            Output::Csv(t) => t.to_csv(),
            Output::Text(s) => Ok(s.clone().into_bytes()),
        }
    }
}

fn grid_cap(flag: Option<u64>, fallback: u64) -> Result<u64, Failure> {
    if let Some(c) = flag {
        return Ok(c);
    }
    match std::env::var(GRID_CAP_ENV) {
        Ok(v) => v
            .trim()
            .parse()
            .map_err(|_| usage(format!("{GRID_CAP_ENV}=`{v}` is not a point count"))),
        Err(_) => Ok(fallback),
    }
}

fn kmach_or_none(k: &Option<args::KmachList>, mode: Mode) -> Vec<Option<u32>> {
    match (mode, k) {
        (Mode::Exact, _) | (_, None) => vec![None],
        (_, Some(ks)) => ks.0.iter().copied().map(Some).collect(),
    }
}

fn rows<J: Sync>(
    jobs: Vec<J>,
    f: impl Fn(&J) -> Result<table::Row, Failure> + Sync + Send,
) -> Result<Vec<table::Row>, Failure> {
    jobs.par_iter().map(f).collect()
}

/// Loads a TOML experiment file.
pub fn load_config(path: &std::path::Path) -> Result<Command, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("cannot read config {}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn common(cmd: &Command) -> Option<&Common> {
    match cmd {
        Command::Eval(a) => Some(&a.common),
        Command::Condition(a) => Some(&a.common),
        Command::Decide(a) => Some(&a.common),
        Command::Sign1d(a) => Some(&a.common),
        Command::Sqrt(a) => Some(&a.common),
        Command::Hierarchy(a) => Some(&a.common),
        Command::Sweep(a) => Some(&a.common),
        Command::Report(_) | Command::Run(_) => None,
    }
}

/// Output path of a command, if it is not standard output.
pub fn out_path(cmd: &Command) -> Option<&std::path::Path> {
    match cmd {
        Command::Report(r) => r.out.as_deref(),
        other => common(other).and_then(|c| c.out.as_deref()),
    }
}

/// Runs one command on a pool of the requested size.
pub fn execute(cmd: &Command) -> Result<Output, Failure> {
    if let Command::Run(r) = cmd {
        return execute(&load_config(&r.config)?);
    }
    let workers = common(cmd).and_then(|c| c.workers);
    if workers == Some(0) {
        return Err(usage("--workers must be at least 1"));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = workers {
        builder = builder.num_threads(w);
    }
    let pool = builder.build().context("cannot start worker pool")?;
    pool.install(|| dispatch(cmd))
}

fn dispatch(cmd: &Command) -> Result<Output, Failure> {
    use commands::*;
    Ok(match cmd {
        Command::Eval(a) => {
            if a.at.is_empty() {
                return Err(usage("eval needs at least one --at point"));
            }
            let cs = load_circuits(&a.circuit)?;
            let mode = a.mode.unwrap_or(Mode::Exact);
            let mut jobs = Vec::new();
            for c in &cs {
                for x in &a.at {
                    for k in kmach_or_none(&a.kmach, mode) {
                        jobs.push((c, &x.0, k));
                    }
                }
            }
            let t = a.common.timing;
            Output::Csv(Table::new(EVAL_HEADER, rows(jobs, |(c, x, k)| eval_row(c, x, mode, *k, a.common.seed, a.expect, t))?))
        }
        Command::Condition(a) => {
            let cs = load_circuits(&a.circuit)?;
            let tol = a.tol.as_ref().map_or_else(fplab::condition::default_tol, |t| t.0.clone());
            if tol <= Rational::from_integer(0.into()) {
                return Err(usage("--tol must be positive"));
            }
            let t = a.common.timing;
            let seed = a.common.seed;
            let rows = match a.estimate {
                Some(k) => {
                    let cap = grid_cap(a.cap, ESTIMATE_CAP)?;
                    rows(cs.iter().collect(), |c| estimate_row(c, k, a.bounded, &tol, cap, seed, t))?
                }
                None => {
                    if a.at.is_empty() {
                        return Err(usage("condition needs --at points or --estimate K"));
                    }
                    let jobs: Vec<_> = cs.iter().flat_map(|c| a.at.iter().map(move |x| (c, &x.0))).collect();
                    rows(jobs, |(c, x)| condition_row(c, x, &tol, seed, t))?
                }
            };
            Output::Csv(Table::new(CONDITION_HEADER, rows))
        }
        Command::Decide(a) => {
            let cs = load_circuits(&a.circuit)?;
            let ks = a.kmach.as_ref().ok_or_else(|| usage("decide needs --kmach"))?;
            let mode = a.mode.unwrap_or(Mode::Round);
            let cap = grid_cap(a.cap, DEFAULT_GRID_CAP)?;
            let jobs: Vec<_> = cs.iter().flat_map(|c| ks.0.iter().map(move |&k| (c, k))).collect();
            let t = a.common.timing;
            Output::Csv(Table::new(
                DECIDE_HEADER,
                rows(jobs, |(c, k)| decide_row(c, *k, mode, a.common.seed, cap, a.expect, t))?,
            ))
        }
        Command::Sign1d(a) => {
            let cs = load_circuits(&a.circuit)?;
            let (Some(from), Some(to)) = (&a.from, &a.to) else {
                return Err(usage("sign1d needs --from and --to"));
            };
            let mode = a.mode.unwrap_or(Mode::Exact);
            let points = a.points.unwrap_or(17);
            let mut jobs = Vec::new();
            for c in &cs {
                for k in kmach_or_none(&a.kmach, mode) {
                    jobs.push((c, k));
                }
            }
            let t = a.common.timing;
            Output::Csv(Table::new(
                SIGN1D_HEADER,
                rows(jobs, |(c, k)| sign1d_row(c, &from.0, &to.0, points, mode, *k, a.common.seed, a.expect, t))?,
            ))
        }
        Command::Sqrt(a) => {
            if a.a.is_empty() {
                return Err(usage("sqrt needs at least one --a"));
            }
            let mode = a.mode.unwrap_or(Mode::Round);
            let eps: Vec<Rational> = if a.epsilon.is_empty() {
                vec![Rational::new(1.into(), 100.into())]
            } else {
                a.epsilon.iter().map(|e| e.0.clone()).collect()
            };
            let mut jobs = Vec::new();
            for x in &a.a {
                for e in &eps {
                    for k in kmach_or_none(&a.kmach, mode) {
                        jobs.push((&x.0, e, k));
                    }
                }
            }
            let t = a.common.timing;
            Output::Csv(Table::new(SQRT_HEADER, rows(jobs, |(x, e, k)| sqrt_row(x, e, mode, *k, a.common.seed, t))?))
        }
        Command::Hierarchy(a) => {
            if a.x.is_empty() {
                return Err(usage("hierarchy needs at least one --x"));
            }
            let cost = parse_cost(a.cost.as_deref())?;
            let precision = parse_precision(a.precision.as_deref())?;
            let ks: Vec<Option<u32>> = a.kmach.as_ref().map_or_else(|| vec![None], |k| k.0.iter().copied().map(Some).collect());
            let mut jobs = Vec::new();
            for x in &a.x {
                for &k in &ks {
                    jobs.push((HierarchyInstance::new(a.n, x.0.clone(), cost, precision), k));
                }
            }
            let t = a.common.timing;
            Output::Csv(Table::new(HIERARCHY_HEADER, rows(jobs, |(inst, k)| hierarchy_row(inst, *k, a.expect, t))?))
        }
        Command::Sweep(a) => {
            let cap = grid_cap(a.cap, DEFAULT_GRID_CAP)?;
            Output::Csv(sweep::sweep(a, cap)?)
        }
        Command::Report(r) => {
            if r.inputs.is_empty() {
                return Err(usage("report needs at least one CSV file"));
            }
            Output::Text(report::report(&r.inputs)?)
        }
        Command::Run(_) => unreachable!("handled by execute"),
    })
}

/// Parses arguments, runs, writes the output and returns the exit status.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let cmd = match &cli.command {
        Command::Run(r) => match load_config(&r.config) {
            Ok(c) => c,
            Err(f) => {
                eprintln!("{f}");
                return f.exit_code();
            }
        },
        other => other.clone(),
    };
    let output = match execute(&cmd) {
        Ok(o) => o,
        Err(f) => {
            eprintln!("{f}");
            return f.exit_code();
        }
    };
    if let Err(e) = write_output(&cmd, &output) {
        eprintln!("error: {e:#}");
        return 3;
    }
    let failures = output.expectation_failures();
    if failures > 0 {
        eprintln!("expectation failed on {failures} row(s)");
        return 1;
    }
    0
}

fn write_output(cmd: &Command, output: &Output) -> anyhow::Result<()> {
    let bytes = output.bytes()?;
    match out_path(cmd) {
        Some(p) => std::fs::write(p, bytes).with_context(|| format!("cannot write {}", p.display())),
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(&bytes)?;
            Ok(stdout.flush()?)
        }
    }
}
