//! Command-line and configuration-file schema.
//!
//! Every flag has a TOML key of the same (kebab-case) name, and the
//! subcommand is given by a top-level `command` key, so a config file and a
//! command line describe the same run.

use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use fplab::{parse_rational, Rational};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

#[derive(Parser, Debug)]
#[command(name = "fplab", version, about = "Deterministic finite-precision experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "lowercase")]
pub enum Command {
    /// Evaluate circuits at points, exactly or under a perturbation mode.
    Eval(EvalArgs),
    /// Bracket the evaluation condition at points, or estimate the
    /// feasibility condition over a grid.
    Condition(ConditionArgs),
    /// Decide circuit feasibility by grid search.
    Decide(DecideArgs),
    /// Detect a zero of a one-input circuit by sign changes.
    Sign1d(Sign1dArgs),
    /// Hero's square root under the precision schedule.
    Sqrt(SqrtArgs),
    /// Decide instances of the repeated-squaring problem.
    Hierarchy(HierarchyArgs),
    /// Run one command over seeds and precisions.
    Sweep(SweepArgs),
    /// Summarize CSV files produced by the other commands.
    Report(ReportArgs),
    /// Run the experiment described by a TOML file.
    #[serde(skip)]
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Eval(_) => "eval",
            Command::Condition(_) => "condition",
            Command::Decide(_) => "decide",
            Command::Sign1d(_) => "sign1d",
            Command::Sqrt(_) => "sqrt",
            Command::Hierarchy(_) => "hierarchy",
            Command::Sweep(_) => "sweep",
            Command::Report(_) => "report",
            Command::Run(_) => "run",
        }
    }
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Common {
    /// Base seed for every random choice.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when omitted. Output does not depend on it.
    #[arg(long)]
    pub workers: Option<usize>,
    /// Write the CSV here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Record wall-clock milliseconds (otherwise the column is 0).
    #[arg(long)]
    pub timing: bool,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Round,
    Random,
    Interval,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Exact => "exact",
            Mode::Round => "round",
            Mode::Random => "random",
            Mode::Interval => "interval",
        })
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Expect {
    Yes,
    No,
}

impl Expect {
    pub fn holds(self, yes: bool) -> bool {
        yes == (self == Expect::Yes)
    }
}

impl fmt::Display for Expect {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(if *self == Expect::Yes { "yes" } else { "no" })
    }
}

/// Precision schedule: `7`, `4..12` (inclusive) or `4,6,8`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KmachList(pub Vec<u32>);

impl FromStr for KmachList {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let bad = || format!("invalid k_mach schedule `{s}`");
        let mut out = Vec::new();
        for part in s.split(',') {
            let part = part.trim();
            if let Some((lo, hi)) = part.split_once("..") {
                let lo: u32 = lo.trim().parse().map_err(|_| bad())?;
                let hi: u32 = hi.trim().parse().map_err(|_| bad())?;
                if lo > hi {
                    return Err(bad());
                }
                out.extend(lo..=hi);
            } else {
                out.push(part.parse().map_err(|_| bad())?);
            }
        }
        if out.is_empty() {
            return Err(bad());
        }
        Ok(KmachList(out))
    }
}

impl fmt::Display for KmachList {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(u32::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

/// An exact rational literal such as `1/3`, `0.5` or `1e-6`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Num(pub Rational);

impl FromStr for Num {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        parse_rational(s).map(Num).map_err(|e| e.to_string())
    }
}

impl fmt::Display for Num {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// A point, coordinates separated by commas: `2` or `1/2,-3`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Point(pub Vec<Rational>);

impl FromStr for Point {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        s.split(',')
            .map(|c| parse_rational(c).map_err(|e| e.to_string()))
            .collect::<Result<_, _>>()
            .map(Point)
    }
}

impl fmt::Display for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|c| c.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

/// TOML scalars accepted where a flag takes text: `kmach = 7`,
/// `at = [2]` and `a = 0.5` read like their string forms.
#[derive(Deserialize)]
#[serde(untagged)]
enum Scalar {
    Int(i64),
    Float(f64),
    Text(String),
}

macro_rules! text_serde {
    ($($t:ty),*) => {$(
        impl Serialize for $t {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                s.collect_str(self)
            }
        }

        impl<'de> Deserialize<'de> for $t {
            fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
                let text = match Scalar::deserialize(d)? {
                    Scalar::Int(i) => i.to_string(),
                    Scalar::Float(x) => x.to_string(),
                    Scalar::Text(t) => t,
                };
                text.parse().map_err(serde::de::Error::custom)
            }
        }
    )*};
}

text_serde!(KmachList, Num, Point);

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct EvalArgs {
    /// Circuit file; repeat for several.
    #[arg(long, required = true)]
    pub circuit: Vec<PathBuf>,
    /// Evaluation point; repeat for several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub at: Vec<Point>,
    /// Perturbation mode [default: exact].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Precisions for the non-exact modes (`u = 2^-k_mach`).
    #[arg(long)]
    pub kmach: Option<KmachList>,
    /// Expected membership (`yes` = output nonnegative).
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ConditionArgs {
    #[arg(long, required = true)]
    pub circuit: Vec<PathBuf>,
    /// Point for an evaluation bracket; repeat for several.
    #[arg(long, allow_hyphen_values = true)]
    pub at: Vec<Point>,
    /// Relative bracket width [default: 2^-20].
    #[arg(long)]
    pub tol: Option<Num>,
    /// Estimate the feasibility condition over the grid `F_k^n` instead.
    #[arg(long, value_name = "K")]
    pub estimate: Option<u32>,
    /// Use the magnitude-weighted (bounded) feasibility variant.
    #[arg(long)]
    pub bounded: bool,
    /// Grid points scanned by an estimate [default: FPLAB_GRID_CAP or 65536].
    #[arg(long)]
    pub cap: Option<u64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct DecideArgs {
    #[arg(long, required = true)]
    pub circuit: Vec<PathBuf>,
    /// Precisions; the grid is `F_k` with `k = k_mach/2`.
    #[arg(long, required = true)]
    pub kmach: Option<KmachList>,
    /// Arithmetic of the decider [default: round].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Grid points allowed [default: FPLAB_GRID_CAP or 2^24].
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct Sign1dArgs {
    #[arg(long, required = true)]
    pub circuit: Vec<PathBuf>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub from: Option<Num>,
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub to: Option<Num>,
    /// Number of equally spaced evaluation points [default: 17].
    #[arg(long)]
    pub points: Option<usize>,
    /// [default: exact]
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    #[arg(long)]
    pub kmach: Option<KmachList>,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SqrtArgs {
    /// Radicand; repeat for several.
    #[arg(long, required = true)]
    pub a: Vec<Num>,
    /// Target relative accuracy; repeat for several [default: 1/100].
    #[arg(long)]
    pub epsilon: Vec<Num>,
    /// `round` (scheduled precision) or `exact` [default: round].
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Override the scheduled precision; must still satisfy the schedule.
    #[arg(long)]
    pub kmach: Option<KmachList>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct HierarchyArgs {
    /// Integer part of the instance; only its bit length matters.
    #[arg(long, default_value_t = 1)]
    pub n: u64,
    /// Real part of the instance; repeat for several.
    #[arg(long, required = true, allow_hyphen_values = true)]
    pub x: Vec<Num>,
    /// Cost function: linear, quadratic, exp or const-C [default: linear].
    #[arg(long)]
    pub cost: Option<String>,
    /// Precision function: identity or linear-C [default: identity].
    #[arg(long)]
    pub precision: Option<String>,
    /// Precisions; the sufficient precision of each instance when omitted.
    #[arg(long)]
    pub kmach: Option<KmachList>,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SweepTarget {
    #[default]
    Decide,
    Eval,
    Condition,
    Sqrt,
    Hierarchy,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct SweepArgs {
    /// Command to repeat.
    #[arg(long = "command", visible_alias = "target", value_enum)]
    #[serde(rename = "target")]
    pub target: SweepTarget,
    /// Number of seeds; run `i` uses seed `seed + i`.
    #[arg(long, default_value_t = 10)]
    pub seeds: u64,
    #[arg(long)]
    pub kmach: Option<KmachList>,
    /// Circuit files; random circuits (one per seed) when omitted.
    #[arg(long)]
    pub circuit: Vec<PathBuf>,
    #[arg(long, value_enum)]
    pub mode: Option<Mode>,
    /// Accuracies for `sqrt` [default: 1/100 and 1/10000].
    #[arg(long)]
    pub epsilon: Vec<Num>,
    #[arg(long)]
    pub tol: Option<Num>,
    /// Cost function for `hierarchy`; random per seed when omitted.
    #[arg(long)]
    pub cost: Option<String>,
    /// Precision function for `hierarchy`; random per seed when omitted.
    #[arg(long)]
    pub precision: Option<String>,
    #[arg(long)]
    pub cap: Option<u64>,
    #[arg(long, value_enum)]
    pub expect: Option<Expect>,
    #[command(flatten)]
    #[serde(flatten)]
    pub common: Common,
}

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, rename_all = "kebab-case")]
pub struct ReportArgs {
    /// CSV files, all of one kind.
    pub inputs: Vec<PathBuf>,
    /// Write the summary here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, PartialEq)]
pub struct RunArgs {
    /// TOML file with a `command` key and the flags of that command.
    pub config: PathBuf,
}
