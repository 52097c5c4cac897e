//! Certified brackets for the evaluation condition `ρ_eval` and one-sided
//! estimates of the feasibility conditions.
//!
//! The lower end of a bracket is certified by interval enclosures: every
//! ε-evaluation at a certified level returns the exact verdict. The upper
//! end is constructive: a recorded `δ` sequence whose replay flips the
//! verdict.

use std::fmt;

use num_traits::{One, Signed, Zero};
use rand::Rng;
use rayon::prelude::*;

use crate::circuit::{
    eval_exact, eval_interval_with, eval_rounded, Circuit, DeltaTrace, EvalError, IntervalOptions,
    PerturbationMode, Sign, Verdict,
};
use crate::feasibility::{with_workers, FeasError, GridCode, GridSpec};
use crate::fp_system::{magnitude_vec, shrink_factor};
use crate::rational::{pow2, ExtRational, Rational};
use crate::seed;

/// Smallest perturbation level probed; below it a point is reported ill-posed.
pub const MIN_LEVEL_EXP: i64 = 64;

/// Default relative tolerance `2^-20`.
pub fn default_tol() -> Rational {
    pow2(-20)
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BracketOptions {
    /// Relative bracket width target: stop once `hi − lo <= tol·hi/2`.
    pub tol: Rational,
    /// Evaluations allowed per flip search.
    pub flip_budget: usize,
    pub seed: u64,
    pub interval: IntervalOptions,
}

impl Default for BracketOptions {
    fn default() -> Self {
        BracketOptions {
            tol: default_tol(),
            flip_budget: 256,
            seed: 0,
            interval: IntervalOptions::default(),
        }
    }
}

impl BracketOptions {
    pub fn with_tol(tol: Rational) -> Self {
        BracketOptions {
            tol,
            ..Default::default()
        }
    }
}

/// An evaluation at level `epsilon` whose verdict differs from the exact one.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FlipWitness {
    pub epsilon: Rational,
    pub trace: DeltaTrace,
    pub value: Rational,
}

impl FlipWitness {
    pub fn replay_mode(&self) -> PerturbationMode {
        PerturbationMode::Replay {
            epsilon: self.epsilon.clone(),
            trace: self.trace.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ConditionBracket {
    /// Exact membership verdict of the point.
    pub verdict: Verdict,
    pub rho_lo: Rational,
    pub rho_hi: Rational,
    pub mu_lo: ExtRational,
    pub mu_hi: ExtRational,
    pub witness: Option<FlipWitness>,
    /// `rho_lo` carries an interval certificate (always true unless zero).
    pub certified_lo: bool,
    /// `rho_hi` is backed by a flip witness.
    pub certified_hi: bool,
    pub evaluations: u64,
}

impl ConditionBracket {
    fn from_rho(verdict: Verdict, rho_lo: Rational, rho_hi: Rational, witness: Option<FlipWitness>, evaluations: u64) -> Self {
        ConditionBracket {
            verdict,
            mu_lo: ExtRational::mu_from_rho(&rho_hi),
            mu_hi: ExtRational::mu_from_rho(&rho_lo),
            certified_lo: rho_lo.is_positive(),
            certified_hi: witness.is_some(),
            rho_lo,
            rho_hi,
            witness,
            evaluations,
        }
    }

    /// No certified level exists: the point behaves as ill-posed.
    pub fn ill_posed(&self) -> bool {
        self.rho_lo.is_zero()
    }

    pub fn contains_rho(&self, rho: &Rational) -> bool {
        self.rho_lo <= *rho && *rho <= self.rho_hi
    }

    /// `certified-lo`, `witness`, `ill-posed` joined by `|`.
    pub fn flags(&self) -> String {
        let mut f = Vec::new();
        if self.certified_lo {
            f.push("certified-lo");
        }
        if self.certified_hi {
            f.push("witness");
        }
        if self.ill_posed() {
            f.push("ill-posed");
        }
        f.join("|")
    }
}

impl fmt::Display for ConditionBracket {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "rho in [{}, {}], mu in [{}, {}]",
            self.rho_lo, self.rho_hi, self.mu_lo, self.mu_hi
        )
    }
}

struct Prober<'a> {
    c: &'a Circuit,
    x: &'a [Rational],
    verdict: Verdict,
    opts: &'a BracketOptions,
    evaluations: u64,
}

impl Prober<'_> {
    fn certifies(&mut self, eps: &Rational) -> bool {
        self.evaluations += 1;
        eval_interval_with(self.c, self.x, eps, self.opts.interval)
            .map(|o| o.verdict == self.verdict)
            .unwrap_or(false)
    }

    /// Signed distance from flipping: negative once the verdict has flipped.
    fn margin(&self, v: &Rational) -> Rational {
        match self.verdict {
            Verdict::In => v.clone(),
            _ => -v,
        }
    }

    fn run(&mut self, eps: &Rational, deltas: Vec<Rational>) -> Option<(Rational, DeltaTrace)> {
        self.evaluations += 1;
        let mode = PerturbationMode::Replay {
            epsilon: eps.clone(),
            trace: DeltaTrace { deltas },
        };
        let out = eval_rounded(self.c, self.x, &mode).ok()?;
        Some((out.exact_value()?.clone(), out.trace?))
    }

    fn corner(&mut self, eps: &Rational, dirs: &[Sign]) -> Option<(Rational, DeltaTrace)> {
        let mag = eps * shrink_factor();
        let deltas = dirs
            .iter()
            .map(|s| if *s == Sign::Plus { mag.clone() } else { -mag.clone() })
            .collect();
        self.run(eps, deltas)
    }

    fn flipped(&self, v: &Rational) -> bool {
        Verdict::of_value(v) != self.verdict
    }

    /// Heuristic search for a verdict-flipping ε-evaluation.
    fn find_flip(&mut self, eps: &Rational) -> Option<FlipWitness> {
        let sites = self.c.site_count();
        let budget = self.evaluations + self.opts.flip_budget as u64;
        let found = |v: Rational, t: DeltaTrace| FlipWitness {
            epsilon: eps.clone(),
            trace: t,
            value: v,
        };
        let base = self.run(eps, vec![Rational::zero(); sites]);
        let base_margin = base.as_ref().map(|(v, _)| self.margin(v));
        let mag = eps * shrink_factor();
        // one-sided sensitivity of each site picks the corner direction
        let mut dirs = Vec::with_capacity(sites);
        for i in 0..sites {
            let mut d = vec![Rational::zero(); sites];
            d[i] = mag.clone();
            let toward = match (self.run(eps, d), &base_margin) {
                (Some((v, _)), Some(m)) => {
                    if self.margin(&v) <= *m {
                        Sign::Plus
                    } else {
                        Sign::Minus
                    }
                }
                _ => Sign::Plus,
            };
            dirs.push(toward);
            if self.evaluations >= budget {
                break;
            }
        }
        dirs.resize(sites, Sign::Plus);
        let mut best = self.corner(eps, &dirs);
        if let Some((v, t)) = &best {
            if self.flipped(v) {
                return Some(found(v.clone(), t.clone()));
            }
        }
        // greedy single-site flips while the margin improves
        let mut improved = true;
        while improved && self.evaluations < budget {
            improved = false;
            for i in 0..sites {
                if self.evaluations >= budget {
                    break;
                }
                dirs[i] = dirs[i].flip();
                match self.corner(eps, &dirs) {
                    Some((v, t)) => {
                        if self.flipped(&v) {
                            return Some(found(v, t));
                        }
                        let better = best.as_ref().is_none_or(|(b, _)| self.margin(&v) < self.margin(b));
                        if better {
                            best = Some((v, t));
                            improved = true;
                        } else {
                            dirs[i] = dirs[i].flip();
                        }
                    }
                    None => dirs[i] = dirs[i].flip(),
                }
            }
        }
        // seeded restarts: random corners, then interior draws
        let mut rng = seed::rng(self.opts.seed, &[sites as u64, self.evaluations]);
        let mut round = 0u64;
        while self.evaluations < budget {
            round += 1;
            let attempt = if round % 2 == 1 {
                let random: Vec<Sign> = (0..sites)
                    .map(|_| if rng.gen_bool(0.5) { Sign::Plus } else { Sign::Minus })
                    .collect();
                self.corner(eps, &random)
            } else {
                let deltas = (0..sites)
                    .map(|_| crate::fp_system::sample_delta(&mut rng, eps))
                    .collect();
                self.run(eps, deltas)
            };
            if let Some((v, t)) = attempt {
                if self.flipped(&v) {
                    return Some(found(v, t));
                }
            }
        }
        None
    }
}

fn narrow_enough(lo: &Rational, hi: &Rational, tol: &Rational) -> bool {
    hi - lo <= tol * hi / Rational::from_integer(2.into()) || *hi <= pow2(-MIN_LEVEL_EXP)
}

fn midpoint(lo: &Rational, hi: &Rational) -> Rational {
    (lo + hi) / Rational::from_integer(2.into())
}

/// Brackets `ρ_eval(C, x)`: `rho_lo` is the largest level found whose
/// interval enclosure certifies the exact verdict, `rho_hi` the smallest
/// level at which a flipping evaluation was found (1 if none).
pub fn rho_eval_bracket(c: &Circuit, x: &[Rational], opts: &BracketOptions) -> Result<ConditionBracket, EvalError> {
    let verdict = eval_exact(c, x)?.verdict;
    let mut p = Prober {
        c,
        x,
        verdict,
        opts,
        evaluations: 1,
    };
    let one = Rational::one();

    // certified side
    let (rho_lo, first_uncertified) = if p.certifies(&one) {
        (one.clone(), None)
    } else {
        let mut hi = one.clone();
        let mut lo = None;
        for j in 1..=MIN_LEVEL_EXP {
            let eps = pow2(-j);
            if p.certifies(&eps) {
                lo = Some(eps);
                break;
            }
            hi = eps;
        }
        match lo {
            None => (Rational::zero(), Some(hi)),
            Some(mut lo) => {
                let mut h = hi.clone();
                while !narrow_enough(&lo, &h, &opts.tol) {
                    let m = midpoint(&lo, &h);
                    if p.certifies(&m) {
                        lo = m;
                    } else {
                        h = m;
                    }
                }
                (lo, Some(h))
            }
        }
    };

    // constructive side
    let near_one = &one - pow2(-MIN_LEVEL_EXP);
    let mut witness = None;
    if let Some(start) = first_uncertified {
        let start = if start >= one { near_one.clone() } else { start };
        witness = p.find_flip(&start);
        if witness.is_none() && start < near_one {
            witness = p.find_flip(&near_one);
        }
    }
    let rho_hi = match &witness {
        None => one,
        Some(w) => {
            let mut lo = rho_lo.clone();
            let mut hi = w.epsilon.clone();
            let mut guard = 0;
            while !narrow_enough(&lo, &hi, &opts.tol) && guard < 4 * MIN_LEVEL_EXP {
                guard += 1;
                let m = midpoint(&lo, &hi);
                match p.find_flip(&m) {
                    Some(f) => {
                        hi = m;
                        witness = Some(f);
                    }
                    None => lo = m,
                }
            }
            hi
        }
    };
    Ok(ConditionBracket::from_rho(verdict, rho_lo, rho_hi, witness, p.evaluations))
}

/// The `μ_eval` view of [`rho_eval_bracket`]. A point of the wrong arity is
/// not an instance: it gets `μ = 1` and verdict `Out`.
pub fn mu_eval(c: &Circuit, x: &[Rational], tol: &Rational) -> Result<ConditionBracket, EvalError> {
    if x.len() != c.input_arity() {
        let one = Rational::one();
        return Ok(ConditionBracket::from_rho(Verdict::Out, one.clone(), one, None, 0));
    }
    rho_eval_bracket(c, x, &BracketOptions::with_tol(tol.clone()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EstimateDirection {
    /// A certified feasible point gives `ρ >= value⁻¹`, hence `μ <= value`.
    UpperBoundOnMu,
    /// No feasible grid point: heuristic `μ >= value` from flip witnesses.
    LowerBoundOnMu,
}

impl fmt::Display for EstimateDirection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            EstimateDirection::UpperBoundOnMu => "upper",
            EstimateDirection::LowerBoundOnMu => "lower",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FeasibilityConditionEstimate {
    pub direction: EstimateDirection,
    /// Bound on `μ_feas` (or `μ_Bfeas` when `bounded`).
    pub value: ExtRational,
    /// The `ρ` score behind `value`.
    pub rho: Rational,
    pub bounded_variant: bool,
    pub samples_used: u64,
    /// Grid point attaining the score; smallest code on ties.
    pub best_point: Option<GridCode>,
    /// The grid exceeded the cap and only a prefix was scanned.
    pub partial: bool,
    /// Points skipped because exact evaluation divided by zero.
    pub domain_errors: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EstimateOptions {
    pub cap: u64,
    pub workers: Option<usize>,
    pub bracket: BracketOptions,
}

impl Default for EstimateOptions {
    fn default() -> Self {
        EstimateOptions {
            cap: 1 << 16,
            workers: None,
            bracket: BracketOptions::default(),
        }
    }
}

/// Score of one feasible grid point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PointScore {
    pub code: GridCode,
    pub point: Vec<Rational>,
    pub rho_lo: Rational,
    pub magnitude: u32,
    pub score_unbounded: Rational,
    pub score_bounded: Rational,
}

fn certified_rho(c: &Circuit, y: &[Rational], opts: &BracketOptions) -> Result<Rational, EvalError> {
    // only the certified side is needed for feasible points
    let verdict = eval_exact(c, y)?.verdict;
    let mut p = Prober {
        c,
        x: y,
        verdict,
        opts,
        evaluations: 0,
    };
    let one = Rational::one();
    if p.certifies(&one) {
        return Ok(one);
    }
    let mut hi = one;
    for j in 1..=MIN_LEVEL_EXP {
        let eps = pow2(-j);
        if p.certifies(&eps) {
            let mut lo = eps;
            while !narrow_enough(&lo, &hi, &opts.tol) {
                let m = midpoint(&lo, &hi);
                if p.certifies(&m) {
                    lo = m;
                } else {
                    hi = m;
                }
            }
            return Ok(lo);
        }
        hi = eps;
    }
    Ok(Rational::zero())
}

/// Certified scores `ρ_lo(y)` and `ρ_lo(y)·2^-mgt(y)` for every grid point
/// with exact verdict `In`, in grid order.
pub fn feasible_point_scores(c: &Circuit, k: u32, opts: &EstimateOptions) -> Result<(Vec<PointScore>, bool), FeasError> {
    let spec = GridSpec::new(k, c.input_arity())?;
    let total = spec.cardinality().unwrap_or(u128::MAX);
    let partial = total > opts.cap as u128;
    let take = total.min(opts.cap as u128) as u64;
    let scores = with_workers(opts.workers, || {
        (0..take)
            .into_par_iter()
            .filter_map(|i| {
                let code = spec.code_at(i as u128);
                let y = code.values();
                match eval_exact(c, &y) {
                    Ok(out) if out.verdict == Verdict::In => {
                        let rho = certified_rho(c, &y, &opts.bracket).expect("exact evaluation succeeded");
                        let m = magnitude_vec(&y);
                        Some(PointScore {
                            score_bounded: &rho * pow2(-(m as i64)),
                            score_unbounded: rho.clone(),
                            rho_lo: rho,
                            magnitude: m,
                            code,
                            point: y,
                        })
                    }
                    _ => None,
                }
            })
            .collect::<Vec<_>>()
    })?;
    Ok((scores, partial))
}

/// Grid-sampled estimate of `μ_feas` (or `μ_Bfeas` when `bounded`) over
/// `F_k^n`.
pub fn feasibility_condition_estimate(
    c: &Circuit,
    k: u32,
    bounded: bool,
    opts: &EstimateOptions,
) -> Result<FeasibilityConditionEstimate, FeasError> {
    let spec = GridSpec::new(k, c.input_arity())?;
    let (scores, partial) = feasible_point_scores(c, k, opts)?;
    let total = spec.cardinality().unwrap_or(u128::MAX);
    let samples = total.min(opts.cap as u128) as u64;
    if !scores.is_empty() {
        let mut best: Option<&PointScore> = None;
        for s in &scores {
            let v = if bounded { &s.score_bounded } else { &s.score_unbounded };
            let beats = best.is_none_or(|b| {
                let bv = if bounded { &b.score_bounded } else { &b.score_unbounded };
                v > bv
            });
            if beats {
                best = Some(s);
            }
        }
        let b = best.expect("non-empty");
        let rho = if bounded { b.score_bounded.clone() } else { b.score_unbounded.clone() };
        return Ok(FeasibilityConditionEstimate {
            direction: EstimateDirection::UpperBoundOnMu,
            value: ExtRational::mu_from_rho(&rho),
            rho,
            bounded_variant: bounded,
            samples_used: samples,
            best_point: Some(b.code.clone()),
            partial,
            domain_errors: 0,
        });
    }
    // infeasible on the grid: smallest flip level over all points
    let results = with_workers(opts.workers, || {
        (0..samples)
            .into_par_iter()
            .map(|i| {
                let code = spec.code_at(i as u128);
                let y = code.values();
                match rho_eval_bracket(c, &y, &opts.bracket) {
                    Ok(b) => Some((b.rho_hi, i)),
                    Err(_) => None,
                }
            })
            .collect::<Vec<_>>()
    })?;
    let domain_errors = results.iter().filter(|r| r.is_none()).count() as u64;
    let best = results
        .into_iter()
        .flatten()
        .min_by(|a, b| a.0.cmp(&b.0).then(a.1.cmp(&b.1)));
    let (rho, point) = match best {
        Some((rho, i)) => (rho, Some(spec.code_at(i as u128))),
        None => (Rational::one(), None),
    };
    Ok(FeasibilityConditionEstimate {
        direction: EstimateDirection::LowerBoundOnMu,
        value: ExtRational::mu_from_rho(&rho),
        rho,
        bounded_variant: bounded,
        samples_used: samples,
        best_point: point,
        partial,
        domain_errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::library;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    #[test]
    fn identity_is_perfectly_conditioned() {
        let b = rho_eval_bracket(&library::identity(), &[r(1, 1)], &BracketOptions::default()).unwrap();
        assert_eq!(b.rho_lo, r(1, 1));
        assert_eq!(b.rho_hi, r(1, 1));
        assert_eq!(b.mu_hi, ExtRational::Finite(r(1, 1)));
        assert!(b.witness.is_none());
    }

    #[test]
    fn x_minus_one_at_two() {
        let b = rho_eval_bracket(&library::minus_const(r(1, 1)), &[r(2, 1)], &BracketOptions::default()).unwrap();
        assert!(b.contains_rho(&r(1, 3)), "{b}");
        assert!(&b.rho_hi - &b.rho_lo <= pow2(-20));
        let w = b.witness.unwrap();
        let out = eval_rounded(&library::minus_const(r(1, 1)), &[r(2, 1)], &w.replay_mode()).unwrap();
        assert_eq!(out.verdict, Verdict::Out);
    }

    #[test]
    fn boundary_point_is_ill_posed() {
        let b = rho_eval_bracket(&library::minus_const(r(1, 1)), &[r(1, 1)], &BracketOptions::default()).unwrap();
        assert!(b.ill_posed());
        assert_eq!(b.mu_hi, ExtRational::Infinite);
        assert!(b.witness.is_some());
    }

    #[test]
    fn arity_mismatch_gives_unit_mu() {
        let b = mu_eval(&library::identity(), &[], &default_tol()).unwrap();
        assert_eq!(b.verdict, Verdict::Out);
        assert_eq!(b.mu_lo, ExtRational::Finite(r(1, 1)));
        assert_eq!(b.mu_hi, ExtRational::Finite(r(1, 1)));
    }
}
