//! Acceptance suite. Runs the ten release criteria in order and prints one
//! `PASS`/`FAIL` line for each; the process fails if any criterion does.
//!
//! Pass criterion numbers as arguments to run a subset:
//! `cargo test -p fplab-cli --test acceptance -- 3 7`.

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use fplab::circuit::{
    eval_exact, eval_interval, eval_rounded, parse_circuit, random_circuit, Circuit, EvalError,
    PerturbationMode, RandomCircuitSpec,
};
use fplab::condition::{
    feasibility_condition_estimate, mu_eval, rho_eval_bracket, BracketOptions, EstimateDirection,
    EstimateOptions,
};
use fplab::feasibility::{
    decide_feasible_grid, decode_grid_point, DecideMode, DecideOptions, Decision, GridSpec,
};
use fplab::fp_system::{gamma_bound, round, ExactArithmetic, FpFormat, OverflowMode, RoundingArithmetic};
use fplab::rational::{pow2, ExtRational};
use fplab::seed::rng;
use fplab::showcase::{
    hero_format, hero_iterations, hero_sqrt, hierarchy_condition, hierarchy_decide,
    hierarchy_k_mach, hierarchy_witness,
};
use fplab::Rational;
use fplab_cli::args::{Command, Common, Mode, SweepArgs, SweepTarget};
use fplab_cli::sweep::{random_instance, random_radicand};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, Signed, Zero};
use rand::Rng;

type Outcome = Result<String, String>;
type SweepConfig = (&'static str, SweepTarget, Option<&'static str>, Option<Mode>, u64);

struct Criterion {
    id: u32,
    name: &'static str,
    limit: Option<Duration>,
    run: fn() -> Outcome,
}

fn secs(s: u64) -> Option<Duration> {
    Some(Duration::from_secs(s))
}

fn main() {
    let wanted: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "standard-model rounding", limit: secs(30), run: rounding },
        Criterion { id: 2, name: "product lemma", limit: secs(10), run: product_lemma },
        Criterion { id: 3, name: "condition brackets", limit: secs(60), run: condition_brackets },
        Criterion { id: 4, name: "interval soundness fuzz", limit: secs(120), run: interval_fuzz },
        Criterion { id: 5, name: "grid decoder", limit: secs(30), run: grid_decoder },
        Criterion { id: 6, name: "grid decider vs oracle", limit: secs(60), run: decider_vs_oracle },
        Criterion { id: 7, name: "precision rule", limit: secs(60), run: precision_rule },
        Criterion { id: 8, name: "Hero schedule", limit: secs(30), run: hero_schedule },
        Criterion { id: 9, name: "hierarchy", limit: secs(60), run: hierarchy },
        Criterion { id: 10, name: "reproducibility", limit: None, run: reproducibility },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| wanted.is_empty() || wanted.contains(&c.id)) {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(c.run).unwrap_or_else(|p| {
            Err(p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        let elapsed = start.elapsed();
        let outcome = match (outcome, c.limit) {
            (Ok(_), Some(limit)) if elapsed > limit => Err(format!("took longer than {}s", limit.as_secs())),
            (o, _) => o,
        };
        let limit = c.limit.map_or_else(String::new, |l| format!(" / {}s", l.as_secs()));
        let (tag, detail) = match outcome {
            Ok(d) => ("PASS", d),
            Err(d) => {
                failed += 1;
                ("FAIL", d)
            }
        };
        println!("criterion {:>2} {tag} {}: {detail} [{:.1}s{limit}]", c.id, c.name, elapsed.as_secs_f64());
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn corpus_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../corpus")
}

fn corpus() -> Vec<Circuit> {
    let mut paths: Vec<_> = std::fs::read_dir(corpus_dir())
        .expect("corpus directory")
        .map(|e| e.expect("directory entry").path())
        .filter(|p| p.extension().is_some_and(|e| e == "circ"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| parse_circuit(&std::fs::read_to_string(p).expect("readable")).expect("valid corpus circuit"))
        .collect()
}

fn corpus_circuit(name: &str) -> Circuit {
    parse_circuit(&std::fs::read_to_string(corpus_dir().join(name)).expect("readable")).expect("valid")
}

// ---------------------------------------------------------------------------
// 1

/// Every element of a small binary format, sorted, with its mantissa.
fn enumerate_format(t: u32, emin: i64, emax: i64) -> Vec<(Rational, i64)> {
    let mut out = vec![(Rational::zero(), 0)];
    for e in emin..=emax {
        for m in 1i64 << (t - 1)..1i64 << t {
            let v = Rational::from_integer(m.into()) * pow2(e - t as i64);
            out.push((-v.clone(), m));
            out.push((v, m));
        }
    }
    out.sort();
    out
}

/// Nearest element by exhaustive search; ties go to the even mantissa.
fn nearest(x: &Rational, elements: &[(Rational, i64)]) -> Rational {
    let mut best: Option<(&Rational, Rational, i64)> = None;
    for (v, m) in elements {
        let d = (v - x).abs();
        let better = match &best {
            None => true,
            Some((_, bd, bm)) => d < *bd || (d == *bd && m % 2 == 0 && bm % 2 != 0),
        };
        if better {
            best = Some((v, d, *m));
        }
    }
    best.expect("non-empty format").0.clone()
}

fn rounding() -> Outcome {
    let (emin, emax) = (-6i64, 6i64);
    let mut g = rng(1, &[]);
    let mut checked = 0;
    let mut compared = 0;
    for t in 3..=8u32 {
        let fmt = FpFormat::bounded(2, t, emin, emax).map_err(|e| e.to_string())?;
        let bound = pow2(-(t as i64));
        ensure(fmt.unit_roundoff() == bound, || format!("t={t}: unit roundoff {}", fmt.unit_roundoff()))?;
        let lo = fmt.min_positive().expect("bounded");
        let hi = fmt.max_value().expect("bounded");
        let elements = (t <= 4).then(|| enumerate_format(t, emin, emax));
        let mut done = 0;
        while done < 10_000 {
            let s = g.gen_range(emin - 1..emax);
            let q: i64 = g.gen_range(1..1_000_000);
            let p: i64 = g.gen_range(0..q);
            let mut x = pow2(s) * (Rational::one() + r(p, q));
            if let (Some(el), true) = (&elements, done % 4 == 0) {
                // a midpoint of two neighbours exercises ties-to-even
                let i = g.gen_range(0..el.len() - 1);
                x = (&el[i].0 + &el[i + 1].0) / r(2, 1);
            } else if g.gen_bool(0.5) {
                x = -x;
            }
            if x.abs() < lo || x.abs() > hi {
                continue;
            }
            let fl = round(&x, &fmt, OverflowMode::Error).map_err(|e| format!("t={t}, x={x}: {e}"))?.value();
            ensure((&fl - &x).abs() < &bound * x.abs(), || format!("t={t}, x={x}: fl(x)={fl}"))?;
            if let Some(el) = &elements {
                if done < 1000 {
                    let want = nearest(&x, el);
                    ensure(fl == want, || format!("t={t}, x={x}: fl(x)={fl}, nearest {want}"))?;
                    compared += 1;
                }
            }
            done += 1;
            checked += 1;
        }
    }
    Ok(format!("{checked} roundings within 2^-t, {compared} match the enumeration oracle"))
}

// ---------------------------------------------------------------------------
// 2

fn product_lemma() -> Outcome {
    // δ = d/2^32 with |d| <= 2^16, so |δ| <= u = 2^-16
    const U_INV: u64 = 1 << 16;
    let scale = 1u64 << 32;
    let mut g = rng(2, &[]);
    let mut worst = 0f64;
    for trial in 0..100_000u32 {
        let n: u64 = g.gen_range(1..=100);
        let mut num = BigUint::one();
        let mut den = BigUint::one();
        for _ in 0..n {
            let d: i64 = match g.gen_range(0..8) {
                0 => U_INV as i64,
                1 => -(U_INV as i64),
                _ => g.gen_range(-(U_INV as i64)..=U_INV as i64),
            };
            let factor = (scale as i64 + d) as u64;
            if g.gen_bool(0.5) {
                num *= factor;
                den *= scale;
            } else {
                num *= scale;
                den *= factor;
            }
        }
        // |num/den − 1| <= n·u/(1 − n·u)  ⇔  (2^16 − n)·|num − den| <= n·den
        let diff = if num >= den { &num - &den } else { &den - &num };
        let lhs = &diff * (U_INV - n);
        let rhs = &den * n;
        if lhs > rhs {
            return Err(format!("trial {trial}: n={n} violates the gamma bound"));
        }
        if trial % 1000 == 0 {
            let theta = Rational::new(BigInt::from(diff), BigInt::from(den));
            let gamma = gamma_bound(n, &pow2(-16)).map_err(|e| e.to_string())?;
            ensure(gamma == r(n as i64, (U_INV - n) as i64), || format!("gamma_bound({n}) = {gamma}"))?;
            worst = worst.max(fplab::rational::to_f64(&(theta / gamma)));
        }
    }
    Ok(format!("10^5 products within gamma_n; largest sampled |theta|/gamma = {worst:.3}"))
}

// ---------------------------------------------------------------------------
// 3

fn condition_brackets() -> Outcome {
    let mut g = rng(3, &[]);
    let mut done = 0;
    while done < 50 {
        let x = r(g.gen_range(-400..=400), g.gen_range(1..=32));
        let c = r(g.gen_range(-400..=400), g.gen_range(1..=32));
        if x == c {
            continue;
        }
        let circuit = fplab::circuit::library::minus_const(c.clone());
        let b = rho_eval_bracket(&circuit, std::slice::from_ref(&x), &BracketOptions::with_tol(pow2(-20)))
            .map_err(|e| e.to_string())?;
        let denom = x.abs() + c.abs();
        let closed = ((&x - &c).abs() / denom).min(Rational::one());
        ensure(b.rho_lo <= closed && closed <= b.rho_hi, || format!("x={x}, c={c}: {closed} outside [{}, {}]", b.rho_lo, b.rho_hi))?;
        ensure(&b.rho_hi - &b.rho_lo <= pow2(-18), || format!("x={x}, c={c}: width {}", &b.rho_hi - &b.rho_lo))?;
        done += 1;
    }
    let b = mu_eval(&corpus_circuit("x_minus_one.circ"), &[r(2, 1)], &pow2(-20)).map_err(|e| e.to_string())?;
    let (ExtRational::Finite(lo), ExtRational::Finite(hi)) = (&b.mu_lo, &b.mu_hi) else {
        return Err("mu bracket of x-1 at 2 is unbounded".into());
    };
    let three = r(3, 1);
    ensure(*lo <= three && three <= *hi, || format!("mu bracket [{lo}, {hi}] misses 3"))?;
    ensure(hi - lo <= r(1, 10_000), || format!("mu bracket [{lo}, {hi}] wider than 1e-4"))?;
    Ok(format!("50 brackets contain the closed form; mu(x-1 at 2) in [{:.6}, {:.6}]", b.mu_lo.to_f64(), b.mu_hi.to_f64()))
}

// ---------------------------------------------------------------------------
// 4

fn interval_fuzz() -> Outcome {
    let mut straddles = 0;
    for i in 0..10_000u64 {
        let mut g = rng(4, &[i]);
        let spec = RandomCircuitSpec {
            inputs: g.gen_range(1..=3),
            nodes: g.gen_range(2..=30),
            allow_select: true,
            allow_div: true,
            max_degree: 12,
        };
        let c = random_circuit(&spec, i);
        let x: Vec<Rational> = (0..c.input_arity()).map(|_| r(g.gen_range(-64..=64), g.gen_range(1..=16))).collect();
        let eps = pow2(-g.gen_range(1..24));
        let enclosure = eval_interval(&c, &x, &eps).map_err(|e| format!("triple {i}: {e}"))?;
        let mode = PerturbationMode::RandomRelative { epsilon: eps.clone(), seed: i };
        match eval_rounded(&c, &x, &mode) {
            Ok(out) => {
                let v = out.exact_value().ok_or_else(|| format!("triple {i}: rounded run has no value"))?;
                if let Some(iv) = enclosure.interval() {
                    ensure(iv.contains(v), || format!("triple {i}: {v} outside {iv:?} (eps {eps})"))?;
                } else {
                    straddles += 1;
                }
            }
            Err(EvalError::Domain { .. }) => {
                ensure(enclosure.flags.denominator_straddle, || format!("triple {i}: division by zero outside any straddle"))?;
                straddles += 1;
            }
            Err(e) => return Err(format!("triple {i}: {e}")),
        }
    }
    Ok(format!("10^4 sampled evaluations inside their enclosures ({straddles} with a zero-straddling denominator)"))
}

// ---------------------------------------------------------------------------
// 5 and 6

/// `F_k`: `t = k+1`, exponents `[−2^k+1, 2^(k+1)−1]`, plus zero.
fn fk_values(k: u32) -> Vec<Rational> {
    let t = k as i64 + 1;
    let mut out = vec![Rational::zero()];
    for e in -(1i64 << k) + 1..=(1i64 << (k + 1)) - 1 {
        for m in 1i64 << k..1i64 << (k + 1) {
            let v = Rational::from_integer(m.into()) * pow2(e - t);
            out.push(-v.clone());
            out.push(v);
        }
    }
    out
}

fn grid_decoder() -> Outcome {
    for k in 1..=3u32 {
        let spec = GridSpec::new(k, 1).map_err(|e| e.to_string())?;
        let mut decoded = BTreeSet::new();
        for i in 0..spec.per_coordinate() {
            let mut a = ExactArithmetic::new();
            decoded.insert(decode_grid_point(&spec.coord_at(i), k, &mut a).map_err(|e| e.to_string())?);
        }
        let expected: BTreeSet<Rational> = fk_values(k).into_iter().collect();
        ensure(decoded.len() as u64 == spec.per_coordinate(), || format!("k={k}: decoding is not injective"))?;
        ensure(decoded == expected, || format!("k={k}: decoded set differs from F_k"))?;
    }
    let mut g = rng(5, &[]);
    let mut worst = 0f64;
    for k in 5..=7u32 {
        let spec = GridSpec::new(k, 1).map_err(|e| e.to_string())?;
        let u = pow2(-2 * k as i64);
        let fmt = FpFormat::binary(2 * k).map_err(|e| e.to_string())?;
        ensure(fmt.unit_roundoff() == u, || format!("k={k}: format roundoff {}", fmt.unit_roundoff()))?;
        let n = Rational::from_integer((1i64 << (k + 2)).into());
        let gamma = &n * &u / (Rational::one() - &n * &u);
        let members: BTreeSet<Rational> = fk_values(k).into_iter().collect();
        for _ in 0..1000 {
            let code = spec.coord_at(g.gen_range(0..spec.per_coordinate()));
            let exact = decode_grid_point(&code, k, &mut ExactArithmetic::new()).map_err(|e| e.to_string())?;
            ensure(members.contains(&exact), || format!("k={k}: {exact} is not in F_k"))?;
            let approx = decode_grid_point(&code, k, &mut RoundingArithmetic::new(fmt.clone())).map_err(|e| e.to_string())?;
            let err = if exact.is_zero() {
                ensure(approx.is_zero(), || format!("k={k}: zero decoded as {approx}"))?;
                Rational::zero()
            } else {
                ((&approx - &exact) / &exact).abs()
            };
            ensure(err <= gamma, || format!("k={k}: {exact} decoded as {approx}"))?;
            worst = worst.max(fplab::rational::to_f64(&(err / &gamma)));
        }
    }
    Ok(format!("F_1..F_3 round-trip; 3000 rounded decodes within gamma (worst {worst:.2e} of the bound)"))
}

/// Any point of `F_k^n` with a nonnegative exact value.
fn brute_force(c: &Circuit, k: u32) -> Result<bool, EvalError> {
    let values = fk_values(k);
    let n = c.input_arity();
    let mut idx = vec![0usize; n];
    loop {
        let y: Vec<Rational> = idx.iter().map(|&i| values[i].clone()).collect();
        if !eval_exact(c, &y)?.exact_value().expect("exact").is_negative() {
            return Ok(true);
        }
        let mut pos = 0;
        loop {
            if pos == n {
                return Ok(false);
            }
            idx[pos] += 1;
            if idx[pos] < values.len() {
                break;
            }
            idx[pos] = 0;
            pos += 1;
        }
    }
}

fn decider_vs_oracle() -> Outcome {
    let circuits = corpus();
    ensure(circuits.len() >= 20, || format!("only {} corpus circuits", circuits.len()))?;
    let (mut yes, mut no) = (0, 0);
    for c in &circuits {
        let name = c.name().unwrap_or("?").to_string();
        ensure(c.input_arity() <= 2, || format!("{name} has more than two inputs"))?;
        for k in 1..=3u32 {
            let expected = brute_force(c, k);
            let rec = decide_feasible_grid(c, 2 * k, DecideMode::Exact, DecideOptions::default());
            match (expected, rec) {
                (Ok(want), Ok(rec)) => {
                    ensure((rec.verdict == Decision::Yes) == want, || format!("{name} k={k}: decider {:?}, oracle {want}", rec.verdict))?;
                    if let Some(w) = &rec.witness_point {
                        let v = eval_exact(c, &w.values()).map_err(|e| e.to_string())?;
                        ensure(!v.exact_value().expect("exact").is_negative(), || format!("{name} k={k}: witness is negative"))?;
                    }
                    if want {
                        yes += 1;
                    } else {
                        no += 1;
                    }
                }
                (Err(_), Err(_)) => {}
                (want, got) => return Err(format!("{name} k={k}: oracle {want:?}, decider {:?}", got.map(|r| r.verdict))),
            }
        }
    }
    Ok(format!("{} circuits x k=1..3 agree ({yes} feasible, {no} infeasible)", circuits.len()))
}

// ---------------------------------------------------------------------------
// 7

/// `⌈log₂(16μ²)⌉` by exact comparison.
fn rule_k_mach(mu: &Rational) -> u32 {
    let target = Rational::from_integer(16.into()) * mu * mu;
    (0..).find(|&k| pow2(k as i64) >= target).expect("finite")
}

fn precision_rule() -> Outcome {
    let cases = [("x_minus_one.circ", Decision::Yes, 7), ("neg_one_minus_square.circ", Decision::No, 4)];
    let mut report = Vec::new();
    for (file, expected, want_k) in cases {
        let c = corpus_circuit(file);
        let est = feasibility_condition_estimate(&c, 3, true, &EstimateOptions::default()).map_err(|e| e.to_string())?;
        let ExtRational::Finite(mu) = &est.value else {
            return Err(format!("{file}: unbounded estimate"));
        };
        let mu = match expected {
            Decision::Yes => {
                ensure(est.direction == EstimateDirection::UpperBoundOnMu, || format!("{file}: expected an upper bound"))?;
                ensure((fplab::rational::to_f64(mu) - 2.8).abs() < 1e-3, || format!("{file}: mu = {mu}"))?;
                mu.clone()
            }
            _ => {
                ensure(*mu == Rational::one(), || format!("{file}: mu = {mu}"))?;
                Rational::one()
            }
        };
        let k_mach = rule_k_mach(&mu);
        ensure(k_mach == want_k, || format!("{file}: rule gives k_mach {k_mach}"))?;
        for seed in 0..100u64 {
            for mode in [DecideMode::RoundNearest, DecideMode::RandomRelative { seed }] {
                let rec = decide_feasible_grid(&c, k_mach, mode, DecideOptions::default()).map_err(|e| e.to_string())?;
                ensure(rec.verdict == expected, || format!("{file} seed {seed} {mode:?}: {:?}", rec.verdict))?;
            }
        }
        report.push(format!("{} mu={:.4} k_mach={k_mach}", c.name().unwrap_or(file), fplab::rational::to_f64(&mu)));
    }
    Ok(format!("{}; 100 seeds each, nearest and random rounding", report.join(", ")))
}

// ---------------------------------------------------------------------------
// 8

/// `√a` to 64 decimal digits: `[s, s+1]·10^-64`.
fn sqrt_64_digits(a: &Rational) -> (Rational, Rational) {
    let scale = BigInt::from(10u32).pow(128);
    let n = (a.numer() * &scale) / a.denom();
    let s = n.sqrt();
    let ulp = BigInt::from(10u32).pow(64);
    (Rational::new(s.clone(), ulp.clone()), Rational::new(s + 1, ulp))
}

fn hero_schedule() -> Outcome {
    let mut worst = 0f64;
    for eps in [r(1, 100), r(1, 10_000)] {
        let fmt = hero_format(&eps).map_err(|e| e.to_string())?;
        ensure(fmt.unit_roundoff() <= &eps / r(16, 1), || format!("eps {eps}: u = {}", fmt.unit_roundoff()))?;
        let log = fplab::rational::to_f64(&eps).log2().abs().ceil() as u32;
        ensure(hero_iterations(&eps) == log + 2, || format!("eps {eps}: {} iterations", hero_iterations(&eps)))?;
        for i in 0..100u64 {
            let a = match i {
                0 => pow2(-8),
                1 => pow2(8),
                _ => random_radicand(8_000 + i),
            };
            let run = hero_sqrt(&a, &eps, &fmt).map_err(|e| format!("a={a}: {e}"))?;
            let (lo, hi) = sqrt_64_digits(&a);
            let err = (&run.result - &lo).abs().max((&run.result - &hi).abs()) / &lo;
            ensure(err < eps, || format!("a={a}, eps {eps}: relative error {}", fplab::rational::to_f64(&err)))?;
            worst = worst.max(fplab::rational::to_f64(&(err / &eps)));
        }
    }
    Ok(format!("200 runs below epsilon; worst error {worst:.2e} of epsilon"))
}

// ---------------------------------------------------------------------------
// 9

/// `y^(2^t) >= ½` by fixed-point squaring with outward rounding.
fn member(y: &Rational, t: u32) -> bool {
    if y.is_negative() {
        return false;
    }
    let mut bits = t as usize + 128;
    loop {
        let one = BigInt::one() << bits;
        let half = BigInt::one() << (bits - 1);
        let scaled = y.numer() * &one;
        let mut lo = &scaled / y.denom();
        let mut hi = (&scaled + y.denom() - 1) / y.denom();
        let mut verdict = None;
        for _ in 0..t {
            if lo >= one {
                verdict = Some(true);
                break;
            }
            if hi < half {
                verdict = Some(false);
                break;
            }
            lo = (&lo * &lo) >> bits;
            hi = ((&hi * &hi) + &one - 1) >> bits;
        }
        let verdict = verdict.or(if lo >= half {
            Some(true)
        } else if hi < half {
            Some(false)
        } else {
            None
        });
        if let Some(v) = verdict {
            return v;
        }
        bits *= 2;
    }
}

/// Bracket of the boundary point `2^(−2^−t)` by bisection on `member`.
fn boundary(t: u32) -> (Rational, Rational) {
    let (mut lo, mut hi) = (r(1, 2), Rational::one());
    for _ in 0..64 {
        let mid = (&lo + &hi) / r(2, 1);
        if member(&mid, t) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

fn hierarchy() -> Outcome {
    let mut witnesses = 0;
    let mut trials = 0u64;
    let mut boundaries = std::collections::HashMap::new();
    for i in 0..1000u64 {
        let inst = random_instance(9_000 + i, None, None);
        let t = inst.squarings();
        let truth = member(&inst.x, t);
        let k = hierarchy_k_mach(&inst).ok_or_else(|| format!("instance {i} is ill-posed: {inst:?}"))?;
        let d = hierarchy_decide(&inst, k).map_err(|e| e.to_string())?;
        ensure(d.accept == truth, || format!("instance {i} at k_mach {k}: decide {} vs membership {truth}", d.accept))?;

        let cond = hierarchy_condition(&inst);
        let mut levels = vec![r(1, 2), &cond.xi_hi * r(2, 1), &cond.xi_hi * r(11, 10), &cond.xi_hi + pow2(-30)];
        levels.retain(|u| *u > cond.xi_hi && *u < Rational::one());
        for u in levels {
            let w = hierarchy_witness(&inst, &u).ok_or_else(|| format!("instance {i}: no witness at u={u}"))?;
            ensure(w.delta.abs() < u, || format!("instance {i}: |delta| >= u"))?;
            let y = &inst.x * (Rational::one() + &w.delta);
            ensure(y == w.perturbed, || format!("instance {i}: perturbed input mismatch"))?;
            ensure(member(&y, t) != truth, || format!("instance {i}: witness at u={u} does not flip"))?;
            witnesses += 1;
        }

        let u = &cond.xi_lo / r(2, 1);
        ensure(hierarchy_witness(&inst, &u).is_none(), || format!("instance {i}: witness below xi/2"))?;
        if inst.x.is_negative() || u.is_zero() {
            continue;
        }
        let (blo, bhi) = boundaries.entry(t).or_insert_with(|| boundary(t)).clone();
        let mut g = rng(9, &[i]);
        for j in 0..1000 {
            let delta = match j {
                0 => -u.clone(),
                1 => u.clone(),
                _ => &u * r(g.gen_range(-(1i64 << 30)..=1 << 30), 1 << 30),
            };
            let y = &inst.x * (Rational::one() + delta);
            let m = if y >= bhi {
                true
            } else if y < blo {
                false
            } else {
                member(&y, t)
            };
            ensure(m == truth, || format!("instance {i}: trial {j} flips at |delta| <= xi/2"))?;
            trials += 1;
        }
    }
    Ok(format!("1000 decisions correct at the rule, {witnesses} witnesses flip, {trials} trials below xi/2 never flip"))
}

// ---------------------------------------------------------------------------
// 10

fn sweep_csv(target: SweepTarget, kmach: Option<&str>, mode: Option<Mode>, seeds: u64, workers: usize) -> Result<Vec<u8>, String> {
    let args = SweepArgs {
        target,
        seeds,
        kmach: kmach.map(|k| k.parse().expect("valid schedule")),
        mode,
        common: Common {
            seed: 17,
            workers: Some(workers),
            ..Default::default()
        },
        ..Default::default()
    };
    let out = fplab_cli::execute(&Command::Sweep(args)).map_err(|e| e.to_string())?;
    out.bytes().map_err(|e| e.to_string())
}

fn reproducibility() -> Outcome {
    let configs: [SweepConfig; 6] = [
        ("decide/round", SweepTarget::Decide, Some("4..10"), None, 10),
        ("decide/random", SweepTarget::Decide, Some("4..8"), Some(Mode::Random), 10),
        ("eval", SweepTarget::Eval, Some("6,10"), None, 40),
        ("condition", SweepTarget::Condition, None, None, 20),
        ("sqrt", SweepTarget::Sqrt, None, None, 40),
        ("hierarchy", SweepTarget::Hierarchy, None, None, 100),
    ];
    let mut bytes = 0;
    for (name, target, kmach, mode, seeds) in configs {
        let one = sweep_csv(target, kmach, mode, seeds, 1)?;
        let four = sweep_csv(target, kmach, mode, seeds, 4)?;
        let again = sweep_csv(target, kmach, mode, seeds, 4)?;
        ensure(one == four, || format!("{name}: output differs between 1 and 4 workers"))?;
        ensure(four == again, || format!("{name}: rerun differs"))?;
        ensure(one.iter().filter(|&&b| b == b'\n').count() as u64 > seeds, || format!("{name}: too few rows"))?;
        bytes += one.len();
    }
    // a sanity check that the comparison is not vacuous
    let shifted = sweep_csv(SweepTarget::Sqrt, None, None, 41, 1)?;
    ensure(shifted != sweep_csv(SweepTarget::Sqrt, None, None, 40, 1)?, || "sweeps ignore their size".into())?;
    Ok(format!("6 sweeps ({bytes} bytes) identical at 1 and 4 workers and on rerun"))
}
