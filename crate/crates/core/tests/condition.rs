use fplab::circuit::{
    eval_rounded, library, random_circuit, PerturbationMode, RandomCircuitSpec, Verdict,
};
use fplab::condition::{
    feasibility_condition_estimate, feasible_point_scores, mu_eval, rho_eval_bracket,
    BracketOptions, EstimateDirection, EstimateOptions,
};
use fplab::rational::{pow2, ExtRational};
use fplab::Rational;
use num_traits::{One, Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

/// `min(1, |x−c|/(|x|+|c|))`, the flip level of a single comparison.
fn closed_form(x: &Rational, c: &Rational) -> Rational {
    let denom = x.abs() + c.abs();
    if denom.is_zero() {
        return Rational::one();
    }
    ((x - c).abs() / denom).min(Rational::one())
}

#[test]
fn comparison_brackets_match_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..50 {
        let x = r(rng.gen_range(-200..=200), rng.gen_range(1..=16));
        let c = r(rng.gen_range(-200..=200), rng.gen_range(1..=16));
        if x == c {
            continue;
        }
        let circ = library::minus_const(c.clone());
        let b = rho_eval_bracket(&circ, std::slice::from_ref(&x), &BracketOptions::default()).unwrap();
        let rho = closed_form(&x, &c);
        assert!(b.contains_rho(&rho), "x={x} c={c}: {b}");
        assert!(&b.rho_hi - &b.rho_lo <= pow2(-18), "x={x} c={c}: {b}");
        if let Some(w) = &b.witness {
            let out = eval_rounded(&circ, std::slice::from_ref(&x), &w.replay_mode()).unwrap();
            assert_ne!(out.verdict, b.verdict);
            assert!(w.epsilon <= b.rho_hi);
        }
    }
}

#[test]
fn mu_of_x_minus_one_at_two_is_three() {
    let b = mu_eval(&library::minus_const(r(1, 1)), &[r(2, 1)], &pow2(-20)).unwrap();
    let (lo, hi) = (b.mu_lo.to_f64(), b.mu_hi.to_f64());
    assert!(lo <= 3.0 + 1e-4 && hi >= 3.0 - 1e-4 && hi - lo < 1e-4, "[{lo}, {hi}]");
    let id = mu_eval(&library::identity(), &[r(1, 1)], &pow2(-20)).unwrap();
    assert_eq!(id.mu_hi, ExtRational::Finite(r(1, 1)));
}

#[test]
fn narrowing_tolerance_refines() {
    let c = library::minus_const(r(3, 1));
    for x in [r(7, 2), r(-1, 1), r(10, 1)] {
        let coarse = rho_eval_bracket(&c, std::slice::from_ref(&x), &BracketOptions::with_tol(pow2(-6))).unwrap();
        let fine = rho_eval_bracket(&c, std::slice::from_ref(&x), &BracketOptions::with_tol(pow2(-24))).unwrap();
        assert!(coarse.rho_lo <= coarse.rho_hi && fine.rho_lo <= fine.rho_hi);
        assert!(fine.rho_lo <= coarse.rho_hi && coarse.rho_lo <= fine.rho_hi);
        assert!(fine.rho_hi - fine.rho_lo <= coarse.rho_hi - coarse.rho_lo);
    }
}

#[test]
fn certified_side_never_flips() {
    let spec = RandomCircuitSpec {
        inputs: 2,
        nodes: 20,
        allow_select: true,
        allow_div: true,
        max_degree: 8,
    };
    let opts = BracketOptions {
        tol: pow2(-8),
        flip_budget: 64,
        ..Default::default()
    };
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut checked = 0;
    let mut s = 0;
    while checked < 1000 {
        s += 1;
        let c = random_circuit(&spec, s);
        let x = vec![r(rng.gen_range(-20..=20), 4), r(rng.gen_range(-20..=20), 4)];
        let Ok(b) = rho_eval_bracket(&c, &x, &opts) else { continue };
        assert!(b.rho_lo <= b.rho_hi);
        if let Some(w) = &b.witness {
            let out = eval_rounded(&c, &x, &w.replay_mode()).unwrap();
            assert_ne!(out.verdict, b.verdict, "witness must flip");
        }
        if b.rho_lo.is_zero() {
            continue;
        }
        let eps = if b.rho_lo.is_one() { Rational::one() - pow2(-30) } else { b.rho_lo.clone() };
        for t in 0..20 {
            let mode = PerturbationMode::RandomRelative { epsilon: eps.clone(), seed: t };
            if let Ok(out) = eval_rounded(&c, &x, &mode) {
                assert_eq!(out.verdict, b.verdict, "circuit {s}");
            }
            checked += 1;
        }
    }
}

#[test]
fn estimate_examples() {
    let opts = EstimateOptions::default();
    let never = feasibility_condition_estimate(&library::neg_one_minus_square(), 2, true, &opts).unwrap();
    assert_eq!(never.direction, EstimateDirection::LowerBoundOnMu);
    assert_eq!(never.value, ExtRational::Finite(r(1, 1)));

    let est = feasibility_condition_estimate(&library::minus_const(r(1, 1)), 3, true, &opts).unwrap();
    assert_eq!(est.direction, EstimateDirection::UpperBoundOnMu);
    let mu = est.value.to_f64();
    assert!((mu - 2.8).abs() < 1e-4, "mu = {mu}");
    assert_eq!(est.best_point.unwrap().values(), vec![r(6, 1)]);
    assert!(!est.partial);

    let sq = feasibility_condition_estimate(&library::square(), 2, false, &opts).unwrap();
    assert_eq!(sq.direction, EstimateDirection::UpperBoundOnMu);
    assert_eq!(sq.value, ExtRational::Finite(r(1, 1)));
}

#[test]
fn bounded_scores_are_pointwise_smaller() {
    let (scores, _) = feasible_point_scores(&library::minus_const(r(1, 1)), 3, &EstimateOptions::default()).unwrap();
    assert!(!scores.is_empty());
    for s in &scores {
        assert_eq!(s.score_bounded, &s.score_unbounded * pow2(-(s.magnitude as i64)));
        assert!(s.score_bounded <= s.score_unbounded);
    }
}

#[test]
fn partial_estimates_are_flagged() {
    let opts = EstimateOptions {
        cap: 10,
        ..Default::default()
    };
    let est = feasibility_condition_estimate(&library::square(), 3, false, &opts).unwrap();
    assert!(est.partial);
    assert_eq!(est.samples_used, 10);
    let b = rho_eval_bracket(&library::identity(), &[r(-1, 1)], &BracketOptions::default()).unwrap();
    assert_eq!(b.verdict, Verdict::Out);
}
