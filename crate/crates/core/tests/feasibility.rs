use std::collections::BTreeSet;
use std::path::PathBuf;

use fplab::circuit::{
    eval_exact, library, parse_circuit, random_circuit, Circuit, EvalError, PerturbationMode,
    RandomCircuitSpec,
};
use fplab::feasibility::{
    decide_feasible_grid, decide_sign_change_1d, decode_grid_code, decode_grid_point,
    enumerate_grid, CoordCode, DecideMode, DecideOptions, Decision, FeasError, GridSpec,
};
use fplab::fp_system::{gamma_bound, relative_error, Arithmetic, ExactArithmetic, FpFormat, RoundingArithmetic};
use fplab::rational::pow2;
use fplab::Rational;
use num_traits::Signed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn r(n: i64, d: i64) -> Rational {
    Rational::new(n.into(), d.into())
}

fn corpus() -> Vec<Circuit> {
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus");
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|e| e == "circ"))
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| parse_circuit(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect()
}

#[test]
fn decode_set_equals_enumeration() {
    for k in 1..=3 {
        let spec = GridSpec::new(k, 1).unwrap();
        let enumerated: BTreeSet<Rational> = enumerate_grid(spec, 1 << 20)
            .unwrap()
            .map(|(_, v)| v[0].clone())
            .collect();
        let mut decoded = BTreeSet::new();
        for i in 0..spec.per_coordinate() {
            let mut a = ExactArithmetic::new();
            decoded.insert(decode_grid_point(&spec.coord_at(i), k, &mut a).unwrap());
        }
        assert_eq!(decoded, enumerated);
        assert_eq!(decoded.len() as u64, spec.per_coordinate());
    }
}

#[test]
fn rounded_decode_error_within_gamma() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for k in 5..=7u32 {
        let spec = GridSpec::new(k, 1).unwrap();
        let u = pow2(-2 * k as i64);
        let bound = gamma_bound(1 << (k + 2), &u).unwrap();
        let fmt = FpFormat::binary(2 * k).unwrap();
        assert_eq!(fmt.unit_roundoff(), u);
        for _ in 0..1000 {
            let code = spec.coord_at(rng.gen_range(0..spec.per_coordinate()));
            let exact = code.value(k);
            let mut a = RoundingArithmetic::new(fmt.clone());
            let approx = decode_grid_point(&code, k, &mut a).unwrap();
            assert!(relative_error(&approx, &exact).unwrap() <= bound);
        }
    }
}

#[test]
fn invalid_codes_are_rejected() {
    let bad = CoordCode::Nonzero {
        negative: false,
        exponent: 0,
        mantissa: 3,
    };
    let mut a = ExactArithmetic::new();
    assert!(matches!(decode_grid_point(&bad, 3, &mut a), Err(FeasError::InvalidCode(_))));
}

fn oracle(c: &Circuit, k: u32) -> Result<Option<usize>, EvalError> {
    let spec = GridSpec::new(k, c.input_arity()).unwrap();
    for (i, (_, y)) in enumerate_grid(spec, 1 << 24).unwrap().enumerate() {
        if !eval_exact(c, &y)?.exact_value().unwrap().is_negative() {
            return Ok(Some(i));
        }
    }
    Ok(None)
}

#[test]
fn exact_decider_matches_brute_force() {
    let mut circuits = corpus();
    let spec = RandomCircuitSpec {
        inputs: 2,
        nodes: 10,
        allow_select: true,
        allow_div: false,
        max_degree: 8,
    };
    circuits.extend((0..10).map(|s| random_circuit(&spec, s)));
    assert!(circuits.len() >= 20);
    for c in &circuits {
        for k in 1..=3 {
            if c.input_arity() == 2 && k == 3 && c.name().is_some_and(|n| n.starts_with("random")) {
                continue;
            }
            let rec = decide_feasible_grid(c, 2 * k, DecideMode::Exact, DecideOptions::default()).unwrap();
            let expected = oracle(c, k).unwrap();
            assert_eq!(rec.verdict == Decision::Yes, expected.is_some(), "{:?} k={k}", c.name());
            if let Some(i) = expected {
                assert_eq!(rec.points_scanned, i as u64 + 1);
                let w = rec.witness_point.unwrap();
                let gs = GridSpec::new(k, c.input_arity()).unwrap();
                assert_eq!(w, gs.code_at(i as u128));
            }
        }
    }
}

#[test]
fn precision_rule_for_comparison_circuits() {
    // x - 1: mu = 14/5, k_mach = ceil(log2(16 mu^2)) = 7; -1 - y^2: mu = 1, k_mach = 4
    let cases = [(library::minus_const(r(1, 1)), 7, Decision::Yes), (library::neg_one_minus_square(), 4, Decision::No)];
    for (c, k_mach, expected) in cases {
        for seed in 0..100 {
            for mode in [DecideMode::RoundNearest, DecideMode::RandomRelative { seed }] {
                let rec = decide_feasible_grid(&c, k_mach, mode, DecideOptions::default()).unwrap();
                assert_eq!(rec.verdict, expected);
                assert_eq!(rec.k, k_mach / 2);
            }
        }
    }
    for k_mach in 4..=8 {
        let rec = decide_feasible_grid(&library::neg_one_minus_square(), k_mach, DecideMode::IntervalRelative, DecideOptions::default()).unwrap();
        assert_eq!(rec.verdict, Decision::No);
    }
}

#[test]
fn witness_evaluates_nonnegative_and_is_stable_across_workers() {
    let c = library::minus_const(r(1, 1));
    let base = decide_feasible_grid(&c, 7, DecideMode::RoundNearest, DecideOptions { workers: Some(1), ..Default::default() }).unwrap();
    let w = base.witness_point.clone().unwrap();
    let mut a = ExactArithmetic::new();
    let y = decode_grid_code(&w, &mut a).unwrap();
    assert_eq!(y, vec![r(1, 1)]);
    let four = decide_feasible_grid(&c, 7, DecideMode::RoundNearest, DecideOptions { workers: Some(4), ..Default::default() }).unwrap();
    assert_eq!(base, four);
}

#[test]
fn interval_mode_reports_boundary_points() {
    // y = 1 is an exact zero of y - 1: no precision certifies its sign
    let c = library::minus_const(r(1, 1));
    for k_mach in 2..7 {
        let rec = decide_feasible_grid(&c, k_mach, DecideMode::IntervalRelative, DecideOptions::default()).unwrap();
        assert!(rec.unsure_points >= 1, "k_mach = {k_mach}");
    }
}

#[test]
fn ops_grow_linearly_with_grid() {
    let c = library::neg_one_minus_square();
    for k in 1..=4u32 {
        let rec = decide_feasible_grid(&c, 2 * k, DecideMode::Exact, DecideOptions::default()).unwrap();
        let spec = GridSpec::new(k, 1).unwrap();
        assert_eq!(rec.points_scanned, spec.per_coordinate());
        let mut expected = 0;
        for i in 0..spec.per_coordinate() {
            let mut a = ExactArithmetic::new();
            decode_grid_point(&spec.coord_at(i), k, &mut a).unwrap();
            expected += a.ops() + c.arith_count() as u64;
        }
        assert_eq!(rec.ops_total, expected);
        assert!(rec.ops_total <= spec.per_coordinate() * (4 * (k as u64 + 2) + 2));
    }
}

#[test]
fn cap_and_parameter_errors() {
    let c = parse_circuit(&std::fs::read_to_string(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../corpus/unit_disk.circ")).unwrap()).unwrap();
    let small = DecideOptions { cap: 1000, workers: None };
    assert!(matches!(decide_feasible_grid(&c, 6, DecideMode::Exact, small), Err(FeasError::CapExceeded { .. })));
    assert!(decide_feasible_grid(&c, 1, DecideMode::Exact, DecideOptions::default()).is_err());
}

#[test]
fn square_accepts_at_first_point() {
    let rec = decide_feasible_grid(&library::square(), 2, DecideMode::RoundNearest, DecideOptions::default()).unwrap();
    assert_eq!(rec.verdict, Decision::Yes);
    assert_eq!(rec.points_scanned, 1);
}

#[test]
fn sign_change_examples() {
    let id = library::identity();
    let rec = decide_sign_change_1d(&id, &r(-1, 1), &r(1, 1), 3, &PerturbationMode::Exact).unwrap();
    assert_eq!(rec.verdict, Decision::Yes);

    let pos = parse_circuit("inputs 1\nnode 0 input 0\nnode 1 mul 0 0\nnode 2 const 1\nnode 3 add 1 2\noutput 3\n").unwrap();
    for points in [2, 5, 17] {
        let rec = decide_sign_change_1d(&pos, &r(-1, 1), &r(1, 1), points, &PerturbationMode::Exact).unwrap();
        assert_eq!(rec.verdict, Decision::No);
    }

    let gap = corpus().into_iter().find(|c| c.name() == Some("parabola_gap")).unwrap();
    let rec = decide_sign_change_1d(&gap, &r(0, 1), &r(4, 1), 5, &PerturbationMode::Exact).unwrap();
    assert_eq!(rec.verdict, Decision::Yes);
    assert_eq!(rec.values[0].to_string(), "-3");
    assert!(decide_sign_change_1d(&gap, &r(1, 1), &r(0, 1), 5, &PerturbationMode::Exact).is_err());
    assert!(rec.values.iter().all(|v| !matches!(v, fplab::circuit::EvalValue::Indeterminate)));
}
