use std::path::Path;

use maxload_core::eval::{extend_exact_with_limit, Stabilization, Value};
use maxload_core::formats::{recurrence_from_json, recurrence_to_json};
use maxload_core::guess::{annihilates, fit_with, search_with, FitOptions, ResidueCache, Solver};
use maxload_core::real::Fixed;
use maxload_core::{
    a_sequence, extend_exact, extend_float, search, BigRational, PrecisionPolicy, ProblemSpec, RationalSequence,
    RecurrenceOperator,
};

fn fixture(n: u32, r: u32) -> RecurrenceOperator {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join(format!("tests/fixtures/rec_{n}_{r}.json"));
    recurrence_from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn spec(n: u32, r: u32) -> ProblemSpec {
    ProblemSpec::new(n, r).unwrap()
}

const CASES: [(u32, u32, u64); 4] = [(2, 1, 200), (3, 1, 200), (4, 1, 190), (4, 2, 160)];

#[test]
fn fixtures_reproduce_the_engine() {
    for (n, r, t) in CASES {
        let op = fixture(n, r);
        let direct = a_sequence(spec(n, r), t).unwrap();
        let unrolled = extend_exact(&op, t).unwrap();
        for (k, v) in &unrolled.values {
            assert_eq!(*v, Value::Exact(direct.get(*k).unwrap().clone()), "({n},{r}) T = {k}");
        }
        assert_eq!(unrolled.values.len() as u64, t);
        assert!(annihilates(&op, &direct, op.valid_from + 1, t).unwrap());
    }
}

#[test]
fn fixtures_round_trip() {
    for (n, r, _) in CASES {
        let op = fixture(n, r);
        let text = recurrence_to_json(&op);
        assert_eq!(recurrence_from_json(&text).unwrap(), op);
    }
}

fn exact_at(op: &RecurrenceOperator, t_max: u64) -> Vec<(u64, BigRational)> {
    let r = extend_exact_with_limit(op, t_max, t_max).unwrap();
    r.values
        .into_iter()
        .map(|(t, v)| match v {
            Value::Exact(q) => (t, q),
            Value::Float(_) => unreachable!(),
        })
        .collect()
}

#[test]
fn float_matches_exact_up_to_two_thousand() {
    for (n, r, t_max) in [(2, 1, 2000), (3, 1, 2000), (4, 2, 1200), (4, 1, 600)] {
        let op = fixture(n, r);
        let samples: Vec<u64> = (1..=t_max / 100).map(|k| k * 100).collect();
        let float = extend_float(&op, t_max, PrecisionPolicy::default(), &samples).unwrap();
        let exact = exact_at(&op, t_max);
        for t in &samples {
            let q = &exact[(*t - 1) as usize].1;
            let Value::Float(x) = &float.values[t] else { panic!("float path returned exact value") };
            let digits = x.agreed_digits(&Fixed::from_rational(q, 256));
            assert!(digits >= 60, "({n},{r}) T = {t}: {digits} digits");
        }
        assert!(float.precision_alarms().is_empty());
    }
}

#[test]
fn rolling_window_stays_small() {
    for (n, r, _) in CASES {
        let op = fixture(n, r);
        let samples = [1000, 5000, 20000];
        let res = extend_float(&op, 20000, PrecisionPolicy::new(128, false).unwrap(), &samples).unwrap();
        assert!(
            res.peak_live <= op.order() + samples.len() + 1,
            "({n},{r}) peak {} order {}",
            res.peak_live,
            op.order()
        );
    }
}

#[test]
fn deflation_agrees_with_guard_bits() {
    let op = fixture(4, 1);
    let samples = [4096, 16384, 30000];
    let deflated = extend_float(&op, 30000, PrecisionPolicy::new(192, false).unwrap(), &samples).unwrap();
    let mut guarded_policy = PrecisionPolicy::new(192, false).unwrap();
    guarded_policy.deflate = false;
    let guarded = extend_float(&op, 30000, guarded_policy, &samples).unwrap();
    assert!(matches!(deflated.stabilization, Some(Stabilization::Deflation { .. })));
    assert!(matches!(guarded.stabilization, Some(Stabilization::Guard { .. })));
    for t in samples {
        let a = deflated.values[&t].to_fixed(192);
        let b = guarded.values[&t].to_fixed(192);
        assert!(a.agreed_digits(&b) >= 45, "T = {t}: {} digits", a.agreed_digits(&b));
    }
}

#[test]
fn exact_and_modular_solvers_agree() {
    for (n, r, order, degree, terms) in [(2, 1, 2, 1, 40), (3, 1, 5, 5, 80), (4, 2, 8, 6, 100)] {
        let seq = a_sequence(spec(n, r), terms).unwrap();
        let solve = |solver| {
            let options = FitOptions {
                solver,
                ..FitOptions::default()
            };
            fit_with(&seq, order, degree, 15, &options, &mut ResidueCache::default())
                .unwrap()
                .operator
                .unwrap()
        };
        assert_eq!(solve(Solver::Exact), solve(Solver::Modular), "({n},{r})");
    }
}

#[test]
fn search_visits_smaller_ansatze_first() {
    let seq = a_sequence(spec(3, 1), 80).unwrap();
    let report = search(&seq, 6, 6, 15).unwrap();
    let op = report.operator.unwrap();
    assert_eq!((op.order(), op.degree()), (5, 5));
    let tried: Vec<(usize, usize)> = report.search_trace.iter().map(|e| (e.order, e.degree)).collect();
    assert_eq!(tried.last(), Some(&(5, 5)));
    assert!(tried.windows(2).all(|w| (w[0].0 + w[0].1, w[0].0) <= (w[1].0 + w[1].1, w[1].0)));
    assert_eq!(op, fixture(3, 1));
}

#[test]
fn perturbed_sequence_has_no_recurrence() {
    let mut seq = a_sequence(spec(3, 1), 80).unwrap();
    seq.values[70] += BigRational::new(1.into(), 1_000_003.into());
    let report = search_with(&seq, 6, 6, 15, &FitOptions::default()).unwrap();
    assert!(report.operator.is_none());
}

#[test]
fn too_few_terms_are_reported() {
    let seq = a_sequence(spec(3, 1), 20).unwrap();
    let report = search(&seq, 5, 5, 15).unwrap();
    assert!(report.operator.is_none());
    assert!(report.search_trace.iter().any(|e| matches!(
        e.outcome,
        maxload_core::guess::FitOutcome::InsufficientTerms { .. }
    )));
}

#[test]
fn unrolled_sequence_guesses_back_to_its_operator() {
    let op = fixture(2, 1);
    let values: Vec<BigRational> = exact_at(&op, 60).into_iter().map(|(_, q)| q).collect();
    let seq = RationalSequence::new(spec(2, 1), values);
    assert_eq!(search(&seq, 4, 4, 10).unwrap().operator.unwrap(), op);
}
