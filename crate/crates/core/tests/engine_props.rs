use maxload_core::engine::{self, centered_mean, initial_state, max_pmf, state_at, step};
use maxload_core::{a_sequence, brute_force_oracle, closed_form_n2, BigInt, BigRational, BigUint, EngineConfig, ProblemSpec};
use num_integer::binomial;
use num_traits::{One, Zero};
use proptest::prelude::*;

fn spec_strategy(max_n: u32) -> impl Strategy<Value = ProblemSpec> {
    (1..=max_n).prop_flat_map(|n| (Just(n), 1..=n)).prop_map(|(n, r)| ProblemSpec::new(n, r).unwrap())
}

fn q(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn agrees_with_brute_force(spec in spec_strategy(4), t in 1u64..=6) {
        prop_assert_eq!(a_sequence(spec, t).unwrap(), brute_force_oracle(spec, t).unwrap());
    }

    #[test]
    fn pmf_is_a_distribution_on_the_feasible_range(spec in spec_strategy(6), t in 1u64..=12) {
        let state = state_at(spec, t, &EngineConfig::default()).unwrap();
        let pmf = max_pmf(&state, spec);
        let total: BigRational = pmf.entries.values().sum();
        prop_assert_eq!(total, BigRational::one());
        let lo = (spec.r as u64 * t).div_ceil(spec.n as u64);
        prop_assert!(pmf.entries.keys().all(|&m| (lo..=t).contains(&m)));
        prop_assert!(pmf.entries.values().all(|p| *p > BigRational::zero()));
    }

    #[test]
    fn total_mass_counts_every_history(spec in spec_strategy(6), t in 0u64..=10) {
        let state = state_at(spec, t, &EngineConfig::default()).unwrap();
        let per_round: BigUint = binomial(BigUint::from(spec.n), BigUint::from(spec.r));
        prop_assert_eq!(state.total_mass(), per_round.pow(t as u32));
    }

    #[test]
    fn centered_mean_is_nonnegative_and_consistent(spec in spec_strategy(6), t in 1u64..=12) {
        let state = state_at(spec, t, &EngineConfig::default()).unwrap();
        let a = centered_mean(&state, spec);
        prop_assert!(a >= BigRational::zero());
        let shift = BigRational::new(BigInt::from(spec.r as u64 * t), BigInt::from(spec.n));
        prop_assert_eq!(max_pmf(&state, spec).mean() - shift, a);
    }

    #[test]
    fn expected_maximum_never_decreases(spec in spec_strategy(5), t in 1u64..=14) {
        let seq = a_sequence(spec, t + 1).unwrap();
        let drift = q(spec.r as i64, spec.n as i64);
        // E[max] = A + rT/n must not drop from T to T+1.
        prop_assert!(seq.get(t + 1).unwrap() + &drift >= *seq.get(t).unwrap());
    }

    #[test]
    fn first_round(spec in spec_strategy(8)) {
        let seq = a_sequence(spec, 1).unwrap();
        prop_assert_eq!(seq.values[0].clone(), BigRational::one() - q(spec.r as i64, spec.n as i64));
    }

    #[test]
    fn bounded_by_rounds(spec in spec_strategy(5), t in 1u64..=12) {
        let seq = a_sequence(spec, t).unwrap();
        let cap = BigRational::from_integer(BigInt::from(t)) * (BigRational::one() - q(spec.r as i64, spec.n as i64));
        prop_assert!(seq.values.iter().all(|a| *a <= cap));
    }

    #[test]
    fn stepping_is_deterministic(spec in spec_strategy(5), t in 1u64..=8) {
        let mut a = initial_state(spec);
        let mut b = initial_state(spec);
        for _ in 0..t {
            a = step(&a, spec);
            b = engine::step_with(&b, spec, false);
        }
        prop_assert_eq!(a.sorted(), b.sorted());
    }
}

#[test]
fn full_rounds_have_no_spread() {
    for n in 1..=6 {
        let spec = ProblemSpec::new(n, n).unwrap();
        assert!(a_sequence(spec, 20).unwrap().values.iter().all(Zero::is_zero));
    }
}

#[test]
fn two_bins_closed_form_on_odd_rounds() {
    let seq = a_sequence(ProblemSpec::new(2, 1).unwrap(), 61).unwrap();
    for t in (1..=61).step_by(2) {
        assert_eq!(&closed_form_n2(t).unwrap(), seq.get(t).unwrap(), "T = {t}");
    }
    // Even rounds repeat the preceding odd value.
    for t in (2..=60).step_by(2) {
        assert_eq!(seq.get(t), seq.get(t - 1), "T = {t}");
    }
}

#[test]
fn known_small_values() {
    let three = a_sequence(ProblemSpec::new(3, 1).unwrap(), 5).unwrap();
    assert_eq!(three.values, vec![q(2, 3), q(2, 3), q(8, 9), q(28, 27), q(10, 9)]);
    let four_two = a_sequence(ProblemSpec::new(4, 2).unwrap(), 1).unwrap();
    assert_eq!(four_two.values, vec![q(1, 2)]);
}

#[test]
fn state_ceiling_is_enforced() {
    let spec = ProblemSpec::new(6, 3).unwrap();
    let config = EngineConfig {
        state_ceiling: 50,
        parallel: false,
    };
    assert!(maxload_core::engine::a_sequence_with(spec, 40, &config).is_err());
}
