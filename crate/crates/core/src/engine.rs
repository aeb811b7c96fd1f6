//! Exact distribution of the maximum load.
//!
//! Occupancy vectors are reduced modulo bin permutations and modulo a common
//! shift: a state is the occupancy sorted non-increasingly with its minimum
//! subtracted (a [`GapProfile`]). Since every round adds exactly `r` balls,
//! the minimum is recovered as `(rT - sum(gaps)) / n`.
//!
//! The weight of a profile is the coefficient of one representative monomial
//! `x^a` in `e_r(x_1..x_n)^T`, i.e. the number of round sequences that produce
//! that particular occupancy vector. Summing weight times the number of
//! distinct vectors in the class gives `C(n,r)^T`.

use std::collections::BTreeMap;

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use rustc_hash::FxHashMap;
use serde::{Deserialize, Serialize};
use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::problem::{binomial, factorial, ProblemSpec};
use crate::rational::serde_rational_vec;

pub const DEFAULT_STATE_CEILING: u64 = 5_000_000;
pub const ORACLE_OUTCOME_LIMIT: u128 = 10_000_000;

/// Sources per parallel work unit in [`step`].
const PAR_CHUNK: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct GapProfile(SmallVec<[u32; 8]>);

impl GapProfile {
    pub fn zero(n: usize) -> Self {
        GapProfile(SmallVec::from_elem(0, n))
    }

    /// Canonical profile of an arbitrary occupancy vector.
    pub fn from_occupancy(occupancy: &[u32]) -> Self {
        let mut gaps: SmallVec<[u32; 8]> = occupancy.iter().copied().collect();
        gaps.sort_unstable_by(|a, b| b.cmp(a));
        let min = gaps.last().copied().unwrap_or(0);
        for g in gaps.iter_mut() {
            *g -= min;
        }
        GapProfile(gaps)
    }

    pub fn gaps(&self) -> &[u32] {
        &self.0
    }

    pub fn gap_sum(&self) -> u64 {
        self.0.iter().map(|&g| g as u64).sum()
    }

    /// Runs of equal gaps as `(start, len)`, in profile order.
    fn groups(&self) -> SmallVec<[(usize, usize); 8]> {
        let mut out = SmallVec::new();
        let mut start = 0;
        for i in 1..=self.0.len() {
            if i == self.0.len() || self.0[i] != self.0[start] {
                out.push((start, i - start));
                start = i;
            }
        }
        out
    }

    /// Number of distinct occupancy vectors with this profile.
    pub fn multiplicity(&self) -> u128 {
        let n = self.0.len() as u64;
        self.groups()
            .iter()
            .fold(factorial(n), |acc, &(_, len)| acc / factorial(len as u64))
    }

    fn group_factorials(&self) -> u128 {
        self.groups()
            .iter()
            .map(|&(_, len)| factorial(len as u64))
            .product()
    }
}

/// Weights of all live profiles after `round` rounds.
#[derive(Debug, Clone)]
pub struct StateTable {
    pub round: u64,
    pub weights: FxHashMap<GapProfile, BigUint>,
}

impl StateTable {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Σ weight × multiplicity; equals `C(n,r)^round`.
    pub fn total_mass(&self) -> BigUint {
        self.weights
            .iter()
            .map(|(p, w)| w * BigUint::from(p.multiplicity()))
            .sum()
    }

    /// Profiles in sorted order, for deterministic inspection.
    pub fn sorted(&self) -> Vec<(&GapProfile, &BigUint)> {
        let mut entries: Vec<_> = self.weights.iter().collect();
        entries.sort();
        entries
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MaxPmf {
    pub round: u64,
    pub entries: BTreeMap<u64, BigRational>,
}

impl MaxPmf {
    pub fn mean(&self) -> BigRational {
        self.entries
            .iter()
            .map(|(&m, p)| p * BigRational::from_integer(BigInt::from(m)))
            .sum()
    }
}

/// `A(1), A(2), ...` for one problem.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalSequence {
    pub n: u32,
    pub r: u32,
    #[serde(with = "serde_rational_vec")]
    pub values: Vec<BigRational>,
}

impl RationalSequence {
    pub fn new(spec: ProblemSpec, values: Vec<BigRational>) -> Self {
        RationalSequence {
            n: spec.n,
            r: spec.r,
            values,
        }
    }

    /// One-based access: `get(1)` is `A(1)`.
    pub fn get(&self, t: u64) -> Option<&BigRational> {
        if t == 0 {
            return None;
        }
        self.values.get((t - 1) as usize)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn spec(&self) -> Result<ProblemSpec> {
        ProblemSpec::new(self.n, self.r)
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EngineConfig {
    pub state_ceiling: u64,
    pub parallel: bool,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            state_ceiling: DEFAULT_STATE_CEILING,
            parallel: true,
        }
    }
}

pub fn initial_state(spec: ProblemSpec) -> StateTable {
    let mut weights = FxHashMap::default();
    weights.insert(GapProfile::zero(spec.n as usize), BigUint::one());
    StateTable { round: 0, weights }
}

/// Calls `f(parts)` for every way to split `remaining` increments across the
/// groups with `parts[g] <= sizes[g]`.
fn for_each_composition(
    sizes: &[(usize, usize)],
    remaining: usize,
    parts: &mut SmallVec<[usize; 8]>,
    f: &mut impl FnMut(&[usize]),
) {
    let g = parts.len();
    if g == sizes.len() {
        if remaining == 0 {
            f(parts);
        }
        return;
    }
    let capacity_after: usize = sizes[g + 1..].iter().map(|&(_, len)| len).sum();
    let lo = remaining.saturating_sub(capacity_after);
    let hi = remaining.min(sizes[g].1);
    for k in lo..=hi {
        parts.push(k);
        for_each_composition(sizes, remaining - k, parts, f);
        parts.pop();
    }
}

/// Successor profiles of `profile` with their coefficient factors.
fn successors(profile: &GapProfile, r: usize, mut emit: impl FnMut(GapProfile, u128)) {
    let groups = profile.groups();
    let source_fact = profile.group_factorials();
    let mut parts = SmallVec::new();
    for_each_composition(&groups, r, &mut parts, &mut |parts| {
        let mut next = profile.0.clone();
        let mut ways: u128 = 1;
        for (&(start, len), &k) in groups.iter().zip(parts) {
            ways *= binomial(len as u64, k as u64);
            for g in &mut next[start..start + k] {
                *g += 1;
            }
        }
        let min = *next.last().expect("non-empty profile");
        if min > 0 {
            for g in next.iter_mut() {
                *g -= min;
            }
        }
        let next = GapProfile(next);
        // Number of (source vector, subset) pairs landing on one fixed
        // target vector: mult(source) * ways / mult(target).
        let factor = ways * next.group_factorials() / source_fact;
        emit(next, factor);
    });
}

fn accumulate(into: &mut FxHashMap<GapProfile, BigUint>, key: GapProfile, weight: &BigUint, factor: u128) {
    let slot = into.entry(key).or_default();
    if factor == 1 {
        *slot += weight;
    } else {
        *slot += weight * BigUint::from(factor);
    }
}

pub fn step(state: &StateTable, spec: ProblemSpec) -> StateTable {
    step_with(state, spec, true)
}

pub fn step_with(state: &StateTable, spec: ProblemSpec, parallel: bool) -> StateTable {
    let r = spec.r as usize;
    let next = if parallel && state.weights.len() > PAR_CHUNK {
        let entries: Vec<_> = state.weights.iter().collect();
        entries
            .par_chunks(PAR_CHUNK)
            .map(|chunk| {
                let mut local = FxHashMap::default();
                for (profile, weight) in chunk {
                    successors(profile, r, |p, f| accumulate(&mut local, p, weight, f));
                }
                local
            })
            .reduce(FxHashMap::default, merge_tables)
    } else {
        let mut next = FxHashMap::default();
        for (profile, weight) in &state.weights {
            successors(profile, r, |p, f| accumulate(&mut next, p, weight, f));
        }
        next
    };
    StateTable {
        round: state.round + 1,
        weights: next,
    }
}

fn merge_tables(
    mut a: FxHashMap<GapProfile, BigUint>,
    mut b: FxHashMap<GapProfile, BigUint>,
) -> FxHashMap<GapProfile, BigUint> {
    if a.len() < b.len() {
        std::mem::swap(&mut a, &mut b);
    }
    for (k, v) in b {
        *a.entry(k).or_default() += v;
    }
    a
}

fn round_denominator(spec: ProblemSpec, round: u64) -> BigUint {
    BigUint::from(spec.outcomes_per_round()).pow(round as u32)
}

pub fn max_pmf(state: &StateTable, spec: ProblemSpec) -> MaxPmf {
    let n = spec.n as u64;
    let balls = spec.r as u64 * state.round;
    let mut mass: BTreeMap<u64, BigUint> = BTreeMap::new();
    for (profile, weight) in &state.weights {
        let sum = profile.gap_sum();
        assert!(
            sum <= balls && (balls - sum).is_multiple_of(n),
            "profile {:?} inconsistent with round {}",
            profile.gaps(),
            state.round
        );
        let max = profile.gaps()[0] as u64 + (balls - sum) / n;
        *mass.entry(max).or_default() += weight * BigUint::from(profile.multiplicity());
    }
    let denom = BigInt::from(round_denominator(spec, state.round));
    let entries = mass
        .into_iter()
        .map(|(m, w)| (m, BigRational::new(BigInt::from(w), denom.clone())))
        .collect();
    MaxPmf {
        round: state.round,
        entries,
    }
}

/// `E[max] - rT/n` for the table's round.
pub fn centered_mean(state: &StateTable, spec: ProblemSpec) -> BigRational {
    let n = spec.n as u64;
    // n*gaps[0] - sum(gaps) = n*(max - mean) on every vector of the class.
    let numer: BigUint = state
        .weights
        .iter()
        .map(|(profile, weight)| {
            let spread = n * profile.gaps()[0] as u64 - profile.gap_sum();
            if spread == 0 {
                BigUint::zero()
            } else {
                weight * (BigUint::from(profile.multiplicity()) * spread)
            }
        })
        .sum();
    let denom = round_denominator(spec, state.round) * BigUint::from(n);
    BigRational::new(numer.into(), denom.into())
}

/// Upper bound on the number of profiles alive at round `t`.
///
/// Counts non-increasing gap vectors with largest gap at most `t`, gap sum at
/// most `rt` and congruent to `rt` mod `n`.
pub fn projected_states(spec: ProblemSpec, t: u64) -> u64 {
    if spec.is_degenerate() || spec.n == 1 {
        return 1;
    }
    let parts = (spec.n - 1) as usize;
    let max_part = t as usize;
    let max_sum = (spec.r as u64 * t) as usize;
    // Profiles are partitions with at most n-1 parts, each at most t.
    let count = gaussian_binomial(parts + max_part, parts, max_sum);
    let residue = (spec.r as u64 * t % spec.n as u64) as usize;
    let total: u128 = count
        .iter()
        .enumerate()
        .filter(|(s, _)| s % spec.n as usize == residue)
        .map(|(_, &c)| c)
        .sum();
    total.min(u64::MAX as u128) as u64
}

/// Coefficients of the Gaussian binomial `[m choose k]_q` up to `q^limit`.
fn gaussian_binomial(m: usize, k: usize, limit: usize) -> Vec<u128> {
    // [m choose k] = prod_{i=1..k} (1 - q^{m-k+i}) / (1 - q^i)
    let mut poly = vec![0u128; limit + 1];
    poly[0] = 1;
    for i in 1..=k {
        // multiply by (1 - q^{m-k+i}) as signed, then divide by (1 - q^i)
        let up = m - k + i;
        let mut signed: Vec<i128> = poly.iter().map(|&c| c as i128).collect();
        for s in (up..=limit).rev() {
            signed[s] -= signed[s - up];
        }
        for s in i..=limit {
            signed[s] += signed[s - i];
        }
        poly = signed.into_iter().map(|c| c.max(0) as u128).collect();
    }
    poly
}

pub fn a_sequence(spec: ProblemSpec, t_max: u64) -> Result<RationalSequence> {
    a_sequence_with(spec, t_max, &EngineConfig::default())
}

pub fn a_sequence_with(spec: ProblemSpec, t_max: u64, config: &EngineConfig) -> Result<RationalSequence> {
    if t_max == 0 {
        return Err(Error::InvalidArgument("t_max must be at least 1".into()));
    }
    if spec.is_degenerate() {
        return Ok(RationalSequence::new(spec, vec![BigRational::zero(); t_max as usize]));
    }
    let projected = projected_states(spec, t_max);
    if projected > config.state_ceiling {
        return Err(Error::StateCeiling {
            projected,
            ceiling: config.state_ceiling,
        });
    }
    let mut state = initial_state(spec);
    let mut values = Vec::with_capacity(t_max as usize);
    for _ in 0..t_max {
        state = step_with(&state, spec, config.parallel);
        values.push(centered_mean(&state, spec));
    }
    Ok(RationalSequence::new(spec, values))
}

/// State table after `t` rounds.
pub fn state_at(spec: ProblemSpec, t: u64, config: &EngineConfig) -> Result<StateTable> {
    let projected = projected_states(spec, t);
    if projected > config.state_ceiling {
        return Err(Error::StateCeiling {
            projected,
            ceiling: config.state_ceiling,
        });
    }
    let mut state = initial_state(spec);
    for _ in 0..t {
        state = step_with(&state, spec, config.parallel);
    }
    Ok(state)
}

/// Enumerates every round sequence explicitly. Test oracle only.
pub fn brute_force_oracle(spec: ProblemSpec, t_max: u64) -> Result<RationalSequence> {
    let per_round = spec.outcomes_per_round() as u128;
    let outcomes = per_round
        .checked_pow(t_max as u32)
        .unwrap_or(u128::MAX);
    if outcomes > ORACLE_OUTCOME_LIMIT {
        return Err(Error::OracleTooLarge {
            outcomes,
            limit: ORACLE_OUTCOME_LIMIT,
        });
    }
    let n = spec.n as usize;
    let subsets: Vec<u32> = (0u32..(1 << n))
        .filter(|m| m.count_ones() == spec.r)
        .collect();
    let mut max_totals = vec![0u128; t_max as usize + 1];
    let mut bins = vec![0u32; n];
    explore(&subsets, &mut bins, 0, t_max as usize, &mut max_totals);

    let values = (1..=t_max)
        .map(|t| {
            let total = BigRational::new(
                BigInt::from(max_totals[t as usize]),
                BigInt::from(per_round.pow(t as u32)),
            );
            let fair = BigRational::new(
                BigInt::from(spec.r as u64 * t),
                BigInt::from(spec.n),
            );
            total - fair
        })
        .collect();
    Ok(RationalSequence::new(spec, values))
}

fn explore(subsets: &[u32], bins: &mut [u32], depth: usize, t_max: usize, totals: &mut [u128]) {
    if depth == t_max {
        return;
    }
    for &mask in subsets {
        for (i, b) in bins.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *b += 1;
            }
        }
        totals[depth + 1] += *bins.iter().max().unwrap() as u128;
        explore(subsets, bins, depth + 1, t_max, totals);
        for (i, b) in bins.iter_mut().enumerate() {
            if mask >> i & 1 == 1 {
                *b -= 1;
            }
        }
    }
}

/// `A(2,1;T)` for odd `T = 2k - 1`: `(2k-1)! / (2^(2k-1) (k-1)!^2)`.
pub fn closed_form_n2(t: u64) -> Result<BigRational> {
    if t == 0 || t.is_multiple_of(2) {
        return Err(Error::InvalidArgument(format!(
            "closed form needs odd T >= 1, got {t}"
        )));
    }
    let k = t.div_ceil(2);
    let fact = |m: u64| -> BigUint { (1..=m).map(BigUint::from).product() };
    let numer = fact(t);
    let half = fact(k - 1);
    let denom = (BigUint::one() << t as usize) * &half * &half;
    Ok(BigRational::new(numer.into(), denom.into()))
}

/// `(r/n) sqrt(pi ln n) ln(n/r)`.
pub fn heuristic_constant(spec: ProblemSpec) -> Result<f64> {
    if spec.n < 2 {
        return Err(Error::InvalidArgument(format!(
            "heuristic needs n >= 2, got {}",
            spec.n
        )));
    }
    let n = spec.n as f64;
    let r = spec.r as f64;
    Ok((r / n) * (std::f64::consts::PI * n.ln()).sqrt() * (n / r).ln())
}

/// `A(T)` as `f64`, for tables.
pub fn approx(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(n: u32, r: u32) -> ProblemSpec {
        ProblemSpec::new(n, r).unwrap()
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn profile(g: &[u32]) -> GapProfile {
        GapProfile(g.iter().copied().collect())
    }

    #[test]
    fn initial_tables() {
        for (n, r) in [(2, 1), (3, 1), (4, 2)] {
            let t = initial_state(spec(n, r));
            assert_eq!(t.round, 0);
            assert_eq!(t.len(), 1);
            assert_eq!(t.weights[&GapProfile::zero(n as usize)], BigUint::one());
        }
    }

    #[test]
    fn first_steps_for_two_bins() {
        let s = spec(2, 1);
        let t1 = step(&initial_state(s), s);
        assert_eq!(t1.len(), 1);
        assert_eq!(t1.weights[&profile(&[1, 0])], BigUint::one());
        assert_eq!(t1.total_mass(), BigUint::from(2u32));

        let t2 = step(&t1, s);
        // x1^2 and x2^2 have coefficient 1, x1*x2 has coefficient 2.
        assert_eq!(t2.weights[&profile(&[2, 0])], BigUint::one());
        assert_eq!(t2.weights[&profile(&[0, 0])], BigUint::from(2u32));
        assert_eq!(t2.total_mass(), BigUint::from(4u32));
        let pmf = max_pmf(&t2, s);
        assert_eq!(pmf.entries[&1], q(1, 2));
        assert_eq!(pmf.entries[&2], q(1, 2));
        assert_eq!(pmf.mean(), q(3, 2));
        assert_eq!(centered_mean(&t2, s), q(1, 2));
    }

    #[test]
    fn three_bins_third_round() {
        let seq = a_sequence(spec(3, 1), 3).unwrap();
        assert_eq!(seq.values[2], q(8, 9));
    }

    #[test]
    fn single_round_pmfs() {
        for (n, r) in [(3, 1), (4, 2)] {
            let s = spec(n, r);
            let pmf = max_pmf(&step(&initial_state(s), s), s);
            assert_eq!(pmf.entries.len(), 1);
            assert_eq!(pmf.entries[&1], q(1, 1));
        }
    }

    #[test]
    fn known_initial_values() {
        let a21 = a_sequence(spec(2, 1), 2).unwrap();
        assert_eq!(a21.values, vec![q(1, 2), q(1, 2)]);
        let a31 = a_sequence(spec(3, 1), 5).unwrap();
        assert_eq!(
            a31.values,
            vec![q(2, 3), q(2, 3), q(8, 9), q(28, 27), q(10, 9)]
        );
        assert_eq!(a_sequence(spec(4, 2), 1).unwrap().values, vec![q(1, 2)]);
    }

    #[test]
    fn degenerate_cases_are_zero() {
        for (n, r) in [(1, 1), (2, 2), (5, 5)] {
            let seq = a_sequence(spec(n, r), 6).unwrap();
            assert!(seq.values.iter().all(Zero::is_zero));
        }
    }

    #[test]
    fn multiplicities() {
        assert_eq!(profile(&[0, 0, 0]).multiplicity(), 1);
        assert_eq!(profile(&[1, 0, 0]).multiplicity(), 3);
        assert_eq!(profile(&[2, 1, 0]).multiplicity(), 6);
        assert_eq!(profile(&[1, 1, 0, 0]).multiplicity(), 6);
        assert_eq!(GapProfile::from_occupancy(&[3, 5, 3]), profile(&[2, 0, 0]));
    }

    #[test]
    fn oracle_small_cases() {
        assert_eq!(
            brute_force_oracle(spec(2, 1), 3).unwrap().values,
            vec![q(1, 2), q(1, 2), q(3, 4)]
        );
        assert_eq!(
            brute_force_oracle(spec(3, 1), 2).unwrap().values,
            vec![q(2, 3), q(2, 3)]
        );
        assert!(brute_force_oracle(spec(3, 3), 4)
            .unwrap()
            .values
            .iter()
            .all(Zero::is_zero));
        assert!(matches!(
            brute_force_oracle(spec(4, 2), 12),
            Err(Error::OracleTooLarge { .. })
        ));
    }

    #[test]
    fn closed_form_values() {
        assert_eq!(closed_form_n2(1).unwrap(), q(1, 2));
        assert_eq!(closed_form_n2(3).unwrap(), q(3, 4));
        assert_eq!(closed_form_n2(5).unwrap(), q(15, 16));
        assert_eq!(closed_form_n2(9).unwrap(), q(315, 256));
        assert!(closed_form_n2(4).is_err());
        assert!(closed_form_n2(0).is_err());
    }

    #[test]
    fn heuristic_values() {
        assert!((heuristic_constant(spec(2, 1)).unwrap() - 0.511426).abs() < 1e-6);
        assert!((heuristic_constant(spec(4, 2)).unwrap() - 0.723266).abs() < 1e-6);
        assert_eq!(heuristic_constant(spec(3, 3)).unwrap(), 0.0);
        assert!(heuristic_constant(spec(1, 1)).is_err());
    }

    #[test]
    fn projection_bounds_actual_states() {
        let config = EngineConfig::default();
        for (n, r) in [(2, 1), (3, 1), (3, 2), (4, 1), (4, 2), (4, 3), (5, 2)] {
            let s = spec(n, r);
            let mut state = initial_state(s);
            for t in 1..=12 {
                state = step_with(&state, s, config.parallel);
                assert!(
                    state.len() as u64 <= projected_states(s, t),
                    "({n},{r}) T={t}: {} > {}",
                    state.len(),
                    projected_states(s, t)
                );
            }
        }
    }

    #[test]
    fn ceiling_refuses() {
        let config = EngineConfig {
            state_ceiling: 10,
            parallel: false,
        };
        let err = a_sequence_with(spec(4, 1), 50, &config).unwrap_err();
        assert!(matches!(err, Error::StateCeiling { ceiling: 10, .. }));
    }

    #[test]
    fn parallel_step_matches_sequential() {
        let s = spec(4, 2);
        let mut seq = initial_state(s);
        let mut par = initial_state(s);
        for _ in 0..60 {
            seq = step_with(&seq, s, false);
            par = step_with(&par, s, true);
        }
        assert!(par.len() > PAR_CHUNK);
        assert_eq!(seq.weights, par.weights);
    }
}
