//! Unrolling a recurrence far past the reach of the exact engine.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_complex::Complex64;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::guess::RecurrenceOperator;
use crate::poly::IntPolynomial;
use crate::real::Fixed;

pub const DEFAULT_BITS: u32 = 256;
pub const DEFAULT_EXACT_LIMIT: u64 = 10_000;
/// Below this many agreeing digits a double-checked sample is flagged.
pub const MIN_AGREED_DIGITS: u32 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PrecisionPolicy {
    pub bits: u32,
    pub double_check: bool,
    /// Allow projecting out a single parasitic growing solution instead of
    /// carrying guard bits for it.
    pub deflate: bool,
}

impl PrecisionPolicy {
    pub fn new(bits: u32, double_check: bool) -> Result<Self> {
        if bits < 64 {
            return Err(Error::InvalidArgument(format!(
                "precision must be at least 64 bits, got {bits}"
            )));
        }
        Ok(PrecisionPolicy {
            bits,
            double_check,
            deflate: true,
        })
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            bits: DEFAULT_BITS,
            double_check: true,
            deflate: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Value {
    Exact(BigRational),
    Float(Fixed),
}

impl Value {
    pub fn to_f64(&self) -> f64 {
        match self {
            Value::Exact(q) => crate::engine::approx(q),
            Value::Float(x) => x.to_f64(),
        }
    }

    pub fn to_fixed(&self, bits: u32) -> Fixed {
        match self {
            Value::Exact(q) => Fixed::from_rational(q, bits),
            Value::Float(x) => x.with_bits(bits),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct EvaluationResult {
    pub values: BTreeMap<u64, Value>,
    /// Per sample, when the policy double-checks.
    pub agreed_digits: BTreeMap<u64, u32>,
    /// Largest number of sequence values held at once.
    pub peak_live: usize,
    /// How the float solve was stabilized; `None` on the exact path.
    pub stabilization: Option<Stabilization>,
}

impl EvaluationResult {
    /// Samples whose double-check agreement fell below [`MIN_AGREED_DIGITS`].
    pub fn precision_alarms(&self) -> Vec<u64> {
        self.agreed_digits
            .iter()
            .filter(|(_, &d)| d < MIN_AGREED_DIGITS)
            .map(|(&t, _)| t)
            .collect()
    }

    pub fn min_agreed_digits(&self) -> Option<u32> {
        self.agreed_digits.values().copied().min()
    }
}

/// Values of an integer polynomial at consecutive integers, by forward
/// differences.
struct PolyStepper {
    diffs: Vec<BigInt>,
}

impl PolyStepper {
    /// Positioned at `start`.
    fn new(poly: &IntPolynomial, start: i64) -> Self {
        let k = poly.degree().unwrap_or(0);
        let mut table: Vec<BigInt> = (0..=k as i64).map(|j| poly.eval(start + j)).collect();
        // In-place difference table: table[j] becomes Δ^j p(start).
        for level in 1..=k {
            for j in (level..=k).rev() {
                let prev = table[j - 1].clone();
                table[j] -= prev;
            }
        }
        PolyStepper { diffs: table }
    }

    fn value(&self) -> &BigInt {
        &self.diffs[0]
    }

    fn advance(&mut self) {
        for j in 0..self.diffs.len() - 1 {
            let (lo, hi) = self.diffs.split_at_mut(j + 1);
            lo[j] += &hi[0];
        }
    }
}

fn check_operator(op: &RecurrenceOperator) -> Result<()> {
    if op.polys.is_empty() || op.leading().is_zero() {
        return Err(Error::InvalidArgument("leading polynomial is zero".into()));
    }
    let need = (op.valid_from as usize).max(op.order());
    if op.initial.len() < need {
        return Err(Error::MissingInitial {
            need,
            have: op.initial.len(),
        });
    }
    Ok(())
}

pub fn extend_exact(op: &RecurrenceOperator, t_max: u64) -> Result<EvaluationResult> {
    extend_exact_with_limit(op, t_max, DEFAULT_EXACT_LIMIT)
}

/// Every `A(T)` for `1 <= T <= t_max`, in exact rationals.
pub fn extend_exact_with_limit(op: &RecurrenceOperator, t_max: u64, limit: u64) -> Result<EvaluationResult> {
    check_operator(op)?;
    if t_max > limit {
        return Err(Error::ExactLimit { t_max, limit });
    }
    let seeded = (op.initial.len() as u64).min(t_max);
    let mut values: Vec<BigRational> = op.initial[..seeded as usize].to_vec();
    let mut steppers: Vec<PolyStepper> = op
        .polys
        .iter()
        .map(|p| PolyStepper::new(p, seeded as i64 + 1))
        .collect();
    for t in seeded + 1..=t_max {
        let lead = steppers[0].value().clone();
        if lead.is_zero() {
            return Err(Error::LeadingVanishes(t));
        }
        let mut acc = BigRational::zero();
        for (i, s) in steppers.iter().enumerate().skip(1) {
            let a = &values[(t - 1) as usize - i];
            if !s.value().is_zero() && !a.is_zero() {
                acc += a * BigRational::from_integer(s.value().clone());
            }
        }
        values.push(-acc / BigRational::from_integer(lead));
        steppers.iter_mut().for_each(PolyStepper::advance);
    }
    let peak_live = values.len();
    Ok(EvaluationResult {
        values: values
            .into_iter()
            .enumerate()
            .map(|(i, v)| (i as u64 + 1, Value::Exact(v)))
            .collect(),
        agreed_digits: BTreeMap::new(),
        peak_live,
        stabilization: None,
    })
}

/// Roots of `sum_i lc_i x^(order-i)`, where `lc_i` is the coefficient of
/// `T^deg(p_0)` in `p_i`. Solutions of the recurrence grow like `|x|^T` up to
/// polynomial factors.
pub fn characteristic_roots(op: &RecurrenceOperator) -> Vec<Complex64> {
    let Some(d) = op.leading().degree() else {
        return Vec::new();
    };
    let top: Vec<BigInt> = op
        .polys
        .iter()
        .map(|p| p.coeffs().get(d).cloned().unwrap_or_default())
        .collect();
    polynomial_roots(&top)
}

pub fn dominant_root(op: &RecurrenceOperator) -> f64 {
    characteristic_roots(op)
        .iter()
        .map(|z| z.norm())
        .fold(0.0, f64::max)
}

/// Durand-Kerner on coefficients given in descending degree.
fn polynomial_roots(coeffs_desc: &[BigInt]) -> Vec<Complex64> {
    let shift = coeffs_desc.iter().map(|c| c.bits()).max().unwrap_or(0).saturating_sub(60);
    let scaled: Vec<f64> = coeffs_desc
        .iter()
        .map(|c| (c >> shift as usize).to_f64().unwrap_or(0.0))
        .collect();
    let lead = scaled[0];
    let monic: Vec<Complex64> = scaled[1..].iter().map(|c| Complex64::new(c / lead, 0.0)).collect();
    let m = monic.len();
    let eval = |z: Complex64| monic.iter().fold(Complex64::new(1.0, 0.0), |acc, c| acc * z + c);
    let seed = Complex64::new(0.4, 0.9);
    let mut roots: Vec<Complex64> = (0..m).map(|k| seed.powu(k as u32 + 1)).collect();
    for _ in 0..2000 {
        let mut moved = 0.0f64;
        for k in 0..m {
            let z = roots[k];
            let denom = (0..m)
                .filter(|&j| j != k)
                .fold(Complex64::new(1.0, 0.0), |acc, j| acc * (z - roots[j]));
            if denom.norm() == 0.0 {
                continue;
            }
            let step = eval(z) / denom;
            roots[k] = z - step;
            moved = moved.max(step.norm());
        }
        if moved < 1e-14 {
            break;
        }
    }
    roots
}

/// How a float solve keeps solutions that outgrow the target out of the samples.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stabilization {
    /// Extra bits above the requested precision, lowered as the solve advances.
    Guard { extra_bits: u32 },
    /// The single dominant solution is projected out every `interval` steps.
    Deflation { root: f64, interval: u64, extra_bits: u32 },
}

/// Extra bits a forward solve to `t_max` carries on top of the requested
/// precision: `guard` throughout, plus `per_step * (t_max - t)` at step `t`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GuardSchedule {
    pub per_step: f64,
    pub guard: u32,
    pub t_max: u64,
}

/// Precision is lowered in blocks of this many steps.
const GUARD_BLOCK: u64 = 512;
/// Growth allowed between two deflations, in bits.
const DEFLATION_HEADROOM: f64 = 128.0;
const MAX_CHECKPOINTS: u64 = 1 << 16;
/// Clustered roots on the unit circle come out of the root finder slightly
/// perturbed; anything this close to 1 is charged as guard bits instead.
const ROOT_TOLERANCE: f64 = 1e-4;

fn polynomial_guard(op: &RecurrenceOperator, t_max: u64) -> u32 {
    let log_t = (t_max.max(2) as f64).log2();
    64 + (op.order() as f64 * log_t).ceil() as u32
}

impl GuardSchedule {
    pub fn for_operator(op: &RecurrenceOperator, t_max: u64) -> Self {
        let log_t = (t_max.max(2) as f64).log2();
        let mut per_step = dominant_root(op).max(1.0).log2() * 1.02;
        // Higher-degree trailing coefficients allow factorial-type growth.
        per_step += (op.degree() - op.leading().degree().unwrap_or(0)) as f64 * log_t;
        GuardSchedule {
            per_step,
            guard: polynomial_guard(op, t_max),
            t_max,
        }
    }

    pub fn extra_bits(&self, t: u64) -> u32 {
        let remaining = self.t_max.saturating_sub(t) as f64;
        let growth = (self.per_step * remaining).ceil();
        self.guard.saturating_add(growth.min(u32::MAX as f64) as u32)
    }
}

/// Forward plan when exactly one characteristic root lies outside the unit
/// circle, well separated from the rest.
struct Deflation {
    root: f64,
    interval: u64,
    working: u32,
    /// Left functionals annihilating every slower solution, keyed by `T`;
    /// they act on the window `A(T-order+1) .. A(T)`.
    functionals: BTreeMap<u64, Vec<BigInt>>,
}

enum Plan {
    Guard(GuardSchedule),
    Deflate(Deflation),
}

impl Plan {
    fn new(op: &RecurrenceOperator, t_max: u64, bits: u32, seeded: u64, deflate: bool) -> Plan {
        deflate
            .then(|| Self::deflation(op, t_max, bits, seeded))
            .flatten()
            .map(Plan::Deflate)
            .unwrap_or_else(|| Plan::Guard(GuardSchedule::for_operator(op, t_max)))
    }

    fn deflation(op: &RecurrenceOperator, t_max: u64, bits: u32, seeded: u64) -> Option<Deflation> {
        if op.degree() != op.leading().degree()? || seeded >= t_max {
            return None;
        }
        let mut moduli: Vec<f64> = characteristic_roots(op).iter().map(|z| z.norm()).collect();
        moduli.sort_by(|a, b| b.total_cmp(a));
        let root = *moduli.first()?;
        let second = moduli.get(1).copied().unwrap_or(0.0).max(1.0);
        if root <= 1.0 + ROOT_TOLERANCE || second > 1.0 + ROOT_TOLERANCE {
            return None;
        }
        let near_unit = (second.log2() * 1.02 * t_max as f64).ceil() as u32;
        let gap = (root / second).log2();
        if gap < 0.01 {
            return None;
        }
        let per_step = root.log2() * 1.02;
        let interval = ((DEFLATION_HEADROOM / per_step) as u64)
            .max(1)
            .max(t_max.div_ceil(MAX_CHECKPOINTS));
        let working = bits
            + polynomial_guard(op, t_max)
            + (per_step * interval as f64).ceil() as u32
            + near_unit
            + 32;
        // Converge the backward iteration to `working` bits before the first
        // functional is needed.
        let burn_in = ((working as f64 + 64.0) / gap * 1.5).ceil() as u64 + 64;
        let functionals = dominant_functionals(op, seeded, t_max, interval, burn_in, working);
        Some(Deflation {
            root,
            interval,
            working,
            functionals,
        })
    }

    fn stabilization(&self, bits: u32) -> Stabilization {
        match self {
            Plan::Guard(g) => Stabilization::Guard {
                extra_bits: g.extra_bits(1),
            },
            Plan::Deflate(d) => Stabilization::Deflation {
                root: d.root,
                interval: d.interval,
                extra_bits: d.working - bits,
            },
        }
    }
}

/// Runs `phi_T = phi_{T+1} M_T` backwards from `t_max + burn_in`, where `M_T`
/// is the companion step from window `T` to window `T + 1`, and keeps `phi_T`
/// at `T = first + k * interval`. Repeated application from the right filters
/// out every direction except the dominant one.
fn dominant_functionals(
    op: &RecurrenceOperator,
    first: u64,
    t_max: u64,
    interval: u64,
    burn_in: u64,
    precision: u32,
) -> BTreeMap<u64, Vec<BigInt>> {
    let m = op.order();
    let top = t_max + burn_in;
    // Stepper `i` yields p_i(top), p_i(top - 1), ...
    let mut steppers: Vec<PolyStepper> = op
        .polys
        .iter()
        .map(|p| PolyStepper::new(&reflected(p, top as i64), 0))
        .collect();
    let mut phi: Vec<BigInt> = (0..m).map(|j| BigInt::from(j as i64 + 1)).collect();
    let mut out = BTreeMap::new();
    // Walk T = top - 1 down to `first`; each step consumes p_i(T + 1).
    for t in (first..top).rev() {
        let lead = steppers[0].value();
        let last = phi[m - 1].clone();
        let mut next = Vec::with_capacity(m);
        for k in 0..m {
            let mut v = if k > 0 { lead * &phi[k - 1] } else { BigInt::zero() };
            let p = steppers[m - k].value();
            if !p.is_zero() {
                v -= p * &last;
            }
            next.push(v);
        }
        let size = next.iter().map(BigInt::bits).max().unwrap_or(0);
        let excess = size.saturating_sub(precision as u64) as usize;
        phi = next.into_iter().map(|v| v >> excess).collect();
        steppers.iter_mut().for_each(PolyStepper::advance);
        if t <= t_max && (t - first).is_multiple_of(interval) {
            out.insert(t, phi.clone());
        }
    }
    out
}

/// `q(s) = p(c - s)`.
fn reflected(p: &IntPolynomial, c: i64) -> IntPolynomial {
    let shifted = p.shifted(c);
    IntPolynomial::new(
        shifted
            .coeffs()
            .iter()
            .enumerate()
            .map(|(k, v)| if k % 2 == 1 { -v } else { v.clone() })
            .collect(),
    )
}

/// Removes the dominant component of `window` as seen by `phi` by adjusting
/// the coordinate where `phi` is largest.
fn project_out(window: &mut VecDeque<BigInt>, phi: &[BigInt]) {
    let Some((pivot, weight)) = phi.iter().enumerate().max_by_key(|(_, v)| v.bits()) else {
        return;
    };
    if weight.is_zero() {
        return;
    }
    let dot: BigInt = phi.iter().zip(window.iter()).map(|(a, b)| a * b).sum();
    window[pivot] -= div_round_int(&dot, weight);
}

fn div_round_int(a: &BigInt, b: &BigInt) -> BigInt {
    Fixed::from_mantissa(a.clone(), 0).div_int(b).mantissa().clone()
}

/// Fixed-point forward solve keeping only a rolling window plus the samples.
/// Samples come back at `bits`; the solve itself runs at extra precision
/// chosen by `plan`.
fn run_fixed(
    op: &RecurrenceOperator,
    t_max: u64,
    bits: u32,
    deflate: bool,
    samples: &BTreeSet<u64>,
) -> Result<(BTreeMap<u64, Fixed>, usize, Stabilization)> {
    let order = op.order();
    let seeded = (op.initial.len() as u64).min(t_max);
    let plan = Plan::new(op, t_max, bits, seeded, deflate);
    let mut working = match &plan {
        Plan::Guard(g) => bits + g.extra_bits(1),
        Plan::Deflate(d) => d.working,
    };
    let mut window: VecDeque<BigInt> = VecDeque::with_capacity(order + 1);
    let mut kept = BTreeMap::new();
    let mut peak = 0;
    for q in &op.initial[..seeded as usize] {
        window.push_back(Fixed::from_rational(q, working).mantissa().clone());
        if window.len() > order {
            window.pop_front();
        }
    }
    if let Plan::Deflate(d) = &plan {
        if let Some(phi) = d.functionals.get(&seeded) {
            project_out(&mut window, phi);
        }
    }
    for (i, q) in op.initial[..seeded as usize].iter().enumerate() {
        let t = i as u64 + 1;
        if samples.contains(&t) {
            kept.insert(t, Fixed::from_rational(q, bits));
        }
    }
    peak = peak.max(window.len() + kept.len());
    let mut steppers: Vec<PolyStepper> = op
        .polys
        .iter()
        .map(|p| PolyStepper::new(p, seeded as i64 + 1))
        .collect();
    for t in seeded + 1..=t_max {
        if let Plan::Guard(g) = &plan {
            if t % GUARD_BLOCK == 0 {
                let lowered = bits + g.extra_bits(t);
                if lowered < working {
                    for m in window.iter_mut() {
                        *m = Fixed::from_mantissa(std::mem::take(m), working)
                            .with_bits(lowered)
                            .mantissa()
                            .clone();
                    }
                    working = lowered;
                }
            }
        }
        let lead = steppers[0].value();
        if lead.is_zero() {
            return Err(Error::LeadingVanishes(t));
        }
        // window holds A(t-order) .. A(t-1), oldest first.
        let mut acc = BigInt::zero();
        for (i, s) in steppers.iter().enumerate().skip(1) {
            if !s.value().is_zero() {
                acc += s.value() * &window[order - i];
            }
        }
        let next = Fixed::from_mantissa(-acc, working).div_int(lead);
        window.push_back(next.mantissa().clone());
        if window.len() > order {
            window.pop_front();
        }
        if let Plan::Deflate(d) = &plan {
            if let Some(phi) = d.functionals.get(&t) {
                project_out(&mut window, phi);
            }
        }
        if samples.contains(&t) {
            let value = Fixed::from_mantissa(window[order - 1].clone(), working);
            kept.insert(t, value.with_bits(bits));
        }
        peak = peak.max(window.len() + kept.len());
        steppers.iter_mut().for_each(PolyStepper::advance);
    }
    Ok((kept, peak, plan.stabilization(bits)))
}

pub fn extend_float(
    op: &RecurrenceOperator,
    t_max: u64,
    policy: PrecisionPolicy,
    sample_at: &[u64],
) -> Result<EvaluationResult> {
    check_operator(op)?;
    if policy.bits < 64 {
        return Err(Error::InvalidArgument("precision below 64 bits".into()));
    }
    if let Some(&bad) = sample_at.iter().find(|&&t| t == 0 || t > t_max) {
        return Err(Error::InvalidArgument(format!(
            "sample index {bad} outside 1..={t_max}"
        )));
    }
    let samples: BTreeSet<u64> = sample_at.iter().copied().collect();
    let solve = |bits: u32| run_fixed(op, t_max, bits, policy.deflate, &samples);
    let (primary, check) = if policy.double_check {
        let (a, b) = rayon::join(|| solve(policy.bits), || solve(policy.bits * 2));
        (a?, Some(b?.0))
    } else {
        (solve(policy.bits)?, None)
    };
    let (primary, peak, stabilization) = primary;
    let mut agreed_digits = BTreeMap::new();
    if let Some(check) = check {
        for (t, x) in &primary {
            agreed_digits.insert(*t, x.agreed_digits(&check[t]));
        }
    }
    Ok(EvaluationResult {
        values: primary.into_iter().map(|(t, x)| (t, Value::Float(x))).collect(),
        agreed_digits,
        peak_live: peak,
        stabilization: Some(stabilization),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    fn prop1() -> RecurrenceOperator {
        RecurrenceOperator {
            n: 2,
            r: 1,
            polys: vec![
                IntPolynomial::from_i64(&[-1, 1]),
                IntPolynomial::from_i64(&[-1]),
                IntPolynomial::from_i64(&[1, -1]),
            ],
            valid_from: 2,
            initial: vec![q(1, 2), q(1, 2)],
        }
    }

    fn constant() -> RecurrenceOperator {
        RecurrenceOperator {
            n: 0,
            r: 0,
            polys: vec![IntPolynomial::from_i64(&[1]), IntPolynomial::from_i64(&[-1])],
            valid_from: 1,
            initial: vec![q(7, 1)],
        }
    }

    #[test]
    fn stepper_tracks_polynomial() {
        let p = IntPolynomial::from_i64(&[5, -3, 0, 2]);
        let mut s = PolyStepper::new(&p, -4);
        for t in -4..20 {
            assert_eq!(s.value(), &p.eval(t));
            s.advance();
        }
    }

    #[test]
    fn exact_unrolling() {
        let r = extend_exact(&prop1(), 9).unwrap();
        assert_eq!(r.values[&9], Value::Exact(q(315, 256)));
        assert_eq!(r.values[&3], Value::Exact(q(3, 4)));
        let c = extend_exact(&constant(), 100).unwrap();
        assert_eq!(c.values[&100], Value::Exact(q(7, 1)));
    }

    #[test]
    fn exact_limits_and_errors() {
        assert!(matches!(
            extend_exact(&prop1(), DEFAULT_EXACT_LIMIT + 1),
            Err(Error::ExactLimit { .. })
        ));
        let mut missing = prop1();
        missing.initial.pop();
        assert!(matches!(
            extend_exact(&missing, 5),
            Err(Error::MissingInitial { need: 2, have: 1 })
        ));
        // (T - 4) A(T) = A(T-1) vanishes at T = 4.
        let vanishing = RecurrenceOperator {
            n: 0,
            r: 0,
            polys: vec![IntPolynomial::from_i64(&[-4, 1]), IntPolynomial::from_i64(&[-1])],
            valid_from: 1,
            initial: vec![q(1, 1)],
        };
        assert_eq!(extend_exact(&vanishing, 10).unwrap_err(), Error::LeadingVanishes(4));
        assert_eq!(
            extend_float(&vanishing, 10, PrecisionPolicy::default(), &[10]).unwrap_err(),
            Error::LeadingVanishes(4)
        );
    }

    #[test]
    fn float_matches_exact() {
        let exact = extend_exact(&prop1(), 999).unwrap();
        let samples = [3, 10, 500, 998, 999];
        let float = extend_float(&prop1(), 999, PrecisionPolicy::default(), &samples).unwrap();
        for t in samples {
            let digits = float.agreed_digits[&t];
            assert!(digits > 60, "T={t} digits={digits}");
            let Value::Float(x) = &float.values[&t] else { panic!() };
            let Value::Exact(e) = &exact.values[&t] else { panic!() };
            assert!(x.agreed_digits(&Fixed::from_rational(e, 256)) + 2 >= digits);
        }
    }

    #[test]
    fn constant_is_exact_in_float() {
        let r = extend_float(&constant(), 1_000_000, PrecisionPolicy::new(64, true).unwrap(), &[1_000_000]).unwrap();
        assert_eq!(r.values[&1_000_000], Value::Float(Fixed::from_int(7, 64)));
    }

    #[test]
    fn window_is_bounded() {
        let samples = [100, 200, 300];
        let r = extend_float(&prop1(), 5000, PrecisionPolicy::new(64, false).unwrap(), &samples).unwrap();
        assert!(r.peak_live <= prop1().order() + samples.len());
        assert!(r.agreed_digits.is_empty());
    }

    #[test]
    fn rejects_bad_samples_and_precision() {
        assert!(extend_float(&prop1(), 10, PrecisionPolicy::default(), &[11]).is_err());
        assert!(PrecisionPolicy::new(32, false).is_err());
    }

    #[test]
    fn dominant_root_of_characteristic_polynomial() {
        // Leading coefficients 1, -3, 2: roots 1 and 2.
        let op = RecurrenceOperator {
            n: 0,
            r: 0,
            polys: vec![
                IntPolynomial::from_i64(&[0, 1]),
                IntPolynomial::from_i64(&[5, -3]),
                IntPolynomial::from_i64(&[1, 2]),
            ],
            valid_from: 2,
            initial: vec![q(1, 1), q(1, 1)],
        };
        assert!((dominant_root(&op) - 2.0).abs() < 1e-9);
        assert!((dominant_root(&prop1()) - 1.0).abs() < 1e-6);
        let g = GuardSchedule::for_operator(&op, 1000);
        assert!(g.extra_bits(1) >= 1000 && g.extra_bits(1000) == g.guard);
    }

    #[test]
    fn parasitic_solution_is_deflated() {
        // A(T) = 1 solves A(T) = 3A(T-1) - 2A(T-2); the parasitic 2^T
        // solution amplifies every rounding error.
        let op = RecurrenceOperator {
            n: 0,
            r: 0,
            polys: vec![
                IntPolynomial::from_i64(&[3]),
                IntPolynomial::from_i64(&[-9]),
                IntPolynomial::from_i64(&[6]),
            ],
            valid_from: 2,
            initial: vec![q(1, 3), q(1, 3)],
        };
        let res = extend_float(&op, 2000, PrecisionPolicy::default(), &[2000]).unwrap();
        let third = Fixed::from_rational(&q(1, 3), DEFAULT_BITS);
        assert!(res.values[&2000].to_fixed(DEFAULT_BITS).agreed_digits(&third) >= 70);
        assert!(matches!(
            res.stabilization,
            Some(Stabilization::Deflation { root, .. }) if (root - 2.0).abs() < 1e-9
        ));
        assert!(res.precision_alarms().is_empty());
    }

    #[test]
    fn several_growing_solutions_fall_back_to_guard_bits() {
        // Characteristic roots 1, 2, 3; A(T) = 1/3 is the bounded solution.
        let op = RecurrenceOperator {
            n: 0,
            r: 0,
            polys: vec![
                IntPolynomial::from_i64(&[1]),
                IntPolynomial::from_i64(&[-6]),
                IntPolynomial::from_i64(&[11]),
                IntPolynomial::from_i64(&[-6]),
            ],
            valid_from: 3,
            initial: vec![q(1, 3), q(1, 3), q(1, 3)],
        };
        let res = extend_float(&op, 600, PrecisionPolicy::default(), &[600]).unwrap();
        let third = Fixed::from_rational(&q(1, 3), DEFAULT_BITS);
        assert!(res.values[&600].to_fixed(DEFAULT_BITS).agreed_digits(&third) >= 70);
        assert!(matches!(
            res.stabilization,
            Some(Stabilization::Guard { extra_bits }) if extra_bits as f64 >= 599.0 * 3f64.log2()
        ));
    }
}
