//! Guessing linear recurrences with polynomial coefficients.
//!
//! An ansatz of order `d` and degree `e` has unknowns `c[i][j]` and asks for
//! `sum_i sum_j c[i][j] T^j A(T-i) = 0` on every usable `T`. The kernel of
//! that linear system is computed exactly; a nonzero kernel vector becomes a
//! candidate operator, which is then checked against held-out terms.

use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::engine::RationalSequence;
use crate::error::{Error, Result};
use crate::linalg::{self, Kernel};
use crate::modular::{mul_mod, reduce_rational};
use crate::poly::IntPolynomial;

pub const DEFAULT_HOLDOUT: usize = 10;
pub const DEFAULT_MARGIN: usize = 3;

/// `sum_i polys[i](T) * A(T - i) = 0` for every `T > valid_from`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RecurrenceOperator {
    pub n: u32,
    pub r: u32,
    pub polys: Vec<IntPolynomial>,
    pub valid_from: u64,
    /// `A(1..=valid_from)`.
    pub initial: Vec<BigRational>,
}

impl RecurrenceOperator {
    pub fn order(&self) -> usize {
        self.polys.len().saturating_sub(1)
    }

    pub fn degree(&self) -> usize {
        self.polys.iter().filter_map(|p| p.degree()).max().unwrap_or(0)
    }

    pub fn leading(&self) -> &IntPolynomial {
        &self.polys[0]
    }

    /// Divides out the common content and makes the leading coefficient of
    /// `p_0` positive. Trailing zero polynomials are dropped.
    pub fn normalize(&mut self) {
        while self.polys.len() > 1 && self.polys.last().is_some_and(IntPolynomial::is_zero) {
            self.polys.pop();
        }
        let content = self
            .polys
            .iter()
            .fold(BigInt::zero(), |acc, p| num_integer::Integer::gcd(&acc, &p.content()));
        if content.is_zero() {
            return;
        }
        let flip = self.polys[0].leading().is_some_and(|c| c.is_negative());
        let divisor = if flip { -content } else { content };
        if !divisor.is_one() {
            self.polys = self.polys.iter().map(|p| p.scale_down(&divisor)).collect();
        }
    }

    /// `sum_i p_i(t) A(t - i)`; `t - order` must be at least 1.
    pub fn residual(&self, values: &[BigRational], t: u64) -> BigRational {
        let mut acc = BigRational::zero();
        for (i, p) in self.polys.iter().enumerate() {
            if p.is_zero() {
                continue;
            }
            let a = &values[(t - 1) as usize - i];
            if a.is_zero() {
                continue;
            }
            acc += a * BigRational::from_integer(p.eval(t as i64));
        }
        acc
    }

    /// Smallest admissible `valid_from` for these polynomials: at least the
    /// order, and past every positive integer root of `p_0`.
    pub fn minimal_valid_from(polys: &[IntPolynomial]) -> u64 {
        let order = polys.len().saturating_sub(1) as u64;
        let root = polys
            .first()
            .and_then(|p| p.largest_positive_integer_root())
            .unwrap_or(0);
        order.max(root)
    }
}

/// Checks `sum_i p_i(T) A(T-i) = 0` exactly for every `T` in `from..=to`.
pub fn annihilates(op: &RecurrenceOperator, seq: &RationalSequence, from: u64, to: u64) -> Result<bool> {
    annihilates_values(op, &seq.values, from, to)
}

fn annihilates_values(op: &RecurrenceOperator, values: &[BigRational], from: u64, to: u64) -> Result<bool> {
    let order = op.order();
    if from <= order as u64 || to as usize > values.len() || from > to {
        return Err(Error::IndexRange {
            from,
            to,
            order,
            len: values.len(),
        });
    }
    Ok((from..=to).all(|t| op.residual(values, t).is_zero()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Solver {
    /// Fraction-free elimination over the integers.
    Exact,
    /// Word-size prime images, CRT and rational reconstruction.
    Modular,
    /// Exact for small systems, modular otherwise.
    Auto,
}

#[derive(Debug, Clone, Copy)]
pub struct FitOptions {
    pub margin: usize,
    pub solver: Solver,
    pub max_primes: usize,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            margin: DEFAULT_MARGIN,
            solver: Solver::Auto,
            max_primes: 400,
        }
    }
}

/// Unknown count up to which [`Solver::Auto`] stays exact.
const AUTO_EXACT_UNKNOWNS: usize = 16;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "kebab-case")]
pub enum FitOutcome {
    Found { kernel_dimension: usize },
    TrivialKernel,
    HoldoutFailed { kernel_dimension: usize },
    InsufficientTerms { required: usize },
    Unreconstructed,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TraceEntry {
    pub order: usize,
    pub degree: usize,
    #[serde(flatten)]
    pub outcome: FitOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GuessReport {
    pub operator: Option<RecurrenceOperator>,
    pub terms_used: usize,
    pub terms_verified: usize,
    pub search_trace: Vec<TraceEntry>,
}

pub fn required_terms(order: usize, degree: usize, holdout: usize, margin: usize) -> usize {
    (order + 1) * (degree + 1) + order + holdout + margin
}

/// Residues of the sequence modulo each prime used so far.
#[derive(Debug, Default)]
pub struct ResidueCache {
    images: HashMap<u64, Option<Vec<u64>>>,
}

impl ResidueCache {
    fn get(&mut self, values: &[BigRational], p: u64) -> Option<&Vec<u64>> {
        self.images
            .entry(p)
            .or_insert_with(|| values.iter().map(|v| reduce_rational(v, p)).collect())
            .as_ref()
    }
}

pub fn fit(seq: &RationalSequence, order: usize, degree: usize, holdout: usize) -> Result<GuessReport> {
    fit_with(seq, order, degree, holdout, &FitOptions::default(), &mut ResidueCache::default())
}

pub fn fit_with(
    seq: &RationalSequence,
    order: usize,
    degree: usize,
    holdout: usize,
    options: &FitOptions,
    cache: &mut ResidueCache,
) -> Result<GuessReport> {
    if order == 0 {
        return Err(Error::InvalidArgument("order must be at least 1".into()));
    }
    let required = required_terms(order, degree, holdout, options.margin);
    if seq.len() < required {
        return Err(Error::InsufficientTerms {
            required,
            available: seq.len(),
        });
    }
    let values = &seq.values;
    let fit_end = (values.len() - holdout) as u64;
    let first = order as u64 + 1;
    let cols = (order + 1) * (degree + 1);

    let solver = match options.solver {
        Solver::Auto if cols <= AUTO_EXACT_UNKNOWNS => Solver::Exact,
        Solver::Auto => Solver::Modular,
        s => s,
    };
    let kernel = match solver {
        Solver::Exact => {
            let rows = exact_rows(values, order, degree, first, fit_end);
            Some(linalg::kernel_exact(&rows, cols))
        }
        _ => linalg::kernel_modular(
            cols,
            |p| modular_rows(cache, values, order, degree, first, fit_end, p),
            |v| {
                let polys = operator_polys(v, order, degree);
                let op = provisional(seq, polys);
                let lowest = op.order() as u64 + 1;
                annihilates_values(&op, values, lowest.max(first), fit_end).unwrap_or(false)
            },
            options.max_primes,
        ),
    };

    let mut report = GuessReport {
        operator: None,
        terms_used: fit_end as usize,
        terms_verified: holdout,
        search_trace: Vec::new(),
    };
    let outcome = match kernel {
        None => FitOutcome::Unreconstructed,
        Some(Kernel { vector: None, .. }) => FitOutcome::TrivialKernel,
        Some(Kernel {
            dimension,
            vector: Some(v),
        }) => {
            let op = finish_operator(seq, operator_polys(&v, order, degree));
            let holds = op.valid_from < fit_end
                && (holdout == 0
                    || annihilates_values(&op, values, fit_end + 1, values.len() as u64)?);
            if holds {
                report.operator = Some(op);
                FitOutcome::Found {
                    kernel_dimension: dimension,
                }
            } else {
                FitOutcome::HoldoutFailed {
                    kernel_dimension: dimension,
                }
            }
        }
    };
    report.search_trace.push(TraceEntry {
        order,
        degree,
        outcome,
    });
    Ok(report)
}

fn exact_rows(values: &[BigRational], order: usize, degree: usize, first: u64, last: u64) -> Vec<Vec<BigRational>> {
    (first..=last)
        .map(|t| {
            let tq = BigRational::from_integer(BigInt::from(t));
            let mut row = Vec::with_capacity((order + 1) * (degree + 1));
            for i in 0..=order {
                let mut term = values[(t - 1) as usize - i].clone();
                for _ in 0..=degree {
                    row.push(term.clone());
                    term *= &tq;
                }
            }
            row
        })
        .collect()
}

fn modular_rows(
    cache: &mut ResidueCache,
    values: &[BigRational],
    order: usize,
    degree: usize,
    first: u64,
    last: u64,
    p: u64,
) -> Option<Vec<Vec<u64>>> {
    let residues = cache.get(values, p)?;
    Some(
        (first..=last)
            .map(|t| {
                let tp = t % p;
                let mut row = Vec::with_capacity((order + 1) * (degree + 1));
                for i in 0..=order {
                    let mut term = residues[(t - 1) as usize - i];
                    for _ in 0..=degree {
                        row.push(term);
                        term = mul_mod(term, tp, p);
                    }
                }
                row
            })
            .collect(),
    )
}

/// Column `i*(degree+1) + j` holds the coefficient of `T^j A(T-i)`.
fn operator_polys(v: &[BigRational], order: usize, degree: usize) -> Vec<IntPolynomial> {
    let ints = linalg::primitive_integer_vector(v);
    let mut polys: Vec<IntPolynomial> = ints
        .chunks(degree + 1)
        .take(order + 1)
        .map(|c| IntPolynomial::new(c.to_vec()))
        .collect();
    // p_0 = 0 means the relation only involves A(T-1), ...; shift it down.
    while polys.len() > 1 && polys[0].is_zero() {
        polys.remove(0);
        for p in polys.iter_mut() {
            *p = p.shifted(1);
        }
    }
    polys
}

fn provisional(seq: &RationalSequence, polys: Vec<IntPolynomial>) -> RecurrenceOperator {
    let mut op = RecurrenceOperator {
        n: seq.n,
        r: seq.r,
        polys,
        valid_from: 0,
        initial: Vec::new(),
    };
    op.normalize();
    op
}

fn finish_operator(seq: &RationalSequence, polys: Vec<IntPolynomial>) -> RecurrenceOperator {
    let mut op = provisional(seq, polys);
    op.valid_from = RecurrenceOperator::minimal_valid_from(&op.polys);
    let take = (op.valid_from as usize).min(seq.len());
    op.initial = seq.values[..take].to_vec();
    op
}

/// Candidate `(order, degree)` pairs in search order: increasing
/// `order + degree`, then increasing order.
pub fn ansatz_schedule(max_order: usize, max_degree: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for total in 1..=max_order + max_degree {
        for order in 1..=max_order.min(total) {
            let degree = total - order;
            if degree <= max_degree {
                out.push((order, degree));
            }
        }
    }
    out
}

pub fn search(seq: &RationalSequence, max_order: usize, max_degree: usize, holdout: usize) -> Result<GuessReport> {
    search_with(seq, max_order, max_degree, holdout, &FitOptions::default())
}

pub fn search_with(
    seq: &RationalSequence,
    max_order: usize,
    max_degree: usize,
    holdout: usize,
    options: &FitOptions,
) -> Result<GuessReport> {
    if max_order == 0 {
        return Err(Error::InvalidArgument("max order must be at least 1".into()));
    }
    let mut cache = ResidueCache::default();
    let mut trace = Vec::new();
    let mut used = 0;
    for (order, degree) in ansatz_schedule(max_order, max_degree) {
        match fit_with(seq, order, degree, holdout, options, &mut cache) {
            Ok(mut report) => {
                used = used.max(report.terms_used);
                trace.append(&mut report.search_trace);
                if report.operator.is_some() {
                    report.search_trace = trace;
                    return Ok(report);
                }
            }
            Err(Error::InsufficientTerms { required, .. }) => trace.push(TraceEntry {
                order,
                degree,
                outcome: FitOutcome::InsufficientTerms { required },
            }),
            Err(e) => return Err(e),
        }
    }
    Ok(GuessReport {
        operator: None,
        terms_used: used,
        terms_verified: 0,
        search_trace: trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::a_sequence;
    use crate::problem::ProblemSpec;

    fn seq(values: Vec<BigRational>) -> RationalSequence {
        RationalSequence {
            n: 0,
            r: 0,
            values,
        }
    }

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Unrolls `(T-1) A(T) = A(T-1) + (T-1) A(T-2)` from `1/2, 1/2`.
    fn prop1_values(len: usize) -> Vec<BigRational> {
        let mut v = vec![q(1, 2), q(1, 2)];
        while v.len() < len {
            let t = v.len() as i64 + 1;
            let next = &v[v.len() - 1] / q(t - 1, 1) + &v[v.len() - 2];
            v.push(next);
        }
        v
    }

    fn prop1_operator() -> RecurrenceOperator {
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

    #[test]
    fn recovers_first_recurrence() {
        let s = seq(prop1_values(20));
        let report = fit(&s, 2, 1, 8).unwrap();
        let op = report.operator.expect("found");
        assert_eq!(op.polys, prop1_operator().polys);
        assert_eq!(op.valid_from, 2);
        assert_eq!(op.initial, vec![q(1, 2), q(1, 2)]);
        assert_eq!(report.terms_verified, 8);
    }

    #[test]
    fn constant_sequence() {
        let s = seq(vec![q(1, 1); 15]);
        let op = fit(&s, 1, 0, 5).unwrap().operator.unwrap();
        assert_eq!(
            op.polys,
            vec![IntPolynomial::from_i64(&[1]), IntPolynomial::from_i64(&[-1])]
        );
    }

    #[test]
    fn too_few_terms() {
        let s = seq(prop1_values(10));
        assert_eq!(
            fit(&s, 2, 1, 8).unwrap_err(),
            Error::InsufficientTerms {
                required: 19,
                available: 10
            }
        );
    }

    #[test]
    fn annihilation_checks() {
        let s = seq(prop1_values(100));
        let op = prop1_operator();
        assert!(annihilates(&op, &s, 3, 100).unwrap());
        let mut bad = op.clone();
        bad.polys[1] = IntPolynomial::from_i64(&[0]);
        assert!(!annihilates(&bad, &s, 3, 100).unwrap());
        assert!(annihilates(&op, &s, 2, 100).is_err());
        assert!(annihilates(&op, &s, 3, 101).is_err());
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut op = prop1_operator();
        op.polys = op.polys.iter().map(|p| p.negated()).collect();
        op.polys = op
            .polys
            .iter()
            .map(|p| IntPolynomial::new(p.coeffs().iter().map(|c| c * 6).collect()))
            .collect();
        op.normalize();
        assert_eq!(op.polys, prop1_operator().polys);
        let again = {
            let mut o = op.clone();
            o.normalize();
            o
        };
        assert_eq!(again, op);
    }

    #[test]
    fn schedule_order() {
        assert_eq!(
            ansatz_schedule(2, 2),
            vec![(1, 0), (1, 1), (2, 0), (1, 2), (2, 1), (2, 2)]
        );
    }

    #[test]
    fn search_prefers_small_ansatz() {
        let s = seq(prop1_values(30));
        let report = search(&s, 4, 4, 8).unwrap();
        let op = report.operator.unwrap();
        assert_eq!((op.order(), op.degree()), (2, 1));
        let last = report.search_trace.last().unwrap();
        assert_eq!((last.order, last.degree), (2, 1));
    }

    #[test]
    fn solvers_agree_on_engine_data() {
        let s = a_sequence(ProblemSpec::new(2, 1).unwrap(), 30).unwrap();
        for solver in [Solver::Exact, Solver::Modular] {
            let options = FitOptions {
                solver,
                ..FitOptions::default()
            };
            let report = fit_with(&s, 3, 2, 10, &options, &mut ResidueCache::default()).unwrap();
            assert_eq!(report.operator.unwrap().polys, prop1_operator().polys);
        }
    }
}
