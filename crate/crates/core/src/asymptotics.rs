//! The constant `C` in `A(T) = C sqrt(T) + O(1/sqrt(T))`.
//!
//! On a ladder `T_k = T_0 2^k` the normalized values `s_k = A(T_k)/sqrt(T_k)`
//! behave like `C + c_1/T_k + c_2/T_k^2 + ...`, so Richardson elimination in
//! powers of `1/T` applies: `R[k][j] = (2^j R[k][j-1] - R[k-1][j-1]) / (2^j - 1)`.

use std::fmt::Write as _;

use num_bigint::BigInt;
use serde::{Deserialize, Serialize};

use crate::engine::heuristic_constant;
use crate::error::{Error, Result};
use crate::problem::ProblemSpec;
use crate::real::Fixed;

pub const DEFAULT_DEPTH: usize = 3;

/// Powers of `1/T` assumed in the corrections to `A(T)/sqrt(T)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Corrections {
    /// `1/T, 1/T^2, ...`
    #[default]
    Integer,
    /// `1/sqrt(T), 1/T, 1/T^(3/2), ...`, for sequences with a constant term.
    HalfInteger,
}

/// `(2 pi)^(-1/2)`, the exact constant for two bins and one ball.
pub const TWO_BIN_CONSTANT: f64 = 0.398_942_280_401_432_7;

#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticFit {
    pub c_estimate: Fixed,
    pub error_bar: f64,
    /// `(T_k, A(T_k)/sqrt(T_k))`.
    pub samples: Vec<(u64, Fixed)>,
    pub extrapolation_depth: usize,
    /// Richardson table, `table[k][j]` for `j <= min(k, depth)`.
    pub table: Vec<Vec<Fixed>>,
}

impl AsymptoticFit {
    /// Last row of the table: raw value, then each elimination level.
    pub fn diagonal(&self) -> &[Fixed] {
        self.table.last().map(Vec::as_slice).unwrap_or(&[])
    }
}

/// `t0, 2 t0, 4 t0, ...` up to `t_max`.
pub fn geometric_ladder(t0: u64, t_max: u64) -> Vec<u64> {
    assert!(t0 > 0);
    std::iter::successors(Some(t0), |&t| t.checked_mul(2))
        .take_while(|&t| t <= t_max)
        .collect()
}

pub fn estimate_constant(samples: &[(u64, Fixed)], depth: usize) -> Result<AsymptoticFit> {
    estimate_constant_with(samples, depth, Corrections::Integer)
}

pub fn estimate_constant_with(
    samples: &[(u64, Fixed)],
    depth: usize,
    corrections: Corrections,
) -> Result<AsymptoticFit> {
    if samples.len() < depth + 1 || samples.is_empty() {
        return Err(Error::TooFewSamples {
            need: depth + 1,
            depth,
            have: samples.len(),
        });
    }
    if samples.windows(2).any(|w| w[1].0 != w[0].0 * 2) || samples[0].0 == 0 {
        return Err(Error::NonGeometricLadder);
    }
    let bits = samples[0].1.bits();
    let normalized: Vec<(u64, Fixed)> = samples
        .iter()
        .map(|(t, a)| {
            let root = Fixed::from_int(*t as i64, bits).sqrt();
            (*t, a.with_bits(bits).div(&root))
        })
        .collect();

    // Level j removes the correction that shrinks by `factors[j]` per doubling.
    let one = Fixed::from_int(1, bits);
    let root_two = Fixed::from_int(2, bits).sqrt();
    let factors: Vec<Fixed> = (0..=depth)
        .scan(one.clone(), |acc, _| {
            let current = acc.clone();
            *acc = match corrections {
                Corrections::Integer => acc.mul_int(&BigInt::from(2)),
                Corrections::HalfInteger => acc.mul(&root_two),
            };
            Some(current)
        })
        .collect();
    let mut table: Vec<Vec<Fixed>> = Vec::with_capacity(normalized.len());
    for (k, (_, s)) in normalized.iter().enumerate() {
        let mut row = vec![s.clone()];
        for j in 1..=depth.min(k) {
            let fine = row[j - 1].mul(&factors[j]);
            let coarse = &table[k - 1][j - 1];
            row.push(fine.sub(coarse).div(&factors[j].sub(&one)));
        }
        table.push(row);
    }

    let last = table.len() - 1;
    let estimate = table[last][depth].clone();
    let error_bar = if last > depth {
        estimate.sub(&table[last - 1][depth]).abs().to_f64()
    } else if depth > 0 {
        estimate.sub(&table[last][depth - 1]).abs().to_f64()
    } else {
        0.0
    };
    Ok(AsymptoticFit {
        c_estimate: estimate,
        error_bar,
        samples: normalized,
        extrapolation_depth: depth,
        table,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub n: u32,
    pub r: u32,
    /// Decimal string of the measured constant.
    pub c_measured: String,
    pub error_bar: f64,
    pub c_heuristic: f64,
    pub c_exact: Option<f64>,
    pub abs_gap: f64,
    pub rel_gap: f64,
}

pub fn exact_constant(spec: ProblemSpec) -> Option<f64> {
    match (spec.n, spec.r) {
        (2, 1) => Some(TWO_BIN_CONSTANT),
        (n, r) if n == r => Some(0.0),
        _ => None,
    }
}

pub fn compare_report(spec: ProblemSpec, fit: &AsymptoticFit) -> Comparison {
    let measured = fit.c_estimate.to_f64();
    let heuristic = heuristic_constant(spec).unwrap_or(f64::NAN);
    let abs_gap = (heuristic - measured).abs();
    Comparison {
        n: spec.n,
        r: spec.r,
        c_measured: fit.c_estimate.to_decimal(12),
        error_bar: fit.error_bar,
        c_heuristic: heuristic,
        c_exact: exact_constant(spec),
        abs_gap,
        rel_gap: if measured != 0.0 { abs_gap / measured.abs() } else { f64::NAN },
    }
}

/// Aligned plain-text table of comparisons.
pub fn comparison_table(rows: &[Comparison]) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:>3} {:>3}  {:>16}  {:>10}  {:>12}  {:>14}",
        "n", "r", "C_measured", "errorBar", "C_heuristic", "C_exact"
    );
    for c in rows {
        let exact = c.c_exact.map_or_else(|| "-".to_string(), |v| format!("{v:.12}"));
        let _ = writeln!(
            out,
            "{:>3} {:>3}  {:>16}  {:>10.2e}  {:>12.6}  {:>14}",
            c.n, c.r, c.c_measured, c.error_bar, c.c_heuristic, exact
        );
    }
    out
}
