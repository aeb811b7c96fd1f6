//! Kernel vectors of exact rational matrices.
//!
//! Both solvers return the same canonical object: the kernel vector whose
//! highest nonzero coordinate is as low as possible, scaled so that this
//! coordinate is 1. It is the reduced-row-echelon basis vector of the first
//! free column, so it is unique and independent of the solver.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::modular::{self, inv_mod, mul_mod, sub_mod, CrtAccumulator};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Kernel {
    /// Dimension of the kernel.
    pub dimension: usize,
    /// Canonical lowest kernel vector, absent when the kernel is trivial.
    pub vector: Option<Vec<BigRational>>,
}

/// Clears denominators row by row.
fn integer_rows(rows: &[Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    rows.iter()
        .map(|row| {
            let lcm = row
                .iter()
                .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()));
            row.iter()
                .map(|v| v.numer() * (&lcm / v.denom()))
                .collect()
        })
        .collect()
}

/// Fraction-free elimination over the integers, pivoting on the entry with
/// the smallest bit length.
pub fn kernel_exact(rows: &[Vec<BigRational>], cols: usize) -> Kernel {
    let mut m = integer_rows(rows);
    let n_rows = m.len();
    let mut pivot_cols = Vec::new();
    let mut first_free = None;
    let mut prev = BigInt::one();
    let mut k = 0;
    for c in 0..cols {
        let pivot = (k..n_rows)
            .filter(|&i| !m[i][c].is_zero())
            .min_by_key(|&i| (m[i][c].bits(), i));
        let Some(pi) = pivot else {
            first_free.get_or_insert(c);
            continue;
        };
        m.swap(k, pi);
        let (head, tail) = m.split_at_mut(k + 1);
        let pivot_row = &head[k];
        let piv = pivot_row[c].clone();
        for row in tail.iter_mut() {
            let lead = std::mem::take(&mut row[c]);
            for j in c + 1..cols {
                let v = &piv * &row[j] - &lead * &pivot_row[j];
                row[j] = if prev.is_one() { v } else { v / &prev };
            }
        }
        prev = piv;
        pivot_cols.push(c);
        k += 1;
    }
    let dimension = cols - pivot_cols.len();
    let vector = first_free.map(|f| {
        let mut v = vec![BigRational::zero(); cols];
        v[f] = BigRational::one();
        // Back substitution through the pivots left of f.
        for (row, &pc) in pivot_cols.iter().enumerate().rev() {
            if pc > f {
                continue;
            }
            let mut acc = BigRational::zero();
            for j in pc + 1..=f {
                if !m[row][j].is_zero() && !v[j].is_zero() {
                    acc += &v[j] * BigRational::from_integer(m[row][j].clone());
                }
            }
            v[pc] = -acc / BigRational::from_integer(m[row][pc].clone());
        }
        v
    });
    Kernel { dimension, vector }
}

/// Reduced row echelon form modulo `p`: returns the pivot columns and the
/// canonical lowest kernel vector (with 1 in the first free column).
pub fn kernel_mod(mut m: Vec<Vec<u64>>, cols: usize, p: u64) -> (Vec<usize>, Option<Vec<u64>>) {
    let n_rows = m.len();
    let mut pivot_cols = Vec::new();
    let mut k = 0;
    for c in 0..cols {
        if k == n_rows {
            break;
        }
        let Some(pi) = (k..n_rows).find(|&i| m[i][c] != 0) else {
            continue;
        };
        m.swap(k, pi);
        let inv = inv_mod(m[k][c], p);
        for x in &mut m[k][c..cols] {
            *x = mul_mod(*x, inv, p);
        }
        let pivot_row = m[k].clone();
        for (i, row) in m.iter_mut().enumerate() {
            if i == k || row[c] == 0 {
                continue;
            }
            let f = row[c];
            for j in c..cols {
                if pivot_row[j] != 0 {
                    row[j] = sub_mod(row[j], mul_mod(f, pivot_row[j], p), p);
                }
            }
        }
        pivot_cols.push(c);
        k += 1;
    }
    let first_free = (0..cols).find(|c| !pivot_cols.contains(c));
    let vector = first_free.map(|f| {
        let mut v = vec![0u64; cols];
        v[f] = 1;
        for (row, &pc) in pivot_cols.iter().enumerate() {
            if pc < f {
                v[pc] = sub_mod(0, m[row][f], p);
            }
        }
        v
    });
    (pivot_cols, vector)
}

/// Multimodular kernel: images modulo word-size primes are lifted by CRT and
/// rational reconstruction until the candidate is stable and `accept`
/// confirms it exactly.
///
/// `image(p)` returns the matrix reduced modulo `p`, or `None` when some
/// entry has a denominator divisible by `p`.
pub fn kernel_modular(
    cols: usize,
    mut image: impl FnMut(u64) -> Option<Vec<Vec<u64>>>,
    mut accept: impl FnMut(&[BigRational]) -> bool,
    max_primes: usize,
) -> Option<Kernel> {
    let mut best: Option<(Vec<usize>, CrtAccumulator)> = None;
    let mut last: Option<Vec<BigRational>> = None;
    for p in modular::primes().take(max_primes) {
        let Some(rows) = image(p) else { continue };
        let (pivots, vector) = kernel_mod(rows, cols, p);
        let Some(vector) = vector else {
            return Some(Kernel {
                dimension: 0,
                vector: None,
            });
        };
        match &mut best {
            Some((bp, _)) if pivots.len() < bp.len() => continue,
            Some((bp, acc)) if *bp == pivots => acc.absorb(&vector, p),
            _ => {
                // First image, or an earlier prime was unlucky.
                let mut acc = CrtAccumulator::new(cols);
                acc.absorb(&vector, p);
                best = Some((pivots, acc));
                last = None;
                continue;
            }
        }
        let (pivots, acc) = best.as_ref().expect("set above");
        let Some(candidate) = acc.reconstruct() else {
            continue;
        };
        if last.as_ref() == Some(&candidate) && accept(&candidate) {
            return Some(Kernel {
                dimension: cols - pivots.len(),
                vector: Some(candidate),
            });
        }
        last = Some(candidate);
    }
    None
}

/// `rows · v`, exactly.
pub fn residuals(rows: &[Vec<BigRational>], v: &[BigRational]) -> Vec<BigRational> {
    rows.iter()
        .map(|row| {
            row.iter()
                .zip(v)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .map(|(a, b)| a * b)
                .sum()
        })
        .collect()
}

/// Reduces a rational matrix modulo `p`.
pub fn reduce_matrix(rows: &[Vec<BigRational>], p: u64) -> Option<Vec<Vec<u64>>> {
    rows.iter()
        .map(|row| row.iter().map(|v| modular::reduce_rational(v, p)).collect())
        .collect()
}

/// Integer vector proportional to `v` with content 1 and positive last
/// nonzero entry.
pub fn primitive_integer_vector(v: &[BigRational]) -> Vec<BigInt> {
    let lcm = v.iter().fold(BigInt::one(), |acc, x| acc.lcm(x.denom()));
    let ints: Vec<BigInt> = v.iter().map(|x| x.numer() * (&lcm / x.denom())).collect();
    let content = ints.iter().fold(BigInt::zero(), |acc, x| acc.gcd(x));
    if content.is_zero() {
        return ints;
    }
    let sign_flip = ints
        .iter()
        .rev()
        .find(|x| !x.is_zero())
        .is_some_and(|x| x.is_negative());
    ints.into_iter()
        .map(|x| {
            let x = x / &content;
            if sign_flip {
                -x
            } else {
                x
            }
        })
        .collect()
}
