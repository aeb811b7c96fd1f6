use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::modular::{add_mod, mul_mod, reduce_int};

/// Dense integer polynomial in `T`, coefficients in ascending degree.
/// The zero polynomial has no coefficients.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct IntPolynomial {
    coeffs: Vec<BigInt>,
}

impl IntPolynomial {
    pub fn new(mut coeffs: Vec<BigInt>) -> Self {
        while coeffs.last().is_some_and(Zero::is_zero) {
            coeffs.pop();
        }
        IntPolynomial { coeffs }
    }

    pub fn from_i64(coeffs: &[i64]) -> Self {
        Self::new(coeffs.iter().map(|&c| BigInt::from(c)).collect())
    }

    pub fn zero() -> Self {
        IntPolynomial { coeffs: Vec::new() }
    }

    pub fn coeffs(&self) -> &[BigInt] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree, or `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    pub fn leading(&self) -> Option<&BigInt> {
        self.coeffs.last()
    }

    pub fn content(&self) -> BigInt {
        self.coeffs
            .iter()
            .fold(BigInt::zero(), |acc, c| acc.gcd(c))
    }

    pub fn eval(&self, t: i64) -> BigInt {
        let t = BigInt::from(t);
        self.coeffs
            .iter()
            .rev()
            .fold(BigInt::zero(), |acc, c| acc * &t + c)
    }

    pub fn eval_mod(&self, t: u64, p: u64) -> u64 {
        let t = t % p;
        self.coeffs
            .iter()
            .rev()
            .fold(0, |acc, c| add_mod(mul_mod(acc, t, p), reduce_int(c, p), p))
    }

    /// `q(T) = self(T + shift)`.
    pub fn shifted(&self, shift: i64) -> Self {
        // Horner on polynomials: q = (...(a_d (T+s) + a_{d-1})(T+s) + ...).
        let s = BigInt::from(shift);
        let mut acc: Vec<BigInt> = Vec::new();
        for c in self.coeffs.iter().rev() {
            let mut next = vec![BigInt::zero(); acc.len() + 1];
            for (k, a) in acc.iter().enumerate() {
                next[k + 1] += a;
                next[k] += a * &s;
            }
            next[0] += c;
            acc = next;
        }
        Self::new(acc)
    }

    pub fn scale_down(&self, divisor: &BigInt) -> Self {
        Self::new(self.coeffs.iter().map(|c| c / divisor).collect())
    }

    pub fn negated(&self) -> Self {
        Self::new(self.coeffs.iter().map(|c| -c).collect())
    }

    /// Upper bound on the modulus of every complex root (Fujiwara).
    pub fn root_bound(&self) -> f64 {
        let Some(d) = self.degree() else {
            return 0.0;
        };
        let lead = log2_abs(&self.coeffs[d]);
        (1..=d)
            .filter(|&k| !self.coeffs[d - k].is_zero())
            .map(|k| {
                let mut ratio = log2_abs(&self.coeffs[d - k]) - lead;
                if k == d {
                    ratio -= 1.0;
                }
                2.0 * (ratio / k as f64).exp2()
            })
            .fold(0.0, f64::max)
    }

    /// Largest positive integer root, if any.
    pub fn largest_positive_integer_root(&self) -> Option<u64> {
        if self.degree().unwrap_or(0) == 0 {
            return None;
        }
        let bound = self.root_bound().ceil();
        let bound = if bound.is_finite() && bound < u64::MAX as f64 {
            bound as u64
        } else {
            u64::MAX
        };
        // Nonzero integer roots divide the lowest nonzero coefficient.
        let low = self.coeffs.iter().find(|c| !c.is_zero())?;
        let limit = low.abs().to_u64().map_or(bound, |v| v.min(bound));
        (1..=limit).rev().find(|&t| self.eval(t as i64).is_zero())
    }
}

fn log2_abs(v: &BigInt) -> f64 {
    let bits = v.bits();
    if bits <= 64 {
        return v.abs().to_f64().unwrap_or(0.0).log2();
    }
    let shift = bits - 64;
    let top: BigInt = v.abs() >> shift;
    top.to_f64().unwrap_or(1.0).log2() + shift as f64
}

impl fmt::Display for IntPolynomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate().rev() {
            if c.is_zero() {
                continue;
            }
            let sign = if c.is_negative() { "-" } else { "+" };
            if first {
                if c.is_negative() {
                    write!(f, "-")?;
                }
            } else {
                write!(f, " {sign} ")?;
            }
            first = false;
            let mag = c.abs();
            match k {
                0 => write!(f, "{mag}")?,
                _ => {
                    if mag != BigInt::from(1) {
                        write!(f, "{mag}*")?;
                    }
                    if k == 1 {
                        write!(f, "T")?;
                    } else {
                        write!(f, "T^{k}")?;
                    }
                }
            }
        }
        Ok(())
    }
}
