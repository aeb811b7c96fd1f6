//! Binary fixed-point reals backed by big integers.
//!
//! A [`Fixed`] is `mantissa / 2^bits`. Every operation rounds to nearest at
//! the operand precision, so the absolute error per operation is at most
//! `2^-(bits+1)`.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::{BigInt, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fixed {
    mantissa: BigInt,
    bits: u32,
}

/// `numer / denom` rounded half away from zero.
fn div_round(numer: &BigInt, denom: &BigInt) -> BigInt {
    let (q, r) = numer.div_rem(denom);
    if (r.abs() << 1usize) >= denom.abs() {
        let away = if (numer.sign() == Sign::Minus) != (denom.sign() == Sign::Minus) {
            -1
        } else {
            1
        };
        q + away
    } else {
        q
    }
}

impl Fixed {
    pub fn zero(bits: u32) -> Self {
        Fixed {
            mantissa: BigInt::zero(),
            bits,
        }
    }

    pub fn from_mantissa(mantissa: BigInt, bits: u32) -> Self {
        Fixed { mantissa, bits }
    }

    pub fn from_int(v: i64, bits: u32) -> Self {
        Fixed {
            mantissa: BigInt::from(v) << bits as usize,
            bits,
        }
    }

    pub fn from_rational(q: &BigRational, bits: u32) -> Self {
        let scaled = q.numer() << bits as usize;
        Fixed {
            mantissa: div_round(&scaled, q.denom()),
            bits,
        }
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn mantissa(&self) -> &BigInt {
        &self.mantissa
    }

    pub fn is_zero(&self) -> bool {
        self.mantissa.is_zero()
    }

    pub fn is_negative(&self) -> bool {
        self.mantissa.is_negative()
    }

    pub fn abs(&self) -> Self {
        Fixed {
            mantissa: self.mantissa.abs(),
            bits: self.bits,
        }
    }

    /// Exact value as a rational.
    pub fn to_rational(&self) -> BigRational {
        BigRational::new(self.mantissa.clone(), BigInt::from(1) << self.bits as usize)
    }

    pub fn to_f64(&self) -> f64 {
        let m = &self.mantissa;
        let excess = m.bits().saturating_sub(60);
        let top = (m >> excess as usize).to_f64().unwrap_or(f64::NAN);
        top * ((excess as f64) - self.bits as f64).exp2()
    }

    pub fn with_bits(&self, bits: u32) -> Self {
        let mantissa = match bits.cmp(&self.bits) {
            Ordering::Equal => self.mantissa.clone(),
            Ordering::Greater => &self.mantissa << (bits - self.bits) as usize,
            Ordering::Less => div_round(
                &self.mantissa,
                &(BigInt::from(1) << (self.bits - bits) as usize),
            ),
        };
        Fixed { mantissa, bits }
    }

    fn check(&self, other: &Fixed) {
        assert_eq!(self.bits, other.bits, "mixed fixed-point precisions");
    }

    pub fn add(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed {
            mantissa: &self.mantissa + &other.mantissa,
            bits: self.bits,
        }
    }

    pub fn sub(&self, other: &Fixed) -> Fixed {
        self.check(other);
        Fixed {
            mantissa: &self.mantissa - &other.mantissa,
            bits: self.bits,
        }
    }

    pub fn mul(&self, other: &Fixed) -> Fixed {
        self.check(other);
        let wide = &self.mantissa * &other.mantissa;
        Fixed {
            mantissa: div_round(&wide, &(BigInt::from(1) << self.bits as usize)),
            bits: self.bits,
        }
    }

    pub fn div(&self, other: &Fixed) -> Fixed {
        self.check(other);
        assert!(!other.is_zero(), "fixed-point division by zero");
        let wide = &self.mantissa << self.bits as usize;
        Fixed {
            mantissa: div_round(&wide, &other.mantissa),
            bits: self.bits,
        }
    }

    pub fn mul_int(&self, k: &BigInt) -> Fixed {
        Fixed {
            mantissa: &self.mantissa * k,
            bits: self.bits,
        }
    }

    pub fn div_int(&self, k: &BigInt) -> Fixed {
        Fixed {
            mantissa: div_round(&self.mantissa, k),
            bits: self.bits,
        }
    }

    /// Square root of a non-negative value.
    pub fn sqrt(&self) -> Fixed {
        assert!(!self.is_negative(), "square root of a negative value");
        // sqrt(m / 2^b) * 2^b = sqrt(m * 2^b); one guard bit for rounding.
        let wide: BigInt = &self.mantissa << (self.bits as usize + 2);
        let root = wide.sqrt();
        Fixed {
            mantissa: (root + 1) >> 1usize,
            bits: self.bits,
        }
    }

    /// Decimal rendering with `digits` places after the point.
    pub fn to_decimal(&self, digits: usize) -> String {
        crate::rational::to_decimal(&self.to_rational(), digits)
    }

    /// Number of leading decimal digits on which `self` and `other` agree,
    /// measured as `floor(-log10(|a - b| / |b|))` and capped by the decimal
    /// capacity of the coarser operand.
    pub fn agreed_digits(&self, other: &Fixed) -> u32 {
        let bits = self.bits.max(other.bits);
        let cap = (self.bits.min(other.bits) as f64 * std::f64::consts::LOG10_2).floor() as u32;
        let a = self.with_bits(bits);
        let b = other.with_bits(bits);
        let diff = a.sub(&b).abs();
        if diff.is_zero() {
            return cap;
        }
        let scale = b.abs();
        if scale.is_zero() {
            return 0;
        }
        let rel = log10_abs(&diff.mantissa) - log10_abs(&scale.mantissa);
        ((-rel).floor().max(0.0) as u32).min(cap)
    }
}

fn log10_abs(v: &BigInt) -> f64 {
    let excess = v.bits().saturating_sub(60);
    let top = (v.abs() >> excess as usize).to_f64().unwrap_or(1.0);
    top.log10() + excess as f64 * std::f64::consts::LOG10_2
}

impl fmt::Display for Fixed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        write!(f, "{}", self.to_decimal(digits))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    #[test]
    fn rational_roundtrip_and_rounding() {
        let third = Fixed::from_rational(&q(1, 3), 64);
        assert!((third.to_f64() - 1.0 / 3.0).abs() < 1e-18);
        let minus = Fixed::from_rational(&q(-1, 3), 64);
        assert_eq!(minus.mantissa(), &-third.mantissa().clone());
        assert_eq!(Fixed::from_rational(&q(5, 4), 8).to_rational(), q(5, 4));
    }

    #[test]
    fn arithmetic() {
        let a = Fixed::from_int(3, 80);
        let b = Fixed::from_rational(&q(1, 2), 80);
        assert_eq!(a.mul(&b).to_rational(), q(3, 2));
        assert_eq!(a.div(&b).to_rational(), q(6, 1));
        assert_eq!(a.sub(&b).to_rational(), q(5, 2));
        assert_eq!(Fixed::from_int(49, 40).sqrt().to_rational(), q(7, 1));
        let two = Fixed::from_int(2, 200).sqrt();
        assert_eq!(two.to_decimal(30), "1.414213562373095048801688724210");
    }

    #[test]
    fn digit_agreement() {
        let a = Fixed::from_rational(&q(1, 3), 128);
        let b = Fixed::from_rational(&q(333_333_334, 1_000_000_000), 128);
        assert_eq!(a.agreed_digits(&b), 8);
        assert!(a.agreed_digits(&a) >= 38);
    }

    #[test]
    fn decimal_output() {
        assert_eq!(Fixed::from_rational(&q(-1, 8), 16).to_decimal(3), "-0.125");
        assert_eq!(format!("{:.2}", Fixed::from_int(7, 8)), "7.00");
    }
}
