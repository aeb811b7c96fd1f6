//! Word-size prime fields, CRT lifting and rational reconstruction.

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

#[inline]
pub fn mul_mod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

#[inline]
pub fn add_mod(a: u64, b: u64, p: u64) -> u64 {
    let s = a + b;
    if s >= p {
        s - p
    } else {
        s
    }
}

#[inline]
pub fn sub_mod(a: u64, b: u64, p: u64) -> u64 {
    if a >= b {
        a - b
    } else {
        a + p - b
    }
}

pub fn pow_mod(mut base: u64, mut exp: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    base %= p;
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// Inverse of a nonzero residue modulo the prime `p`.
pub fn inv_mod(a: u64, p: u64) -> u64 {
    debug_assert!(!a.is_multiple_of(p));
    pow_mod(a, p - 2, p)
}

/// Deterministic Miller-Rabin for 64-bit inputs.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    const BASES: [u64; 12] = [2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37];
    for &b in &BASES {
        if n.is_multiple_of(b) {
            return n == b;
        }
    }
    let s = (n - 1).trailing_zeros();
    let d = (n - 1) >> s;
    'witness: for &a in &BASES {
        let mut x = pow_mod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 1..s {
            x = mul_mod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Primes descending from just below 2^62.
pub fn primes() -> impl Iterator<Item = u64> {
    let mut candidate = (1u64 << 62) - 1;
    std::iter::from_fn(move || {
        while !is_prime(candidate) {
            candidate -= 2;
        }
        let p = candidate;
        candidate -= 2;
        Some(p)
    })
}

pub fn reduce_uint(value: &BigUint, p: u64) -> u64 {
    (value % p).to_u64().expect("residue fits in u64")
}

pub fn reduce_int(value: &BigInt, p: u64) -> u64 {
    let r = reduce_uint(value.magnitude(), p);
    if value.sign() == Sign::Minus && r != 0 {
        p - r
    } else {
        r
    }
}

/// Residue of `value` modulo `p`, or `None` when the denominator vanishes.
pub fn reduce_rational(value: &BigRational, p: u64) -> Option<u64> {
    let den = reduce_int(value.denom(), p);
    if den == 0 {
        return None;
    }
    Some(mul_mod(reduce_int(value.numer(), p), inv_mod(den, p), p))
}

/// Residues modulo a growing product of primes.
#[derive(Debug, Clone)]
pub struct CrtAccumulator {
    modulus: BigInt,
    values: Vec<BigInt>,
}

impl CrtAccumulator {
    pub fn new(len: usize) -> Self {
        CrtAccumulator {
            modulus: BigInt::one(),
            values: vec![BigInt::zero(); len],
        }
    }

    pub fn modulus(&self) -> &BigInt {
        &self.modulus
    }

    /// Folds in one image; all images must have the same length.
    pub fn absorb(&mut self, residues: &[u64], p: u64) {
        assert_eq!(residues.len(), self.values.len());
        let m_mod_p = reduce_int(&self.modulus, p);
        let m_inv = inv_mod(m_mod_p, p);
        for (x, &a) in self.values.iter_mut().zip(residues) {
            let x_mod_p = reduce_int(x, p);
            let t = mul_mod(sub_mod(a, x_mod_p, p), m_inv, p);
            *x += &self.modulus * BigInt::from(t);
        }
        self.modulus *= BigInt::from(p);
    }

    /// Rational reconstruction of every coordinate.
    pub fn reconstruct(&self) -> Option<Vec<BigRational>> {
        self.values
            .iter()
            .map(|x| rational_reconstruction(x, &self.modulus))
            .collect()
    }
}

/// Finds `a/b` with `a ≡ b·x (mod m)`, `|a|, b ≤ sqrt(m/2)`.
pub fn rational_reconstruction(x: &BigInt, m: &BigInt) -> Option<BigRational> {
    let x = x.mod_floor(m);
    if x.is_zero() {
        return Some(BigRational::zero());
    }
    let bound = (m >> 1usize).sqrt();
    let (mut r0, mut r1) = (m.clone(), x);
    let (mut t0, mut t1) = (BigInt::zero(), BigInt::one());
    while r1 > bound {
        let (q, r2) = r0.div_rem(&r1);
        let t2 = &t0 - &q * &t1;
        r0 = std::mem::replace(&mut r1, r2);
        t0 = std::mem::replace(&mut t1, t2);
    }
    if t1.is_zero() || t1.abs() > bound {
        return None;
    }
    if !r1.gcd(&t1).is_one() {
        return None;
    }
    Some(BigRational::new(r1, t1))
}
