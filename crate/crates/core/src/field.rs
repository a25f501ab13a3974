//! Arithmetic in the prime field GF(p).
//!
//! Every coordinate of every geometric object in this crate is a canonical
//! residue in `[0, p)`. Residues are re-canonicalized on every operation so
//! that equality of projective objects reduces to raw integer comparison in
//! the incidence hot loops.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use thiserror::Error;

/// Largest supported modulus. With `p < 2^16` a sum of a handful of residue
/// products still fits a `u64`, so no reduction tricks are needed anywhere.
pub const MAX_MODULUS: u64 = 1 << 16;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not a prime number")]
    NotPrime(u64),
    #[error("modulus {0} exceeds the supported maximum {MAX_MODULUS}")]
    ModulusTooLarge(u64),
}

/// A prime modulus, validated at construction.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Prime(u32);

impl Prime {
    /// Validates `p` by deterministic trial division.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p > MAX_MODULUS {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if !is_prime(p as u32) {
            return Err(FieldError::NotPrime(p));
        }
        Ok(Prime(p as u32))
    }

    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }

    /// The residue `v mod p` as a field element.
    #[inline]
    pub fn element(self, v: u64) -> FieldElement {
        FieldElement {
            value: (v % u64::from(self.0)) as u32,
            modulus: self.0,
        }
    }

    /// Canonical sum of two canonical residues.
    #[inline]
    pub fn add(self, a: u32, b: u32) -> u32 {
        let s = a + b;
        if s >= self.0 {
            s - self.0
        } else {
            s
        }
    }

    /// Canonical difference `a - b` of canonical residues.
    #[inline]
    pub fn sub(self, a: u32, b: u32) -> u32 {
        if a >= b {
            a - b
        } else {
            a + self.0 - b
        }
    }

    /// Canonical product of canonical residues.
    #[inline]
    pub fn mul(self, a: u32, b: u32) -> u32 {
        ((u64::from(a) * u64::from(b)) % u64::from(self.0)) as u32
    }

    /// Canonical additive inverse of a canonical residue.
    #[inline]
    pub fn neg(self, a: u32) -> u32 {
        if a == 0 {
            0
        } else {
            self.0 - a
        }
    }

    /// `a^e` by square-and-multiply.
    pub fn pow(self, a: u32, mut e: u32) -> u32 {
        let mut base = a;
        let mut acc = 1u32;
        while e > 0 {
            if e & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            e >>= 1;
        }
        acc
    }

    /// Multiplicative inverse of a nonzero canonical residue.
    ///
    /// Panics if `a == 0`; zero has no inverse.
    #[inline]
    pub fn inv(self, a: u32) -> u32 {
        assert!(a != 0, "zero has no multiplicative inverse in GF({})", self.0);
        self.pow(a, self.0 - 2)
    }

    /// All inverses at once: `table[a] = a^-1`, with `table[0] = 0` as a
    /// placeholder. Used by loops that canonicalize many points.
    pub fn inverse_table(self) -> Vec<u32> {
        let mut table = vec![0u32; self.0 as usize];
        for a in 1..self.0 {
            table[a as usize] = self.inv(a);
        }
        table
    }
}

impl fmt::Debug for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Prime({})", self.0)
    }
}

impl fmt::Display for Prime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

fn is_prime(n: u32) -> bool {
    if n < 2 {
        return false;
    }
    if n % 2 == 0 {
        return n == 2;
    }
    let mut d = 3u32;
    while d * d <= n {
        if n % d == 0 {
            return false;
        }
        d += 2;
    }
    true
}

/// A canonical residue in GF(p).
///
/// Mixing elements of different fields is a caller bug; the arithmetic
/// operators panic on a modulus mismatch.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct FieldElement {
    value: u32,
    modulus: u32,
}

impl FieldElement {
    #[inline]
    pub fn value(self) -> u32 {
        self.value
    }

    #[inline]
    pub fn modulus(self) -> u32 {
        self.modulus
    }

    #[inline]
    pub fn is_zero(self) -> bool {
        self.value == 0
    }

    /// Multiplicative inverse. Panics on zero.
    pub fn inv(self) -> FieldElement {
        let p = Prime(self.modulus);
        FieldElement {
            value: p.inv(self.value),
            modulus: self.modulus,
        }
    }

    #[inline]
    fn same_field(self, other: FieldElement) -> Prime {
        assert_eq!(
            self.modulus, other.modulus,
            "field elements from GF({}) and GF({}) cannot be combined",
            self.modulus, other.modulus
        );
        Prime(self.modulus)
    }
}

impl Add for FieldElement {
    type Output = FieldElement;
    fn add(self, rhs: FieldElement) -> FieldElement {
        let p = self.same_field(rhs);
        FieldElement {
            value: p.add(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Sub for FieldElement {
    type Output = FieldElement;
    fn sub(self, rhs: FieldElement) -> FieldElement {
        let p = self.same_field(rhs);
        FieldElement {
            value: p.sub(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Mul for FieldElement {
    type Output = FieldElement;
    fn mul(self, rhs: FieldElement) -> FieldElement {
        let p = self.same_field(rhs);
        FieldElement {
            value: p.mul(self.value, rhs.value),
            modulus: self.modulus,
        }
    }
}

impl Neg for FieldElement {
    type Output = FieldElement;
    fn neg(self) -> FieldElement {
        FieldElement {
            value: Prime(self.modulus).neg(self.value),
            modulus: self.modulus,
        }
    }
}

impl fmt::Debug for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {})", self.value, self.modulus)
    }
}

impl fmt::Display for FieldElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.value)
    }
}
