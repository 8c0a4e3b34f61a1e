//! Exact arithmetic over a prime field.
//!
//! Every protocol symbol (matrix entries, shares, answers) lives in `F_p`
//! for a prime `p` chosen at configuration time. [`PrimeField`] is a small
//! copyable handle carrying the modulus; [`FieldElement`] is a plain reduced
//! residue. Elements do not carry their modulus, so arithmetic always goes
//! through the field handle; matrices ([`crate::matrix::FMatrix`]) do carry
//! their field and reject cross-field operations.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum FieldError {
    #[error("{0} is not prime")]
    NotPrime(u64),
    #[error("modulus {0} exceeds 2^62; addition would overflow")]
    ModulusTooLarge(u64),
    #[error("zero has no multiplicative inverse")]
    DivideByZero,
}

/// A prime field `F_p`, identified by its modulus.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PrimeField {
    p: u64,
}

/// A residue in `[0, p)`. Always reduced; construct via [`PrimeField::element`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FieldElement(u64);

impl FieldElement {
    pub fn value(self) -> u64 {
        self.0
    }
}

impl PrimeField {
    /// Builds the field `F_p`, verifying primality by trial division.
    ///
    /// Trial division is exact and fast at desk scale (`p` well below 2^40);
    /// this crate never needs probabilistic primality testing. The modulus
    /// is capped at 2^62 so sums of two residues stay inside u64.
    pub fn new(p: u64) -> Result<Self, FieldError> {
        if p > 1 << 62 {
            return Err(FieldError::ModulusTooLarge(p));
        }
        if is_prime(p) {
            Ok(PrimeField { p })
        } else {
            Err(FieldError::NotPrime(p))
        }
    }

    pub fn modulus(self) -> u64 {
        self.p
    }

    /// Reduces an arbitrary integer into the field.
    pub fn element(self, value: u64) -> FieldElement {
        FieldElement(value % self.p)
    }

    pub fn zero(self) -> FieldElement {
        FieldElement(0)
    }

    pub fn one(self) -> FieldElement {
        FieldElement(1 % self.p)
    }

    pub fn add(self, a: FieldElement, b: FieldElement) -> FieldElement {
        let s = a.0 + b.0; // both < p <= 2^62, no overflow
        FieldElement(if s >= self.p { s - self.p } else { s })
    }

    pub fn sub(self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement(if a.0 >= b.0 { a.0 - b.0 } else { a.0 + self.p - b.0 })
    }

    pub fn neg(self, a: FieldElement) -> FieldElement {
        FieldElement(if a.0 == 0 { 0 } else { self.p - a.0 })
    }

    pub fn mul(self, a: FieldElement, b: FieldElement) -> FieldElement {
        FieldElement((u128::from(a.0) * u128::from(b.0) % u128::from(self.p)) as u64)
    }

    pub fn pow(self, base: FieldElement, mut exp: u64) -> FieldElement {
        let mut acc = self.one();
        let mut base = base;
        while exp > 0 {
            if exp & 1 == 1 {
                acc = self.mul(acc, base);
            }
            base = self.mul(base, base);
            exp >>= 1;
        }
        acc
    }

    /// Multiplicative inverse via Fermat: `a^(p-2)`.
    pub fn inv(self, a: FieldElement) -> Result<FieldElement, FieldError> {
        if a.0 == 0 {
            return Err(FieldError::DivideByZero);
        }
        Ok(self.pow(a, self.p - 2))
    }
}

/// Deterministic trial-division primality check.
pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    if n.is_multiple_of(2) {
        return n == 2;
    }
    let mut d = 3u64;
    while d.saturating_mul(d) <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 2;
    }
    true
}

/// Smallest prime strictly greater than `n`.
pub fn next_prime(n: u64) -> u64 {
    let mut c = n + 1;
    loop {
        if is_prime(c) {
            return c;
        }
        c += 1;
    }
}
