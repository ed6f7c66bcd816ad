//! Truncated p-adic integers and matrices over `Z/p^K`.
//!
//! Every scalar carries its certified precision `K`; binary operations
//! truncate to the smaller of the two precisions.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

/// Default working precision.
pub const DEFAULT_PRECISION: u32 = 24;

pub fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut d = 2u64;
    while d.saturating_mul(d) <= p {
        if p.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

pub fn check_prime(p: u64) -> Result<()> {
    if is_prime(p) {
        Ok(())
    } else {
        Err(Error::NotPrime(p))
    }
}

/// `p^k` as a big integer.
pub fn modulus(p: u64, k: u32) -> BigUint {
    BigUint::from(p).pow(k)
}

/// Reduces a signed integer into `[0, q)`.
pub fn reduce_signed(x: &BigInt, q: &BigUint) -> BigUint {
    let q = BigInt::from_biguint(Sign::Plus, q.clone());
    x.mod_floor(&q).to_biguint().expect("mod_floor is nonnegative")
}

/// Exponent of `p` in a nonzero integer.
pub fn val_p_int(x: &BigInt, p: u64) -> Result<u32> {
    if x.is_zero() {
        return Err(Error::ZeroValuation);
    }
    let p = BigInt::from(p);
    let mut x = x.abs();
    let mut v = 0;
    loop {
        let (q, r) = x.div_rem(&p);
        if !r.is_zero() {
            return Ok(v);
        }
        x = q;
        v += 1;
    }
}

/// p-adic valuation of a nonzero rational; negative when `p` divides the
/// reduced denominator.
pub fn val_p(x: &BigRational, p: u64) -> Result<i64> {
    if x.is_zero() {
        return Err(Error::ZeroValuation);
    }
    Ok(val_p_int(x.numer(), p)? as i64 - val_p_int(x.denom(), p)? as i64)
}

fn valuation_of_residue(x: &BigUint, p: u64, prec: u32) -> Option<u32> {
    if x.is_zero() {
        return None;
    }
    let p = BigUint::from(p);
    let mut x = x.clone();
    let mut v = 0;
    while (&x % &p).is_zero() {
        x /= &p;
        v += 1;
    }
    debug_assert!(v < prec);
    Some(v)
}

fn inverse_mod(x: &BigUint, q: &BigUint) -> Option<BigUint> {
    let x = BigInt::from_biguint(Sign::Plus, x % q);
    let qi = BigInt::from_biguint(Sign::Plus, q.clone());
    let e = x.extended_gcd(&qi);
    if !e.gcd.is_one() {
        return None;
    }
    Some(reduce_signed(&e.x, q))
}

/// A residue modulo `p^K` standing for a p-adic integer known to precision `K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Padic {
    p: u64,
    prec: u32,
    value: BigUint,
}

impl Padic {
    pub fn new(p: u64, prec: u32, value: impl Into<BigInt>) -> Self {
        assert!(prec >= 1, "precision must be positive");
        let q = modulus(p, prec);
        Padic {
            p,
            prec,
            value: reduce_signed(&value.into(), &q),
        }
    }

    pub fn from_residue(p: u64, prec: u32, value: BigUint) -> Self {
        assert!(prec >= 1, "precision must be positive");
        let q = modulus(p, prec);
        Padic {
            p,
            prec,
            value: value % q,
        }
    }

    pub fn zero(p: u64, prec: u32) -> Self {
        Self::from_residue(p, prec, BigUint::zero())
    }

    pub fn one(p: u64, prec: u32) -> Self {
        Self::from_residue(p, prec, BigUint::one())
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn residue(&self) -> &BigUint {
        &self.value
    }

    pub fn modulus(&self) -> BigUint {
        modulus(self.p, self.prec)
    }

    /// Representative in `(-p^K/2, p^K/2]`.
    pub fn to_signed(&self) -> BigInt {
        let q = BigInt::from_biguint(Sign::Plus, self.modulus());
        let v = BigInt::from_biguint(Sign::Plus, self.value.clone());
        if &v * 2 > q {
            v - q
        } else {
            v
        }
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.value.is_one()
    }

    pub fn is_unit(&self) -> bool {
        !(&self.value % self.p).is_zero()
    }

    /// Valuation of the residue; `None` when it vanishes at this precision.
    pub fn valuation(&self) -> Option<u32> {
        valuation_of_residue(&self.value, self.p, self.prec)
    }

    pub fn truncate(&self, prec: u32) -> Self {
        assert!(prec <= self.prec, "cannot raise certified precision");
        Self::from_residue(self.p, prec, self.value.clone())
    }

    pub fn unit_inverse(&self) -> Result<Self> {
        let q = self.modulus();
        let inv = inverse_mod(&self.value, &q).ok_or(Error::NotInvertible)?;
        Ok(Padic {
            p: self.p,
            prec: self.prec,
            value: inv,
        })
    }

    pub fn pow(&self, mut e: u64) -> Self {
        let mut base = self.clone();
        let mut acc = Padic::one(self.p, self.prec);
        while e > 0 {
            if e & 1 == 1 {
                acc = &acc * &base;
            }
            base = &base * &base;
            e >>= 1;
        }
        acc
    }

    /// Exact division by `p^e`; the result is certified to `K - e` digits.
    pub fn div_p_power(&self, e: u32) -> Result<Self> {
        if e == 0 {
            return Ok(self.clone());
        }
        if e >= self.prec {
            return Err(Error::InsufficientPrecision {
                needed: e + 1,
                available: self.prec,
            });
        }
        let pe = modulus(self.p, e);
        if !(&self.value % &pe).is_zero() {
            return Err(Error::Precondition(format!(
                "residue not divisible by {}^{}",
                self.p, e
            )));
        }
        Ok(Self::from_residue(self.p, self.prec - e, &self.value / pe))
    }

    pub fn mul_p_power(&self, e: u32) -> Self {
        Self::from_residue(self.p, self.prec, &self.value * modulus(self.p, e))
    }

    fn check_compatible(&self, other: &Padic) -> u32 {
        assert_eq!(self.p, other.p, "mixed primes in p-adic arithmetic");
        self.prec.min(other.prec)
    }

    pub fn scale_int(&self, c: i64) -> Self {
        let v = BigInt::from_biguint(Sign::Plus, self.value.clone()) * c;
        Padic::new(self.p, self.prec, v)
    }
}

impl fmt::Display for Padic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (mod {}^{})", self.value, self.p, self.prec)
    }
}

impl<'a> Add<&'a Padic> for &'a Padic {
    type Output = Padic;
    fn add(self, rhs: &Padic) -> Padic {
        let prec = self.check_compatible(rhs);
        Padic::from_residue(self.p, prec, &self.value + &rhs.value)
    }
}

impl<'a> Sub<&'a Padic> for &'a Padic {
    type Output = Padic;
    fn sub(self, rhs: &Padic) -> Padic {
        let prec = self.check_compatible(rhs);
        let q = modulus(self.p, prec);
        let a = &self.value % &q;
        let b = &rhs.value % &q;
        Padic::from_residue(self.p, prec, a + &q - b)
    }
}

impl<'a> Mul<&'a Padic> for &'a Padic {
    type Output = Padic;
    fn mul(self, rhs: &Padic) -> Padic {
        let prec = self.check_compatible(rhs);
        Padic::from_residue(self.p, prec, &self.value * &rhs.value)
    }
}

impl Neg for &Padic {
    type Output = Padic;
    fn neg(self) -> Padic {
        let q = self.modulus();
        Padic::from_residue(self.p, self.prec, &q - &self.value)
    }
}

macro_rules! forward_owned {
    ($tr:ident, $m:ident) => {
        impl $tr<Padic> for Padic {
            type Output = Padic;
            fn $m(self, rhs: Padic) -> Padic {
                (&self).$m(&rhs)
            }
        }
    };
}
forward_owned!(Add, add);
forward_owned!(Sub, sub);
forward_owned!(Mul, mul);

/// Entry-wise reduction of a matrix modulo `p^level`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct ResidueMatrix {
    pub p: u64,
    pub level: u32,
    pub n: usize,
    pub entries: Vec<BigUint>,
}

impl ResidueMatrix {
    pub fn identity(p: u64, level: u32, n: usize) -> Self {
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigUint::one();
        }
        ResidueMatrix {
            p,
            level,
            n,
            entries,
        }
    }

    pub fn is_identity(&self) -> bool {
        (0..self.n).all(|i| {
            (0..self.n).all(|j| {
                let e = &self.entries[i * self.n + j];
                if i == j {
                    e.is_one()
                } else {
                    e.is_zero()
                }
            })
        })
    }

    pub fn mul(&self, other: &ResidueMatrix) -> ResidueMatrix {
        assert_eq!((self.p, self.level, self.n), (other.p, other.level, other.n));
        let n = self.n;
        let q = modulus(self.p, self.level);
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigUint::zero();
                for k in 0..n {
                    acc += &self.entries[i * n + k] * &other.entries[k * n + j];
                }
                entries[i * n + j] = acc % &q;
            }
        }
        ResidueMatrix {
            p: self.p,
            level: self.level,
            n,
            entries,
        }
    }

    /// Entries as machine integers; `None` if any does not fit.
    pub fn to_u64s(&self) -> Option<Vec<u64>> {
        self.entries.iter().map(|e| e.to_u64()).collect()
    }
}

/// Square matrix over `Z/p^K`, all entries sharing `p` and `K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct PMatrix {
    p: u64,
    prec: u32,
    n: usize,
    entries: Vec<BigUint>,
}

impl PMatrix {
    pub fn new(p: u64, prec: u32, n: usize, entries: &[BigInt]) -> Self {
        assert_eq!(entries.len(), n * n, "expected {} entries", n * n);
        assert!(prec >= 1, "precision must be positive");
        let q = modulus(p, prec);
        PMatrix {
            p,
            prec,
            n,
            entries: entries.iter().map(|e| reduce_signed(e, &q)).collect(),
        }
    }

    pub fn from_i64(p: u64, prec: u32, n: usize, entries: &[i64]) -> Self {
        let big: Vec<BigInt> = entries.iter().map(|&e| BigInt::from(e)).collect();
        Self::new(p, prec, n, &big)
    }

    pub fn from_residues(p: u64, prec: u32, n: usize, entries: Vec<BigUint>) -> Self {
        assert_eq!(entries.len(), n * n);
        let q = modulus(p, prec);
        PMatrix {
            p,
            prec,
            n,
            entries: entries.into_iter().map(|e| e % &q).collect(),
        }
    }

    pub fn identity(p: u64, prec: u32, n: usize) -> Self {
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = BigUint::one();
        }
        Self::from_residues(p, prec, n, entries)
    }

    /// `I + c·E_ij`.
    pub fn elementary(p: u64, prec: u32, n: usize, i: usize, j: usize, c: &BigInt) -> Self {
        assert!(i != j && i < n && j < n);
        let mut m = Self::identity(p, prec, n);
        m.entries[i * n + j] = reduce_signed(c, &modulus(p, prec));
        m
    }

    pub fn diagonal(diag: &[Padic]) -> Self {
        let n = diag.len();
        let p = diag[0].prime();
        let prec = diag.iter().map(Padic::precision).min().unwrap();
        let mut entries = vec![BigUint::zero(); n * n];
        for (i, d) in diag.iter().enumerate() {
            entries[i * n + i] = d.residue().clone();
        }
        Self::from_residues(p, prec, n, entries)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn residue(&self, i: usize, j: usize) -> &BigUint {
        &self.entries[i * self.n + j]
    }

    pub fn residues(&self) -> &[BigUint] {
        &self.entries
    }

    pub fn get(&self, i: usize, j: usize) -> Padic {
        Padic::from_residue(self.p, self.prec, self.entries[i * self.n + j].clone())
    }

    pub fn set(&mut self, i: usize, j: usize, x: &Padic) {
        assert_eq!(x.prime(), self.p);
        let prec = self.prec.min(x.precision());
        if prec < self.prec {
            *self = self.truncate(prec);
        }
        self.entries[i * self.n + j] = x.residue() % modulus(self.p, prec);
    }

    pub fn truncate(&self, prec: u32) -> Self {
        assert!(prec <= self.prec, "cannot raise certified precision");
        Self::from_residues(self.p, prec, self.n, self.entries.clone())
    }

    pub fn mul(&self, other: &PMatrix) -> PMatrix {
        assert_eq!(self.p, other.p, "mixed primes");
        assert_eq!(self.n, other.n, "dimension mismatch");
        let n = self.n;
        let prec = self.prec.min(other.prec);
        let q = modulus(self.p, prec);
        let mut entries = vec![BigUint::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let mut acc = BigUint::zero();
                for k in 0..n {
                    acc += &self.entries[i * n + k] * &other.entries[k * n + j];
                }
                entries[i * n + j] = acc % &q;
            }
        }
        PMatrix {
            p: self.p,
            prec,
            n,
            entries,
        }
    }

    /// Determinant modulo `p^K` by elimination, pivoting on the entry of
    /// least valuation in each column.
    pub fn det(&self) -> Padic {
        let n = self.n;
        let q = modulus(self.p, self.prec);
        let mut a = self.entries.clone();
        let mut det = Padic::one(self.p, self.prec);
        let mut negate = false;
        for c in 0..n {
            let best = (c..n)
                .filter_map(|r| valuation_of_residue(&a[r * n + c], self.p, self.prec).map(|v| (v, r)))
                .min();
            let Some((v, r)) = best else {
                return Padic::zero(self.p, self.prec);
            };
            if r != c {
                for k in 0..n {
                    a.swap(r * n + k, c * n + k);
                }
                negate = !negate;
            }
            let pivot = a[c * n + c].clone();
            det = &det * &Padic::from_residue(self.p, self.prec, pivot.clone());
            let pv = modulus(self.p, v);
            let uinv = inverse_mod(&(&pivot / &pv), &q).expect("unit part is invertible");
            for r2 in c + 1..n {
                if a[r2 * n + c].is_zero() {
                    continue;
                }
                let factor = (&a[r2 * n + c] / &pv) * &uinv % &q;
                for k in c..n {
                    let sub = &factor * &a[c * n + k] % &q;
                    a[r2 * n + k] = (&a[r2 * n + k] + &q - sub) % &q;
                }
            }
        }
        if negate {
            -&det
        } else {
            det
        }
    }

    /// Inverse over `Z/p^K`; requires a unit determinant.
    pub fn inverse(&self) -> Result<PMatrix> {
        let n = self.n;
        let q = modulus(self.p, self.prec);
        let mut a = self.entries.clone();
        let mut inv = Self::identity(self.p, self.prec, n).entries;
        for c in 0..n {
            let r = (c..n)
                .find(|&r| !(&a[r * n + c] % self.p).is_zero())
                .ok_or(Error::SingularMatrix)?;
            if r != c {
                for k in 0..n {
                    a.swap(r * n + k, c * n + k);
                    inv.swap(r * n + k, c * n + k);
                }
            }
            let pinv = inverse_mod(&a[c * n + c], &q).ok_or(Error::SingularMatrix)?;
            for k in 0..n {
                a[c * n + k] = &a[c * n + k] * &pinv % &q;
                inv[c * n + k] = &inv[c * n + k] * &pinv % &q;
            }
            for r2 in 0..n {
                if r2 == c || a[r2 * n + c].is_zero() {
                    continue;
                }
                let factor = a[r2 * n + c].clone();
                for k in 0..n {
                    let s1 = &factor * &a[c * n + k] % &q;
                    a[r2 * n + k] = (&a[r2 * n + k] + &q - s1) % &q;
                    let s2 = &factor * &inv[c * n + k] % &q;
                    inv[r2 * n + k] = (&inv[r2 * n + k] + &q - s2) % &q;
                }
            }
        }
        Ok(PMatrix {
            p: self.p,
            prec: self.prec,
            n,
            entries: inv,
        })
    }

    /// Entry-wise residues modulo `p^m`.
    pub fn reduce(&self, m: u32) -> Result<ResidueMatrix> {
        if m > self.prec {
            return Err(Error::InsufficientPrecision {
                needed: m,
                available: self.prec,
            });
        }
        let q = modulus(self.p, m);
        Ok(ResidueMatrix {
            p: self.p,
            level: m,
            n: self.n,
            entries: self.entries.iter().map(|e| e % &q).collect(),
        })
    }

    pub fn is_identity(&self) -> bool {
        self.reduce(self.prec).map(|r| r.is_identity()).unwrap_or(false)
    }

    /// Least valuation among the entries of `M - I`; `None` if `M ≡ I`.
    pub fn identity_distance(&self) -> Option<u32> {
        let n = self.n;
        let one = Padic::one(self.p, self.prec);
        let mut best: Option<u32> = None;
        for i in 0..n {
            for j in 0..n {
                let mut x = self.get(i, j);
                if i == j {
                    x = &x - &one;
                }
                if let Some(v) = x.valuation() {
                    best = Some(best.map_or(v, |b| b.min(v)));
                }
            }
        }
        best
    }

    /// Row-major signed representatives.
    pub fn to_signed(&self) -> Vec<BigInt> {
        (0..self.n * self.n)
            .map(|k| self.get(k / self.n, k % self.n).to_signed())
            .collect()
    }
}

impl fmt::Display for PMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, ", ")?;
                }
                write!(f, "{}", self.entries[i * self.n + j])?;
            }
        }
        write!(f, "] mod {}^{}", self.p, self.prec)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_bigint::BigInt;

    fn q(p: u64, k: u32, v: i64) -> Padic {
        Padic::new(p, k, v)
    }

    #[test]
    fn valuation_examples() {
        let r = |a: i64, b: i64| BigRational::new(BigInt::from(a), BigInt::from(b));
        assert_eq!(val_p(&r(12, 1), 2).unwrap(), 2);
        assert_eq!(val_p(&r(1, 9), 3).unwrap(), -2);
        assert_eq!(val_p(&r(5, 1), 3).unwrap(), 0);
        assert_eq!(val_p(&r(0, 1), 3), Err(Error::ZeroValuation));
    }

    #[test]
    fn unit_inverse_examples() {
        assert_eq!(q(2, 4, 3).unit_inverse().unwrap().residue(), &BigUint::from(11u32));
        assert_eq!(q(3, 2, 1).unit_inverse().unwrap().residue(), &BigUint::from(1u32));
        // residue scan mod 125 for the inverse of 7
        let scanned = (0..125u32).find(|y| (7 * y) % 125 == 1).unwrap();
        assert_eq!(scanned, 18);
        assert_eq!(q(5, 3, 7).unit_inverse().unwrap().residue(), &BigUint::from(scanned));
        assert_eq!(q(5, 3, 10).unit_inverse(), Err(Error::NotInvertible));
    }

    #[test]
    fn mixed_precision_truncates() {
        let x = q(3, 5, 100);
        let y = q(3, 2, 4);
        let s = &x + &y;
        assert_eq!(s.precision(), 2);
        assert_eq!(s.residue(), &BigUint::from(104u32 % 9));
    }

    #[test]
    fn det_examples() {
        assert!(PMatrix::identity(2, 8, 3).det().is_one());
        let d = PMatrix::from_i64(2, 3, 2, &[3, 0, 0, 1]).det();
        assert_eq!(d.residue(), &BigUint::from(3u32));
        let d = PMatrix::from_i64(5, 6, 2, &[0, 1, -1, 0]).det();
        assert!(d.is_one());
        // non-unit pivots
        let d = PMatrix::from_i64(2, 10, 2, &[2, 4, 6, 8]).det();
        assert_eq!(d, Padic::new(2, 10, 2 * 8 - 4 * 6));
        let d = PMatrix::from_i64(3, 5, 3, &[3, 1, 0, 9, 2, 1, 0, 6, 3]).det();
        assert_eq!(d, Padic::new(3, 5, -27));
    }

    #[test]
    fn inverse_examples() {
        let id = PMatrix::identity(3, 5, 2);
        assert_eq!(id.inverse().unwrap(), id);
        let u = PMatrix::from_i64(7, 4, 2, &[1, 1, 0, 1]);
        assert_eq!(u.inverse().unwrap(), PMatrix::from_i64(7, 4, 2, &[1, -1, 0, 1]));
        let sing = PMatrix::from_i64(3, 4, 2, &[3, 0, 0, 1]);
        assert_eq!(sing.inverse(), Err(Error::SingularMatrix));
    }

    #[test]
    fn reduce_examples() {
        let m = PMatrix::from_i64(2, 6, 2, &[1 + 4 * 3, 4 * 5, 4 * 7, 1 + 4 * 2]);
        assert!(m.reduce(2).unwrap().is_identity());
        assert!(!m.reduce(3).unwrap().is_identity());
        let r = PMatrix::from_i64(3, 4, 2, &[4, 5, 7, 8]).reduce(1).unwrap();
        assert_eq!(r.to_u64s().unwrap(), vec![1, 2, 1, 2]);
        assert_eq!(
            m.reduce(7),
            Err(Error::InsufficientPrecision {
                needed: 7,
                available: 6
            })
        );
    }

    #[test]
    fn primes() {
        assert!(is_prime(2) && is_prime(3) && is_prime(101));
        assert!(!is_prime(1) && !is_prime(9) && !is_prime(0));
    }
}
