//! `SL(n, Z_p)`, principal congruence subgroups `Γ(p^m)` and the coset
//! transversal of `Γ(p^m)` that serves as the tree alphabet.

use std::collections::HashMap;
use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::padic::{check_prime, PMatrix, Padic, ResidueMatrix};

/// Default bound on the number of cosets a transversal may hold.
pub const DEFAULT_TRANSVERSAL_CAP: usize = 1_000_000;

/// Full matrix-space size (`p^{m n²}`) up to which `SL(n, Z/p^m)` is
/// enumerated by filtering every matrix; beyond it, by lifting fibers.
pub const FILTER_LIMIT: u64 = 1 << 16;

/// An element of `SL(n, Z_p)` known modulo `p^K`.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupElement(PMatrix);

impl GroupElement {
    pub fn new(matrix: PMatrix) -> Result<Self> {
        if !matrix.det().is_one() {
            return Err(Error::NotSpecialLinear(matrix.precision()));
        }
        Ok(GroupElement(matrix))
    }

    pub fn from_i64(p: u64, prec: u32, n: usize, entries: &[i64]) -> Result<Self> {
        Self::new(PMatrix::from_i64(p, prec, n, entries))
    }

    pub fn identity(p: u64, prec: u32, n: usize) -> Self {
        GroupElement(PMatrix::identity(p, prec, n))
    }

    /// `I + c·E_ij`, `i ≠ j`.
    pub fn elementary(p: u64, prec: u32, n: usize, i: usize, j: usize, c: &BigInt) -> Self {
        GroupElement(PMatrix::elementary(p, prec, n, i, j, c))
    }

    /// `diag(1, …, u, …, u⁻¹, …, 1)` with `u` at `i` and its inverse at `j`.
    pub fn diagonal_pair(u: &Padic, n: usize, i: usize, j: usize) -> Result<Self> {
        assert!(i != j);
        let inv = u.unit_inverse()?;
        let one = Padic::one(u.prime(), u.precision());
        let diag: Vec<Padic> = (0..n)
            .map(|k| {
                if k == i {
                    u.clone()
                } else if k == j {
                    inv.clone()
                } else {
                    one.clone()
                }
            })
            .collect();
        Ok(GroupElement(PMatrix::diagonal(&diag)))
    }

    /// Wraps a matrix already known to have determinant one.
    pub(crate) fn from_matrix_unchecked(m: PMatrix) -> Self {
        debug_assert!(m.det().is_one());
        GroupElement(m)
    }

    pub fn matrix(&self) -> &PMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> PMatrix {
        self.0
    }

    pub fn prime(&self) -> u64 {
        self.0.prime()
    }

    pub fn precision(&self) -> u32 {
        self.0.precision()
    }

    pub fn dim(&self) -> usize {
        self.0.dim()
    }

    pub fn mul(&self, other: &GroupElement) -> GroupElement {
        GroupElement(self.0.mul(&other.0))
    }

    pub fn inverse(&self) -> GroupElement {
        GroupElement(self.0.inverse().expect("determinant-one matrix is invertible"))
    }

    pub fn conjugate_by(&self, h: &GroupElement) -> GroupElement {
        h.mul(self).mul(&h.inverse())
    }

    pub fn reduce(&self, m: u32) -> Result<ResidueMatrix> {
        self.0.reduce(m)
    }

    pub fn truncate(&self, prec: u32) -> GroupElement {
        GroupElement(self.0.truncate(prec))
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_identity()
    }

    /// Equality after truncating both sides to the common precision.
    pub fn agrees_with(&self, other: &GroupElement) -> bool {
        let k = self.precision().min(other.precision());
        self.0.reduce(k) == other.0.reduce(k)
    }
}

impl fmt::Display for GroupElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Level `m` of `Γ(p^m)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct CongruenceLevel(u32);

impl CongruenceLevel {
    pub fn new(m: u32) -> Result<Self> {
        if m == 0 {
            return Err(Error::Precondition("congruence level must be positive".into()));
        }
        Ok(CongruenceLevel(m))
    }

    pub fn get(self) -> u32 {
        self.0
    }
}

/// `|SL(n, Z/p^m)| = p^{(m-1)(n²-1)} · p^{n(n-1)/2} · ∏_{i=2..n} (p^i - 1)`.
pub fn group_order(n: usize, p: u64, m: u32) -> BigUint {
    assert!(n >= 2 && m >= 1);
    let pb = BigUint::from(p);
    let n32 = n as u32;
    let mut order = pb.pow((m - 1) * (n32 * n32 - 1)) * pb.pow(n32 * (n32 - 1) / 2);
    for i in 2..=n32 {
        order *= pb.pow(i) - BigUint::one();
    }
    order
}

/// `true` iff `g ≡ I (mod p^m)`.
pub fn is_congruence_member(g: &GroupElement, m: u32) -> Result<bool> {
    Ok(g.reduce(m)?.is_identity())
}

/// Membership in the standard Iwahori subgroup: strictly lower-triangular
/// entries vanish mod `p`.
pub fn iwahori_member(g: &GroupElement) -> bool {
    let n = g.dim();
    let p = g.prime();
    (0..n).all(|i| (0..i).all(|j| (g.matrix().residue(i, j) % p).is_zero()))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EnumerationStrategy {
    Auto,
    Filter,
    FiberLift,
}

fn det_i128(entries: &[i128], n: usize) -> i128 {
    // Bareiss fraction-free elimination; all divisions are exact.
    let mut a = entries.to_vec();
    let mut sign = 1i128;
    let mut prev = 1i128;
    for k in 0..n {
        if a[k * n + k] == 0 {
            match (k + 1..n).find(|&r| a[r * n + k] != 0) {
                Some(r) => {
                    for c in 0..n {
                        a.swap(k * n + c, r * n + c);
                    }
                    sign = -sign;
                }
                None => return 0,
            }
        }
        for i in k + 1..n {
            for j in k + 1..n {
                a[i * n + j] = (a[i * n + j] * a[k * n + k] - a[i * n + k] * a[k * n + j]) / prev;
            }
        }
        prev = a[k * n + k];
    }
    sign * a[n * n - 1]
}

fn det_is_one_mod(entries: &[u64], n: usize, q: u64) -> bool {
    let wide: Vec<i128> = entries.iter().map(|&e| e as i128).collect();
    det_i128(&wide, n).rem_euclid(q as i128) == 1
}

fn small_modulus(p: u64, m: u32) -> Result<u64> {
    p.checked_pow(m)
        .ok_or_else(|| Error::CapExceeded(format!("{p}^{m} does not fit a machine word")))
}

/// All of `SL(n, Z/p^m)` as row-major residue tuples in `[0, p^m)`, sorted
/// lexicographically.
pub fn enumerate_sl(
    n: usize,
    p: u64,
    m: u32,
    strategy: EnumerationStrategy,
    cap: usize,
) -> Result<Vec<Vec<u64>>> {
    check_prime(p)?;
    if n < 2 || m == 0 {
        return Err(Error::Precondition("need n >= 2 and m >= 1".into()));
    }
    let order = group_order(n, p, m);
    if order > BigUint::from(cap) {
        return Err(Error::TransversalTooLarge {
            size: order.to_string(),
            cap,
        });
    }
    let q = small_modulus(p, m)?;
    let strategy = match strategy {
        EnumerationStrategy::Auto => {
            let space = q.checked_pow((n * n) as u32);
            if space.is_some_and(|s| s <= FILTER_LIMIT) {
                EnumerationStrategy::Filter
            } else {
                EnumerationStrategy::FiberLift
            }
        }
        s => s,
    };
    let mut out = match strategy {
        EnumerationStrategy::Filter => filter_all(n, q),
        _ => fiber_lift(n, p, m)?,
    };
    out.sort_unstable();
    debug_assert_eq!(BigUint::from(out.len()), order);
    Ok(out)
}

fn filter_all(n: usize, q: u64) -> Vec<Vec<u64>> {
    let len = n * n;
    let mut cur = vec![0u64; len];
    let mut out = Vec::new();
    loop {
        if det_is_one_mod(&cur, n, q) {
            out.push(cur.clone());
        }
        // odometer increment, last entry fastest
        let mut k = len;
        loop {
            if k == 0 {
                return out;
            }
            k -= 1;
            cur[k] += 1;
            if cur[k] < q {
                break;
            }
            cur[k] = 0;
        }
    }
}

fn fiber_lift(n: usize, p: u64, m: u32) -> Result<Vec<Vec<u64>>> {
    let mut level = filter_all(n, p);
    let len = n * n;
    let digits = small_modulus(p, len as u32)?;
    for k in 1..m {
        let pk = small_modulus(p, k)?;
        let next_q = small_modulus(p, k + 1)?;
        let mut next = Vec::with_capacity(level.len() * (p as usize).pow((n * n - 1) as u32));
        for base in &level {
            for code in 0..digits {
                let mut c = code;
                let mut lifted = base.clone();
                for e in lifted.iter_mut() {
                    *e += pk * (c % p);
                    c /= p;
                }
                if det_is_one_mod(&lifted, n, next_q) {
                    next.push(lifted);
                }
            }
        }
        level = next;
    }
    Ok(level)
}

/// Coset representatives `h_0 = e, h_1, …, h_{d-1}` of `Γ(p^m)` in
/// `SL(n, Z_p)`, with lookup by reduction mod `p^m`.
#[derive(Clone, Debug)]
pub struct Transversal {
    n: usize,
    p: u64,
    m: u32,
    prec: u32,
    reps: Vec<GroupElement>,
    inverses: Vec<GroupElement>,
    index: HashMap<ResidueMatrix, usize>,
}

#[derive(Clone, Debug, Serialize, Deserialize, PartialEq)]
pub struct TransversalExport {
    pub n: usize,
    pub p: u64,
    pub m: u32,
    pub precision: u32,
    pub d: usize,
    pub reps: Vec<Vec<serde_json::Value>>,
}

fn residue_json(x: &BigUint) -> serde_json::Value {
    match x.to_u64() {
        Some(v) => serde_json::Value::from(v),
        None => serde_json::Value::from(x.to_string()),
    }
}

fn residue_from_json(v: &serde_json::Value) -> Result<BigInt> {
    match v {
        serde_json::Value::Number(num) => num
            .as_u64()
            .map(BigInt::from)
            .ok_or_else(|| Error::Parse(format!("bad residue {num}"))),
        serde_json::Value::String(s) => s
            .parse::<BigInt>()
            .map_err(|e| Error::Parse(format!("bad residue {s}: {e}"))),
        other => Err(Error::Parse(format!("bad residue {other}"))),
    }
}

impl Transversal {
    pub fn enumerate(n: usize, p: u64, m: u32, prec: u32) -> Result<Self> {
        Self::enumerate_with_cap(n, p, m, prec, DEFAULT_TRANSVERSAL_CAP)
    }

    pub fn enumerate_with_cap(n: usize, p: u64, m: u32, prec: u32, cap: usize) -> Result<Self> {
        if prec < m {
            return Err(Error::InsufficientPrecision {
                needed: m,
                available: prec,
            });
        }
        let residues = enumerate_sl(n, p, m, EnumerationStrategy::Auto, cap)?;
        let mut reps = Vec::with_capacity(residues.len());
        let mut id_pos = None;
        for (pos, tuple) in residues.iter().enumerate() {
            let is_id = (0..n * n).all(|k| tuple[k] == u64::from(k % (n + 1) == 0));
            if is_id {
                id_pos = Some(pos);
            }
            reps.push(lift_with_unit_determinant(n, p, prec, tuple)?);
        }
        let id_pos = id_pos.ok_or(Error::TransversalIncomplete)?;
        let id = reps.remove(id_pos);
        reps.insert(0, id);
        Self::from_reps(n, p, m, prec, reps)
    }

    fn from_reps(n: usize, p: u64, m: u32, prec: u32, reps: Vec<GroupElement>) -> Result<Self> {
        let mut index = HashMap::with_capacity(reps.len());
        for (i, h) in reps.iter().enumerate() {
            if index.insert(h.reduce(m)?, i).is_some() {
                return Err(Error::Precondition("duplicate coset representative".into()));
            }
        }
        let inverses = reps.iter().map(GroupElement::inverse).collect();
        Ok(Transversal {
            n,
            p,
            m,
            prec,
            reps,
            inverses,
            index,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    pub fn precision(&self) -> u32 {
        self.prec
    }

    /// Number of cosets `d`.
    pub fn len(&self) -> usize {
        self.reps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.reps.is_empty()
    }

    pub fn rep(&self, i: usize) -> &GroupElement {
        &self.reps[i]
    }

    pub fn rep_inverse(&self, i: usize) -> &GroupElement {
        &self.inverses[i]
    }

    pub fn reps(&self) -> &[GroupElement] {
        &self.reps
    }

    /// The unique `j` with `h_j⁻¹ g ∈ Γ(p^m)`.
    pub fn coset_lookup(&self, g: &GroupElement) -> Result<usize> {
        if g.dim() != self.n || g.prime() != self.p {
            return Err(Error::Mismatch(format!(
                "element is {}x{} over p={}, transversal is {}x{} over p={}",
                g.dim(),
                g.dim(),
                g.prime(),
                self.n,
                self.n,
                self.p
            )));
        }
        let key = g.reduce(self.m)?;
        self.index.get(&key).copied().ok_or(Error::TransversalIncomplete)
    }

    pub fn to_export(&self) -> TransversalExport {
        TransversalExport {
            n: self.n,
            p: self.p,
            m: self.m,
            precision: self.prec,
            d: self.len(),
            reps: self
                .reps
                .iter()
                .map(|h| h.matrix().residues().iter().map(residue_json).collect())
                .collect(),
        }
    }

    pub fn from_export(e: &TransversalExport) -> Result<Self> {
        check_prime(e.p)?;
        let mut reps = Vec::with_capacity(e.reps.len());
        for row in &e.reps {
            let entries = row.iter().map(residue_from_json).collect::<Result<Vec<_>>>()?;
            if entries.len() != e.n * e.n {
                return Err(Error::Parse("representative has wrong entry count".into()));
            }
            reps.push(GroupElement::new(PMatrix::new(e.p, e.precision, e.n, &entries))?);
        }
        if reps.len() != e.d || BigUint::from(e.d) != group_order(e.n, e.p, e.m) {
            return Err(Error::Parse("coset count does not match |SL(n, Z/p^m)|".into()));
        }
        if !reps.first().is_some_and(|h| h.is_identity()) {
            return Err(Error::Parse("letter 0 must be the identity".into()));
        }
        Self::from_reps(e.n, e.p, e.m, e.precision, reps)
    }
}

/// Lifts residues mod `p^m` to precision `K` and rescales the first row by
/// the inverse determinant, which is `≡ 1 (mod p^m)`.
fn lift_with_unit_determinant(n: usize, p: u64, prec: u32, tuple: &[u64]) -> Result<GroupElement> {
    let entries: Vec<BigInt> = tuple.iter().map(|&e| BigInt::from(e)).collect();
    let mut m = PMatrix::new(p, prec, n, &entries);
    let u = m.det();
    if !u.is_one() {
        let uinv = u.unit_inverse()?;
        for j in 0..n {
            let x = &m.get(0, j) * &uinv;
            m.set(0, j, &x);
        }
    }
    GroupElement::new(m)
}
