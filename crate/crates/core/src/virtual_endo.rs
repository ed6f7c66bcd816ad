//! Conjugation by `s = diag(p^{v_1}, …, p^{v_n})` as a virtual endomorphism
//! `Γ(p^m) → SL(n, Z_p)`, and sampling-based searches for invariant or
//! normal subgroups.
//!
//! `s` is never materialized: `(s g s⁻¹)_{ij} = p^{v_i - v_j} g_{ij}`, which is
//! an exact p-power rescaling of each entry. On `Γ(p^m)` with `m` equal to the
//! largest gap `T = max v - min v`, every negative rescaling divides an entry
//! that is already `≡ 0 (mod p^m)`, so the image is integral. The price is
//! `T` digits of certified precision per application.

use std::collections::{HashSet, VecDeque};

use num_bigint::{BigInt, BigUint};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::congruence::{group_order, is_congruence_member, GroupElement};
use crate::error::{Error, Result};
use crate::padic::{check_prime, modulus, PMatrix, Padic, ResidueMatrix};
use crate::sample::{random_congruence, random_diagonal};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct VirtualEndo {
    p: u64,
    vals: Vec<i64>,
    level: u32,
    gap: u32,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EndoSpec {
    pub p: u64,
    pub vals: Vec<i64>,
    pub level: u32,
    pub gap: u32,
}

impl VirtualEndo {
    pub fn new(p: u64, vals: &[i64]) -> Result<Self> {
        check_prime(p)?;
        if vals.len() < 2 {
            return Err(Error::Precondition("need at least two valuations".into()));
        }
        let sum: i64 = vals.iter().sum();
        if sum != 0 {
            return Err(Error::NotDeterminantOne(sum));
        }
        let distinct: HashSet<_> = vals.iter().collect();
        if distinct.len() != vals.len() {
            return Err(Error::DegenerateConjugator);
        }
        let gap = (vals.iter().max().unwrap() - vals.iter().min().unwrap()) as u32;
        Ok(VirtualEndo {
            p,
            vals: vals.to_vec(),
            level: gap,
            gap,
        })
    }

    pub fn from_spec(spec: &EndoSpec) -> Result<Self> {
        let e = Self::new(spec.p, &spec.vals)?;
        if e.level != spec.level || e.gap != spec.gap {
            return Err(Error::Parse(format!(
                "level/gap must both equal {} for valuations {:?}",
                e.gap, spec.vals
            )));
        }
        Ok(e)
    }

    pub fn to_spec(&self) -> EndoSpec {
        EndoSpec {
            p: self.p,
            vals: self.vals.clone(),
            level: self.level,
            gap: self.gap,
        }
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.vals.len()
    }

    pub fn vals(&self) -> &[i64] {
        &self.vals
    }

    /// Level `m` of the domain `H_0 = Γ(p^m)`.
    pub fn level(&self) -> u32 {
        self.level
    }

    /// Precision lost per application.
    pub fn gap(&self) -> u32 {
        self.gap
    }

    /// Position `(i, j)` whose entry is divided by the full `p^T`.
    pub fn contracted_position(&self) -> (usize, usize) {
        let i = (0..self.dim()).min_by_key(|&k| self.vals[k]).unwrap();
        let j = (0..self.dim()).max_by_key(|&k| self.vals[k]).unwrap();
        (i, j)
    }

    /// `s g s⁻¹` for `g ∈ Γ(p^m)`, certified to `K - T` digits.
    pub fn apply(&self, g: &GroupElement) -> Result<GroupElement> {
        let n = self.dim();
        if g.dim() != n || g.prime() != self.p {
            return Err(Error::Mismatch(format!(
                "endomorphism acts on {}x{} over p={}",
                n, n, self.p
            )));
        }
        let k = g.precision();
        if k < self.level + self.gap {
            return Err(Error::PrecisionExhausted {
                depth: 1,
                required: self.level + self.gap,
                available: k,
            });
        }
        if !is_congruence_member(g, self.level)? {
            return Err(Error::OutsideDomain(self.level));
        }
        let out_prec = k - self.gap;
        let q = modulus(self.p, out_prec);
        let mut entries = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                let e = self.vals[i] - self.vals[j];
                let x = g.matrix().residue(i, j);
                let y: BigUint = if e >= 0 {
                    x * modulus(self.p, e as u32)
                } else {
                    let d = modulus(self.p, (-e) as u32);
                    debug_assert!((x % &d) == BigUint::from(0u32));
                    x / d
                };
                entries.push(y % &q);
            }
        }
        Ok(GroupElement::from_matrix_unchecked(PMatrix::from_residues(
            self.p, out_prec, n, entries,
        )))
    }

    /// `φ^t(g)`, requiring every intermediate to stay in the domain.
    pub fn iterate(&self, g: &GroupElement, t: usize) -> Result<GroupElement> {
        let mut x = g.clone();
        for _ in 0..t {
            x = self.apply(&x)?;
        }
        Ok(x)
    }
}

/// A subgroup of `SL(n, Z_p)` with a membership test decidable at finite
/// precision.
#[derive(Clone, Debug)]
pub enum SubgroupSpec {
    /// `Γ(p^k)`.
    Congruence(u32),
    /// Scalar matrices `ζ·I` with `ζ^n = 1`.
    Center,
    /// Diagonal matrices in `Γ(p^k)`.
    DiagonalTorus(u32),
    /// Preimage of the subgroup generated by the given elements mod `p^r`.
    Generated(GeneratedSubgroup),
}

#[derive(Clone, Debug)]
pub struct GeneratedSubgroup {
    gens: Vec<GroupElement>,
    level: u32,
    closure: HashSet<ResidueMatrix>,
}

impl GeneratedSubgroup {
    /// Enumerates `⟨gens mod p^level⟩` by breadth-first closure, refusing to
    /// exceed `cap` elements.
    pub fn new(gens: Vec<GroupElement>, level: u32, cap: usize) -> Result<Self> {
        let first = gens
            .first()
            .ok_or_else(|| Error::Precondition("need at least one generator".into()))?;
        let (p, n) = (first.prime(), first.dim());
        let reduced = gens
            .iter()
            .map(|g| g.reduce(level))
            .collect::<Result<Vec<_>>>()?;
        let id = ResidueMatrix::identity(p, level, n);
        let mut closure = HashSet::from([id.clone()]);
        let mut queue = VecDeque::from([id]);
        while let Some(x) = queue.pop_front() {
            for s in &reduced {
                let y = x.mul(s);
                if closure.insert(y.clone()) {
                    if closure.len() > cap {
                        return Err(Error::CapExceeded(format!(
                            "generated subgroup mod {p}^{level} exceeds {cap} elements"
                        )));
                    }
                    queue.push_back(y);
                }
            }
        }
        Ok(GeneratedSubgroup {
            gens,
            level,
            closure,
        })
    }

    pub fn order_mod_level(&self) -> usize {
        self.closure.len()
    }
}

impl SubgroupSpec {
    pub fn contains(&self, g: &GroupElement) -> Result<bool> {
        let n = g.dim();
        let m = g.matrix();
        match self {
            SubgroupSpec::Congruence(k) => is_congruence_member(g, *k),
            SubgroupSpec::Center => {
                let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j).is_zero()));
                let d = m.get(0, 0);
                let scalar = (1..n).all(|i| m.get(i, i) == d);
                Ok(off_zero && scalar && d.pow(n as u64).is_one())
            }
            SubgroupSpec::DiagonalTorus(k) => {
                let off_zero = (0..n).all(|i| (0..n).all(|j| i == j || m.get(i, j).is_zero()));
                Ok(off_zero && is_congruence_member(g, *k)?)
            }
            SubgroupSpec::Generated(h) => Ok(h.closure.contains(&g.reduce(h.level)?)),
        }
    }

    /// Deterministic generators of `N ∩ Γ(p^m)` followed by random members,
    /// `count` elements in total (fewer if the intersection is finite and
    /// small).
    pub fn samples<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        n: usize,
        p: u64,
        prec: u32,
        ambient_level: u32,
        count: usize,
    ) -> Result<Vec<GroupElement>> {
        let mut out = Vec::new();
        match self {
            SubgroupSpec::Congruence(k) => {
                let l = (*k).max(ambient_level);
                let c = BigInt::from(modulus(p, l));
                for i in 0..n {
                    for j in 0..n {
                        if i != j {
                            out.push(GroupElement::elementary(p, prec, n, i, j, &c));
                        }
                    }
                }
                let u = Padic::new(p, prec, c + 1);
                for i in 0..n - 1 {
                    out.push(GroupElement::diagonal_pair(&u, n, i, i + 1)?);
                }
                while out.len() < count {
                    out.push(random_congruence(rng, n, p, prec, l, 3));
                }
            }
            SubgroupSpec::Center => {
                out.push(GroupElement::identity(p, prec, n));
                if n.is_multiple_of(2) {
                    let neg: Vec<i64> = (0..n * n)
                        .map(|k| if k % (n + 1) == 0 { -1 } else { 0 })
                        .collect();
                    out.push(GroupElement::from_i64(p, prec, n, &neg)?);
                }
                let mut kept = Vec::new();
                for g in out {
                    if is_congruence_member(&g, ambient_level)? {
                        kept.push(g);
                    }
                }
                out = kept;
            }
            SubgroupSpec::DiagonalTorus(k) => {
                let l = (*k).max(ambient_level);
                let u = Padic::new(p, prec, BigInt::from(modulus(p, l)) + 1);
                for i in 0..n - 1 {
                    out.push(GroupElement::diagonal_pair(&u, n, i, i + 1)?);
                }
                while out.len() < count {
                    let mut g = GroupElement::identity(p, prec, n);
                    for _ in 0..3 {
                        g = g.mul(&random_diagonal(rng, n, p, prec, l));
                    }
                    out.push(g);
                }
            }
            SubgroupSpec::Generated(h) => {
                for g in &h.gens {
                    if is_congruence_member(g, ambient_level)? {
                        out.push(g.truncate(prec.min(g.precision())));
                    }
                }
                // raising to |SL(n, Z/p^m)| lands in Γ(p^m)
                let exponent = group_order(n, p, ambient_level);
                let mut tries = 0;
                while out.len() < count && tries < 4 * count {
                    tries += 1;
                    let mut w = GroupElement::identity(p, prec, n);
                    for _ in 0..rng.gen_range(1..5) {
                        let s = &h.gens[rng.gen_range(0..h.gens.len())];
                        w = if rng.gen_bool(0.5) { w.mul(s) } else { w.mul(&s.inverse()) };
                    }
                    let x = group_pow(&w, &exponent);
                    if !x.is_identity() {
                        out.push(x);
                    }
                }
            }
        }
        out.truncate(count.max(1));
        Ok(out)
    }
}

fn group_pow(g: &GroupElement, e: &BigUint) -> GroupElement {
    let mut acc = GroupElement::identity(g.prime(), g.precision(), g.dim());
    let mut base = g.clone();
    let bits = e.bits();
    for b in 0..bits {
        if e.bit(b) {
            acc = acc.mul(&base);
        }
        base = base.mul(&base);
    }
    acc
}

#[derive(Clone, Debug)]
pub enum InvarianceVerdict {
    /// No `g` in the sample had `φ(g) ∉ N`. Never a proof of invariance.
    InvariantOnSample { checked: usize },
    Witness {
        g: GroupElement,
        image: GroupElement,
        checked: usize,
    },
}

impl InvarianceVerdict {
    pub fn is_witness(&self) -> bool {
        matches!(self, InvarianceVerdict::Witness { .. })
    }
}

/// Searches `N ∩ Γ(p^m)` for an element whose image leaves `N`.
pub fn check_invariance<R: Rng + ?Sized>(
    endo: &VirtualEndo,
    subgroup: &SubgroupSpec,
    prec: u32,
    budget: usize,
    rng: &mut R,
) -> Result<InvarianceVerdict> {
    let samples = subgroup.samples(rng, endo.dim(), endo.prime(), prec, endo.level(), budget)?;
    let mut checked = 0;
    for g in samples.into_iter().take(budget) {
        checked += 1;
        let image = endo.apply(&g)?;
        if !subgroup.contains(&image)? {
            return Ok(InvarianceVerdict::Witness { g, image, checked });
        }
    }
    Ok(InvarianceVerdict::InvariantOnSample { checked })
}

#[derive(Clone, Debug)]
pub enum NormalityVerdict {
    NormalOnSample {
        checked: usize,
    },
    Witness {
        g: GroupElement,
        h: GroupElement,
        conjugate: GroupElement,
        checked: usize,
    },
}

impl NormalityVerdict {
    pub fn is_witness(&self) -> bool {
        matches!(self, NormalityVerdict::Witness { .. })
    }
}

/// Searches for `h ∈ Γ(p^m)` and `g ∈ N` with `h g h⁻¹ ∉ N`, trying unipotent
/// conjugators `I + p^m E_ij` first.
#[allow(clippy::too_many_arguments)]
pub fn normality_witness<R: Rng + ?Sized>(
    subgroup: &SubgroupSpec,
    n: usize,
    p: u64,
    prec: u32,
    ambient_level: u32,
    budget: usize,
    rng: &mut R,
) -> Result<NormalityVerdict> {
    let members = subgroup.samples(rng, n, p, prec, ambient_level, budget)?;
    if members.is_empty() {
        return Ok(NormalityVerdict::NormalOnSample { checked: 0 });
    }
    let c = BigInt::from(modulus(p, ambient_level));
    let mut conjugators = Vec::new();
    for i in 0..n {
        for j in 0..n {
            if i != j {
                conjugators.push(GroupElement::elementary(p, prec, n, i, j, &c));
            }
        }
    }
    let mut checked = 0;
    let mut idx = 0;
    while checked < budget {
        let h = if idx < conjugators.len() {
            conjugators[idx].clone()
        } else {
            random_congruence(rng, n, p, prec, ambient_level, 3)
        };
        let g = &members[idx % members.len()];
        idx += 1;
        checked += 1;
        let conjugate = g.conjugate_by(&h);
        if !subgroup.contains(&conjugate)? {
            return Ok(NormalityVerdict::Witness {
                g: g.clone(),
                h,
                conjugate,
                checked,
            });
        }
    }
    Ok(NormalityVerdict::NormalOnSample { checked })
}

/// `I + p^k E_ij`.
pub fn congruence_generator(p: u64, prec: u32, n: usize, i: usize, j: usize, k: u32) -> GroupElement {
    GroupElement::elementary(p, prec, n, i, j, &BigInt::from(modulus(p, k)))
}
