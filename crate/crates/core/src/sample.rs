//! Random group elements built as words in elementary matrices, diagonal
//! units and transversal representatives. Every product stays exactly inside
//! the group, so no Haar-measure simulation is involved.

use num_bigint::BigInt;
use rand::Rng;

use crate::congruence::{GroupElement, Transversal};
use crate::padic::{modulus, Padic};

fn random_residue<R: Rng + ?Sized>(rng: &mut R, p: u64, digits: u32) -> BigInt {
    let mut acc = BigInt::from(0);
    for _ in 0..digits {
        acc = acc * p + rng.gen_range(0..p);
    }
    acc
}

fn random_pair<R: Rng + ?Sized>(rng: &mut R, n: usize) -> (usize, usize) {
    let i = rng.gen_range(0..n);
    let mut j = rng.gen_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// `I + p^a·c·E_ij` with `a ≥ level` and random `c`.
pub fn random_elementary<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: u64,
    prec: u32,
    level: u32,
) -> GroupElement {
    let (i, j) = random_pair(rng, n);
    let a = level + rng.gen_range(0..3);
    let c = random_residue(rng, p, prec) * BigInt::from(modulus(p, a));
    GroupElement::elementary(p, prec, n, i, j, &c)
}

/// `diag(…, u, …, u⁻¹, …)` with `u ≡ 1 (mod p^level)`.
pub fn random_diagonal<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: u64,
    prec: u32,
    level: u32,
) -> GroupElement {
    let (i, j) = random_pair(rng, n);
    let mut c = random_residue(rng, p, prec) * BigInt::from(modulus(p, level));
    if level == 0 && (&c % p) == BigInt::from(0) {
        c += 1;
    }
    let u = if level == 0 {
        Padic::new(p, prec, c)
    } else {
        Padic::new(p, prec, c + 1)
    };
    GroupElement::diagonal_pair(&u, n, i, j).expect("unit by construction")
}

/// A random word of the given length in elementary matrices, diagonal units
/// and (when supplied) transversal representatives.
pub fn random_sl<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: u64,
    prec: u32,
    len: usize,
    transversal: Option<&Transversal>,
) -> GroupElement {
    let mut g = GroupElement::identity(p, prec, n);
    for _ in 0..len {
        let choice = rng.gen_range(0..if transversal.is_some() { 3 } else { 2 });
        let step = match (choice, transversal) {
            (0, _) => random_elementary(rng, n, p, prec, 0),
            (1, _) => random_diagonal(rng, n, p, prec, 0),
            (_, Some(t)) => t.rep(rng.gen_range(0..t.len())).clone(),
            _ => unreachable!(),
        };
        g = g.mul(&step);
    }
    g.truncate(prec.min(g.precision()))
}

/// A random element of `Γ(p^level)`: a word in level-`level` elementary and
/// diagonal generators, conjugated by a random element of `SL(n, Z_p)`.
pub fn random_congruence<R: Rng + ?Sized>(
    rng: &mut R,
    n: usize,
    p: u64,
    prec: u32,
    level: u32,
    len: usize,
) -> GroupElement {
    let mut g = GroupElement::identity(p, prec, n);
    for _ in 0..len.max(1) {
        let step = if rng.gen_bool(0.7) {
            random_elementary(rng, n, p, prec, level)
        } else {
            random_diagonal(rng, n, p, prec, level)
        };
        g = g.mul(&step);
    }
    let h = random_sl(rng, n, p, prec, 3, None);
    g.conjugate_by(&h)
}
