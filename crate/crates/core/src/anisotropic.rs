//! Quaternion division algebras over `Q_p`, the reduced norm and the
//! filtration of `SL(1, D)` by `w(x − 1)`, which every inner automorphism
//! preserves.

use std::collections::HashMap;
use std::fmt;

use num_bigint::BigInt;
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{check_prime, modulus, Padic};

/// `(a, b)_{Q_p}`: basis `1, i, j, k = ij` with `i² = a`, `j² = b`,
/// `ij = −ji`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub struct QuaternionAlgebra {
    pub p: u64,
    pub a: i64,
    pub b: i64,
}

impl QuaternionAlgebra {
    /// Fails unless `(a, b)` is a division algebra over `Q_p`.
    pub fn new(p: u64, a: i64, b: i64) -> Result<Self> {
        check_prime(p)?;
        if !is_division(a, b, p)? {
            return Err(Error::Precondition(format!("({a}, {b}) splits over Q_{p}")));
        }
        Ok(QuaternionAlgebra { p, a, b })
    }

    /// `(−1, −1)` over `Q_2`, and `(u, p)` with `u` the least quadratic
    /// non-residue otherwise.
    pub fn default_for(p: u64) -> Result<Self> {
        check_prime(p)?;
        if p == 2 {
            return Self::new(2, -1, -1);
        }
        let u = (2..p)
            .find(|&u| !(1..p).any(|x| x * x % p == u))
            .expect("odd primes have non-residues");
        Self::new(p, u as i64, p as i64)
    }

    pub fn element(&self, prec: u32, coords: [i64; 4]) -> Quaternion {
        Quaternion {
            alg: *self,
            x: coords.map(|c| Padic::new(self.p, prec, c)),
        }
    }

    pub fn from_padics(&self, x: [Padic; 4]) -> Result<Quaternion> {
        let prec = x.iter().map(Padic::precision).min().expect("four coordinates");
        if x.iter().any(|c| c.prime() != self.p) {
            return Err(Error::Mismatch("coordinate over a different prime".into()));
        }
        Ok(Quaternion {
            alg: *self,
            x: x.map(|c| c.truncate(prec)),
        })
    }

    pub fn one(&self, prec: u32) -> Quaternion {
        self.element(prec, [1, 0, 0, 0])
    }

    pub fn i(&self, prec: u32) -> Quaternion {
        self.element(prec, [0, 1, 0, 0])
    }

    pub fn j(&self, prec: u32) -> Quaternion {
        self.element(prec, [0, 0, 1, 0])
    }

    pub fn k(&self, prec: u32) -> Quaternion {
        self.element(prec, [0, 0, 0, 1])
    }
}

impl fmt::Display for QuaternionAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})/Q_{}", self.a, self.b, self.p)
    }
}

/// An element `x_0 + x_1 i + x_2 j + x_3 k` with p-adic integer coordinates
/// at a common precision.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Quaternion {
    alg: QuaternionAlgebra,
    x: [Padic; 4],
}

/// `w(x − 1)` for `x ∈ SL(1, D)`, or a lower bound when `x − 1` vanishes at
/// the available precision.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum FiltrationLevel {
    Finite(u32),
    AtLeast(u32),
}

impl Quaternion {
    pub fn algebra(&self) -> &QuaternionAlgebra {
        &self.alg
    }

    pub fn coords(&self) -> &[Padic; 4] {
        &self.x
    }

    pub fn precision(&self) -> u32 {
        self.x[0].precision()
    }

    pub fn truncate(&self, prec: u32) -> Quaternion {
        Quaternion {
            alg: self.alg,
            x: self.x.clone().map(|c| c.truncate(prec)),
        }
    }

    fn check_same(&self, other: &Quaternion) -> Result<()> {
        if self.alg != other.alg {
            return Err(Error::Mismatch(format!("{} vs {}", self.alg, other.alg)));
        }
        Ok(())
    }

    pub fn add(&self, other: &Quaternion) -> Result<Quaternion> {
        self.check_same(other)?;
        Ok(Quaternion {
            alg: self.alg,
            x: std::array::from_fn(|t| &self.x[t] + &other.x[t]),
        })
    }

    pub fn sub(&self, other: &Quaternion) -> Result<Quaternion> {
        self.check_same(other)?;
        Ok(Quaternion {
            alg: self.alg,
            x: std::array::from_fn(|t| &self.x[t] - &other.x[t]),
        })
    }

    pub fn mul(&self, other: &Quaternion) -> Result<Quaternion> {
        self.check_same(other)?;
        let (a, b) = (self.alg.a, self.alg.b);
        let [x0, x1, x2, x3] = &self.x;
        let [y0, y1, y2, y3] = &other.x;
        let z0 = &(&(x0 * y0) + &(x1 * y1).scale_int(a))
            + &(&(x2 * y2).scale_int(b) - &(x3 * y3).scale_int(a * b));
        let z1 = &(&(x0 * y1) + &(x1 * y0)) + &(&(x3 * y2) - &(x2 * y3)).scale_int(b);
        let z2 = &(&(x0 * y2) + &(x2 * y0)) + &(&(x1 * y3) - &(x3 * y1)).scale_int(a);
        let z3 = &(&(x0 * y3) + &(x3 * y0)) + &(&(x1 * y2) - &(x2 * y1));
        Ok(Quaternion {
            alg: self.alg,
            x: [z0, z1, z2, z3],
        })
    }

    /// The standard involution `x̄ = x_0 − x_1 i − x_2 j − x_3 k`.
    pub fn conj(&self) -> Quaternion {
        let [x0, x1, x2, x3] = &self.x;
        Quaternion {
            alg: self.alg,
            x: [x0.clone(), -x1, -x2, -x3],
        }
    }

    pub fn scale(&self, c: &Padic) -> Quaternion {
        Quaternion {
            alg: self.alg,
            x: std::array::from_fn(|t| &self.x[t] * c),
        }
    }

    /// `Nrd(x) = x_0² − a x_1² − b x_2² + ab x_3²`.
    pub fn nrd(&self) -> Padic {
        let (a, b) = (self.alg.a, self.alg.b);
        let [x0, x1, x2, x3] = &self.x;
        &(&(x0 * x0) - &(x1 * x1).scale_int(a)) + &(&(x3 * x3).scale_int(a * b) - &(x2 * x2).scale_int(b))
    }

    pub fn is_zero(&self) -> bool {
        self.x.iter().all(Padic::is_zero)
    }

    pub fn is_one(&self) -> bool {
        self.x[0].is_one() && self.x[1..].iter().all(Padic::is_zero)
    }

    pub fn sl1_member(&self) -> bool {
        self.nrd().is_one()
    }

    /// `w(x) = val_p(Nrd(x))`.
    pub fn w_val(&self) -> Result<u32> {
        self.nrd().valuation().ok_or(Error::InsufficientPrecision {
            needed: self.precision() + 1,
            available: self.precision(),
        })
    }

    /// Inverse of an element whose reduced norm is a unit.
    pub fn inverse_unit(&self) -> Result<Quaternion> {
        let inv = self.nrd().unit_inverse()?;
        Ok(self.conj().scale(&inv))
    }

    pub fn filtration_level(&self) -> Result<FiltrationLevel> {
        if !self.sl1_member() {
            return Err(Error::Precondition("element is not in SL(1, D)".into()));
        }
        let d = self.sub(&self.alg.one(self.precision()))?;
        Ok(match d.nrd().valuation() {
            Some(v) => FiltrationLevel::Finite(v),
            None => FiltrationLevel::AtLeast(self.precision()),
        })
    }

    /// `g x g⁻¹ = g x ḡ / Nrd(g)`. Dividing out `p^{w(g)}` costs `w(g)`
    /// digits of precision.
    pub fn conjugate_by(&self, g: &Quaternion) -> Result<Quaternion> {
        self.check_same(g)?;
        let n = g.nrd();
        let w = n.valuation().ok_or(Error::NotInvertible)?;
        let num = g.mul(self)?.mul(&g.conj())?;
        let unit = n.div_p_power(w)?.unit_inverse()?;
        let x = num
            .x
            .iter()
            .map(|c| c.div_p_power(w).map(|c| &c * &unit.truncate(c.precision())))
            .collect::<Result<Vec<_>>>()
            .map_err(|_| Error::Precondition("conjugate leaves the integral order".into()))?;
        Ok(Quaternion {
            alg: self.alg,
            x: x.try_into().expect("four coordinates"),
        })
    }
}

impl fmt::Display for Quaternion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let [x0, x1, x2, x3] = &self.x;
        write!(
            f,
            "{} + {}i + {}j + {}k",
            x0.to_signed(),
            x1.to_signed(),
            x2.to_signed(),
            x3.to_signed()
        )
    }
}

/// Removes even powers of `p` and replaces `(a, b)` by `(a, −ab)` when both
/// have odd valuation; the algebra is unchanged up to isomorphism.
fn normalize(a: i64, b: i64, p: u64) -> (i128, i128) {
    fn strip(mut x: i128, p: i128) -> i128 {
        while x % (p * p) == 0 {
            x /= p * p;
        }
        x
    }
    let p = p as i128;
    let (a, b) = (strip(a as i128, p), strip(b as i128, p));
    if a % p == 0 && b % p == 0 {
        (a, strip(-a * b, p))
    } else {
        (a, b)
    }
}

/// Digits of search needed after normalization: Hensel lifting from a
/// primitive zero modulo `p^R` succeeds for `R = 2` at odd `p` and `R = 4`
/// at `p = 2`.
fn search_depth(p: u64) -> u32 {
    if p == 2 {
        4
    } else {
        2
    }
}

/// Whether `(a, b)` is a division algebra over `Q_p`, i.e. whether the norm
/// form has no nontrivial zero.
pub fn is_division(a: i64, b: i64, p: u64) -> Result<bool> {
    check_prime(p)?;
    if a == 0 || b == 0 {
        return Err(Error::Precondition("structure constants must be nonzero".into()));
    }
    let (a, b) = normalize(a, b, p);
    let a = i64::try_from(a).map_err(|_| Error::CapExceeded("constants too large".into()))?;
    let b = i64::try_from(b).map_err(|_| Error::CapExceeded("constants too large".into()))?;
    Ok(primitive_zero(a, b, p, search_depth(p))?.is_none())
}

type Pair = (u64, u64);

/// A coordinate vector, not all divisible by `p`, with
/// `x_0² − a x_1² − b x_2² + ab x_3² ≡ 0 (mod p^r)`, if one exists.
pub fn primitive_zero(a: i64, b: i64, p: u64, r: u32) -> Result<Option<[u64; 4]>> {
    check_prime(p)?;
    let q = modulus(p, r);
    let q: u64 = u64::try_from(&q)
        .ok()
        .filter(|&q| q <= 1 << 10)
        .ok_or_else(|| Error::CapExceeded(format!("search modulo {p}^{r} too large")))?;
    let qi = q as i128;
    let red = |x: i128| x.rem_euclid(qi);
    let (a, b) = (a as i128, b as i128);
    let unit = |x: u64| !x.is_multiple_of(p);
    // first half: x_0² − a x_1², keyed by value, remembering a primitive
    // witness and any witness
    let mut left: HashMap<i128, (Option<Pair>, Pair)> = HashMap::new();
    for x0 in 0..q {
        for x1 in 0..q {
            let v = red((x0 as i128).pow(2) - a * (x1 as i128).pow(2));
            let e = left.entry(v).or_insert((None, (x0, x1)));
            if e.0.is_none() && (unit(x0) || unit(x1)) {
                e.0 = Some((x0, x1));
            }
        }
    }
    for x2 in 0..q {
        for x3 in 0..q {
            let v = red(-b * (x2 as i128).pow(2) + a * b * (x3 as i128).pow(2));
            if let Some((prim, any)) = left.get(&red(-v)) {
                if unit(x2) || unit(x3) {
                    return Ok(Some([any.0, any.1, x2, x3]));
                }
                if let Some((x0, x1)) = prim {
                    return Ok(Some([*x0, *x1, x2, x3]));
                }
            }
        }
    }
    Ok(None)
}

fn random_coord<R: Rng + ?Sized>(rng: &mut R, p: u64, prec: u32) -> Padic {
    let mut acc = BigInt::from(0);
    for _ in 0..prec {
        acc = acc * p + rng.gen_range(0..p);
    }
    Padic::new(p, prec, acc)
}

/// A random element of the integral order with all coordinates random.
pub fn random_element<R: Rng + ?Sized>(rng: &mut R, alg: &QuaternionAlgebra, prec: u32) -> Quaternion {
    Quaternion {
        alg: *alg,
        x: std::array::from_fn(|_| random_coord(rng, alg.p, prec)),
    }
}

/// A random element of `SL(1, D)` of level at least `k`, as `y ȳ⁻¹` for
/// `y = y_0 + p^c·(pure part)` with `y_0` a unit.
pub fn random_sl1<R: Rng + ?Sized>(
    rng: &mut R,
    alg: &QuaternionAlgebra,
    prec: u32,
    k: u32,
) -> Result<Quaternion> {
    let p = alg.p;
    let c = k.div_ceil(2);
    if 2 * c + 2 >= prec {
        return Err(Error::InsufficientPrecision {
            needed: 2 * c + 3,
            available: prec,
        });
    }
    for _ in 0..1000 {
        let mut y0 = random_coord(rng, p, prec);
        if !y0.is_unit() {
            y0 = &y0 + &Padic::one(p, prec);
        }
        let shift = Padic::new(p, prec, BigInt::from(modulus(p, c)));
        let y = Quaternion {
            alg: *alg,
            x: [
                y0,
                &random_coord(rng, p, prec) * &shift,
                &random_coord(rng, p, prec) * &shift,
                &random_coord(rng, p, prec) * &shift,
            ],
        };
        if !y.nrd().is_unit() {
            continue;
        }
        let x = y.mul(&y.conj().inverse_unit()?)?;
        if x.is_one() {
            continue;
        }
        match x.filtration_level()? {
            FiltrationLevel::Finite(l) if l >= k => return Ok(x),
            _ => continue,
        }
    }
    Err(Error::CapExceeded(format!("no SL(1, D) sample of level ≥ {k} found")))
}

/// Conjugators used by default: the basis, a few sums and `count` random
/// elements of small norm valuation.
pub fn standard_conjugators<R: Rng + ?Sized>(
    rng: &mut R,
    alg: &QuaternionAlgebra,
    prec: u32,
    count: usize,
) -> Vec<Quaternion> {
    let mut out = vec![
        alg.one(prec),
        alg.i(prec),
        alg.j(prec),
        alg.k(prec),
        alg.element(prec, [1, 1, 0, 0]),
        alg.element(prec, [1, 0, 1, 0]),
        alg.element(prec, [0, 1, 1, 0]),
    ];
    while out.len() < 7 + count {
        let g = random_element(rng, alg, prec);
        if g.w_val().is_ok_and(|w| w <= 3) {
            out.push(g);
        }
    }
    out
}

fn level_gap(a: FiltrationLevel, b: FiltrationLevel) -> u32 {
    use FiltrationLevel::*;
    match (a, b) {
        (Finite(x), Finite(y)) => x.abs_diff(y),
        (Finite(x), AtLeast(y)) | (AtLeast(y), Finite(x)) => y.saturating_sub(x),
        (AtLeast(_), AtLeast(_)) => 0,
    }
}

/// Largest change of filtration level under conjugation by `g`, over
/// `samples` random elements of `SL(1, D)_k`.
pub fn conj_displacement<R: Rng + ?Sized>(
    rng: &mut R,
    g: &Quaternion,
    k: u32,
    samples: usize,
) -> Result<u32> {
    let alg = *g.algebra();
    let prec = g.precision();
    g.w_val()?;
    let mut worst = 0;
    for _ in 0..samples {
        let x = random_sl1(rng, &alg, prec, k)?;
        let y = x.conjugate_by(g)?;
        worst = worst.max(level_gap(x.filtration_level()?, y.filtration_level()?));
    }
    Ok(worst)
}

/// `π^t` for the uniformizer `π` used by the dichotomy report: `1 + i` over
/// `(−1, −1)/Q_2`, otherwise an element of odd norm valuation among the
/// basis and simple sums.
pub fn uniformizer(alg: &QuaternionAlgebra, prec: u32) -> Result<Quaternion> {
    let candidates = [
        [1, 1, 0, 0],
        [0, 0, 1, 0],
        [0, 1, 0, 0],
        [1, 0, 1, 0],
        [0, 0, 0, 1],
        [1, 1, 1, 0],
        [1, 1, 1, 1],
    ];
    candidates
        .iter()
        .map(|&c| alg.element(prec, c))
        .find(|q| q.w_val() == Ok(1))
        .ok_or_else(|| Error::Unsupported(format!("no small uniformizer found in {alg}")))
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DichotomyFragment {
    pub algebra: QuaternionAlgebra,
    pub samples: usize,
    pub max_displacement: u32,
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn h2() -> QuaternionAlgebra {
        QuaternionAlgebra::new(2, -1, -1).unwrap()
    }

    #[test]
    fn division_examples() {
        assert!(is_division(-1, -1, 2).unwrap());
        assert!(!is_division(-1, -1, 5).unwrap());
        assert!(is_division(2, 3, 3).unwrap());
        assert!(!is_division(1, 7, 7).unwrap());
        assert!(is_division(-1, -1, 0).is_err());
        assert!(is_division(0, 1, 3).is_err());
        assert!(QuaternionAlgebra::new(5, -1, -1).is_err());
        // a zero of the norm form mod 5, which lifts
        let z = primitive_zero(-1, -1, 5, 1).unwrap().unwrap();
        let v: u64 = z[0] * z[0] + z[1] * z[1] + z[2] * z[2] + z[3] * z[3];
        assert_eq!(v % 5, 0);
    }

    #[test]
    fn default_algebras() {
        assert_eq!(QuaternionAlgebra::default_for(2).unwrap(), h2());
        let d3 = QuaternionAlgebra::default_for(3).unwrap();
        assert_eq!((d3.a, d3.b), (2, 3));
        let d7 = QuaternionAlgebra::default_for(7).unwrap();
        assert_eq!((d7.a, d7.b), (3, 7));
    }

    #[test]
    fn multiplication_table() {
        let alg = QuaternionAlgebra::new(3, 2, 3).unwrap();
        let (one, i, j, k) = (alg.one(10), alg.i(10), alg.j(10), alg.k(10));
        assert_eq!(i.mul(&j).unwrap(), k);
        assert_eq!(j.mul(&i).unwrap(), alg.element(10, [0, 0, 0, -1]));
        assert_eq!(i.mul(&i).unwrap(), alg.element(10, [2, 0, 0, 0]));
        assert_eq!(j.mul(&j).unwrap(), alg.element(10, [3, 0, 0, 0]));
        assert_eq!(k.mul(&k).unwrap(), alg.element(10, [-6, 0, 0, 0]));
        let y = alg.element(10, [4, -1, 7, 2]);
        assert_eq!(one.mul(&y).unwrap(), y);
        assert_eq!(y.mul(&one).unwrap(), y);
    }

    #[test]
    fn norm_examples() {
        let alg = h2();
        assert!(alg.one(8).nrd().is_one());
        assert_eq!(alg.i(8).nrd(), Padic::new(2, 8, 1));
        assert!(alg.i(8).sl1_member());
        assert!(!alg.element(8, [1, 1, 0, 0]).sl1_member());
        assert_eq!(alg.one(8).w_val().unwrap(), 0);
        assert_eq!(alg.element(8, [0, 1, 1, 0]).w_val().unwrap(), 1);
        assert!(alg.element(8, [0, 0, 0, 0]).w_val().is_err());
        let x = alg.element(8, [3, 1, 4, 1]);
        assert_eq!(x.mul(&x.conj()).unwrap(), alg.one(8).scale(&x.nrd()));
    }

    #[test]
    fn filtration_examples() {
        let alg = h2();
        assert_eq!(
            alg.one(12).filtration_level().unwrap(),
            FiltrationLevel::AtLeast(12)
        );
        assert_eq!(alg.i(12).filtration_level().unwrap(), FiltrationLevel::Finite(1));
        assert!(alg.element(12, [1, 1, 0, 0]).filtration_level().is_err());
    }

    #[test]
    fn conjugation_examples() {
        let alg = h2();
        let pi = alg.element(16, [1, 1, 0, 0]);
        assert_eq!(alg.j(16).conjugate_by(&pi).unwrap(), alg.k(15));
        assert_eq!(alg.i(16).conjugate_by(&pi).unwrap(), alg.i(15));
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        assert_eq!(conj_displacement(&mut rng, &alg.one(24), 2, 20).unwrap(), 0);
        assert_eq!(conj_displacement(&mut rng, &alg.i(24), 2, 20).unwrap(), 0);
        assert_eq!(conj_displacement(&mut rng, &alg.element(24, [1, 1, 0, 0]), 2, 20).unwrap(), 0);
    }

    #[test]
    fn sampled_levels() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for alg in [h2(), QuaternionAlgebra::new(3, 2, 3).unwrap()] {
            for k in 1..=3 {
                let x = random_sl1(&mut rng, &alg, 24, k).unwrap();
                assert!(x.sl1_member());
                match x.filtration_level().unwrap() {
                    FiltrationLevel::Finite(l) => assert!(l >= k),
                    FiltrationLevel::AtLeast(_) => panic!("sample equals 1"),
                }
            }
        }
    }

    #[test]
    fn uniformizers() {
        assert_eq!(uniformizer(&h2(), 10).unwrap(), h2().element(10, [1, 1, 0, 0]));
        let d3 = QuaternionAlgebra::new(3, 2, 3).unwrap();
        assert_eq!(uniformizer(&d3, 10).unwrap(), d3.j(10));
    }
}
