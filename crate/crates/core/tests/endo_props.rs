use num_bigint::BigInt;
use num_integer::Integer;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use selfsim::congruence::{is_congruence_member, GroupElement};
use selfsim::padic::modulus;
use selfsim::sample::random_congruence;
use selfsim::virtual_endo::VirtualEndo;
use selfsim::Error;

const K: u32 = 24;

fn instances() -> Vec<VirtualEndo> {
    vec![
        VirtualEndo::new(2, &[1, -1]).unwrap(),
        VirtualEndo::new(3, &[1, -1]).unwrap(),
        VirtualEndo::new(2, &[2, 0, -2]).unwrap(),
        VirtualEndo::new(2, &[1, 0, -1]).unwrap(),
        VirtualEndo::new(5, &[3, -1, -2, 0]).unwrap(),
    ]
}

/// `p^{v_i − v_j} g_ij` computed on signed representatives.
fn scaled_entries(endo: &VirtualEndo, g: &GroupElement) -> Vec<BigInt> {
    let n = endo.dim();
    let p = BigInt::from(endo.prime());
    let q = BigInt::from(modulus(endo.prime(), g.precision() - endo.gap()));
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            let x = BigInt::from(g.matrix().residue(i, j).clone());
            let e = endo.vals()[i] - endo.vals()[j];
            let y = if e >= 0 {
                x * p.pow(e as u32)
            } else {
                let d = p.pow((-e) as u32);
                assert!((&x % &d) == BigInt::from(0), "entry below the diagonal of valuations");
                x / d
            };
            out.push(y.mod_floor(&q));
        }
    }
    out
}

#[test]
fn apply_is_a_homomorphism_on_the_domain() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for endo in instances() {
        let (n, p, m) = (endo.dim(), endo.prime(), endo.level());
        let count = if n == 2 { 1000 } else { 300 };
        for _ in 0..count {
            let g = random_congruence(&mut rng, n, p, K, m, 3);
            let h = random_congruence(&mut rng, n, p, K, m, 3);
            let lhs = endo.apply(&g.mul(&h)).unwrap();
            let rhs = endo.apply(&g).unwrap().mul(&endo.apply(&h).unwrap());
            assert_eq!(lhs.precision(), K - endo.gap());
            assert_eq!(lhs, rhs);
        }
    }
}

#[test]
fn images_are_integral_special_linear_and_entrywise_scaled() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for endo in instances() {
        let (n, p, m) = (endo.dim(), endo.prime(), endo.level());
        for _ in 0..1000 {
            let g = random_congruence(&mut rng, n, p, K, m, 3);
            let img = endo.apply(&g).unwrap();
            assert!(img.matrix().det().is_one());
            let residues: Vec<BigInt> = img.matrix().residues().iter().cloned().map(BigInt::from).collect();
            assert_eq!(residues, scaled_entries(&endo, &g));
        }
    }
}

#[test]
fn apply_rejects_elements_outside_the_domain() {
    let endo = VirtualEndo::new(2, &[1, -1]).unwrap();
    let g = GroupElement::from_i64(2, K, 2, &[1, 2, 0, 1]).unwrap();
    assert!(!is_congruence_member(&g, 2).unwrap());
    assert_eq!(endo.apply(&g), Err(Error::OutsideDomain(2)));
    let low = GroupElement::identity(2, 3, 2);
    assert!(matches!(endo.apply(&low), Err(Error::PrecisionExhausted { .. })));
}

#[test]
fn congruence_elements_escape_under_iteration() {
    for endo in instances() {
        let (n, p, m, gap) = (endo.dim(), endo.prime(), endo.level(), endo.gap());
        let (i, j) = endo.contracted_position();
        assert_eq!(endo.vals()[i] - endo.vals()[j], -(gap as i64));
        for k in m..m + 6 {
            let mut g = GroupElement::elementary(p, K + 8 * gap, n, i, j, &BigInt::from(modulus(p, k)));
            let mut t = 0;
            loop {
                assert_eq!(g.matrix().identity_distance(), Some(k - t * gap));
                if !is_congruence_member(&g, m).unwrap() {
                    assert_eq!(endo.apply(&g), Err(Error::OutsideDomain(m)));
                    break;
                }
                g = endo.apply(&g).unwrap();
                t += 1;
            }
            // the valuation strictly decreased until it dropped below m
            assert_eq!(t, (k - m) / gap + 1);
        }
    }
}
