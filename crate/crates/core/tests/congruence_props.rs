use num_bigint::BigUint;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim::congruence::{group_order, is_congruence_member, GroupElement, Transversal};
use selfsim::sample::{random_congruence, random_sl};

/// Every matrix over `Z/q` with determinant 1, by exhaustive listing.
fn brute_force_sl(n: usize, q: u64) -> Vec<Vec<u64>> {
    fn det(n: usize, a: &[i128]) -> i128 {
        if n == 1 {
            return a[0];
        }
        (0..n)
            .map(|c| {
                let minor: Vec<i128> = (1..n)
                    .flat_map(|i| (0..n).filter(move |&j| j != c).map(move |j| (i, j)))
                    .map(|(i, j)| a[i * n + j])
                    .collect();
                let sign = if c % 2 == 0 { 1 } else { -1 };
                sign * a[c] * det(n - 1, &minor)
            })
            .sum()
    }
    let total = (q as usize).pow((n * n) as u32);
    let mut out = Vec::new();
    for mut code in 0..total {
        let mut m = vec![0u64; n * n];
        for x in m.iter_mut() {
            *x = (code % q as usize) as u64;
            code /= q as usize;
        }
        let a: Vec<i128> = m.iter().map(|&x| x as i128).collect();
        if det(n, &a).rem_euclid(q as i128) == 1 {
            out.push(m);
        }
    }
    out.sort();
    out
}

#[test]
fn transversal_reductions_are_exactly_sl_mod_p_m() {
    for (n, p, m) in [(2, 2, 1), (2, 3, 1), (2, 2, 2), (2, 5, 1), (2, 2, 3), (2, 3, 2), (3, 2, 1)] {
        let t = Transversal::enumerate(n, p, m, 12).unwrap();
        let mut reduced: Vec<Vec<u64>> = t
            .reps()
            .iter()
            .map(|h| h.reduce(m).unwrap().to_u64s().unwrap())
            .collect();
        reduced.sort();
        let oracle = brute_force_sl(n, p.pow(m));
        assert_eq!(reduced, oracle, "(n, p, m) = ({n}, {p}, {m})");
        assert_eq!(BigUint::from(t.len()), group_order(n, p, m));
        assert!(t.rep(0).is_identity());
        for h in t.reps() {
            assert!(h.matrix().det().is_one());
        }
    }
}

#[test]
fn group_order_matches_larger_enumerations() {
    for (n, p, m) in [(2, 7, 1), (2, 2, 4), (3, 3, 1), (3, 2, 2)] {
        let t = Transversal::enumerate(n, p, m, 10).unwrap();
        assert_eq!(BigUint::from(t.len()), group_order(n, p, m), "(n, p, m) = ({n}, {p}, {m})");
    }
}

#[test]
fn coset_lookup_partitions_the_group() {
    let t = Transversal::enumerate(2, 2, 2, 24).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for _ in 0..1000 {
        let len = rng.gen_range(1..8);
        let g = random_sl(&mut rng, 2, 2, 24, len, Some(&t));
        let j = t.coset_lookup(&g).unwrap();
        assert!(is_congruence_member(&t.rep_inverse(j).mul(&g), 2).unwrap());
    }
    let t3 = Transversal::enumerate(2, 3, 1, 16).unwrap();
    for _ in 0..300 {
        let g = random_sl(&mut rng, 2, 3, 16, 5, Some(&t3));
        let j = t3.coset_lookup(&g).unwrap();
        assert!(is_congruence_member(&t3.rep_inverse(j).mul(&g), 1).unwrap());
    }
}

#[test]
fn congruence_subgroups_are_closed() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for trial in 0..300 {
        let (n, p) = [(2, 2), (2, 3), (3, 2)][trial % 3];
        let m = rng.gen_range(1..5);
        let g = random_congruence(&mut rng, n, p, 20, m, 4);
        let h = random_congruence(&mut rng, n, p, 20, m, 4);
        assert!(is_congruence_member(&g, m).unwrap());
        assert!(is_congruence_member(&g.mul(&h), m).unwrap());
        assert!(is_congruence_member(&g.inverse(), m).unwrap());
        assert!(g.mul(&g.inverse()).is_identity());
    }
}

#[test]
fn transversal_export_is_reproducible() {
    let a = Transversal::enumerate(2, 3, 1, 8).unwrap();
    let b = Transversal::enumerate(2, 3, 1, 8).unwrap();
    let ja = serde_json::to_string(&a.to_export()).unwrap();
    assert_eq!(ja, serde_json::to_string(&b.to_export()).unwrap());
    let back = Transversal::from_export(&serde_json::from_str(&ja).unwrap()).unwrap();
    assert_eq!(back.reps(), a.reps());
    let g = GroupElement::from_i64(3, 8, 2, &[2, 1, 1, 1]).unwrap();
    assert_eq!(back.coset_lookup(&g).unwrap(), a.coset_lookup(&g).unwrap());
}
