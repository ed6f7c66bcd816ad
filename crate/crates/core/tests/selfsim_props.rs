use std::collections::HashSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use selfsim::congruence::GroupElement;
use selfsim::sample::{random_congruence, random_sl};
use selfsim::selfsim::{Action, TreeWord};
use selfsim::virtual_endo::VirtualEndo;
use selfsim::Error;

const K: u32 = 24;

fn default_action() -> Action {
    Action::for_endo(VirtualEndo::new(2, &[1, -1]).unwrap(), K).unwrap()
}

fn random_word(rng: &mut ChaCha8Rng, d: usize, max_len: usize) -> TreeWord {
    let len = rng.gen_range(0..=max_len);
    TreeWord::new((0..len).map(|_| rng.gen_range(0..d)).collect(), d).unwrap()
}

fn random_element(rng: &mut ChaCha8Rng, a: &Action) -> GroupElement {
    if rng.gen_bool(0.3) {
        let level = rng.gen_range(1..6);
        random_congruence(rng, 2, 2, K, level, 3)
    } else {
        let len = rng.gen_range(1..6);
        random_sl(rng, 2, 2, K, len, Some(a.transversal()))
    }
}

#[test]
fn restrictions_satisfy_the_cocycle_law() {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    for _ in 0..1000 {
        let g1 = random_element(&mut rng, &a);
        let g2 = random_element(&mut rng, &a);
        let v = random_word(&mut rng, a.degree(), 4);
        let g12 = g1.mul(&g2);
        let (img2, r2) = a.act_word_with_restriction(&g2, &v).unwrap();
        let (img12, r12) = a.act_word_with_restriction(&g12, &v).unwrap();
        let (img1, r1) = a.act_word_with_restriction(&g1, &img2).unwrap();
        assert_eq!(img12, img1);
        assert_eq!(r12.precision(), K - 2 * v.len() as u32);
        assert_eq!(r12, r1.mul(&r2));
    }
}

#[test]
fn restriction_composes_along_words() {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(32);
    for _ in 0..300 {
        let g = random_element(&mut rng, &a);
        let v = random_word(&mut rng, a.degree(), 4);
        let cut = rng.gen_range(0..=v.len());
        let (v1, v2) = v.split_at(cut);
        let direct = a.restriction(&g, &v).unwrap();
        let stepwise = a.restriction(&a.restriction(&g, &v1).unwrap(), &v2).unwrap();
        assert_eq!(direct, stepwise);
        // g(v1 v2) = g(v1) · g|_{v1}(v2)
        let img = a.act_word(&g, &v).unwrap();
        let expect = a
            .act_word(&g, &v1)
            .unwrap()
            .concat(&a.act_word(&a.restriction(&g, &v1).unwrap(), &v2).unwrap());
        assert_eq!(img, expect);
    }
}

#[test]
fn elements_act_as_tree_automorphisms() {
    let a = default_action();
    let d = a.degree();
    let mut rng = ChaCha8Rng::seed_from_u64(33);
    for _ in 0..4 {
        let g = random_element(&mut rng, &a);
        // full check on X^1 and X^2
        for len in 1..=2 {
            let mut images = HashSet::new();
            let mut words = vec![TreeWord::empty()];
            for _ in 0..len {
                words = words.iter().flat_map(|w| (0..d).map(move |x| w.child(x))).collect();
            }
            for w in &words {
                let img = a.act_word(&g, w).unwrap();
                assert_eq!(img.len(), len);
                if len == 2 {
                    let (prefix, _) = w.split_at(1);
                    assert_eq!(img.split_at(1).0, a.act_word(&g, &prefix).unwrap());
                }
                images.insert(img);
            }
            assert_eq!(images.len(), words.len(), "bijection on level {len}");
        }
        // prefix preservation and injectivity on sampled deep words
        let mut seen = HashSet::new();
        for _ in 0..300 {
            let len = rng.gen_range(3..=4);
            let w = TreeWord::new((0..len).map(|_| rng.gen_range(0..d)).collect(), d).unwrap();
            let img = a.act_word(&g, &w).unwrap();
            for k in 0..len {
                assert_eq!(img.split_at(k).0, a.act_word(&g, &w.split_at(k).0).unwrap());
            }
            let inv = a.act_word(&g.inverse(), &img).unwrap();
            assert_eq!(inv, w);
            seen.insert((w, img));
        }
        let images: HashSet<_> = seen.iter().map(|(_, i)| i.clone()).collect();
        let words: HashSet<_> = seen.iter().map(|(w, _)| w.clone()).collect();
        assert_eq!(images.len(), words.len());
    }
}

#[test]
fn stabilizer_recovers_the_virtual_endomorphism() {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(34);
    for _ in 0..500 {
        let g = random_congruence(&mut rng, 2, 2, K, 2, 3);
        let (j, r) = a.act_letter(&g, 0).unwrap();
        assert_eq!(j, 0);
        assert_eq!(r, a.endo().apply(&g).unwrap());
    }
}

#[test]
fn first_level_is_transitive() {
    for (p, vals) in [(2u64, vec![1i64, -1]), (3, vec![1, -1]), (2, vec![2, -2]), (5, vec![1, -1])] {
        let endo = VirtualEndo::new(p, &vals).unwrap();
        let a = Action::for_endo(endo, 16).unwrap();
        let orbit = a.level1_orbit(a.transversal().reps()).unwrap();
        assert!(orbit.transitive, "p = {p}, vals = {vals:?}");
        assert_eq!(orbit.orbit, (0..a.degree()).collect::<Vec<_>>());
    }
}

#[test]
fn portrait_labels_reproduce_the_action() {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(35);
    for _ in 0..3 {
        let g = random_element(&mut rng, &a);
        let portrait = a.portrait(&g, 2).unwrap();
        assert_eq!(portrait.nodes.len(), 1 + a.degree());
        for node in &portrait.nodes {
            let mut sorted = node.perm.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..a.degree()).collect::<Vec<_>>());
        }
        for _ in 0..200 {
            let w = random_word(&mut rng, a.degree(), 2);
            assert_eq!(portrait.image(&w).unwrap(), a.act_word(&g, &w).unwrap());
        }
        let json = serde_json::to_value(&portrait).unwrap();
        assert_eq!(json["d"], 48);
        assert_eq!(json["nodes"][0]["word"], serde_json::json!([]));
    }
}

#[test]
fn separating_depth_agrees_with_portraits() {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(36);
    let mut depths = HashSet::new();
    for trial in 0..40 {
        let g = if trial % 2 == 0 {
            random_congruence(&mut rng, 2, 2, K, 2 + trial as u32 % 3, 2)
        } else {
            random_element(&mut rng, &a)
        };
        let s = a.separating_depth(&g, 10, 100_000).unwrap();
        let depth = s.depth.expect("non-identity element separates");
        let w = s.witness.unwrap();
        assert_eq!(w.len(), depth);
        assert_ne!(a.act_word(&g, &w).unwrap(), w);
        if depth <= 3 {
            // every shallower word is fixed
            if depth >= 2 {
                assert!(a.portrait(&g, depth - 1).unwrap().is_trivial());
            }
        }
        depths.insert(depth);
    }
    assert!(depths.len() >= 2, "depths seen: {depths:?}");
}

#[test]
fn precision_budget_is_checked_upfront() {
    let a = default_action();
    let g = GroupElement::identity(2, 10, 2);
    let w = TreeWord::new(vec![0; 5], 48).unwrap();
    assert_eq!(
        a.act_word(&g, &w),
        Err(Error::PrecisionExhausted {
            depth: 5,
            required: 12,
            available: 10
        })
    );
    assert!(a.act_word(&g, &TreeWord::new(vec![0; 4], 48).unwrap()).is_ok());
    let s = a.separating_depth(&GroupElement::identity(2, 10, 2), 10, 1000).unwrap();
    assert_eq!(s.reachable_depth, 5);
    assert_eq!(s.depth, None);
}
