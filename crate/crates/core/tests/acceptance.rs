//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each
//! and exits nonzero if any fails.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use num_bigint::BigUint;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use selfsim::anisotropic::{conj_displacement, primitive_zero, random_element, standard_conjugators, QuaternionAlgebra};
use selfsim::building::apartment::{default_barycentric, DEFAULT_RADIUS, DEFAULT_STEPS};
use selfsim::building::{apartment_window, orbit_displacement, Ball, LatticeClass};
use selfsim::congruence::{group_order, GroupElement, Transversal};
use selfsim::sample::{random_congruence, random_sl};
use selfsim::selfsim::{Action, TreeWord};
use selfsim::virtual_endo::{check_invariance, normality_witness, SubgroupSpec, VirtualEndo};

const K: u32 = 24;

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(start: Instant, limit: Duration) -> Result<(), String> {
    let t = start.elapsed();
    ensure(t <= limit, || format!("took {t:.1?}, limit {limit:?}"))
}

fn default_action() -> Action {
    Action::for_endo(VirtualEndo::new(2, &[1, -1]).unwrap(), K).unwrap()
}

fn random_group_element(rng: &mut ChaCha8Rng, a: &Action) -> GroupElement {
    let k = rng.gen_range(1..6);
    if rng.gen_bool(0.3) {
        random_congruence(rng, 2, 2, K, k as u32, 3)
    } else {
        random_sl(rng, 2, 2, K, k, Some(a.transversal()))
    }
}

fn random_word(rng: &mut ChaCha8Rng, d: usize, max_len: usize) -> TreeWord {
    let len = rng.gen_range(0..=max_len);
    TreeWord::new((0..len).map(|_| rng.gen_range(0..d)).collect(), d).unwrap()
}

fn transversal_counts() -> Outcome {
    let start = Instant::now();
    for (p, m, expect) in [(2u64, 1u32, 6usize), (3, 1, 24), (2, 2, 48)] {
        let t = Transversal::enumerate(2, p, m, K).map_err(|e| e.to_string())?;
        ensure(t.len() == expect, || format!("(p, m) = ({p}, {m}): {} reps", t.len()))?;
        ensure(group_order(2, p, m) == BigUint::from(expect), || format!("order formula at ({p}, {m})"))?;
    }
    within(start, Duration::from_secs(5))?;
    Ok("6, 24, 48".into())
}

fn wreath_identities() -> Outcome {
    let start = Instant::now();
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for _ in 0..1000 {
        let g1 = random_group_element(&mut rng, &a);
        let g2 = random_group_element(&mut rng, &a);
        let v = random_word(&mut rng, a.degree(), 4);
        let (img2, r2) = a.act_word_with_restriction(&g2, &v).map_err(|e| e.to_string())?;
        let (img12, r12) = a.act_word_with_restriction(&g1.mul(&g2), &v).map_err(|e| e.to_string())?;
        let (img1, r1) = a.act_word_with_restriction(&g1, &img2).map_err(|e| e.to_string())?;
        ensure(img12 == img1 && r12 == r1.mul(&r2), || format!("product rule fails at {v}"))?;
        let (v1, v2) = v.split_at(rng.gen_range(0..=v.len()));
        let direct = a.restriction(&g1, &v).map_err(|e| e.to_string())?;
        let inner = a.restriction(&g1, &v1).map_err(|e| e.to_string())?;
        let stepwise = a.restriction(&inner, &v2).map_err(|e| e.to_string())?;
        ensure(direct == stepwise, || format!("composition rule fails at {v1} {v2}"))?;
    }
    within(start, Duration::from_secs(60))?;
    Ok("1000 samples, no violations".into())
}

fn transitivity() -> Outcome {
    let a = default_action();
    let orbit = a.level1_orbit(a.transversal().reps()).map_err(|e| e.to_string())?;
    ensure(a.degree() == 48 && orbit.transitive && orbit.orbit.len() == 48, || {
        format!("orbit of 0 has {} of {} letters", orbit.orbit.len(), a.degree())
    })?;
    Ok("orbit of letter 0 has 48 letters".into())
}

fn stabilizer_round_trip() -> Outcome {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(102);
    for _ in 0..500 {
        let g = random_congruence(&mut rng, 2, 2, K, 2, 3);
        let (j, r) = a.act_letter(&g, 0).map_err(|e| e.to_string())?;
        let phi = a.endo().apply(&g).map_err(|e| e.to_string())?;
        ensure(j == 0 && r == phi, || format!("letter {j} or restriction differs for {g:?}"))?;
    }
    Ok("500 samples".into())
}

fn non_invariance_witnesses() -> Outcome {
    let endo = VirtualEndo::new(2, &[1, -1]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(103);
    let inv = check_invariance(&endo, &SubgroupSpec::Congruence(2), K, 10, &mut rng).map_err(|e| e.to_string())?;
    ensure(inv.is_witness(), || "no invariance witness for the level-2 congruence subgroup".into())?;
    let norm = normality_witness(&SubgroupSpec::DiagonalTorus(2), 2, 2, K, 2, 10, &mut rng)
        .map_err(|e| e.to_string())?;
    ensure(norm.is_witness(), || "no normality witness for the torus".into())?;
    Ok("both witnesses found within 10 samples".into())
}

fn unboundedness() -> Outcome {
    let start = Instant::now();
    let endo = VirtualEndo::new(2, &[1, -1]).unwrap();
    for t in 0..=8u32 {
        let d = orbit_displacement(&endo, t).map_err(|e| e.to_string())?;
        ensure(d == 2 * u64::from(t), || format!("t = {t}: displacement {d}"))?;
    }
    let ball = Ball::new(&LatticeClass::standard(2, 2).unwrap(), 10).map_err(|e| e.to_string())?;
    for t in 0..=5i64 {
        let v = LatticeClass::diagonal(2, &[t, -t]).unwrap();
        let i = ball.index_of(&v).ok_or_else(|| format!("t = {t}: vertex outside the ball"))?;
        ensure(ball.depths()[i] as i64 == 2 * t, || format!("t = {t}: search depth {}", ball.depths()[i]))?;
    }
    within(start, Duration::from_secs(30))?;
    Ok("2t for t = 0..8, search agrees for t <= 5".into())
}

fn building_oracle() -> Outcome {
    let start = Instant::now();
    let mut sizes = Vec::new();
    for (n, r) in [(2usize, 6usize), (3, 3)] {
        let ball = Ball::new(&LatticeClass::standard(2, n).unwrap(), r).map_err(|e| e.to_string())?;
        let vs = ball.vertices();
        let bad: usize = (0..vs.len())
            .into_par_iter()
            .map(|i| {
                let d = ball.bfs_from(i);
                ((i + 1)..vs.len())
                    .filter(|&j| vs[i].distance(&vs[j]).ok().map(|x| x as usize) != d[j])
                    .count()
            })
            .sum();
        ensure(bad == 0, || format!("n = {n}: {bad} disagreeing pairs"))?;
        sizes.push(vs.len());
    }
    within(start, Duration::from_secs(120))?;
    Ok(format!("all pairs agree on balls of {} and {} vertices", sizes[0], sizes[1]))
}

fn default_algebras() -> [QuaternionAlgebra; 2] {
    [
        QuaternionAlgebra::new(2, -1, -1).unwrap(),
        QuaternionAlgebra::new(3, 2, 3).unwrap(),
    ]
}

fn anisotropic_boundedness() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(104);
    for alg in default_algebras() {
        let conjugators = standard_conjugators(&mut rng, &alg, K, 3);
        ensure(conjugators.len() == 10, || "expected 10 conjugators".into())?;
        for g in &conjugators {
            for k in 1..=3 {
                let d = conj_displacement(&mut rng, g, k, 100).map_err(|e| e.to_string())?;
                ensure(d == 0, || format!("{alg}: g = {g}, k = {k}, displacement {d}"))?;
            }
        }
    }
    Ok("zero displacement in both algebras".into())
}

fn norm_and_anisotropy() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(105);
    for alg in default_algebras() {
        for _ in 0..1000 {
            let x = random_element(&mut rng, &alg, K);
            let y = random_element(&mut rng, &alg, K);
            let xy = x.mul(&y).map_err(|e| e.to_string())?;
            ensure(xy.nrd() == &x.nrd() * &y.nrd(), || format!("{alg}: norm not multiplicative"))?;
        }
        let z = primitive_zero(alg.a, alg.b, alg.p, 3).map_err(|e| e.to_string())?;
        ensure(z.is_none(), || format!("{alg}: primitive zero {z:?}"))?;
    }
    Ok("1000 pairs per algebra, no zero mod p^3".into())
}

fn sampled_gallery(x: &[BigRational; 3], vals: &[i64; 3], steps: u32, samples: i64) -> Vec<(i64, i64, i64)> {
    let mut out: Vec<(i64, i64, i64)> = Vec::new();
    let fl = |x: BigRational| -> i64 { x.floor().to_integer().try_into().unwrap() };
    for s in 0..samples {
        let lambda = BigRational::new((2 * s + 1).into(), (2 * samples).into());
        let y: [BigRational; 3] = std::array::from_fn(|i| {
            &x[i] + &lambda * BigRational::from_integer((i64::from(steps) * vals[i]).into())
        });
        let al = (fl(&y[0] - &y[1]), fl(&y[1] - &y[2]), fl(&y[0] - &y[2]));
        if out.last() != Some(&al) {
            out.push(al);
        }
    }
    out
}

fn apartment_figure() -> Outcome {
    let vals = [1i64, 0, -1];
    let w = apartment_window(DEFAULT_RADIUS, &vals, &default_barycentric(), DEFAULT_STEPS)
        .map_err(|e| e.to_string())?;
    let got: Vec<(i64, i64, i64)> = w.gallery.iter().map(|a| (a.a, a.b, a.c)).collect();
    let oracle = sampled_gallery(&w.start, &vals, DEFAULT_STEPS, 10_000);
    ensure(got == oracle, || format!("gallery {got:?} vs sampled {oracle:?}"))?;
    let svg = w.to_svg();
    let again = apartment_window(DEFAULT_RADIUS, &vals, &default_barycentric(), DEFAULT_STEPS)
        .map_err(|e| e.to_string())?
        .to_svg();
    ensure(svg == again, || "SVG differs between runs".into())?;
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/apartment_default.svg");
    let golden = std::fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    ensure(svg == golden, || "SVG differs from the golden file".into())?;
    Ok(format!("{} alcoves in the gallery, golden file matches", got.len()))
}

fn faithfulness() -> Outcome {
    let a = default_action();
    let mut rng = ChaCha8Rng::seed_from_u64(106);
    let mut worst = 0;
    let mut tested = 0;
    while tested < 100 {
        let g = random_group_element(&mut rng, &a);
        if g.is_identity() {
            continue;
        }
        tested += 1;
        let s = a.separating_depth(&g, 10, 200_000).map_err(|e| e.to_string())?;
        let depth = s.depth.ok_or_else(|| format!("no separating word up to depth 10 for {g:?}"))?;
        worst = worst.max(depth);
    }
    Ok(format!("100 elements, deepest separation at depth {worst}"))
}

fn main() -> ExitCode {
    type Criterion = (&'static str, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("transversal counts", transversal_counts),
        ("wreath identities", wreath_identities),
        ("first-level transitivity", transitivity),
        ("stabilizer round trip", stabilizer_round_trip),
        ("non-invariance witnesses", non_invariance_witnesses),
        ("unboundedness", unboundedness),
        ("building distance oracle", building_oracle),
        ("anisotropic boundedness", anisotropic_boundedness),
        ("norm multiplicativity and anisotropy", norm_and_anisotropy),
        ("apartment figure", apartment_figure),
        ("empirical faithfulness", faithfulness),
    ];
    let mut failed = 0;
    for (name, run) in criteria {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("PASS  {name} ({t:.2?}): {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  {name} ({t:.2?}): {detail}");
            }
        }
    }
    println!("{} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
