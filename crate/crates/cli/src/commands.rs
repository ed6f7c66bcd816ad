use std::fmt::Write as _;

use num_bigint::BigInt;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::{json, Value};
use selfsim::anisotropic::{
    conj_displacement, is_division, primitive_zero, random_element, uniformizer, DichotomyFragment,
    QuaternionAlgebra,
};
use selfsim::building::{apartment_window, bfs_distance, displacement_csv, orbit_displacement, LatticeClass};
use selfsim::congruence::{GroupElement, Transversal};
use selfsim::padic::PMatrix;
use selfsim::sample::{random_congruence, random_sl};
use selfsim::selfsim::{Action, TreeWord};
use selfsim::virtual_endo::{check_invariance, normality_witness, InvarianceVerdict, NormalityVerdict, VirtualEndo};
use selfsim::Error;

use crate::{literal, CliError, CliResult, Format, Global};

/// Levels sampled when measuring quaternion displacement.
const QUAT_LEVELS: [u32; 3] = [1, 2, 3];

fn format(cfg: &Global, default: Format, allowed: &[Format]) -> CliResult<Format> {
    let f = cfg.format.unwrap_or(default);
    if !allowed.contains(&f) {
        return Err(Error::Parse(format!("format {f:?} is not available for this command")).into());
    }
    Ok(f)
}

fn pretty(v: &impl serde::Serialize) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("serializable");
    s.push('\n');
    s
}

fn int_json(x: &BigInt) -> Value {
    match i64::try_from(x) {
        Ok(v) => Value::from(v),
        Err(_) => Value::from(x.to_string()),
    }
}

fn matrix_json(g: &GroupElement) -> Value {
    let n = g.dim();
    let s = g.matrix().to_signed();
    Value::Array(s.chunks(n).map(|row| Value::Array(row.iter().map(int_json).collect())).collect())
}

fn matrix_text(g: &GroupElement) -> String {
    let n = g.dim();
    let rows: Vec<String> = g
        .matrix()
        .to_signed()
        .chunks(n)
        .map(|row| row.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))
        .collect();
    format!("[{}]", rows.join("; "))
}

fn word_text(w: &TreeWord, d: usize) -> String {
    if w.is_empty() {
        "-".into()
    } else {
        w.render(d)
    }
}

fn endo(cfg: &Global) -> CliResult<VirtualEndo> {
    let vals = match &cfg.vals {
        Some(s) => literal::int_list(s)?,
        None => literal::default_vals(cfg.dim()),
    };
    if vals.len() != cfg.dim() {
        return Err(Error::Precondition(format!("{} valuations given for n = {}", vals.len(), cfg.dim())).into());
    }
    Ok(VirtualEndo::new(cfg.p, &vals)?)
}

fn action(cfg: &Global) -> CliResult<Action> {
    Ok(Action::for_endo(endo(cfg)?, cfg.precision)?)
}

fn element(cfg: &Global, s: &str) -> CliResult<GroupElement> {
    let entries = literal::matrix(s, cfg.dim())?;
    Ok(GroupElement::new(PMatrix::new(cfg.p, cfg.precision, cfg.dim(), &entries))?)
}

fn algebra(p: u64, a: Option<i64>, b: Option<i64>) -> CliResult<QuaternionAlgebra> {
    Ok(match (a, b) {
        (None, None) => QuaternionAlgebra::default_for(p)?,
        (Some(a), Some(b)) => QuaternionAlgebra::new(p, a, b)?,
        _ => return Err(Error::Parse("give both -a and -b or neither".into()).into()),
    })
}

pub fn transversal(cfg: &Global, m: Option<u32>) -> CliResult<String> {
    let m = match m {
        Some(m) => m,
        None => endo(cfg)?.level(),
    };
    let t = Transversal::enumerate(cfg.dim(), cfg.p, m, cfg.precision)?;
    match format(cfg, Format::Json, &[Format::Json, Format::Text])? {
        Format::Json => Ok(pretty(&t.to_export())),
        _ => {
            let mut out = format!("d = {}\n", t.len());
            for (i, h) in t.reps().iter().enumerate() {
                writeln!(out, "{i}: {}", matrix_text(h)).unwrap();
            }
            Ok(out)
        }
    }
}

pub fn act(cfg: &Global, g: &str, word: &str) -> CliResult<String> {
    let a = action(cfg)?;
    let g = element(cfg, g)?;
    let d = a.degree();
    let w = TreeWord::parse(word, d)?;
    let (img, r) = a.act_word_with_restriction(&g, &w)?;
    match format(cfg, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => Ok(pretty(&json!({
            "d": d,
            "word": w,
            "image": img,
            "restriction": matrix_json(&r),
            "precision": r.precision(),
        }))),
        _ => Ok(format!(
            "image: {}\nrestriction: {} (mod {}^{})\n",
            word_text(&img, d),
            matrix_text(&r),
            cfg.p,
            r.precision()
        )),
    }
}

pub fn portrait(cfg: &Global, g: &str, depth: usize) -> CliResult<String> {
    let a = action(cfg)?;
    let g = element(cfg, g)?;
    let portrait = a.portrait_with_cap(&g, depth, cfg.budget)?;
    match format(cfg, Format::Json, &[Format::Json, Format::Text])? {
        Format::Json => Ok(pretty(&portrait)),
        _ => {
            let mut out = String::new();
            for node in &portrait.nodes {
                let perm: Vec<String> = node.perm.iter().map(ToString::to_string).collect();
                writeln!(out, "{}: {}", word_text(&node.word, portrait.d), perm.join(" ")).unwrap();
            }
            Ok(out)
        }
    }
}

fn random_member(rng: &mut ChaCha8Rng, a: &Action, prec: u32) -> GroupElement {
    let e = a.endo();
    let (n, p) = (e.dim(), e.prime());
    let len = rng.gen_range(1..6);
    if rng.gen_bool(0.3) {
        let level = e.level() + rng.gen_range(0..4);
        random_congruence(rng, n, p, prec, level, 3)
    } else {
        random_sl(rng, n, p, prec, len, Some(a.transversal()))
    }
}

pub fn check_wreath(cfg: &Global, samples: usize, max_len: usize) -> CliResult<String> {
    let a = action(cfg)?;
    let reachable = (cfg.precision.saturating_sub(a.endo().level()) / a.endo().gap().max(1)) as usize;
    if max_len > reachable {
        return Err(Error::PrecisionExhausted {
            depth: max_len,
            required: a.required_precision(max_len),
            available: cfg.precision,
        }
        .into());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let d = a.degree();
    let cases: Vec<_> = (0..samples)
        .map(|_| {
            let g1 = random_member(&mut rng, &a, cfg.precision);
            let g2 = random_member(&mut rng, &a, cfg.precision);
            let len = rng.gen_range(0..=max_len);
            let v = TreeWord::new((0..len).map(|_| rng.gen_range(0..d)).collect(), d).expect("letters below d");
            let cut = rng.gen_range(0..=len);
            (g1, g2, v, cut)
        })
        .collect();
    let results: Vec<(bool, bool)> = cases
        .par_iter()
        .map(|(g1, g2, v, cut)| -> selfsim::Result<(bool, bool)> {
            let (img2, r2) = a.act_word_with_restriction(g2, v)?;
            let (img12, r12) = a.act_word_with_restriction(&g1.mul(g2), v)?;
            let (img1, r1) = a.act_word_with_restriction(g1, &img2)?;
            let product = img12 == img1 && r12 == r1.mul(&r2);
            let (v1, v2) = v.split_at(*cut);
            let stepwise = a.restriction(&a.restriction(g1, &v1)?, &v2)?;
            Ok((product, a.restriction(g1, v)? == stepwise))
        })
        .collect::<selfsim::Result<_>>()?;
    let product_fail = results.iter().filter(|r| !r.0).count();
    let compose_fail = results.iter().filter(|r| !r.1).count();
    let out = match format(cfg, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => pretty(&json!({
            "samples": samples,
            "max_len": max_len,
            "product_violations": product_fail,
            "composition_violations": compose_fail,
        })),
        _ => format!(
            "samples: {samples}\nproduct rule violations: {product_fail}\ncomposition rule violations: {compose_fail}\n"
        ),
    };
    if product_fail + compose_fail > 0 {
        return Err(CliError::Check(out));
    }
    Ok(out)
}

pub fn invariance(cfg: &Global, subgroup: &str, samples: usize) -> CliResult<String> {
    let e = endo(cfg)?;
    let spec = literal::subgroup(subgroup)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let inv = check_invariance(&e, &spec, cfg.precision, samples, &mut rng)?;
    let norm = normality_witness(&spec, e.dim(), e.prime(), cfg.precision, e.level(), samples, &mut rng)?;
    let inv_json = match &inv {
        InvarianceVerdict::InvariantOnSample { checked } => json!({"verdict": "invariant-on-sample", "checked": checked}),
        InvarianceVerdict::Witness { g, image, checked } => json!({
            "verdict": "witness", "checked": checked, "g": matrix_json(g), "image": matrix_json(image),
        }),
    };
    let norm_json = match &norm {
        NormalityVerdict::NormalOnSample { checked } => json!({"verdict": "normal-on-sample", "checked": checked}),
        NormalityVerdict::Witness { g, h, conjugate, checked } => json!({
            "verdict": "witness", "checked": checked,
            "g": matrix_json(g), "h": matrix_json(h), "conjugate": matrix_json(conjugate),
        }),
    };
    match format(cfg, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => Ok(pretty(&json!({
            "subgroup": subgroup,
            "endo": e.to_spec(),
            "invariance": inv_json,
            "normality": norm_json,
        }))),
        _ => {
            let mut out = String::new();
            match &inv {
                InvarianceVerdict::InvariantOnSample { checked } => {
                    writeln!(out, "invariance: no witness among {checked} samples").unwrap()
                }
                InvarianceVerdict::Witness { g, image, checked } => writeln!(
                    out,
                    "invariance: witness after {checked} samples\n  g = {}\n  phi(g) = {} leaves {subgroup}",
                    matrix_text(g),
                    matrix_text(image)
                )
                .unwrap(),
            }
            match &norm {
                NormalityVerdict::NormalOnSample { checked } => {
                    writeln!(out, "normality: no witness among {checked} samples").unwrap()
                }
                NormalityVerdict::Witness { g, h, conjugate, checked } => writeln!(
                    out,
                    "normality: witness after {checked} samples\n  g = {}\n  h = {}\n  h g h^-1 = {} leaves {subgroup}",
                    matrix_text(g),
                    matrix_text(h),
                    matrix_text(conjugate)
                )
                .unwrap(),
            }
            Ok(out)
        }
    }
}

pub fn building_distance(cfg: &Global, from: Option<&str>, to: &str, bfs: Option<usize>) -> CliResult<String> {
    let lattice = |s: &str| -> CliResult<LatticeClass> {
        Ok(LatticeClass::from_integer_matrix(cfg.p, cfg.dim(), &literal::matrix(s, cfg.dim())?)?)
    };
    let start = match from {
        Some(s) => lattice(s)?,
        None => LatticeClass::standard(cfg.p, cfg.dim())?,
    };
    let goal = lattice(to)?;
    let distance = start.distance(&goal)?;
    let searched = match bfs {
        Some(r) => Some(bfs_distance(&start, &goal, r, |_| true)?),
        None => None,
    };
    match format(cfg, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => Ok(pretty(&json!({
            "from": start.to_json(),
            "to": goal.to_json(),
            "distance": distance,
            "bfs": searched.map(|s| json!({"radius": bfs, "distance": s})),
        }))),
        _ => {
            let mut out = format!("from: {start}\nto: {goal}\ndistance: {distance}\n");
            match (searched, bfs) {
                (Some(Some(s)), _) => writeln!(out, "search: {s}").unwrap(),
                (Some(None), Some(r)) => writeln!(out, "search: not reached within radius {r}").unwrap(),
                _ => {}
            }
            Ok(out)
        }
    }
}

pub fn displacement(cfg: &Global, t_max: u32) -> CliResult<String> {
    let e = endo(cfg)?;
    match format(cfg, Format::Csv, &[Format::Csv, Format::Json, Format::Text])? {
        Format::Csv => Ok(displacement_csv(&e, t_max)?),
        Format::Json => {
            let rows = (0..=t_max)
                .map(|t| Ok(json!({"t": t, "distance": orbit_displacement(&e, t)?})))
                .collect::<selfsim::Result<Vec<_>>>()?;
            Ok(pretty(&json!({"endo": e.to_spec(), "rows": rows})))
        }
        _ => {
            let mut out = format!("{:>3}  {:>8}\n", "t", "distance");
            for t in 0..=t_max {
                writeln!(out, "{t:>3}  {:>8}", orbit_displacement(&e, t)?).unwrap();
            }
            Ok(out)
        }
    }
}

pub fn apartment_svg(cfg: &Global, radius: u32, steps: u32, bary: &str) -> CliResult<String> {
    let n = cfg.dim_or(3);
    if n != 3 {
        return Err(Error::Unsupported(format!("the apartment figure needs n = 3, got n = {n}")).into());
    }
    let vals = match &cfg.vals {
        Some(s) => literal::int_list(s)?,
        None => literal::default_vals(3),
    };
    let w = apartment_window(radius, &vals, &literal::barycentric(bary)?, steps)?;
    match format(cfg, Format::Svg, &[Format::Svg, Format::Json, Format::Text])? {
        Format::Svg => Ok(w.to_svg()),
        Format::Json => Ok(pretty(&w)),
        _ => {
            let mut out = String::new();
            for a in &w.gallery {
                writeln!(out, "{},{},{}", a.a, a.b, a.c).unwrap();
            }
            Ok(out)
        }
    }
}

pub fn quat_check(cfg: &Global, a: Option<i64>, b: Option<i64>, samples: usize) -> CliResult<String> {
    let (a, b) = match (a, b) {
        (None, None) => {
            let alg = QuaternionAlgebra::default_for(cfg.p)?;
            (alg.a, alg.b)
        }
        (Some(a), Some(b)) => (a, b),
        _ => return Err(Error::Parse("give both -a and -b or neither".into()).into()),
    };
    let division = is_division(a, b, cfg.p)?;
    let zero = primitive_zero(a, b, cfg.p, 3)?;
    let mut norm_failures = None;
    if division {
        let alg = QuaternionAlgebra::new(cfg.p, a, b)?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut bad = 0usize;
        for _ in 0..samples {
            let x = random_element(&mut rng, &alg, cfg.precision);
            let y = random_element(&mut rng, &alg, cfg.precision);
            if x.mul(&y)?.nrd() != &x.nrd() * &y.nrd() {
                bad += 1;
            }
        }
        norm_failures = Some(bad);
    }
    let out = match format(cfg, Format::Text, &[Format::Json, Format::Text])? {
        Format::Json => pretty(&json!({
            "p": cfg.p, "a": a, "b": b,
            "division": division,
            "primitive_zero_mod_p3": zero,
            "norm_samples": if division { samples } else { 0 },
            "norm_violations": norm_failures,
        })),
        _ => {
            let mut out = format!("algebra: ({a}, {b})/Q_{}\n", cfg.p);
            writeln!(out, "division algebra: {}", if division { "yes" } else { "no" }).unwrap();
            match zero {
                None => writeln!(out, "primitive zero of the norm form mod {}^3: none", cfg.p).unwrap(),
                Some(z) => writeln!(out, "primitive zero of the norm form mod {}^3: {z:?}", cfg.p).unwrap(),
            }
            if let Some(bad) = norm_failures {
                writeln!(out, "norm multiplicativity: {bad} violations in {samples} pairs").unwrap();
            }
            out
        }
    };
    if norm_failures.is_some_and(|b| b > 0) {
        return Err(CliError::Check(out));
    }
    Ok(out)
}

struct Row {
    t: u32,
    building: u64,
    quaternion: u32,
}

pub fn dichotomy_report(
    cfg: &Global,
    t_max: u32,
    samples: usize,
    anisotropic_only: bool,
    a: Option<i64>,
    b: Option<i64>,
) -> CliResult<String> {
    let e = if anisotropic_only { None } else { Some(endo(cfg)?) };
    let alg = algebra(cfg.p, a, b)?;
    let pi = uniformizer(&alg, cfg.precision)?;
    let mut powers = vec![alg.one(cfg.precision)];
    for _ in 0..t_max {
        powers.push(powers.last().unwrap().mul(&pi)?);
    }
    let rows: Vec<Row> = (0..=t_max)
        .into_par_iter()
        .map(|t| -> selfsim::Result<Row> {
            let building = match &e {
                Some(e) => orbit_displacement(e, t)?,
                None => 0,
            };
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(u64::from(t)));
            let mut quaternion = 0;
            for k in QUAT_LEVELS {
                quaternion = quaternion.max(conj_displacement(&mut rng, &powers[t as usize], k, samples)?);
            }
            Ok(Row { t, building, quaternion })
        })
        .collect::<selfsim::Result<_>>()?;
    let fragment = DichotomyFragment {
        algebra: alg,
        samples: samples * QUAT_LEVELS.len() * rows.len(),
        max_displacement: rows.iter().map(|r| r.quaternion).max().unwrap_or(0),
    };
    let grows = rows.last().is_some_and(|r| r.building > 0);
    let mut verdict = String::new();
    match &e {
        Some(e) if grows => write!(
            verdict,
            "SL({}, Q_{}): displacement of the standard vertex grows linearly in t, so powers of the conjugator \
             have unbounded orbits on the building. ",
            e.dim(),
            e.prime()
        )
        .unwrap(),
        Some(e) => write!(verdict, "SL({}, Q_{}): only t = 0 was examined. ", e.dim(), e.prime()).unwrap(),
        None => verdict.push_str("SL(1, D) is anisotropic: its building is a single point, so the displacement is 0. "),
    }
    if fragment.max_displacement == 0 {
        write!(
            verdict,
            "SL(1, D) for D = {alg}: conjugation by powers of a uniformizer preserves every sampled filtration level."
        )
        .unwrap();
    } else {
        write!(
            verdict,
            "SL(1, D) for D = {alg}: conjugation moved a filtration level by {}.",
            fragment.max_displacement
        )
        .unwrap();
    }
    match format(cfg, Format::Text, &[Format::Json, Format::Text, Format::Csv])? {
        Format::Json => Ok(pretty(&json!({
            "isotropic": e.as_ref().map(|e| e.to_spec()),
            "anisotropic": fragment,
            "rows": rows.iter().map(|r| json!({"t": r.t, "building": r.building, "quaternion": r.quaternion})).collect::<Vec<_>>(),
            "verdict": verdict,
        }))),
        Format::Csv => {
            let mut out = String::from("t,building,quaternion\n");
            for r in &rows {
                writeln!(out, "{},{},{}", r.t, r.building, r.quaternion).unwrap();
            }
            Ok(out)
        }
        _ => {
            let mut out = format!("{:>3}  {:>8}  {:>10}\n", "t", "building", "quaternion");
            for r in &rows {
                writeln!(out, "{:>3}  {:>8}  {:>10}", r.t, r.building, r.quaternion).unwrap();
            }
            writeln!(out, "\n{verdict}").unwrap();
            Ok(out)
        }
    }
}
