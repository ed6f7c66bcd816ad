//! Parsers for compact command-line literals.

use num_bigint::BigInt;
use num_rational::BigRational;
use selfsim::virtual_endo::SubgroupSpec;
use selfsim::{Error, Result};

fn tokens(s: &str) -> impl Iterator<Item = &str> {
    s.split(|c: char| c == ',' || c == ';' || c.is_whitespace())
        .filter(|t| !t.is_empty())
}

/// Comma- or whitespace-separated integers, e.g. `1,-1` or `"2 0 -2"`.
pub fn int_list(s: &str) -> Result<Vec<i64>> {
    tokens(s)
        .map(|t| t.parse::<i64>().map_err(|_| Error::Parse(format!("not an integer: {t:?}"))))
        .collect()
}

/// Row-major `n × n` integer matrix; rows may be separated by `;`.
pub fn matrix(s: &str, n: usize) -> Result<Vec<BigInt>> {
    let entries = tokens(s)
        .map(|t| t.parse::<BigInt>().map_err(|_| Error::Parse(format!("not an integer: {t:?}"))))
        .collect::<Result<Vec<_>>>()?;
    if entries.len() != n * n {
        return Err(Error::Parse(format!(
            "expected {} entries for a {n}×{n} matrix, got {}",
            n * n,
            entries.len()
        )));
    }
    Ok(entries)
}

pub fn rational(t: &str) -> Result<BigRational> {
    let bad = || Error::Parse(format!("not a rational number: {t:?}"));
    match t.split_once('/') {
        Some((a, b)) => {
            let (a, b): (BigInt, BigInt) = (a.parse().map_err(|_| bad())?, b.parse().map_err(|_| bad())?);
            if b == BigInt::from(0) {
                return Err(bad());
            }
            Ok(BigRational::new(a, b))
        }
        None => Ok(BigRational::from_integer(t.parse().map_err(|_| bad())?)),
    }
}

/// Three rationals, e.g. `7/10,1/5,1/10`.
pub fn barycentric(s: &str) -> Result<[BigRational; 3]> {
    let v = tokens(s).map(rational).collect::<Result<Vec<_>>>()?;
    v.try_into()
        .map_err(|_| Error::Parse("barycentric point needs three coordinates".into()))
}

/// `congruence:K`, `center` or `torus:K`.
pub fn subgroup(s: &str) -> Result<SubgroupSpec> {
    let (name, arg) = s.split_once(':').unwrap_or((s, ""));
    let level = || {
        arg.parse::<u32>()
            .map_err(|_| Error::Parse(format!("subgroup {name:?} needs a level, e.g. {name}:2")))
    };
    match name {
        "congruence" => Ok(SubgroupSpec::Congruence(level()?)),
        "torus" => Ok(SubgroupSpec::DiagonalTorus(level()?)),
        "center" => Ok(SubgroupSpec::Center),
        _ => Err(Error::Parse(format!("unknown subgroup {s:?}"))),
    }
}

/// Valuations used when `--vals` is absent: `(1, −1)`, `(1, 0, −1)`,
/// `(3, 1, −1, −3)` and so on.
pub fn default_vals(n: usize) -> Vec<i64> {
    let n = n as i64;
    if n % 2 == 1 {
        (0..n).map(|i| (n - 1) / 2 - i).collect()
    } else {
        (0..n).map(|i| n - 1 - 2 * i).collect()
    }
}
