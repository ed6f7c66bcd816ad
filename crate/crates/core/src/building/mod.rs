//! Lattice model of the Bruhat–Tits building of `SL(n, Q_p)`.
//!
//! A vertex is a homothety class of full-rank `Z_p`-lattices in `Q_p^n`,
//! stored as a canonical basis. Two classes are adjacent when they have
//! representatives with `pM ⊆ L ⊆ M`. Graph distance is the spread of the
//! elementary divisors of one lattice relative to the other.

pub mod apartment;

use std::collections::{HashMap, VecDeque};
use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, ToPrimitive, Zero};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::padic::{check_prime, val_p, Padic};
use crate::virtual_endo::VirtualEndo;

pub use apartment::{apartment_window, emit_apartment_svg, Alcove, ApartmentWindow};

/// Largest dimension for which neighbours are enumerated.
pub const MAX_NEIGHBOR_DIM: usize = 4;

type Q = BigRational;

fn p_power(p: u64, e: i64) -> Q {
    let base = BigInt::from(p).pow(e.unsigned_abs() as u32);
    if e >= 0 {
        Q::from_integer(base)
    } else {
        Q::new(BigInt::one(), base)
    }
}

fn valuation(x: &Q, p: u64) -> Option<i64> {
    if x.is_zero() {
        None
    } else {
        Some(val_p(x, p).expect("nonzero"))
    }
}

fn min_valuation<'a>(xs: impl IntoIterator<Item = &'a Q>, p: u64) -> Option<i64> {
    xs.into_iter().filter_map(|x| valuation(x, p)).min()
}

/// Representative in `[0, p^e)` of an element of `Z_(p)`.
fn zp_residue(x: &Q, p: u64, e: u32) -> BigInt {
    if e == 0 || x.is_zero() {
        return BigInt::zero();
    }
    let num = Padic::new(p, e, x.numer().clone());
    let den = Padic::new(p, e, x.denom().clone())
        .unit_inverse()
        .expect("element of Z_(p)");
    BigInt::from((&num * &den).residue().clone())
}

fn axpy(target: &mut [Q], q: &Q, source: &[Q]) {
    for (t, s) in target.iter_mut().zip(source) {
        *t -= q * s;
    }
}

/// Solves `U X = B` for upper-triangular invertible `U` by back substitution.
fn solve_upper(n: usize, u: &[Q], k: usize, b: &[Q]) -> Result<Vec<Q>> {
    let mut x = vec![Q::zero(); n * k];
    for i in (0..n).rev() {
        let d = &u[i * n + i];
        if d.is_zero() {
            return Err(Error::SingularMatrix);
        }
        for c in 0..k {
            let mut acc = b[i * k + c].clone();
            for j in (i + 1)..n {
                if !u[i * n + j].is_zero() {
                    acc -= &u[i * n + j] * &x[j * k + c];
                }
            }
            x[i * k + c] = acc / d;
        }
    }
    Ok(x)
}

/// Valuations of the elementary divisors of an `n×n` matrix over `Q_p`.
fn elementary_divisors(n: usize, x: &[Q], p: u64) -> Result<Vec<i64>> {
    let mut rows: Vec<Vec<Q>> = (0..n).map(|i| x[i * n..(i + 1) * n].to_vec()).collect();
    let mut cols: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(n);
    while !rows.is_empty() {
        let mut best: Option<(i64, usize, usize)> = None;
        for (r, row) in rows.iter().enumerate() {
            for &c in &cols {
                if let Some(v) = valuation(&row[c], p) {
                    if best.is_none_or(|(bv, _, _)| v < bv) {
                        best = Some((v, r, c));
                    }
                }
            }
        }
        let (v, r, c) = best.ok_or(Error::SingularMatrix)?;
        out.push(v);
        let pivot_row = rows.swap_remove(r);
        for row in rows.iter_mut() {
            if !row[c].is_zero() {
                let q = &row[c] / &pivot_row[c];
                axpy(row, &q, &pivot_row);
            }
        }
        cols.retain(|&x| x != c);
    }
    out.sort_unstable();
    Ok(out)
}

/// A vertex of the building: the homothety class of the lattice spanned by
/// the columns of `basis`, in canonical form.
///
/// The canonical basis is upper triangular with diagonal `p^{e_1}, …, p^{e_n}`
/// and entries above the diagonal reduced into `[0, p^{e_i})`. The class is
/// scaled so that the lattice lies in `Z_p^n` but not in `p Z_p^n`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct LatticeClass {
    p: u64,
    n: usize,
    basis: Vec<BigInt>,
}

impl LatticeClass {
    /// Class of the lattice spanned by the `k` columns of an `n×k` rational
    /// matrix (row-major). The columns must span `Q_p^n`.
    pub fn from_generators(p: u64, n: usize, k: usize, entries: &[Q]) -> Result<Self> {
        check_prime(p)?;
        if n == 0 || entries.len() != n * k {
            return Err(Error::Precondition(format!(
                "expected {n}×{k} generator matrix, got {} entries",
                entries.len()
            )));
        }
        let shift = min_valuation(entries, p).ok_or(Error::SingularMatrix)?;
        let scale = p_power(p, -shift);
        let mut active: Vec<Vec<Q>> = (0..k)
            .map(|j| (0..n).map(|i| &entries[i * k + j] * &scale).collect())
            .collect();
        let mut pivots: Vec<(Vec<Q>, u32)> = Vec::with_capacity(n);
        for r in (0..n).rev() {
            let (idx, e) = active
                .iter()
                .enumerate()
                .filter_map(|(idx, c)| valuation(&c[r], p).map(|v| (idx, v)))
                .min_by_key(|&(idx, v)| (v, idx))
                .ok_or(Error::SingularMatrix)?;
            let mut pivot = active.swap_remove(idx);
            let unit = &pivot[r] / p_power(p, e);
            for x in pivot.iter_mut() {
                *x /= &unit;
            }
            let pe = p_power(p, e);
            for c in active.iter_mut() {
                if !c[r].is_zero() {
                    let q = &c[r] / &pe;
                    axpy(c, &q, &pivot);
                }
            }
            pivots.push((pivot, e as u32));
        }
        pivots.reverse();
        for j in 0..n {
            for i in (0..j).rev() {
                let e = pivots[i].1;
                let x = pivots[j].0[i].clone();
                let r = Q::from_integer(zp_residue(&x, p, e));
                if x != r {
                    let q = (&x - &r) / p_power(p, e as i64);
                    let source = pivots[i].0.clone();
                    axpy(&mut pivots[j].0, &q, &source);
                }
            }
        }
        let mut basis = vec![BigInt::zero(); n * n];
        for (j, (col, _)) in pivots.iter().enumerate() {
            for i in 0..n {
                debug_assert!(col[i].is_integer(), "canonical entries are integral");
                basis[i * n + j] = col[i].to_integer();
            }
        }
        Ok(LatticeClass { p, n, basis })
    }

    pub fn from_rational_matrix(p: u64, n: usize, entries: &[Q]) -> Result<Self> {
        Self::from_generators(p, n, n, entries)
    }

    pub fn from_integer_matrix(p: u64, n: usize, entries: &[BigInt]) -> Result<Self> {
        let q: Vec<Q> = entries.iter().cloned().map(Q::from_integer).collect();
        Self::from_generators(p, n, n, &q)
    }

    pub fn from_i64(p: u64, n: usize, entries: &[i64]) -> Result<Self> {
        let q: Vec<Q> = entries.iter().map(|&x| Q::from_integer(x.into())).collect();
        Self::from_generators(p, n, n, &q)
    }

    /// `[Z_p^n]`.
    pub fn standard(p: u64, n: usize) -> Result<Self> {
        Self::diagonal(p, &vec![0; n])
    }

    /// `[Λ_i]`, spanned by `e_1, …, e_{n-i}, p e_{n-i+1}, …, p e_n`.
    pub fn standard_vertex(p: u64, n: usize, i: usize) -> Result<Self> {
        if i >= n {
            return Err(Error::Precondition(format!("vertex index {i} must be below n = {n}")));
        }
        let exps: Vec<i64> = (0..n).map(|k| i64::from(k >= n - i)).collect();
        Self::diagonal(p, &exps)
    }

    /// Class of `diag(p^{a_1}, …, p^{a_n}) Z_p^n`.
    pub fn diagonal(p: u64, exps: &[i64]) -> Result<Self> {
        let n = exps.len();
        let mut q = vec![Q::zero(); n * n];
        for (i, &a) in exps.iter().enumerate() {
            q[i * n + i] = p_power(p, a);
        }
        Self::from_generators(p, n, n, &q)
    }

    pub fn prime(&self) -> u64 {
        self.p
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Canonical basis, row-major; columns span the lattice.
    pub fn basis(&self) -> &[BigInt] {
        &self.basis
    }

    /// Exponents `e_i` of the diagonal pivots.
    pub fn pivot_exponents(&self) -> Vec<u32> {
        (0..self.n)
            .map(|i| {
                let x = Q::from_integer(self.basis[i * self.n + i].clone());
                valuation(&x, self.p).unwrap_or(0) as u32
            })
            .collect()
    }

    fn rational_basis(&self) -> Vec<Q> {
        self.basis.iter().cloned().map(Q::from_integer).collect()
    }

    /// Image under an integer matrix `g` (row-major `n×n`) acting on `Q_p^n`.
    pub fn transform(&self, g: &[BigInt]) -> Result<Self> {
        let n = self.n;
        if g.len() != n * n {
            return Err(Error::Mismatch(format!("expected {n}×{n} matrix")));
        }
        let mut out = vec![BigInt::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                out[i * n + j] = (0..n).map(|k| &g[i * n + k] * &self.basis[k * n + j]).sum();
            }
        }
        Self::from_integer_matrix(self.p, n, &out)
    }

    fn check_compatible(&self, other: &LatticeClass) -> Result<()> {
        if self.p != other.p || self.n != other.n {
            return Err(Error::Mismatch(format!(
                "lattices over (n={}, p={}) and (n={}, p={})",
                self.n, self.p, other.n, other.p
            )));
        }
        Ok(())
    }

    /// Sorted elementary-divisor valuations of `other` relative to `self`.
    pub fn relative_divisors(&self, other: &LatticeClass) -> Result<Vec<i64>> {
        self.check_compatible(other)?;
        let x = solve_upper(self.n, &self.rational_basis(), self.n, &other.rational_basis())?;
        elementary_divisors(self.n, &x, self.p)
    }

    /// Graph distance in the 1-skeleton.
    pub fn distance(&self, other: &LatticeClass) -> Result<u64> {
        let d = self.relative_divisors(other)?;
        Ok((d[d.len() - 1] - d[0]) as u64)
    }

    /// Whether the two distinct classes are joined by an edge.
    pub fn incident(&self, other: &LatticeClass) -> Result<bool> {
        self.check_compatible(other)?;
        if self == other {
            return Err(Error::Precondition("incidence of a class with itself".into()));
        }
        let n = self.n;
        let (l, m) = (self.rational_basis(), other.rational_basis());
        // M ⊆ p^s L with s maximal; then p^{-s}M ⊆ L and we need pL ⊆ p^{-s}M
        let s = min_valuation(&solve_upper(n, &l, n, &m)?, self.p).ok_or(Error::SingularMatrix)?;
        let t = min_valuation(&solve_upper(n, &m, n, &l)?, self.p).ok_or(Error::SingularMatrix)?;
        Ok(t + 1 + s >= 0)
    }

    /// All classes adjacent to this one, from the proper nonzero subspaces
    /// of `L / pL`.
    pub fn neighbors(&self) -> Result<Vec<LatticeClass>> {
        let (n, p) = (self.n, self.p);
        if n > MAX_NEIGHBOR_DIM {
            return Err(Error::CapExceeded(format!(
                "neighbour enumeration supports n ≤ {MAX_NEIGHBOR_DIM}, got {n}"
            )));
        }
        let b = self.rational_basis();
        let pq = Q::from_integer(p.into());
        let mut out = Vec::new();
        for subspace in proper_subspaces(n, p) {
            let k = subspace.len() + n;
            let mut gens = vec![Q::zero(); n * k];
            for (c, w) in subspace.iter().enumerate() {
                for i in 0..n {
                    gens[i * k + c] = (0..n)
                        .map(|j| &b[i * n + j] * Q::from_integer(w[j].into()))
                        .sum();
                }
            }
            for j in 0..n {
                for i in 0..n {
                    gens[i * k + subspace.len() + j] = &b[i * n + j] * &pq;
                }
            }
            out.push(Self::from_generators(p, n, k, &gens)?);
        }
        out.sort();
        Ok(out)
    }

    /// Canonical basis as JSON integers.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<serde_json::Value>> = (0..self.n)
            .map(|i| {
                (0..self.n)
                    .map(|j| {
                        let x = &self.basis[i * self.n + j];
                        x.to_i64()
                            .map(serde_json::Value::from)
                            .unwrap_or_else(|| serde_json::Value::from(x.to_string()))
                    })
                    .collect()
            })
            .collect();
        serde_json::json!(rows)
    }
}

impl fmt::Display for LatticeClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[")?;
        for i in 0..self.n {
            if i > 0 {
                write!(f, "; ")?;
            }
            for j in 0..self.n {
                if j > 0 {
                    write!(f, " ")?;
                }
                write!(f, "{}", self.basis[i * self.n + j])?;
            }
        }
        write!(f, "]")
    }
}

/// Proper nonzero subspaces of `F_p^n`, each as the rows of its reduced row
/// echelon form.
pub fn proper_subspaces(n: usize, p: u64) -> Vec<Vec<Vec<u64>>> {
    let mut out = Vec::new();
    for r in 1..n {
        for pivots in combinations(n, r) {
            let free: Vec<(usize, usize)> = pivots
                .iter()
                .enumerate()
                .flat_map(|(t, &c)| ((c + 1)..n).filter(|j| !pivots.contains(j)).map(move |j| (t, j)))
                .collect();
            let total = (p as usize).pow(free.len() as u32);
            for mut code in 0..total {
                let mut rows = vec![vec![0u64; n]; r];
                for (t, &c) in pivots.iter().enumerate() {
                    rows[t][c] = 1;
                }
                for &(t, j) in &free {
                    rows[t][j] = (code % p as usize) as u64;
                    code /= p as usize;
                }
                out.push(rows);
            }
        }
    }
    out
}

fn combinations(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// A maximal simplex: `n` pairwise adjacent classes.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Chamber {
    vertices: Vec<LatticeClass>,
}

impl Chamber {
    pub fn new(vertices: Vec<LatticeClass>) -> Result<Self> {
        let n = vertices.first().map(|v| v.dim()).unwrap_or(0);
        if vertices.len() != n || n < 2 {
            return Err(Error::Precondition(format!(
                "a chamber needs exactly n vertices, got {}",
                vertices.len()
            )));
        }
        for i in 0..n {
            for j in (i + 1)..n {
                if vertices[i] == vertices[j] || !vertices[i].incident(&vertices[j])? {
                    return Err(Error::Precondition(format!(
                        "vertices {i} and {j} are not adjacent"
                    )));
                }
            }
        }
        Ok(Chamber { vertices })
    }

    /// The chamber `C` with vertices `[Λ_0], …, [Λ_{n-1}]`.
    pub fn standard(p: u64, n: usize) -> Result<Self> {
        let vertices = (0..n)
            .map(|i| LatticeClass::standard_vertex(p, n, i))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vertices)
    }

    pub fn vertices(&self) -> &[LatticeClass] {
        &self.vertices
    }
}

/// A vertex of the standard apartment, `[diag(p^{a_i}) Z_p^n]`, with
/// coordinates normalized to `min a_i = 0`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ApartmentVertex {
    a: Vec<i64>,
}

impl ApartmentVertex {
    pub fn new(a: &[i64]) -> Result<Self> {
        let min = *a
            .iter()
            .min()
            .ok_or_else(|| Error::Precondition("empty coordinate vector".into()))?;
        Ok(ApartmentVertex {
            a: a.iter().map(|x| x - min).collect(),
        })
    }

    pub fn coords(&self) -> &[i64] {
        &self.a
    }

    pub fn to_lattice(&self, p: u64) -> Result<LatticeClass> {
        LatticeClass::diagonal(p, &self.a)
    }
}

/// Vertices within a given distance of a centre, with the induced adjacency.
#[derive(Clone, Debug)]
pub struct Ball {
    vertices: Vec<LatticeClass>,
    depth: Vec<usize>,
    adjacency: Vec<Vec<usize>>,
    index: HashMap<LatticeClass, usize>,
}

impl Ball {
    pub fn new(center: &LatticeClass, radius: usize) -> Result<Self> {
        let mut vertices = vec![center.clone()];
        let mut depth = vec![0];
        let mut index = HashMap::from([(center.clone(), 0)]);
        let mut neighbor_lists: Vec<Vec<LatticeClass>> = Vec::new();
        let mut queue = VecDeque::from([0usize]);
        while let Some(i) = queue.pop_front() {
            let nbrs = vertices[i].neighbors()?;
            if depth[i] < radius {
                for v in &nbrs {
                    if !index.contains_key(v) {
                        index.insert(v.clone(), vertices.len());
                        vertices.push(v.clone());
                        depth.push(depth[i] + 1);
                        queue.push_back(vertices.len() - 1);
                    }
                }
            }
            if neighbor_lists.len() <= i {
                neighbor_lists.resize(i + 1, Vec::new());
            }
            neighbor_lists[i] = nbrs;
        }
        let adjacency = neighbor_lists
            .iter()
            .map(|nbrs| {
                let mut adj: Vec<usize> = nbrs.iter().filter_map(|v| index.get(v).copied()).collect();
                adj.sort_unstable();
                adj
            })
            .collect();
        Ok(Ball {
            vertices,
            depth,
            adjacency,
            index,
        })
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertices(&self) -> &[LatticeClass] {
        &self.vertices
    }

    /// Distance of each vertex from the centre.
    pub fn depths(&self) -> &[usize] {
        &self.depth
    }

    pub fn adjacency(&self) -> &[Vec<usize>] {
        &self.adjacency
    }

    pub fn index_of(&self, v: &LatticeClass) -> Option<usize> {
        self.index.get(v).copied()
    }

    /// BFS distances from vertex `i` inside the ball's induced subgraph.
    pub fn bfs_from(&self, i: usize) -> Vec<Option<usize>> {
        let mut dist = vec![None; self.len()];
        dist[i] = Some(0);
        let mut queue = VecDeque::from([i]);
        while let Some(u) = queue.pop_front() {
            let du = dist[u].expect("visited");
            for &w in &self.adjacency[u] {
                if dist[w].is_none() {
                    dist[w] = Some(du + 1);
                    queue.push_back(w);
                }
            }
        }
        dist
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        self.adjacency
            .iter()
            .enumerate()
            .flat_map(|(i, adj)| adj.iter().filter(move |&&j| i < j).map(move |&j| (i, j)))
            .collect()
    }

    /// `{vertices: [canonical bases], edges: [[i, j], …]}`.
    pub fn to_graph_json(&self) -> serde_json::Value {
        serde_json::json!({
            "vertices": self.vertices.iter().map(LatticeClass::to_json).collect::<Vec<_>>(),
            "edges": self.edges().iter().map(|&(i, j)| [i, j]).collect::<Vec<_>>(),
        })
    }
}

/// Breadth-first distance from `start` to `goal`, exploring only vertices
/// accepted by `keep` and giving up beyond `max_radius`.
pub fn bfs_distance(
    start: &LatticeClass,
    goal: &LatticeClass,
    max_radius: usize,
    keep: impl Fn(&LatticeClass) -> bool,
) -> Result<Option<usize>> {
    start.check_compatible(goal)?;
    let mut seen = HashMap::from([(start.clone(), 0usize)]);
    let mut queue = VecDeque::from([start.clone()]);
    while let Some(u) = queue.pop_front() {
        let du = seen[&u];
        if &u == goal {
            return Ok(Some(du));
        }
        if du == max_radius {
            continue;
        }
        for v in u.neighbors()? {
            if !seen.contains_key(&v) && keep(&v) {
                seen.insert(v.clone(), du + 1);
                queue.push_back(v);
            }
        }
    }
    Ok(None)
}

/// Whether a class lies in the standard apartment (has a diagonal basis).
pub fn in_standard_apartment(v: &LatticeClass) -> bool {
    let n = v.dim();
    (0..n).all(|i| (0..n).all(|j| i == j || v.basis()[i * n + j].is_zero()))
}

/// Distance from `[Z_p^n]` to `s^t [Z_p^n]`, where `s` is the conjugator of
/// `endo`.
pub fn orbit_displacement(endo: &VirtualEndo, t: u32) -> Result<u64> {
    let p = endo.prime();
    let exps: Vec<i64> = endo.vals().iter().map(|&v| v * i64::from(t)).collect();
    let origin = LatticeClass::standard(p, endo.dim())?;
    origin.distance(&LatticeClass::diagonal(p, &exps)?)
}

/// `t,distance` rows for `t = 0..=t_max`.
pub fn displacement_csv(endo: &VirtualEndo, t_max: u32) -> Result<String> {
    let mut out = String::from("t,distance\n");
    for t in 0..=t_max {
        out.push_str(&format!("{t},{}\n", orbit_displacement(endo, t)?));
    }
    Ok(out)
}
