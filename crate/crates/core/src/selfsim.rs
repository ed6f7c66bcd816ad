//! The self-similar action compiled from a coset transversal and a virtual
//! endomorphism.
//!
//! Letters are the cosets `h_i Γ(p^m)`. For `g` and a letter `i`, the image
//! letter is the unique `j` with `h_j⁻¹ g h_i ∈ Γ(p^m)` and the restriction is
//! `g|_i = φ(h_j⁻¹ g h_i)`. Each restriction step costs `T` digits, so words
//! of length `ℓ` need input precision at least `m + ℓ·T`.

use std::cmp::Reverse;
use std::collections::{BTreeSet, BinaryHeap, HashSet, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::congruence::{is_congruence_member, GroupElement, Transversal};
use crate::error::{Error, Result};
use crate::padic::ResidueMatrix;
use crate::virtual_endo::VirtualEndo;

/// Default bound on portrait size.
pub const DEFAULT_PORTRAIT_CAP: usize = 200_000;

/// A vertex of the tree `X*`: a finite word over `{0, …, d-1}`.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct TreeWord(Vec<usize>);

impl TreeWord {
    pub fn new(letters: Vec<usize>, d: usize) -> Result<Self> {
        if let Some(&bad) = letters.iter().find(|&&x| x >= d) {
            return Err(Error::Precondition(format!("letter {bad} outside alphabet of size {d}")));
        }
        Ok(TreeWord(letters))
    }

    pub fn empty() -> Self {
        TreeWord(Vec::new())
    }

    pub fn letters(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn child(&self, x: usize) -> TreeWord {
        let mut v = self.0.clone();
        v.push(x);
        TreeWord(v)
    }

    pub fn concat(&self, other: &TreeWord) -> TreeWord {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        TreeWord(v)
    }

    pub fn split_at(&self, k: usize) -> (TreeWord, TreeWord) {
        let (a, b) = self.0.split_at(k);
        (TreeWord(a.to_vec()), TreeWord(b.to_vec()))
    }

    /// Parses digit strings (`"0120"`) or, for alphabets larger than ten,
    /// dot-separated letters (`"12.0.47"`). The empty string is the root.
    pub fn parse(s: &str, d: usize) -> Result<Self> {
        let s = s.trim();
        if s.is_empty() || s == "-" {
            return Ok(TreeWord::empty());
        }
        let letters: std::result::Result<Vec<usize>, _> = if s.contains('.') || d > 10 {
            s.split('.').map(|t| t.trim().parse::<usize>()).collect()
        } else {
            s.chars()
                .map(|c| c.to_digit(10).map(|x| x as usize).ok_or(()))
                .collect::<std::result::Result<Vec<_>, ()>>()
                .map_err(|_| "x".parse::<usize>().unwrap_err())
        };
        let letters = letters.map_err(|e| Error::Parse(format!("bad word {s:?}: {e}")))?;
        Self::new(letters, d)
    }

    /// Inverse of [`TreeWord::parse`] for an alphabet of size `d`.
    pub fn render(&self, d: usize) -> String {
        if self.0.is_empty() {
            return String::new();
        }
        if d > 10 {
            self.0.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(".")
        } else {
            self.0.iter().map(|x| x.to_string()).collect()
        }
    }
}

impl fmt::Display for TreeWord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "∅");
        }
        write!(f, "{}", self.render(usize::MAX))
    }
}

/// Per-node letter permutations of an element, to a fixed depth.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Portrait {
    pub d: usize,
    pub depth: usize,
    pub nodes: Vec<PortraitNode>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PortraitNode {
    pub word: TreeWord,
    pub perm: Vec<usize>,
}

impl Portrait {
    pub fn node(&self, word: &TreeWord) -> Option<&PortraitNode> {
        // nodes are stored level by level in lexicographic order
        let d = self.d;
        let mut offset = 0;
        let mut width = 1;
        for _ in 0..word.len() {
            offset += width;
            width *= d;
        }
        let rank = word.letters().iter().fold(0usize, |acc, &x| acc * d + x);
        self.nodes.get(offset + rank).filter(|n| &n.word == word)
    }

    /// Image of a word of length at most `depth`, read off the labels.
    pub fn image(&self, w: &TreeWord) -> Option<TreeWord> {
        if w.len() > self.depth {
            return None;
        }
        let mut out = Vec::with_capacity(w.len());
        for k in 0..w.len() {
            let (prefix, _) = w.split_at(k);
            out.push(self.node(&prefix)?.perm[w.letters()[k]]);
        }
        Some(TreeWord(out))
    }

    pub fn is_trivial(&self) -> bool {
        self.nodes
            .iter()
            .all(|n| n.perm.iter().enumerate().all(|(i, &j)| i == j))
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Level1Orbit {
    pub orbit: Vec<usize>,
    pub transitive: bool,
}

/// Outcome of the search for the shallowest level on which an element acts
/// nontrivially.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Separation {
    /// Smallest `ℓ` such that some word of length `ℓ` is moved.
    pub depth: Option<usize>,
    /// A moved word of length `depth`.
    pub witness: Option<TreeWord>,
    /// Deepest level the precision budget allows the search to certify.
    pub reachable_depth: usize,
    /// Nodes expanded.
    pub explored: usize,
    /// Whether the node budget ran out before the search finished.
    pub budget_exhausted: bool,
}

/// A self-similar action of `SL(n, Z_p)` on the tree of cosets of `Γ(p^m)`.
#[derive(Clone, Debug)]
pub struct Action {
    transversal: Transversal,
    endo: VirtualEndo,
}

impl Action {
    pub fn new(transversal: Transversal, endo: VirtualEndo) -> Result<Self> {
        if transversal.level() != endo.level()
            || transversal.dim() != endo.dim()
            || transversal.prime() != endo.prime()
        {
            return Err(Error::Mismatch(format!(
                "transversal (n={}, p={}, m={}) does not match endomorphism (n={}, p={}, m={})",
                transversal.dim(),
                transversal.prime(),
                transversal.level(),
                endo.dim(),
                endo.prime(),
                endo.level()
            )));
        }
        if !transversal.rep(0).is_identity() {
            return Err(Error::Precondition("letter 0 must be the identity coset".into()));
        }
        Ok(Action { transversal, endo })
    }

    /// Builds the transversal for `endo` at precision `prec`.
    pub fn for_endo(endo: VirtualEndo, prec: u32) -> Result<Self> {
        let t = Transversal::enumerate(endo.dim(), endo.prime(), endo.level(), prec)?;
        Self::new(t, endo)
    }

    pub fn degree(&self) -> usize {
        self.transversal.len()
    }

    pub fn transversal(&self) -> &Transversal {
        &self.transversal
    }

    pub fn endo(&self) -> &VirtualEndo {
        &self.endo
    }

    /// Precision an element needs for words of length `depth`.
    pub fn required_precision(&self, depth: usize) -> u32 {
        self.endo.level() + depth as u32 * self.endo.gap()
    }

    fn effective_precision(&self, g: &GroupElement) -> u32 {
        g.precision().min(self.transversal.precision())
    }

    fn check_budget(&self, g: &GroupElement, depth: usize) -> Result<()> {
        let available = self.effective_precision(g);
        let required = self.required_precision(depth);
        if available < required {
            let m = self.endo.level();
            let failing = if available < m {
                1
            } else {
                ((available - m) / self.endo.gap()) as usize + 1
            };
            return Err(Error::PrecisionExhausted {
                depth: failing,
                required,
                available,
            });
        }
        Ok(())
    }

    /// `g(i)`: needs only `m` digits.
    pub fn letter_image(&self, g: &GroupElement, i: usize) -> Result<usize> {
        self.check_letter(i)?;
        self.transversal.coset_lookup(&g.mul(self.transversal.rep(i)))
    }

    fn check_letter(&self, i: usize) -> Result<()> {
        if i >= self.degree() {
            return Err(Error::Precondition(format!(
                "letter {i} outside alphabet of size {}",
                self.degree()
            )));
        }
        Ok(())
    }

    /// `(g(i), g|_i)` with `g|_i = φ(h_j⁻¹ g h_i)`.
    pub fn act_letter(&self, g: &GroupElement, i: usize) -> Result<(usize, GroupElement)> {
        self.check_letter(i)?;
        self.check_budget(g, 1)?;
        let gh = g.mul(self.transversal.rep(i));
        let j = self.transversal.coset_lookup(&gh)?;
        let inner = self.transversal.rep_inverse(j).mul(&gh);
        Ok((j, self.endo.apply(&inner)?))
    }

    /// Image of `w` together with the restriction `g|_w`.
    pub fn act_word_with_restriction(
        &self,
        g: &GroupElement,
        w: &TreeWord,
    ) -> Result<(TreeWord, GroupElement)> {
        self.check_budget(g, w.len())?;
        let mut r = g.clone();
        let mut out = Vec::with_capacity(w.len());
        for &x in w.letters() {
            let (y, next) = self.act_letter(&r, x)?;
            out.push(y);
            r = next;
        }
        Ok((TreeWord(out), r))
    }

    pub fn act_word(&self, g: &GroupElement, w: &TreeWord) -> Result<TreeWord> {
        Ok(self.act_word_with_restriction(g, w)?.0)
    }

    /// `g|_v`.
    pub fn restriction(&self, g: &GroupElement, v: &TreeWord) -> Result<GroupElement> {
        Ok(self.act_word_with_restriction(g, v)?.1)
    }

    /// Orbit of letter 0 under the group generated by `generators`.
    pub fn level1_orbit(&self, generators: &[GroupElement]) -> Result<Level1Orbit> {
        let mut seen = BTreeSet::from([0usize]);
        let mut queue = VecDeque::from([0usize]);
        while let Some(x) = queue.pop_front() {
            if seen.len() == self.degree() {
                break;
            }
            for g in generators {
                let y = self.letter_image(g, x)?;
                if seen.insert(y) {
                    queue.push_back(y);
                }
            }
        }
        Ok(Level1Orbit {
            transitive: seen.len() == self.degree(),
            orbit: seen.into_iter().collect(),
        })
    }

    pub fn portrait(&self, g: &GroupElement, depth: usize) -> Result<Portrait> {
        self.portrait_with_cap(g, depth, DEFAULT_PORTRAIT_CAP)
    }

    pub fn portrait_with_cap(&self, g: &GroupElement, depth: usize, cap: usize) -> Result<Portrait> {
        self.check_budget(g, depth)?;
        let d = self.degree();
        let mut total = 0usize;
        let mut width = 1usize;
        for _ in 0..depth {
            total = total.saturating_add(width);
            width = width.saturating_mul(d);
        }
        if total > cap {
            return Err(Error::CapExceeded(format!(
                "portrait of depth {depth} has {total} nodes (cap {cap})"
            )));
        }
        let mut nodes = Vec::with_capacity(total);
        let mut frontier = vec![(TreeWord::empty(), g.clone())];
        for level in 0..depth {
            let mut next = Vec::new();
            for (word, r) in frontier {
                let mut perm = Vec::with_capacity(d);
                for i in 0..d {
                    let (j, child) = self.act_letter(&r, i)?;
                    perm.push(j);
                    if level + 1 < depth {
                        next.push((word.child(i), child));
                    }
                }
                nodes.push(PortraitNode { word, perm });
            }
            frontier = next;
        }
        Ok(Portrait { d, depth, nodes })
    }

    /// Smallest depth at which `g` moves a word, searched best-first over the
    /// tree of restrictions.
    ///
    /// The label at a node is nontrivial iff its restriction lies outside
    /// `Γ(p^m)` (the subgroup is normal). A restriction `r ≡ I (mod p^k)`,
    /// `k ≥ m`, has children `≡ I (mod p^{k-T})`, so at least
    /// `⌊(k - m)/T⌋ + 1` further levels pass before a label can be
    /// nontrivial; this bound orders the search.
    pub fn separating_depth(
        &self,
        g: &GroupElement,
        max_depth: usize,
        node_budget: usize,
    ) -> Result<Separation> {
        let m = self.endo.level();
        let t = self.endo.gap();
        let p0 = self.effective_precision(g);
        if p0 < m {
            return Err(Error::InsufficientPrecision {
                needed: m,
                available: p0,
            });
        }
        let reachable = ((p0 - m) / t) as usize + 1;
        let limit = max_depth.min(reachable);

        struct Node {
            word: TreeWord,
            r: GroupElement,
            goal: bool,
        }
        let classify = |word: TreeWord, r: GroupElement| -> Result<Option<(usize, Node)>> {
            let level = word.len();
            if !is_congruence_member(&r, m)? {
                return Ok(Some((level + 1, Node { word, r, goal: true })));
            }
            match r.matrix().identity_distance() {
                None => Ok(None),
                Some(k) => {
                    let steps = ((k - m) / t) as usize + 1;
                    Ok(Some((level + 1 + steps, Node { word, r, goal: false })))
                }
            }
        };

        let mut heap: BinaryHeap<(Reverse<usize>, bool, Reverse<usize>)> = BinaryHeap::new();
        let mut store: Vec<Node> = Vec::new();
        let mut seen: HashSet<ResidueMatrix> = HashSet::new();
        let mut explored = 0;

        let push = |heap: &mut BinaryHeap<_>, store: &mut Vec<Node>, cost: usize, node: Node| {
            heap.push((Reverse(cost), node.goal, Reverse(store.len())));
            store.push(node);
        };

        if let Some((cost, node)) = classify(TreeWord::empty(), g.clone())? {
            push(&mut heap, &mut store, cost, node);
        }
        while let Some((Reverse(cost), goal, Reverse(id))) = heap.pop() {
            if cost > limit {
                break;
            }
            if goal {
                let node = &store[id];
                let moved = (0..self.degree())
                    .find(|&x| self.letter_image(&node.r, x).map(|y| y != x).unwrap_or(false))
                    .expect("restriction outside Γ(p^m) moves a letter");
                return Ok(Separation {
                    depth: Some(cost),
                    witness: Some(node.word.child(moved)),
                    reachable_depth: reachable,
                    explored,
                    budget_exhausted: false,
                });
            }
            if explored >= node_budget {
                return Ok(Separation {
                    depth: None,
                    witness: None,
                    reachable_depth: reachable,
                    explored,
                    budget_exhausted: true,
                });
            }
            explored += 1;
            let (word, r) = {
                let node = &store[id];
                (node.word.clone(), node.r.clone())
            };
            if r.precision().min(self.transversal.precision()) < m + t {
                continue;
            }
            for i in 0..self.degree() {
                // r ∈ Γ(p^m) fixes every letter, so the child restriction is φ(h_i⁻¹ r h_i)
                let inner = self
                    .transversal
                    .rep_inverse(i)
                    .mul(&r)
                    .mul(self.transversal.rep(i));
                let child = self.endo.apply(&inner)?;
                if !seen.insert(child.reduce(child.precision())?) {
                    continue;
                }
                if let Some((c, node)) = classify(word.child(i), child)? {
                    if c <= limit {
                        push(&mut heap, &mut store, c, node);
                    }
                }
            }
        }
        Ok(Separation {
            depth: None,
            witness: None,
            reachable_depth: reachable,
            explored,
            budget_exhausted: false,
        })
    }
}
