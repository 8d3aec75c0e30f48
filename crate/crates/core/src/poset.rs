//! Finite labelled posets and digraphs.
//!
//! A [`Poset`] on `n` elements stores its strict order transitively closed, so
//! every order query is a single bit lookup. Builders and file formats use the
//! labels `1..=n`; matrix accessors such as [`Poset::less`] take 0-based
//! indices.

use std::fmt;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::bits::{iter_bits, BitMatrix};
use crate::{Error, Result};

/// How [`Poset::new`] treats relations that are not transitively closed.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Closure {
    /// Reject input whose transitive closure adds pairs.
    RequireClosed,
    /// Close the input.
    #[default]
    TakeClosure,
}

/// A strict partial order on `{1, ..., n}`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Poset {
    rel: BitMatrix,
}

impl Poset {
    /// Builds a poset from strict relations `(i, j)` meaning `i < j`, using 1-based labels.
    pub fn new(n: usize, pairs: &[(usize, usize)], closure: Closure) -> Result<Poset> {
        let mut rel = BitMatrix::new(n);
        for &(i, j) in pairs {
            for label in [i, j] {
                if label == 0 || label > n {
                    return Err(Error::LabelOutOfRange { label, n });
                }
            }
            if i == j {
                return Err(Error::InvalidPair((i, j)));
            }
            rel.set(i - 1, j - 1, true);
        }
        let given = rel.clone();
        rel.transitive_closure();
        if (0..n).any(|i| rel.get(i, i)) {
            return Err(Error::Cycle);
        }
        if closure == Closure::RequireClosed && rel != given {
            let missing = (0..n)
                .flat_map(|i| (0..n).map(move |j| (i, j)))
                .find(|&(i, j)| rel.get(i, j) && !given.get(i, j))
                .map(|(i, j)| (i + 1, j + 1))
                .expect("closure differs from input");
            return Err(Error::NotClosed { missing });
        }
        Ok(Poset { rel })
    }

    /// Wraps a matrix the caller guarantees to be a strict order.
    pub(crate) fn from_matrix(rel: BitMatrix) -> Poset {
        Poset { rel }
    }

    /// Wraps an arbitrary matrix after checking the order axioms.
    pub(crate) fn try_from_matrix(rel: BitMatrix) -> Result<Poset> {
        let p = Poset { rel };
        p.validate().map(|_| p)
    }

    pub(crate) fn matrix(&self) -> &BitMatrix {
        &self.rel
    }

    /// The trivial poset `E_n`: `n` pairwise incomparable elements.
    pub fn trivial(n: usize) -> Poset {
        Poset {
            rel: BitMatrix::new(n),
        }
    }

    /// The chain `T_n` with `1 < 2 < ... < n`.
    pub fn chain(n: usize) -> Poset {
        Self::from_total_order(&(0..n).collect::<Vec<_>>())
    }

    /// The total order listing 0-based indices from bottom to top.
    pub fn from_total_order(order: &[usize]) -> Poset {
        let n = order.len();
        let mut rel = BitMatrix::new(n);
        for (a, &i) in order.iter().enumerate() {
            for &j in &order[a + 1..] {
                rel.set(i, j, true);
            }
        }
        Poset { rel }
    }

    pub fn len(&self) -> usize {
        self.rel.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// `i < j` for 0-based indices.
    #[inline]
    pub fn less(&self, i: usize, j: usize) -> bool {
        self.rel.get(i, j)
    }

    #[inline]
    pub fn comparable(&self, i: usize, j: usize) -> bool {
        self.rel.get(i, j) || self.rel.get(j, i)
    }

    /// All pairs `(i, j)` with `i < j`, 0-based, in row-major order.
    pub fn relations(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.len()).flat_map(move |i| iter_bits(self.rel.row(i)).map(move |j| (i, j)))
    }

    /// Number of related pairs.
    pub fn relation_count(&self) -> usize {
        self.rel.count_ones()
    }

    /// Cover pairs of the order (its transitive reduction), 0-based.
    pub fn cover_pairs(&self) -> Vec<(usize, usize)> {
        let pred = self.rel.transpose();
        self.relations()
            .filter(|&(i, j)| {
                !self
                    .rel
                    .row(i)
                    .iter()
                    .zip(pred.row(j))
                    .any(|(a, b)| a & b != 0)
            })
            .collect()
    }

    /// Checks irreflexivity, asymmetry and transitivity.
    pub fn validate(&self) -> Result<()> {
        validate_matrix(&self.rel).map_err(Error::NotAPoset)
    }

    /// Restriction to the labels in `labels` (1-based, any order, duplicates
    /// ignored), relabelled `1..=k` in increasing label order.
    pub fn restrict(&self, labels: &[usize]) -> Result<Poset> {
        let mut idx: Vec<usize> = Vec::with_capacity(labels.len());
        for &l in labels {
            if l == 0 || l > self.len() {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    n: self.len(),
                });
            }
            idx.push(l - 1);
        }
        idx.sort_unstable();
        idx.dedup();
        if idx.is_empty() {
            return Err(Error::EmptySubset);
        }
        Ok(self.induced(&idx))
    }

    /// The poset on `0..idx.len()` with `a < b` iff `idx[a] < idx[b]` here.
    /// Repeated indices become incomparable copies.
    pub(crate) fn induced(&self, idx: &[usize]) -> Poset {
        let k = idx.len();
        let mut rel = BitMatrix::new(k);
        for (a, &i) in idx.iter().enumerate() {
            for (b, &j) in idx.iter().enumerate() {
                if self.rel.get(i, j) {
                    rel.set(a, b, true);
                }
            }
        }
        Poset::from_matrix(rel)
    }

    /// Moves element `i` to position `perm[i]` (0-based permutation).
    pub fn relabel(&self, perm: &[usize]) -> Poset {
        assert_eq!(perm.len(), self.len(), "permutation length");
        let mut rel = BitMatrix::new(self.len());
        for (i, j) in self.relations() {
            rel.set(perm[i], perm[j], true);
        }
        Poset::from_matrix(rel)
    }

    /// Relabels by a uniformly random permutation.
    pub fn random_relabel<R: Rng>(&self, rng: &mut R) -> Poset {
        let mut perm: Vec<usize> = (0..self.len()).collect();
        perm.shuffle(rng);
        self.relabel(&perm)
    }

    /// `self ⊔ other`, with `other`'s elements following `self`'s.
    pub fn disjoint_union(&self, other: &Poset) -> Poset {
        let off = self.len();
        let mut rel = BitMatrix::new(off + other.len());
        for (i, j) in self.relations() {
            rel.set(i, j, true);
        }
        for (i, j) in other.relations() {
            rel.set(off + i, off + j, true);
        }
        Poset::from_matrix(rel)
    }

    fn same_size(&self, other: &Poset) -> Result<()> {
        if self.len() != other.len() {
            return Err(Error::SizeMismatch {
                left: self.len(),
                right: other.len(),
            });
        }
        Ok(())
    }

    /// Every relation of `self` holds in `other` (same labels).
    pub fn is_subposet_of(&self, other: &Poset) -> Result<bool> {
        self.same_size(other)?;
        Ok(self.relations().all(|(i, j)| other.less(i, j)))
    }

    /// `self` and `other` have identical relations (same labels).
    pub fn is_induced_equal(&self, other: &Poset) -> Result<bool> {
        self.same_size(other)?;
        Ok(self.rel == other.rel)
    }

    /// Number of elements comparable to at least one other element.
    pub fn comparable_count(&self) -> usize {
        let pred = self.rel.transpose();
        (0..self.len())
            .filter(|&i| self.rel.row_count(i) + pred.row_count(i) > 0)
            .count()
    }

    /// A linear extension, as a list of 0-based indices from bottom to top.
    pub fn topological_order(&self) -> Vec<usize> {
        let n = self.len();
        // In a closed order, i < j implies i has strictly fewer predecessors.
        let below = self.rel.transpose();
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&i| (below.row_count(i), i));
        order
    }

    /// All labelled posets on the same ground set containing `self`, without
    /// duplicates. The number of results grows super-exponentially; intended
    /// for `n <= 6`.
    pub fn extensions(&self) -> Vec<Poset> {
        let n = self.len();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect();
        let mut out = Vec::new();
        let mut m = BitMatrix::new(n);
        let mut decided = BitMatrix::new(n);
        extend_rec(self, &pairs, 0, &mut m, &mut decided, &mut out);
        out
    }

    /// Whether a relation-preserving bijection exists. Backtracking with
    /// degree pruning; worst case `O(n!)`, intended for `n <= 12`.
    pub fn is_isomorphic(&self, other: &Poset) -> bool {
        if self.len() != other.len() || self.relation_count() != other.relation_count() {
            return false;
        }
        let sig_a = degree_signature(self);
        let sig_b = degree_signature(other);
        let mut sa = sig_a.clone();
        let mut sb = sig_b.clone();
        sa.sort_unstable();
        sb.sort_unstable();
        if sa != sb {
            return false;
        }
        let order = self.topological_order();
        let mut map = vec![usize::MAX; self.len()];
        let mut used = vec![false; self.len()];
        iso_rec(self, other, &order, 0, &sig_a, &sig_b, &mut map, &mut used)
    }

    /// Row-major 0/1 bytes of the relation matrix.
    pub fn canonical_bytes(&self) -> Vec<u8> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                out.push(self.less(i, j) as u8);
            }
        }
        out
    }

    pub fn to_digraph(&self) -> Digraph {
        Digraph {
            adj: self.rel.clone(),
        }
    }
}

impl fmt::Debug for Poset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rels: Vec<_> = self.relations().map(|(i, j)| (i + 1, j + 1)).collect();
        write!(f, "Poset(n={}, {:?})", self.len(), rels)
    }
}

/// All labelled posets on `n` elements (1, 1, 3, 19, 219, 4231, ...).
pub fn all_posets(n: usize) -> Vec<Poset> {
    Poset::trivial(n).extensions()
}

/// One representative per isomorphism class among `posets`, in first-seen order.
pub fn isomorphism_classes(posets: &[Poset]) -> Vec<Vec<usize>> {
    let mut classes: Vec<Vec<usize>> = Vec::new();
    for (i, p) in posets.iter().enumerate() {
        match classes.iter_mut().find(|c| posets[c[0]].is_isomorphic(p)) {
            Some(c) => c.push(i),
            None => classes.push(vec![i]),
        }
    }
    classes
}

fn validate_matrix(m: &BitMatrix) -> std::result::Result<(), String> {
    let n = m.dim();
    for i in 0..n {
        if m.get(i, i) {
            return Err(format!("{} < {}", i + 1, i + 1));
        }
        for j in iter_bits(m.row(i)) {
            if m.get(j, i) {
                return Err(format!(
                    "both {} < {} and {} < {}",
                    i + 1,
                    j + 1,
                    j + 1,
                    i + 1
                ));
            }
            for k in iter_bits(m.row(j)) {
                if !m.get(i, k) {
                    return Err(format!(
                        "{} < {} < {} but not {} < {}",
                        i + 1,
                        j + 1,
                        k + 1,
                        i + 1,
                        k + 1
                    ));
                }
            }
        }
    }
    Ok(())
}

fn transitive_on(m: &BitMatrix, t: [usize; 3]) -> bool {
    const PERMS: [[usize; 3]; 6] = [
        [0, 1, 2],
        [0, 2, 1],
        [1, 0, 2],
        [1, 2, 0],
        [2, 0, 1],
        [2, 1, 0],
    ];
    PERMS.iter().all(|p| {
        let (x, y, z) = (t[p[0]], t[p[1]], t[p[2]]);
        !(m.get(x, y) && m.get(y, z)) || m.get(x, z)
    })
}

fn extend_rec(
    base: &Poset,
    pairs: &[(usize, usize)],
    at: usize,
    m: &mut BitMatrix,
    decided: &mut BitMatrix,
    out: &mut Vec<Poset>,
) {
    let Some(&(i, j)) = pairs.get(at) else {
        out.push(Poset::from_matrix(m.clone()));
        return;
    };
    let options: &[(bool, bool)] = if base.less(i, j) {
        &[(true, false)]
    } else if base.less(j, i) {
        &[(false, true)]
    } else {
        &[(false, false), (true, false), (false, true)]
    };
    decided.set(i, j, true);
    decided.set(j, i, true);
    for &(ij, ji) in options {
        m.set(i, j, ij);
        m.set(j, i, ji);
        let ok = (0..base.len())
            .filter(|&k| k != i && k != j && decided.get(i, k) && decided.get(j, k))
            .all(|k| transitive_on(m, [i, j, k]));
        if ok {
            extend_rec(base, pairs, at + 1, m, decided, out);
        }
    }
    m.set(i, j, false);
    m.set(j, i, false);
    decided.set(i, j, false);
    decided.set(j, i, false);
}

fn degree_signature(p: &Poset) -> Vec<(usize, usize)> {
    let pred = p.rel.transpose();
    (0..p.len())
        .map(|i| (p.rel.row_count(i), pred.row_count(i)))
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn iso_rec(
    a: &Poset,
    b: &Poset,
    order: &[usize],
    depth: usize,
    sig_a: &[(usize, usize)],
    sig_b: &[(usize, usize)],
    map: &mut [usize],
    used: &mut [bool],
) -> bool {
    let Some(&u) = order.get(depth) else {
        return true;
    };
    for cand in 0..b.len() {
        if used[cand] || sig_a[u] != sig_b[cand] {
            continue;
        }
        let consistent = order[..depth].iter().all(|&v| {
            let w = map[v];
            a.less(u, v) == b.less(cand, w) && a.less(v, u) == b.less(w, cand)
        });
        if !consistent {
            continue;
        }
        map[u] = cand;
        used[cand] = true;
        if iso_rec(a, b, order, depth + 1, sig_a, sig_b, map, used) {
            return true;
        }
        used[cand] = false;
        map[u] = usize::MAX;
    }
    false
}

/// A directed graph on `{1, ..., n}`; loops and 2-cycles allowed.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Digraph {
    adj: BitMatrix,
}

/// Forbidden induced subgraphs of posets viewed as digraphs.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum ForbiddenKind {
    /// A loop.
    C1,
    /// A pair of opposite edges.
    C2,
    /// A directed 3-cycle.
    C3,
    /// An induced directed path on three vertices.
    P2,
}

impl fmt::Display for ForbiddenKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// An induced forbidden subgraph, with the 1-based labels realizing it in
/// edge order (`a -> b -> c` for `P2` and `C3`).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Witness {
    pub kind: ForbiddenKind,
    pub labels: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Classification {
    Poset,
    NotPoset(Witness),
}

impl Classification {
    pub fn is_poset(&self) -> bool {
        matches!(self, Classification::Poset)
    }

    pub fn witness(&self) -> Option<&Witness> {
        match self {
            Classification::Poset => None,
            Classification::NotPoset(w) => Some(w),
        }
    }
}

impl Digraph {
    /// Builds a digraph from 1-based edges.
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Digraph> {
        let mut adj = BitMatrix::new(n);
        for &(i, j) in edges {
            for label in [i, j] {
                if label == 0 || label > n {
                    return Err(Error::LabelOutOfRange { label, n });
                }
            }
            adj.set(i - 1, j - 1, true);
        }
        Ok(Digraph { adj })
    }

    /// Reads the edge set from bit `i * n + j` of `code`.
    pub fn from_code(n: usize, code: u64) -> Digraph {
        assert!(n * n <= 64);
        let mut adj = BitMatrix::new(n);
        for i in 0..n {
            for j in 0..n {
                if (code >> (i * n + j)) & 1 == 1 {
                    adj.set(i, j, true);
                }
            }
        }
        Digraph { adj }
    }

    pub fn len(&self) -> usize {
        self.adj.dim()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    #[inline]
    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj.get(i, j)
    }

    /// 0-based edges in row-major order.
    pub fn edges(&self) -> Vec<(usize, usize)> {
        (0..self.len())
            .flat_map(|i| iter_bits(self.adj.row(i)).map(move |j| (i, j)))
            .collect()
    }

    pub fn edge_count(&self) -> usize {
        self.adj.count_ones()
    }

    /// No loops and no pair of opposite edges.
    pub fn is_simple(&self) -> bool {
        let n = self.len();
        (0..n).all(|i| {
            !self.has_edge(i, i)
                && (i + 1..n).all(|j| !(self.has_edge(i, j) && self.has_edge(j, i)))
        })
    }

    /// Direct check of the strict-order axioms on the edge relation.
    pub fn is_strict_order(&self) -> bool {
        validate_matrix(&self.adj).is_ok()
    }

    /// Decides whether the edge relation is a strict order, returning the
    /// first forbidden induced subgraph otherwise: loops, then 2-cycles over
    /// pairs, then `P2`/`C3` over ordered triples, each in lexicographic order.
    pub fn classify(&self) -> Classification {
        let n = self.len();
        let witness = |kind, labels: &[usize]| {
            Classification::NotPoset(Witness {
                kind,
                labels: labels.iter().map(|v| v + 1).collect(),
            })
        };
        if let Some(i) = (0..n).find(|&i| self.has_edge(i, i)) {
            return witness(ForbiddenKind::C1, &[i]);
        }
        for i in 0..n {
            for j in i + 1..n {
                if self.has_edge(i, j) && self.has_edge(j, i) {
                    return witness(ForbiddenKind::C2, &[i, j]);
                }
            }
        }
        // No loops or 2-cycles remain, so a path a->b->c missing a->c induces
        // either exactly {ab, bc} or the 3-cycle {ab, bc, ca}.
        for a in 0..n {
            for b in iter_bits(self.adj.row(a)) {
                for c in iter_bits(self.adj.row(b)) {
                    if c != a && !self.has_edge(a, c) {
                        let kind = if self.has_edge(c, a) {
                            ForbiddenKind::C3
                        } else {
                            ForbiddenKind::P2
                        };
                        return witness(kind, &[a, b, c]);
                    }
                }
            }
        }
        Classification::Poset
    }

    pub fn to_poset(&self) -> Result<Poset> {
        Poset::try_from_matrix(self.adj.clone())
    }

    /// The path `1 -> 2 -> 3`.
    pub fn d1() -> Digraph {
        Digraph::new(3, &[(1, 2), (2, 3)]).expect("valid")
    }

    /// The chain `1 -> 2 -> 3` with `1 -> 3`.
    pub fn d2() -> Digraph {
        Digraph::new(3, &[(1, 2), (2, 3), (1, 3)]).expect("valid")
    }

    /// The directed 3-cycle.
    pub fn d3() -> Digraph {
        Digraph::new(3, &[(1, 2), (2, 3), (3, 1)]).expect("valid")
    }
}

impl fmt::Debug for Digraph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let edges: Vec<_> = self
            .edges()
            .into_iter()
            .map(|(i, j)| (i + 1, j + 1))
            .collect();
        write!(f, "Digraph(n={}, {:?})", self.len(), edges)
    }
}

impl From<&Poset> for Digraph {
    fn from(p: &Poset) -> Self {
        p.to_digraph()
    }
}
