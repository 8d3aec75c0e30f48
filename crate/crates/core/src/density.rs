//! Homomorphism densities between finite posets.
//!
//! Exact densities count maps by backtracking: the vertices of `Q` are placed
//! in a linear extension of `Q`, and the candidate images of each vertex are
//! the intersection of the up-sets of its already-placed predecessors, kept as
//! packed bit rows. Counts are integers, so the three exact densities come back
//! as [`Ratio`]s and identities between them hold exactly.

use rand::seq::index;
use rand::Rng;

use crate::bits::{full_row, iter_bits, words_for, BitMatrix};
use crate::mc::{estimate_mean, DensityEstimate};
use crate::poset::Poset;
use crate::{Error, Result};

/// Default cap on the number of maps an exact count may enumerate.
pub const DEFAULT_BUDGET: u64 = 100_000_000;

/// An exact density `hits / total`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Ratio {
    pub hits: u64,
    pub total: u64,
}

impl Ratio {
    pub fn value(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.hits as f64 / self.total as f64
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum MapKind {
    Hom,
    Injective,
    Induced,
}

/// Fraction of all maps `Q -> P` that preserve the strict order.
pub fn t_exact(q: &Poset, p: &Poset) -> Result<Ratio> {
    t_exact_with_budget(q, p, DEFAULT_BUDGET)
}

pub fn t_exact_with_budget(q: &Poset, p: &Poset, budget: u64) -> Result<Ratio> {
    count(q, p, MapKind::Hom, budget)
}

/// Fraction of injective maps `Q -> P` that preserve the strict order; zero
/// when `|Q| > |P|`.
pub fn t_inj_exact(q: &Poset, p: &Poset) -> Result<Ratio> {
    count(q, p, MapKind::Injective, DEFAULT_BUDGET)
}

/// Fraction of injective maps `Q -> P` with `i < j` iff `f(i) < f(j)`; zero
/// when `|Q| > |P|`.
pub fn t_ind_exact(q: &Poset, p: &Poset) -> Result<Ratio> {
    count(q, p, MapKind::Induced, DEFAULT_BUDGET)
}

fn search_size(q: usize, p: usize, kind: MapKind) -> u128 {
    match kind {
        MapKind::Hom => (p as u128).saturating_pow(q as u32),
        _ => (0..q).fold(1u128, |acc, i| acc.saturating_mul((p - i) as u128)),
    }
}

struct Search<'a> {
    p_succ: &'a BitMatrix,
    p_pred: BitMatrix,
    order: Vec<usize>,
    /// For each depth, the earlier depths whose vertex lies below this one.
    below: Vec<Vec<usize>>,
    /// For each depth, the earlier depths whose vertex is incomparable.
    incomparable: Vec<Vec<usize>>,
    kind: MapKind,
    np: usize,
}

impl Search<'_> {
    fn run_from(&self, root: usize) -> u64 {
        let words = words_for(self.np);
        let mut image = vec![0usize; self.order.len()];
        let mut used = vec![0u64; words];
        let mut scratch = vec![vec![0u64; words]; self.order.len().saturating_sub(1)];
        image[0] = root;
        used[root / 64] |= 1 << (root % 64);
        self.descend(1, &mut image, &mut used, &mut scratch)
    }

    /// `scratch[0]` holds the candidates for `depth`, later slots deeper levels.
    fn descend(
        &self,
        depth: usize,
        image: &mut [usize],
        used: &mut [u64],
        scratch: &mut [Vec<u64>],
    ) -> u64 {
        if depth == self.order.len() {
            return 1;
        }
        let (cand, rest) = scratch.split_first_mut().expect("one slot per depth");
        cand.copy_from_slice(&full_row(self.np));
        for &d in &self.below[depth] {
            for (c, r) in cand.iter_mut().zip(self.p_succ.row(image[d])) {
                *c &= r;
            }
        }
        if self.kind != MapKind::Hom {
            for (c, u) in cand.iter_mut().zip(used.iter()) {
                *c &= !u;
            }
        }
        if self.kind == MapKind::Induced {
            for &d in &self.incomparable[depth] {
                let img = image[d];
                for ((c, s), r) in cand
                    .iter_mut()
                    .zip(self.p_succ.row(img))
                    .zip(self.p_pred.row(img))
                {
                    *c &= !(s | r);
                }
            }
        }
        if depth + 1 == self.order.len() {
            return cand.iter().map(|w| w.count_ones() as u64).sum();
        }
        let mut total = 0;
        for v in iter_bits(cand) {
            image[depth] = v;
            used[v / 64] |= 1 << (v % 64);
            total += self.descend(depth + 1, image, used, rest);
            used[v / 64] &= !(1 << (v % 64));
        }
        total
    }
}

fn count(q: &Poset, p: &Poset, kind: MapKind, budget: u64) -> Result<Ratio> {
    let (nq, np) = (q.len(), p.len());
    if kind != MapKind::Hom && nq > np {
        return Ok(Ratio { hits: 0, total: 0 });
    }
    let required = search_size(nq, np, kind);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let total = required as u64;
    if nq == 0 {
        return Ok(Ratio { hits: 1, total: 1 });
    }
    if np == 0 {
        return Ok(Ratio { hits: 0, total: 0 });
    }
    let order = q.topological_order();
    let below = (0..nq)
        .map(|d| (0..d).filter(|&e| q.less(order[e], order[d])).collect())
        .collect();
    let incomparable = (0..nq)
        .map(|d| {
            (0..d)
                .filter(|&e| !q.comparable(order[e], order[d]))
                .collect()
        })
        .collect();
    let search = Search {
        p_succ: p.matrix(),
        p_pred: p.matrix().transpose(),
        order,
        below,
        incomparable,
        kind,
        np,
    };
    let hits = crate::mc::map_indices(np, |root| search.run_from(root))
        .into_iter()
        .sum();
    Ok(Ratio { hits, total })
}

/// Monte-Carlo estimate of [`t_exact`] from `samples` uniformly random maps.
pub fn t_mc(q: &Poset, p: &Poset, samples: u64, seed: u64) -> DensityEstimate {
    let rels: Vec<(usize, usize)> = q.relations().collect();
    let (nq, np) = (q.len(), p.len());
    if rels.is_empty() {
        return estimate_mean(samples, seed, |_| 1.0);
    }
    if np == 0 {
        return estimate_mean(samples, seed, |_| 0.0);
    }
    estimate_mean(samples, seed, |rng| {
        let map: Vec<usize> = (0..nq).map(|_| rng.random_range(0..np)).collect();
        rels.iter().all(|&(i, j)| p.less(map[i], map[j])) as u8 as f64
    })
}

/// Whether [`sample_induced`] draws vertices with or without replacement.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Replacement {
    With,
    Without,
}

/// The labelled poset induced on `k` randomly drawn elements of `P`, labelled
/// in draw order. With replacement, repeated draws become incomparable copies.
pub fn sample_induced<R: Rng>(
    p: &Poset,
    k: usize,
    mode: Replacement,
    rng: &mut R,
) -> Result<Poset> {
    let n = p.len();
    let picks: Vec<usize> = match mode {
        Replacement::With => {
            if n == 0 && k > 0 {
                return Err(Error::SampleSize { k, n });
            }
            (0..k).map(|_| rng.random_range(0..n)).collect()
        }
        Replacement::Without => {
            if k > n {
                return Err(Error::SampleSize { k, n });
            }
            index::sample(rng, n, k).into_vec()
        }
    };
    Ok(p.induced(&picks))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::poset::{all_posets, Closure};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    /// Enumerates all maps `[nq] -> [np]` as base-`np` digits.
    fn brute(q: &Poset, p: &Poset, kind: MapKind) -> (u64, u64) {
        let (nq, np) = (q.len(), p.len());
        let mut hits = 0;
        let mut total = 0;
        for code in 0..(np as u64).pow(nq as u32) {
            let mut c = code;
            let map: Vec<usize> = (0..nq)
                .map(|_| {
                    let d = (c % np as u64) as usize;
                    c /= np as u64;
                    d
                })
                .collect();
            let injective = (0..nq).all(|i| (0..i).all(|j| map[i] != map[j]));
            if kind != MapKind::Hom && !injective {
                continue;
            }
            total += 1;
            let ok = (0..nq).all(|i| {
                (0..nq).all(|j| match kind {
                    MapKind::Induced => q.less(i, j) == p.less(map[i], map[j]),
                    _ => !q.less(i, j) || p.less(map[i], map[j]),
                })
            });
            hits += ok as u64;
        }
        (hits, total)
    }

    #[test]
    fn chain2_in_chain3() {
        let r = t_exact(&Poset::chain(2), &Poset::chain(3)).unwrap();
        assert_eq!(r, Ratio { hits: 3, total: 9 });
        assert_eq!(
            brute(&Poset::chain(2), &Poset::chain(3), MapKind::Hom),
            (3, 9)
        );
    }

    #[test]
    fn trivial_cases() {
        for n in 1..5 {
            for m in 0..4 {
                assert_eq!(
                    t_exact(&Poset::trivial(m), &Poset::chain(n))
                        .unwrap()
                        .value(),
                    1.0
                );
            }
            assert_eq!(
                t_exact(&Poset::chain(2), &Poset::trivial(n))
                    .unwrap()
                    .value(),
                0.0
            );
        }
    }

    #[test]
    fn injective_and_induced_examples() {
        let c2 = Poset::chain(2);
        let c3 = Poset::chain(3);
        let e2 = Poset::trivial(2);
        assert_eq!(t_inj_exact(&c2, &c2).unwrap(), Ratio { hits: 1, total: 2 });
        assert_eq!(t_inj_exact(&c3, &c2).unwrap().value(), 0.0);
        assert_eq!(t_inj_exact(&e2, &c3).unwrap().value(), 1.0);
        assert_eq!(t_ind_exact(&e2, &c3).unwrap(), Ratio { hits: 0, total: 6 });
        assert_eq!(t_ind_exact(&c2, &c2).unwrap(), Ratio { hits: 1, total: 2 });
        let sum: u64 = e2
            .extensions()
            .iter()
            .map(|q| t_ind_exact(q, &c3).unwrap().hits)
            .sum();
        assert_eq!(sum, t_inj_exact(&e2, &c3).unwrap().hits);
    }

    #[test]
    fn matches_brute_force() {
        let ps = all_posets(4);
        for q in all_posets(3).iter().step_by(3) {
            for p in ps.iter().step_by(17) {
                for kind in [MapKind::Hom, MapKind::Injective, MapKind::Induced] {
                    let r = count(q, p, kind, DEFAULT_BUDGET).unwrap();
                    assert_eq!((r.hits, r.total), brute(q, p, kind), "{q:?} {p:?} {kind:?}");
                }
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let err = t_exact_with_budget(&Poset::chain(5), &Poset::chain(10), 1000).unwrap_err();
        assert!(matches!(
            err,
            Error::BudgetExceeded {
                required: 100_000,
                budget: 1000
            }
        ));
    }

    #[test]
    fn large_target_uses_multiword_rows() {
        let p = Poset::chain(130);
        let r = t_inj_exact(&Poset::chain(2), &p).unwrap();
        assert_eq!(r.hits, 130 * 129 / 2);
        assert_eq!(r.total, 130 * 129);
    }

    #[test]
    fn mc_examples() {
        let e = t_mc(&Poset::chain(2), &Poset::chain(3), 200_000, 5);
        assert!(e.within(1.0 / 3.0, 4.0), "{e:?}");
        let one = t_mc(&Poset::trivial(2), &Poset::chain(4), 1000, 5);
        assert_eq!((one.value, one.stderr), (1.0, 0.0));
        let zero = t_mc(&Poset::chain(2), &Poset::trivial(4), 1000, 5);
        assert_eq!((zero.value, zero.stderr), (0.0, 0.0));
    }

    #[test]
    fn sampling_induced() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..50 {
            let s = sample_induced(&Poset::chain(5), 2, Replacement::Without, &mut rng).unwrap();
            assert!(s.is_isomorphic(&Poset::chain(2)));
            let t = sample_induced(&Poset::trivial(6), 3, Replacement::With, &mut rng).unwrap();
            assert_eq!(t, Poset::trivial(3));
        }
        assert!(matches!(
            sample_induced(&Poset::chain(3), 4, Replacement::Without, &mut rng),
            Err(Error::SampleSize { k: 4, n: 3 })
        ));
        // repeated picks of a chain element are incomparable
        let s = sample_induced(&Poset::chain(1), 3, Replacement::With, &mut rng).unwrap();
        assert_eq!(s, Poset::trivial(3));
    }

    #[test]
    fn induced_sample_frequencies_follow_t_ind() {
        let p = Poset::new(4, &[(1, 2), (1, 3)], Closure::TakeClosure).unwrap();
        let q = Poset::chain(2);
        let expected = t_ind_exact(&q, &p).unwrap().value();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let reps = 40_000;
        let hits = (0..reps)
            .filter(|_| sample_induced(&p, 2, Replacement::Without, &mut rng).unwrap() == q)
            .count();
        let f = hits as f64 / reps as f64;
        let se = (expected * (1.0 - expected) / reps as f64).sqrt();
        assert!((f - expected).abs() < 4.0 * se, "{f} vs {expected}");
    }
}
