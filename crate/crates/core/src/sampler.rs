//! W-random posets and exchangeability diagnostics.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::bits::{iter_bits, BitMatrix};
use crate::density::t_inj_exact;
use crate::kernel::Kernel;
use crate::mc::{map_batches, DensityEstimate, Welford};
use crate::poset::{all_posets, isomorphism_classes, Poset};
use crate::step::check_probability;
use crate::Result;

/// Samples `P(n, W)`: points `X_1..X_n` from the kernel's measure and
/// independent uniforms `ξ_ij` for every ordered pair, with `i < j` iff
/// `ξ_ij < w(X_i, X_j)`.
///
/// Randomness is consumed element by element: `X_m` is drawn, then
/// `ξ_{i,m}` and `ξ_{m,i}` for each `i < m` in increasing `i`. The draw for
/// `n` therefore extends the draw for any `k < n` from the same stream, so
/// `sample_wposet(W, n)` restricted to `1..=k` equals `sample_wposet(W, k)`.
///
/// Fails with `NotAPoset` when the result violates the order axioms, which
/// signals a broken kernel.
pub fn sample_wposet<K: Kernel, R: Rng>(kernel: &K, n: usize, rng: &mut R) -> Result<Poset> {
    let mut points: Vec<K::Point> = Vec::with_capacity(n);
    let mut rel = BitMatrix::new(n);
    for m in 0..n {
        let xm = kernel.sample(rng);
        for (i, xi) in points.iter().enumerate() {
            let up: f64 = rng.random();
            let down: f64 = rng.random();
            if up < kernel.w(xi, &xm) {
                rel.set(i, m, true);
            }
            if down < kernel.w(&xm, xi) {
                rel.set(m, i, true);
            }
        }
        points.push(xm);
    }
    Poset::try_from_matrix(rel)
}

/// The random graph order: each pair `i < j` of `1..=n` is joined with
/// probability `p`, edges point to the larger label, and the result is closed
/// transitively. Edge coins are drawn in row-major order over `i < j`.
pub fn gnp_order<R: Rng>(n: usize, p: f64, rng: &mut R) -> Result<Poset> {
    check_probability("p", p)?;
    let mut rel = BitMatrix::new(n);
    for i in 0..n {
        for j in i + 1..n {
            if rng.random_bool(p) {
                rel.set(i, j, true);
            }
        }
    }
    // Rows above i are already closed when row i is processed.
    for i in (0..n).rev() {
        let direct: Vec<usize> = iter_bits(rel.row(i)).collect();
        for j in direct {
            rel.or_row(i, j);
        }
    }
    Ok(Poset::from_matrix(rel))
}

/// Frequencies of labelled posets among independent draws of `P(n, W)`.
#[derive(Clone, Debug)]
pub struct LabelDistribution {
    pub n: usize,
    pub counts: BTreeMap<Poset, u64>,
    pub total: u64,
}

/// Result of comparing frequencies inside isomorphism orbits.
#[derive(Clone, Debug, Serialize)]
pub struct OrbitReport {
    pub comparisons: usize,
    /// Largest `|f_a - f_b| / se(f_a - f_b)` over pairs in one orbit.
    pub max_z: f64,
    pub pass: bool,
}

impl LabelDistribution {
    pub fn count(&self, p: &Poset) -> u64 {
        self.counts.get(p).copied().unwrap_or(0)
    }

    pub fn frequency(&self, p: &Poset) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.count(p) as f64 / self.total as f64
        }
    }

    /// Standard error of a single frequency.
    pub fn stderr(&self, p: &Poset) -> f64 {
        let f = self.frequency(p);
        (f * (1.0 - f) / self.total as f64).sqrt()
    }

    /// Compares every pair of labelled posets within each isomorphism class
    /// of posets on `n` elements. Passes when each difference is within
    /// `k` standard errors of the multinomial difference.
    pub fn orbit_check(&self, k: f64) -> OrbitReport {
        let all = all_posets(self.n);
        let mut comparisons = 0;
        let mut max_z: f64 = 0.0;
        let mut pass = true;
        let n = self.total as f64;
        for class in isomorphism_classes(&all) {
            for (a, &i) in class.iter().enumerate() {
                for &j in &class[a + 1..] {
                    let fa = self.frequency(&all[i]);
                    let fb = self.frequency(&all[j]);
                    let diff = (fa - fb).abs();
                    let se = ((fa + fb - (fa - fb).powi(2)) / n).max(0.0).sqrt();
                    comparisons += 1;
                    if diff > k * se {
                        pass = false;
                    }
                    if se > 0.0 {
                        max_z = max_z.max(diff / se);
                    }
                }
            }
        }
        OrbitReport {
            comparisons,
            max_z,
            pass,
        }
    }
}

/// Tabulates `reps` independent draws of `P(n, W)`. Replicate `r` uses the
/// substream of its batch, so tables are reproducible from `seed`.
pub fn empirical_label_distribution<K: Kernel>(
    kernel: &K,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<LabelDistribution> {
    let parts = map_batches(reps, seed, |rng, _, len| -> Result<BTreeMap<Poset, u64>> {
        let mut counts = BTreeMap::new();
        for _ in 0..len {
            *counts.entry(sample_wposet(kernel, n, rng)?).or_insert(0) += 1;
        }
        Ok(counts)
    });
    let mut counts = BTreeMap::new();
    for part in parts {
        for (p, c) in part? {
            *counts.entry(p).or_insert(0) += c;
        }
    }
    Ok(LabelDistribution {
        n,
        counts,
        total: reps,
    })
}

/// Estimates of `P(R ⊇ Q1 ∪ Q2)` and `P(R ⊇ Q1) P(R ⊇ Q2)` with `Q1` and `Q2`
/// placed on disjoint label blocks of one `R = P(|Q1| + |Q2|, W)`.
#[derive(Clone, Debug, Serialize)]
pub struct IndependenceReport {
    pub first: f64,
    pub second: f64,
    pub joint: f64,
    pub product: f64,
    /// Delta-method standard error of `joint - product`.
    pub stderr: f64,
    pub reps: u64,
    pub pass: bool,
}

pub fn independence_test<K: Kernel>(
    kernel: &K,
    q1: &Poset,
    q2: &Poset,
    reps: u64,
    seed: u64,
) -> Result<IndependenceReport> {
    let off = q1.len();
    let n = off + q2.len();
    let r1: Vec<(usize, usize)> = q1.relations().collect();
    let r2: Vec<(usize, usize)> = q2.relations().map(|(i, j)| (i + off, j + off)).collect();
    let parts = map_batches(reps, seed, |rng, _, len| -> Result<[u64; 3]> {
        let mut c = [0u64; 3];
        for _ in 0..len {
            let r = sample_wposet(kernel, n, rng)?;
            let a = r1.iter().all(|&(i, j)| r.less(i, j));
            let b = r2.iter().all(|&(i, j)| r.less(i, j));
            c[0] += a as u64;
            c[1] += b as u64;
            c[2] += (a && b) as u64;
        }
        Ok(c)
    });
    let mut c = [0u64; 3];
    for part in parts {
        for (x, y) in c.iter_mut().zip(part?) {
            *x += y;
        }
    }
    let m = reps as f64;
    let (pa, pb, pab) = (c[0] as f64 / m, c[1] as f64 / m, c[2] as f64 / m);
    // Influence of one replicate on pab - pa*pb is psi = AB - pb*A - pa*B;
    // with indicators all its moments follow from the three counts.
    let mean_psi = pab - 2.0 * pa * pb;
    let mean_psi2 =
        pab + pb * pb * pa + pa * pa * pb - 2.0 * pb * pab - 2.0 * pa * pab + 2.0 * pa * pb * pab;
    let var = (mean_psi2 - mean_psi * mean_psi).max(0.0) * m / (m - 1.0).max(1.0);
    let stderr = (var / m).sqrt();
    let product = pa * pb;
    Ok(IndependenceReport {
        first: pa,
        second: pb,
        joint: pab,
        product,
        stderr,
        reps,
        pass: (pab - product).abs() <= 4.0 * stderr,
    })
}

/// Mean over `reps` draws of `t_inj(Q, P(n, W))`.
pub fn mean_t_inj<K: Kernel>(
    kernel: &K,
    q: &Poset,
    n: usize,
    reps: u64,
    seed: u64,
) -> Result<DensityEstimate> {
    let parts = map_batches(reps, seed, |rng, _, len| -> Result<Welford> {
        let mut acc = Welford::new();
        for _ in 0..len {
            let p = sample_wposet(kernel, n, rng)?;
            acc.push(t_inj_exact(q, &p)?.value());
        }
        Ok(acc)
    });
    let mut acc = Welford::new();
    for p in parts {
        acc.merge(&p?);
    }
    Ok(acc.estimate())
}
