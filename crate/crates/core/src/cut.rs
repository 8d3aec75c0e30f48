//! Cut norms of step functions and bounds on the cut distance of step kernels.
//!
//! For a step function the supremum defining either cut norm is attained on
//! unions of parts (rectangular form) or on sign vectors constant on parts
//! (functional form), so both norms are finite maxima computed by Gray-code
//! enumeration.
//!
//! Two step kernels are compared through a coupling of their part masses:
//! the overlay has one part per positive cell `c_ij` and value
//! `W1(i, k) - W2(j, l)` on cell pair `((i, j), (k, l))`. The cut distance is
//! bounded above by the smallest overlay cut norm found by local search over
//! north-west-corner couplings, and below by the counting lemma
//! `|t(F, W1) - t(F, W2)| <= e(F) δ□(W1, W2)`.

use std::cmp::Ordering;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::ser::Serializer;
use serde::Serialize;

use crate::density::t_inj_exact;
use crate::kernel::step;
use crate::mc::{map_indices, substream};
use crate::poset::{all_posets, isomorphism_classes, Digraph, Poset};
use crate::sampler::sample_wposet;
use crate::step::{digraph_density_step, StepFunction, StepKernel};
use crate::{Error, Result};

/// Largest part count accepted by the exact norms.
pub const MAX_EXACT_PARTS: usize = 24;
/// Overlays with more positive cells fall back to alternating maximization.
pub const OVERLAY_EXACT_PARTS: usize = 16;
/// Largest `N1 * N2` accepted by [`delta_cut_upper`].
pub const MAX_COUPLING_CELLS: usize = 10_000;

const TIE: f64 = 1e-14;
const NWC_EPS: f64 = 1e-14;
const IMPROVE: f64 = 1e-15;
const HEURISTIC_STARTS: usize = 4;
const HEURISTIC_ROUNDS: usize = 50;
const HEURISTIC_SEED: u64 = 0x5eed;

/// A pair of part sets attaining the rectangular cut norm.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutWitness {
    pub value: f64,
    pub s: Vec<usize>,
    pub t: Vec<usize>,
}

fn check_parts(n: usize) -> Result<()> {
    if n > MAX_EXACT_PARTS {
        return Err(Error::BudgetExceeded {
            required: 1u128 << n,
            budget: 1u64 << MAX_EXACT_PARTS,
        });
    }
    Ok(())
}

/// Row-major `m_i m_j F(i, j)`.
fn weighted(f: &StepFunction) -> Vec<f64> {
    let n = f.parts();
    let m = f.mass();
    (0..n * n)
        .map(|x| m[x / n] * m[x % n] * f.values()[x])
        .collect()
}

fn members(mask: u64) -> Vec<usize> {
    (0..64).filter(|i| mask >> i & 1 == 1).collect()
}

/// Lexicographic order of the sorted member lists.
fn lex_less(a: u64, b: u64) -> bool {
    if a == b {
        return false;
    }
    let low = (a ^ b).trailing_zeros();
    if a >> low & 1 == 1 {
        b >> low != 0
    } else {
        a >> low == 0
    }
}

/// Best `(S, T)` for the `k x k` matrix `m`; `S` is minimal among ties.
fn rect_enumerate(k: usize, m: &[f64]) -> (u64, u64) {
    let mut col = vec![0.0; k];
    let mut s = 0u64;
    let (mut best, mut best_s, mut best_t) = (0.0f64, 0u64, 0u64);
    for step in 1u64..(1u64 << k) {
        let i = step.trailing_zeros() as usize;
        s ^= 1 << i;
        let sign = if s >> i & 1 == 1 { 1.0 } else { -1.0 };
        let (mut pos, mut neg) = (0.0, 0.0);
        for (c, r) in col.iter_mut().zip(&m[i * k..(i + 1) * k]) {
            *c += sign * r;
            if *c > 0.0 {
                pos += *c;
            } else {
                neg -= *c;
            }
        }
        let value = pos.max(neg);
        if value > best + TIE || (value >= best - TIE && lex_less(s, best_s)) {
            let positive = pos >= neg;
            best_t = col
                .iter()
                .enumerate()
                .filter(|(_, &c)| if positive { c > 0.0 } else { c < 0.0 })
                .fold(0, |t, (j, _)| t | 1 << j);
            best_s = s;
            best = best.max(value);
        }
    }
    (best_s, best_t)
}

fn box_sum(k: usize, m: &[f64], s: u64, t: u64) -> f64 {
    let mut sum = 0.0;
    for i in members(s) {
        for j in members(t) {
            sum += m[i * k + j];
        }
    }
    sum.abs()
}

/// `max Σ_j |Σ_i f_i m(i, j)|` over sign vectors with `f_0 = +1`.
fn func_enumerate(k: usize, m: &[f64]) -> f64 {
    let mut col: Vec<f64> = (0..k).map(|j| (0..k).map(|i| m[i * k + j]).sum()).collect();
    let mut best: f64 = col.iter().map(|c| c.abs()).sum();
    let mut f = 0u64;
    for step in 1u64..(1u64 << (k - 1)) {
        let i = step.trailing_zeros() as usize + 1;
        f ^= 1 << i;
        let delta = if f >> i & 1 == 1 { -2.0 } else { 2.0 };
        let mut value = 0.0;
        for (c, r) in col.iter_mut().zip(&m[i * k..(i + 1) * k]) {
            *c += delta * r;
            value += c.abs();
        }
        best = best.max(value);
    }
    best
}

/// `max_{S,T} |∫_{S x T} F|` with its maximizing part sets.
pub fn cut_norm_rect_witness(f: &StepFunction) -> Result<CutWitness> {
    let n = f.parts();
    check_parts(n)?;
    let m = weighted(f);
    let (s, t) = rect_enumerate(n, &m);
    Ok(CutWitness {
        value: box_sum(n, &m, s, t),
        s: members(s),
        t: members(t),
    })
}

/// The rectangular cut norm `‖F‖□,1`.
pub fn cut_norm_rect(f: &StepFunction) -> Result<f64> {
    Ok(cut_norm_rect_witness(f)?.value)
}

/// The functional cut norm `‖F‖□,2 = sup |∫ f(x) F(x, y) g(y)|` over
/// `|f|, |g| <= 1`.
pub fn cut_norm_func(f: &StepFunction) -> Result<f64> {
    let n = f.parts();
    check_parts(n)?;
    Ok(func_enumerate(n, &weighted(f)))
}

/// `1{x <_P y}` on the elements of `P` with uniform mass.
pub fn step_from_poset(p: &Poset) -> StepKernel {
    StepKernel::from_poset(p)
}

/// A nonnegative matrix with prescribed row and column sums.
#[derive(Clone, Debug, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Serialize for Coupling {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_seq(self.data.chunks(self.cols.max(1)))
    }
}

impl Coupling {
    /// The north-west-corner vertex of the transportation polytope with
    /// margins `a` and `b`, filling rows in order `oa` and columns in order
    /// `ob`.
    pub fn north_west_corner(a: &[f64], b: &[f64], oa: &[usize], ob: &[usize]) -> Coupling {
        let cols = b.len();
        let mut data = vec![0.0; a.len() * cols];
        let (mut p, mut q) = (0, 0);
        let mut r = oa.first().map_or(0.0, |&i| a[i]);
        let mut s = ob.first().map_or(0.0, |&j| b[j]);
        while p < oa.len() && q < ob.len() {
            let c = r.min(s);
            data[oa[p] * cols + ob[q]] += c;
            r -= c;
            s -= c;
            if r <= NWC_EPS {
                p += 1;
                r = oa.get(p).map_or(0.0, |&i| a[i]);
            }
            if s <= NWC_EPS {
                q += 1;
                s = ob.get(q).map_or(0.0, |&j| b[j]);
            }
        }
        Coupling {
            rows: a.len(),
            cols,
            data,
        }
    }

    /// The coupling that pairs part `i` with part `i`.
    pub fn diagonal(mass: &[f64]) -> Coupling {
        let n = mass.len();
        let mut data = vec![0.0; n * n];
        for (i, m) in mass.iter().enumerate() {
            data[i * n + i] = *m;
        }
        Coupling {
            rows: n,
            cols: n,
            data,
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    pub fn transpose(&self) -> Coupling {
        let mut data = vec![0.0; self.data.len()];
        for i in 0..self.rows {
            for j in 0..self.cols {
                data[j * self.rows + i] = self.get(i, j);
            }
        }
        Coupling {
            rows: self.cols,
            cols: self.rows,
            data,
        }
    }

    /// Positive cells `(i, j, c_ij)` in row-major order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.data
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0.0)
            .map(|(x, &c)| (x / self.cols, x % self.cols, c))
    }

    /// Largest deviation of a row or column sum from its margin.
    pub fn marginal_error(&self, a: &[f64], b: &[f64]) -> f64 {
        let mut err: f64 = 0.0;
        for (i, ai) in a.iter().enumerate() {
            let row: f64 = (0..self.cols).map(|j| self.get(i, j)).sum();
            err = err.max((row - ai).abs());
        }
        for (j, bj) in b.iter().enumerate() {
            let col: f64 = (0..self.rows).map(|i| self.get(i, j)).sum();
            err = err.max((col - bj).abs());
        }
        err
    }

    /// The difference `W1 - W2` laid over this coupling, as a step function.
    pub fn overlay(&self, w1: &StepFunction, w2: &StepFunction) -> Result<StepFunction> {
        let cells: Vec<_> = self.cells().collect();
        let mass: Vec<f64> = cells.iter().map(|c| c.2).collect();
        let total: f64 = mass.iter().sum();
        let mass = mass.iter().map(|m| m / total).collect();
        let values = cells
            .iter()
            .flat_map(|&(i, j, _)| {
                cells
                    .iter()
                    .map(move |&(k, l, _)| w1.value(i, k) - w2.value(j, l))
            })
            .collect();
        StepFunction::from_flat(mass, values)
    }
}

struct Overlay<'a> {
    w1: &'a StepFunction,
    w2: &'a StepFunction,
    cells: Vec<(usize, usize, f64)>,
}

impl<'a> Overlay<'a> {
    fn new(w1: &'a StepFunction, w2: &'a StepFunction, coupling: &Coupling) -> Self {
        Overlay {
            w1,
            w2,
            cells: coupling.cells().collect(),
        }
    }

    /// The overlay cut norm, and whether it was computed exactly.
    fn norm(&self) -> (f64, bool) {
        let k = self.cells.len();
        if k <= OVERLAY_EXACT_PARTS {
            let m = self.matrix();
            let (s, t) = rect_enumerate(k, &m);
            (box_sum(k, &m, s, t), true)
        } else {
            (self.alternating(), false)
        }
    }

    fn matrix(&self) -> Vec<f64> {
        let mut m = Vec::with_capacity(self.cells.len().pow(2));
        for &(i, j, c) in &self.cells {
            for &(k, l, d) in &self.cells {
                m.push(c * d * (self.w1.value(i, k) - self.w2.value(j, l)));
            }
        }
        m
    }

    /// `Σ_{s ∈ S} M(s, t)` for every cell `t` when `transpose` is false, and
    /// `Σ_{t ∈ S} M(s, t)` for every cell `s` otherwise.
    fn sums(&self, set: &[bool], transpose: bool) -> Vec<f64> {
        let (n1, n2) = (self.w1.parts(), self.w2.parts());
        let mut alpha = vec![0.0; n1];
        let mut beta = vec![0.0; n2];
        for (&(i, j, c), &inside) in self.cells.iter().zip(set) {
            if inside {
                alpha[i] += c;
                beta[j] += c;
            }
        }
        let apply = |f: &StepFunction, w: &[f64]| -> Vec<f64> {
            let n = f.parts();
            (0..n)
                .map(|x| {
                    (0..n)
                        .map(|y| {
                            w[y] * if transpose {
                                f.value(x, y)
                            } else {
                                f.value(y, x)
                            }
                        })
                        .sum()
                })
                .collect()
        };
        let u = apply(self.w1, &alpha);
        let v = apply(self.w2, &beta);
        self.cells
            .iter()
            .map(|&(i, j, c)| c * (u[i] - v[j]))
            .collect()
    }

    /// Alternating best responses between the two sides from a few starts.
    /// Each value is attained by an explicit pair of cell sets.
    fn alternating(&self) -> f64 {
        let k = self.cells.len();
        let mut rng = ChaCha8Rng::seed_from_u64(HEURISTIC_SEED);
        let mut starts = vec![vec![true; k]];
        for _ in 0..HEURISTIC_STARTS {
            starts.push((0..k).map(|_| rng.random_bool(0.5)).collect());
        }
        let mut best: f64 = 0.0;
        for sign in [1.0, -1.0] {
            for start in &starts {
                let mut t = start.clone();
                let mut last = 0.0;
                for _ in 0..HEURISTIC_ROUNDS {
                    let rows = self.sums(&t, true);
                    let s: Vec<bool> = rows.iter().map(|r| sign * r > 0.0).collect();
                    let cols = self.sums(&s, false);
                    t = cols.iter().map(|c| sign * c > 0.0).collect();
                    let value: f64 = cols.iter().map(|c| (sign * c).max(0.0)).sum();
                    if value <= last + IMPROVE {
                        break;
                    }
                    last = value;
                }
                best = best.max(last);
            }
        }
        best
    }
}

/// Local search settings for [`delta_cut_upper`].
#[derive(Clone, Debug, PartialEq)]
pub struct SearchConfig {
    pub restarts: usize,
    pub seed: u64,
    /// Overlay norm evaluations allowed per restart.
    pub max_evaluations: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            restarts: 32,
            seed: 0,
            max_evaluations: 2000,
        }
    }
}

/// Bounds `lower <= δ□(W1, W2) <= upper` with the coupling attaining `upper`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CutDistanceBounds {
    pub lower: f64,
    pub upper: f64,
    pub coupling: Coupling,
    /// False when the overlay was too large for exact evaluation and `upper`
    /// is the value of the best cut found by alternating maximization.
    pub exact: bool,
}

fn cmp_slices(a: &[f64], b: &[f64]) -> Ordering {
    a.iter()
        .zip(b)
        .map(|(x, y)| x.total_cmp(y))
        .find(|o| o.is_ne())
        .unwrap_or(a.len().cmp(&b.len()))
}

fn canonical_cmp(a: &StepFunction, b: &StepFunction) -> Ordering {
    a.parts()
        .cmp(&b.parts())
        .then_with(|| cmp_slices(a.mass(), b.mass()))
        .then_with(|| cmp_slices(a.values(), b.values()))
}

/// Parts sorted by weighted row sum, weighted column sum, then mass.
fn alignment_order(f: &StepFunction) -> Vec<usize> {
    let n = f.parts();
    let m = f.mass();
    let key = |i: usize| {
        let row: f64 = (0..n).map(|k| m[k] * f.value(i, k)).sum();
        let col: f64 = (0..n).map(|k| m[k] * f.value(k, i)).sum();
        [row, col, m[i]]
    };
    let keys: Vec<[f64; 3]> = (0..n).map(key).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&x, &y| cmp_slices(&keys[x], &keys[y]));
    order
}

fn neighbours(n: usize) -> Vec<(usize, usize)> {
    if n <= 16 {
        (0..n)
            .flat_map(|i| (i + 1..n).map(move |j| (i, j)))
            .collect()
    } else {
        (1..n).map(|i| (i - 1, i)).collect()
    }
}

struct Candidate {
    value: f64,
    first: Vec<usize>,
    second: Vec<usize>,
}

fn local_search(
    w1: &StepFunction,
    w2: &StepFunction,
    first: Vec<usize>,
    second: Vec<usize>,
    budget: usize,
) -> Candidate {
    let eval = |a: &[usize], b: &[usize]| {
        Overlay::new(
            w1,
            w2,
            &Coupling::north_west_corner(w1.mass(), w2.mass(), a, b),
        )
        .norm()
        .0
    };
    let mut orders = [first, second];
    let mut best = eval(&orders[0], &orders[1]);
    let mut evals = 1;
    'search: loop {
        let mut improved = false;
        for side in [1, 0] {
            for (i, j) in neighbours(orders[side].len()) {
                if best <= 0.0 || evals >= budget {
                    break 'search;
                }
                orders[side].swap(i, j);
                let value = eval(&orders[0], &orders[1]);
                evals += 1;
                if value < best - IMPROVE {
                    best = value;
                    improved = true;
                } else {
                    orders[side].swap(i, j);
                }
            }
        }
        if !improved {
            break;
        }
    }
    let [first, second] = orders;
    Candidate {
        value: best,
        first,
        second,
    }
}

fn search(w1: &StepFunction, w2: &StepFunction, config: &SearchConfig) -> CutDistanceBounds {
    let base = (alignment_order(w1), alignment_order(w2));
    let candidates = map_indices(config.restarts.max(1), |r| {
        let (mut a, mut b) = base.clone();
        if r > 0 {
            let mut rng = substream(config.seed, r as u64);
            a.shuffle(&mut rng);
            b.shuffle(&mut rng);
        }
        local_search(w1, w2, a, b, config.max_evaluations.max(1))
    });
    let mut best = &candidates[0];
    for c in &candidates[1..] {
        if c.value < best.value {
            best = c;
        }
    }
    let coupling = Coupling::north_west_corner(w1.mass(), w2.mass(), &best.first, &best.second);
    let (upper, exact) = Overlay::new(w1, w2, &coupling).norm();
    CutDistanceBounds {
        lower: 0.0,
        upper,
        coupling,
        exact,
    }
}

/// An upper bound on `δ□(W1, W2)`: the least overlay cut norm found over
/// couplings reached by swap moves from an aligned start and from
/// `config.restarts - 1` random part orders. `lower` is left at 0.
///
/// The result does not depend on argument order beyond transposing the
/// coupling, nor on scheduling.
pub fn delta_cut_upper(
    w1: &StepFunction,
    w2: &StepFunction,
    config: &SearchConfig,
) -> Result<CutDistanceBounds> {
    let cells = w1.parts() as u128 * w2.parts() as u128;
    if cells > MAX_COUPLING_CELLS as u128 {
        return Err(Error::BudgetExceeded {
            required: cells,
            budget: MAX_COUPLING_CELLS as u64,
        });
    }
    if canonical_cmp(w2, w1).is_lt() {
        let mut b = search(w2, w1, config);
        b.coupling = b.coupling.transpose();
        return Ok(b);
    }
    Ok(search(w1, w2, config))
}

/// Posets on two and three elements with at least one relation, one per
/// isomorphism class, followed by the path `1 -> 2 -> 3` and the 3-cycle.
pub fn default_family() -> Vec<Digraph> {
    let mut out = Vec::new();
    for n in 2..=3 {
        let all = all_posets(n);
        for class in isomorphism_classes(&all) {
            let p = &all[class[0]];
            if p.relation_count() > 0 {
                out.push(p.to_digraph());
            }
        }
    }
    out.push(Digraph::d1());
    out.push(Digraph::d3());
    out
}

/// `max_F |t(F, W1) - t(F, W2)| / e(F)` over the family, a lower bound on
/// `δ□(W1, W2)` for functions with values in `[0, 1]`. Returns 0 when either
/// function leaves `[0, 1]`.
pub fn delta_cut_lower(w1: &StepFunction, w2: &StepFunction, family: &[Digraph]) -> Result<f64> {
    if let Some(f) = family.iter().find(|f| !f.is_simple()) {
        return Err(Error::NotSimple(format!("{f:?}")));
    }
    if !w1.is_unit_valued() || !w2.is_unit_valued() {
        return Ok(0.0);
    }
    let mut best: f64 = 0.0;
    for f in family {
        let m = f.edge_count();
        if m == 0 {
            continue;
        }
        let gap = (digraph_density_step(f, w1)? - digraph_density_step(f, w2)?).abs();
        best = best.max(gap / m as f64);
    }
    Ok(best)
}

/// Both bounds, with the lower bound taken over `family`.
pub fn cut_distance_bounds(
    w1: &StepFunction,
    w2: &StepFunction,
    family: &[Digraph],
    config: &SearchConfig,
) -> Result<CutDistanceBounds> {
    let mut b = delta_cut_upper(w1, w2, config)?;
    b.lower = delta_cut_lower(w1, w2, family)?;
    Ok(b)
}

/// One sampled poset in a convergence run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ConvergeRow {
    pub n: usize,
    pub rep: u64,
    /// `t_inj(chain2, P(n, W))`.
    pub t_inj_estimate: f64,
    pub delta_upper: f64,
    pub delta_lower: f64,
}

/// For every size and replicate, draws `P(n, W)` from the target and bounds
/// the cut distance between its step kernel and the target. Rows come in
/// size-major order; row `r` is driven by substream `r` of `seed`.
pub fn converge_experiment(
    target: &StepKernel,
    sizes: &[usize],
    reps: u64,
    seed: u64,
    config: &SearchConfig,
) -> Result<Vec<ConvergeRow>> {
    let sampler = step(target.clone());
    let family = default_family();
    let chain2 = Poset::chain(2);
    let jobs: Vec<(usize, u64)> = sizes
        .iter()
        .flat_map(|&n| (0..reps).map(move |r| (n, r)))
        .collect();
    map_indices(jobs.len(), |x| {
        let (n, rep) = jobs[x];
        let mut rng = substream(seed, x as u64);
        let p = sample_wposet(&sampler, n, &mut rng)?;
        let config = SearchConfig {
            seed: rng.random(),
            ..config.clone()
        };
        let bounds = cut_distance_bounds(
            step_from_poset(&p).function(),
            target.function(),
            &family,
            &config,
        )?;
        Ok(ConvergeRow {
            n,
            rep,
            t_inj_estimate: t_inj_exact(&chain2, &p)?.value(),
            delta_upper: bounds.upper,
            delta_lower: bounds.lower,
        })
    })
    .into_iter()
    .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::two_point;
    use crate::step::random_masses;

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    fn brute_rect(f: &StepFunction) -> f64 {
        let n = f.parts();
        let m = weighted(f);
        let mut best: f64 = 0.0;
        for s in 0..1u64 << n {
            for t in 0..1u64 << n {
                best = best.max(box_sum(n, &m, s, t));
            }
        }
        best
    }

    fn brute_func(f: &StepFunction) -> f64 {
        let n = f.parts();
        let m = weighted(f);
        let sign = |mask: u64, i: usize| if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
        let mut best: f64 = 0.0;
        for a in 0..1u64 << n {
            for b in 0..1u64 << n {
                let mut sum = 0.0;
                for i in 0..n {
                    for j in 0..n {
                        sum += sign(a, i) * m[i * n + j] * sign(b, j);
                    }
                }
                best = best.max(sum.abs());
            }
        }
        best
    }

    fn checkerboard(a: f64) -> StepFunction {
        StepFunction::new(vec![0.5, 0.5], vec![vec![a, -a], vec![-a, a]]).unwrap()
    }

    #[test]
    fn checkerboard_norms() {
        for a in [0.3, 1.0, 2.5] {
            let f = checkerboard(a);
            assert!((cut_norm_rect(&f).unwrap() - a / 4.0).abs() < 1e-15);
            assert!((cut_norm_func(&f).unwrap() - a).abs() < 1e-15);
        }
        let w = cut_norm_rect_witness(&checkerboard(1.0)).unwrap();
        assert_eq!((w.s, w.t), (vec![0], vec![0]));
    }

    #[test]
    fn constants() {
        for c in [-0.7, 0.0, 0.4] {
            let f = StepFunction::constant(c);
            assert_eq!(cut_norm_rect(&f).unwrap(), c.abs());
            assert_eq!(cut_norm_func(&f).unwrap(), c.abs());
        }
        let d = StepFunction::constant(0.9)
            .difference(&StepFunction::constant(0.25))
            .unwrap();
        assert!((cut_norm_rect(&d).unwrap() - 0.65).abs() < 1e-15);
    }

    #[test]
    fn zero_function_has_empty_witness() {
        let f = StepFunction::new(vec![0.5, 0.5], vec![vec![0.0; 2]; 2]).unwrap();
        let w = cut_norm_rect_witness(&f).unwrap();
        assert_eq!(w.value, 0.0);
        assert!(w.s.is_empty());
    }

    #[test]
    fn ties_prefer_lexicographically_smallest_set() {
        assert!(lex_less(0b001, 0b011));
        assert!(lex_less(0b011, 0b010));
        assert!(!lex_less(0b010, 0b011));
        assert!(lex_less(0, 0b100));
        // S = {0} and S = {0, 1} give the same column sums; {0} wins.
        let f = StepFunction::new(vec![0.5, 0.5], vec![vec![1.0, 0.0], vec![0.0, 0.0]]).unwrap();
        let w = cut_norm_rect_witness(&f).unwrap();
        assert_eq!(w.s, vec![0]);
        assert_eq!(w.t, vec![0]);
    }

    #[test]
    fn enumeration_matches_brute_force() {
        let mut r = rng(11);
        for parts in 1..=5 {
            for _ in 0..20 {
                let f = StepFunction::random(parts, -1.0, 1.0, &mut r);
                assert!((cut_norm_rect(&f).unwrap() - brute_rect(&f)).abs() < 1e-12);
                assert!((cut_norm_func(&f).unwrap() - brute_func(&f)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn budget_is_enforced() {
        let f = StepFunction::random(25, 0.0, 1.0, &mut rng(1));
        assert!(matches!(
            cut_norm_rect(&f),
            Err(Error::BudgetExceeded { .. })
        ));
        assert!(matches!(
            cut_norm_func(&f),
            Err(Error::BudgetExceeded { .. })
        ));
    }

    #[test]
    fn step_from_poset_examples() {
        let e = step_from_poset(&Poset::trivial(4));
        assert!(e.function().values().iter().all(|&v| v == 0.0));
        let c = step_from_poset(&Poset::chain(2));
        assert_eq!(c.function().mass(), &[0.5, 0.5]);
        assert_eq!(c.function().values(), &[0.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn north_west_corner_margins() {
        let mut r = rng(3);
        for _ in 0..50 {
            let a = random_masses(r.random_range(1..7), &mut r);
            let b = random_masses(r.random_range(1..7), &mut r);
            let mut oa: Vec<usize> = (0..a.len()).collect();
            let mut ob: Vec<usize> = (0..b.len()).collect();
            oa.shuffle(&mut r);
            ob.shuffle(&mut r);
            let c = Coupling::north_west_corner(&a, &b, &oa, &ob);
            assert!(c.marginal_error(&a, &b) < 1e-9);
            assert!(c.cells().count() < a.len() + b.len());
            assert!(c.transpose().marginal_error(&b, &a) < 1e-9);
        }
    }

    #[test]
    fn overlay_norm_matches_explicit_overlay() {
        let mut r = rng(5);
        for _ in 0..20 {
            let w1 = StepFunction::random(r.random_range(1..5), 0.0, 1.0, &mut r);
            let w2 = StepFunction::random(r.random_range(1..5), 0.0, 1.0, &mut r);
            let oa: Vec<usize> = (0..w1.parts()).collect();
            let ob: Vec<usize> = (0..w2.parts()).collect();
            let c = Coupling::north_west_corner(w1.mass(), w2.mass(), &oa, &ob);
            let o = Overlay::new(&w1, &w2, &c);
            let (exact, certified) = o.norm();
            assert!(certified);
            let explicit = cut_norm_rect(&c.overlay(&w1, &w2).unwrap()).unwrap();
            assert!((exact - explicit).abs() < 1e-12);
            let heuristic = o.alternating();
            assert!(heuristic <= exact + 1e-12);
        }
    }

    #[test]
    fn identical_kernels_have_distance_zero() {
        let mut r = rng(6);
        let w = StepKernel::random(4, &mut r);
        let b = delta_cut_upper(w.function(), w.function(), &SearchConfig::default()).unwrap();
        assert_eq!(b.upper, 0.0);
        assert_eq!(b.coupling, Coupling::diagonal(w.function().mass()));
        assert_eq!(
            delta_cut_lower(w.function(), w.function(), &default_family()).unwrap(),
            0.0
        );
    }

    #[test]
    fn constants_cannot_be_aligned() {
        let b = delta_cut_upper(
            &StepFunction::constant(0.2),
            &StepFunction::constant(0.5),
            &SearchConfig::default(),
        )
        .unwrap();
        assert!((b.upper - 0.3).abs() < 1e-15);
        assert_eq!(b.coupling.get(0, 0), 1.0);
    }

    #[test]
    fn permutation_recovery() {
        let mut r = rng(7);
        for _ in 0..10 {
            let parts = r.random_range(2..=6);
            let w = StepKernel::random(parts, &mut r);
            let mut perm: Vec<usize> = (0..parts).collect();
            perm.shuffle(&mut r);
            let v = w.permuted(&perm);
            let b = delta_cut_upper(w.function(), v.function(), &SearchConfig::default()).unwrap();
            assert!(b.upper <= 1e-9, "{}", b.upper);
            assert!(b.exact);
        }
    }

    #[test]
    fn argument_order_and_scheduling_do_not_matter() {
        let mut r = rng(8);
        let w1 = StepKernel::random(4, &mut r);
        let w2 = StepKernel::random(3, &mut r);
        let cfg = SearchConfig {
            restarts: 8,
            seed: 3,
            ..SearchConfig::default()
        };
        let ab = delta_cut_upper(w1.function(), w2.function(), &cfg).unwrap();
        let ba = delta_cut_upper(w2.function(), w1.function(), &cfg).unwrap();
        assert_eq!(ab.upper, ba.upper);
        assert_eq!(ab.coupling, ba.coupling.transpose());
        let seq =
            crate::mc::sequential(|| delta_cut_upper(w1.function(), w2.function(), &cfg).unwrap());
        assert_eq!(seq, ab);
    }

    #[test]
    fn two_point_lower_bound() {
        let a = two_point(0.2).unwrap().to_step();
        let b = two_point(0.6).unwrap().to_step();
        let lower = delta_cut_lower(a.function(), b.function(), &default_family()).unwrap();
        assert!(lower >= 0.1 - 1e-12);
        let bounds = cut_distance_bounds(
            a.function(),
            b.function(),
            &default_family(),
            &SearchConfig::default(),
        )
        .unwrap();
        assert!(bounds.lower <= bounds.upper + 1e-9);
    }

    #[test]
    fn lower_bound_rejects_non_simple_patterns() {
        let loop1 = Digraph::new(1, &[(1, 1)]).unwrap();
        let f = StepFunction::constant(0.5);
        assert!(matches!(
            delta_cut_lower(&f, &f, &[loop1]),
            Err(Error::NotSimple(_))
        ));
        let signed = StepFunction::constant(-0.5);
        assert_eq!(
            delta_cut_lower(&f, &signed, &default_family()).unwrap(),
            0.0
        );
    }

    #[test]
    fn default_family_contents() {
        let fam = default_family();
        // chain2, then chain2 + point, V, Λ, chain3 on three elements
        assert_eq!(fam.len(), 7);
        assert!(fam.iter().all(|f| f.is_simple()));
        assert_eq!(fam[5], Digraph::d1());
        assert_eq!(fam[6], Digraph::d3());
    }

    #[test]
    fn converge_to_trivial_target() {
        let target = StepKernel::from_poset(&Poset::trivial(1));
        let cfg = SearchConfig {
            restarts: 2,
            ..SearchConfig::default()
        };
        let rows = converge_experiment(&target, &[5, 10], 2, 1, &cfg).unwrap();
        assert_eq!(rows.len(), 4);
        for row in rows {
            assert_eq!(
                (row.t_inj_estimate, row.delta_upper, row.delta_lower),
                (0.0, 0.0, 0.0)
            );
        }
    }

    #[test]
    fn converge_is_deterministic() {
        let target = two_point(0.5).unwrap().to_step();
        let cfg = SearchConfig {
            restarts: 2,
            max_evaluations: 50,
            ..SearchConfig::default()
        };
        let a = converge_experiment(&target, &[8, 30], 2, 9, &cfg).unwrap();
        let b =
            crate::mc::sequential(|| converge_experiment(&target, &[8, 30], 2, 9, &cfg).unwrap());
        assert_eq!(a, b);
        assert!(a
            .iter()
            .all(|r| r.delta_lower <= r.delta_upper + 1e-9 || !r.delta_upper.is_finite()));
    }
}
