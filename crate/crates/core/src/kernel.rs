//! Kernels on ordered probability spaces.
//!
//! A kernel is a sampler of points from a probability space, a strict partial
//! order `less` on those points, and a weight `w(x, y)` in `[0, 1]` with
//!
//! * `w(x, y) > 0` only if `less(x, y)`, and
//! * `w(x, z) = 1` whenever `w(x, y) > 0` and `w(y, z) > 0`.
//!
//! Points are an associated type, private to each kernel. [`Weighted`]
//! carries the sampler and weight alone, which is all the poset-limit test
//! needs; [`Kernel`] adds the order.

use std::fmt::Debug;

use rand::{Rng, RngCore};
use serde::Serialize;

use crate::mc::{estimate_mean, map_batches, DensityEstimate, Welford};
use crate::poset::Poset;
use crate::step::{check_probability, StepFunction, StepKernel};
use crate::{Error, Result};

/// A probability space with a weight on ordered pairs of points.
pub trait Weighted: Send + Sync {
    type Point: Clone + Debug + Send + Sync;

    /// One draw from the underlying measure.
    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Point;

    fn w(&self, x: &Self::Point, y: &Self::Point) -> f64;
}

/// A [`Weighted`] space whose points carry a strict partial order.
pub trait Kernel: Weighted {
    fn less(&self, x: &Self::Point, y: &Self::Point) -> bool;
}

impl<K: Weighted + ?Sized> Weighted for &K {
    type Point = K::Point;

    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Point {
        (**self).sample(rng)
    }

    fn w(&self, x: &Self::Point, y: &Self::Point) -> f64 {
        (**self).w(x, y)
    }
}

impl<K: Kernel + ?Sized> Kernel for &K {
    fn less(&self, x: &Self::Point, y: &Self::Point) -> bool {
        (**self).less(x, y)
    }
}

/// A probability space with a strict partial order, without a weight.
pub trait OrderedSpace: Send + Sync {
    type Point: Clone + Debug + Send + Sync;

    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Point;

    fn less(&self, x: &Self::Point, y: &Self::Point) -> bool;
}

/// The strict kernel `w(x, y) = 1{x < y}` of an ordered space.
#[derive(Clone, Debug)]
pub struct Indicator<S>(pub S);

impl<S: OrderedSpace> Weighted for Indicator<S> {
    type Point = S::Point;

    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Point {
        self.0.sample(rng)
    }

    fn w(&self, x: &Self::Point, y: &Self::Point) -> f64 {
        self.0.less(x, y) as u8 as f64
    }
}

impl<S: OrderedSpace> Kernel for Indicator<S> {
    fn less(&self, x: &Self::Point, y: &Self::Point) -> bool {
        self.0.less(x, y)
    }
}

pub fn indicator<S: OrderedSpace>(space: S) -> Indicator<S> {
    Indicator(space)
}

/// `[0, 1]` with Lebesgue measure and the standard order.
///
/// The measure must be atomless for `1{x < y}` to give a total order; two
/// uniform draws coincide with probability about `2^-53`, in which case the
/// two points are incomparable.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitInterval;

impl OrderedSpace for UnitInterval {
    type Point = f64;

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random()
    }

    fn less(&self, x: &f64, y: &f64) -> bool {
        x < y
    }
}

/// `[0, 1]^2` with Lebesgue measure and the coordinatewise product order.
#[derive(Clone, Copy, Debug, Default)]
pub struct UnitSquare;

impl OrderedSpace for UnitSquare {
    type Point = [f64; 2];

    fn sample<R: Rng>(&self, rng: &mut R) -> [f64; 2] {
        [rng.random(), rng.random()]
    }

    fn less(&self, x: &[f64; 2], y: &[f64; 2]) -> bool {
        x[0] < y[0] && x[1] < y[1]
    }
}

/// Closed intervals `[a, b]` of `[0, 1]`, ordered by lying entirely to the left.
#[derive(Clone, Debug)]
pub struct Intervals<F = fn(&mut dyn RngCore) -> (f64, f64)> {
    sampler: F,
}

/// The default interval law: endpoints are two sorted uniforms.
pub fn sorted_uniform_pair(rng: &mut dyn RngCore) -> (f64, f64) {
    let a: f64 = rng.random();
    let b: f64 = rng.random();
    if a <= b {
        (a, b)
    } else {
        (b, a)
    }
}

impl<F> OrderedSpace for Intervals<F>
where
    F: Fn(&mut dyn RngCore) -> (f64, f64) + Send + Sync,
{
    type Point = (f64, f64);

    fn sample<R: Rng>(&self, rng: &mut R) -> (f64, f64) {
        let iv = (self.sampler)(rng);
        debug_assert!(iv.0 <= iv.1, "interval sampler must return x <= y");
        iv
    }

    fn less(&self, x: &(f64, f64), y: &(f64, f64)) -> bool {
        x.1 < y.0
    }
}

/// The elements of a finite poset with uniform mass.
#[derive(Clone, Debug)]
pub struct PosetSpace(pub Poset);

impl OrderedSpace for PosetSpace {
    type Point = usize;

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        rng.random_range(0..self.0.len())
    }

    fn less(&self, x: &usize, y: &usize) -> bool {
        self.0.less(*x, *y)
    }
}

/// `{0, 1}` with mass 1/2 each, `0 < 1`, and `w(0, 1) = p`.
#[derive(Clone, Copy, Debug)]
pub struct TwoPoint {
    p: f64,
}

impl TwoPoint {
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn to_step(&self) -> StepKernel {
        StepKernel::new(
            StepFunction::new(vec![0.5, 0.5], vec![vec![0.0, self.p], vec![0.0, 0.0]])
                .expect("valid"),
            Poset::chain(2),
        )
        .expect("valid kernel")
    }
}

impl Weighted for TwoPoint {
    type Point = bool;

    fn sample<R: Rng>(&self, rng: &mut R) -> bool {
        rng.random_bool(0.5)
    }

    fn w(&self, x: &bool, y: &bool) -> f64 {
        if self.less(x, y) {
            self.p
        } else {
            0.0
        }
    }
}

impl Kernel for TwoPoint {
    fn less(&self, x: &bool, y: &bool) -> bool {
        !*x && *y
    }
}

/// `w_a(x, y) = 1{y - x > 1/a}` on `[0, 1]` with the standard order; `a = ∞`
/// gives the total-order kernel and `a <= 1` gives `w = 0`.
#[derive(Clone, Copy, Debug)]
pub struct Threshold {
    gap: f64,
}

impl Threshold {
    pub fn a(&self) -> f64 {
        1.0 / self.gap
    }
}

impl Weighted for Threshold {
    type Point = f64;

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random()
    }

    fn w(&self, x: &f64, y: &f64) -> f64 {
        (y - x > self.gap) as u8 as f64
    }
}

impl Kernel for Threshold {
    fn less(&self, x: &f64, y: &f64) -> bool {
        x < y
    }
}

/// The zero kernel on a one-point space.
#[derive(Clone, Copy, Debug, Default)]
pub struct Trivial;

impl Weighted for Trivial {
    type Point = ();

    fn sample<R: Rng>(&self, _rng: &mut R) {}

    fn w(&self, _: &(), _: &()) -> f64 {
        0.0
    }
}

impl Kernel for Trivial {
    fn less(&self, _: &(), _: &()) -> bool {
        false
    }
}

/// A constant weight on `[0, 1]`, with no order attached. Not a kernel unless
/// the constant is 0; useful as a negative control for [`poset_limit_test`].
#[derive(Clone, Copy, Debug)]
pub struct Constant(pub f64);

impl Weighted for Constant {
    type Point = f64;

    fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        rng.random()
    }

    fn w(&self, _: &f64, _: &f64) -> f64 {
        self.0
    }
}

fn sample_part<R: Rng>(cumulative: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random();
    let i = cumulative.partition_point(|&c| c <= u);
    if i < cumulative.len() {
        i
    } else {
        // rounding left the total just under 1: take the last part with mass
        let last = *cumulative.last().expect("non-empty");
        cumulative.partition_point(|&c| c < last)
    }
}

fn cumulative(mass: &[f64]) -> Vec<f64> {
    mass.iter()
        .scan(0.0, |acc, m| {
            *acc += m;
            Some(*acc)
        })
        .collect()
}

/// A step kernel as a sampler over part indices.
#[derive(Clone, Debug)]
pub struct StepSampler<T> {
    inner: T,
    cumulative: Vec<f64>,
}

impl StepSampler<StepKernel> {
    pub fn kernel(&self) -> &StepKernel {
        &self.inner
    }
}

impl From<StepKernel> for StepSampler<StepKernel> {
    fn from(k: StepKernel) -> Self {
        let cumulative = cumulative(k.function().mass());
        StepSampler {
            inner: k,
            cumulative,
        }
    }
}

impl From<StepFunction> for StepSampler<StepFunction> {
    fn from(f: StepFunction) -> Self {
        let cumulative = cumulative(f.mass());
        StepSampler {
            inner: f,
            cumulative,
        }
    }
}

impl Weighted for StepSampler<StepKernel> {
    type Point = usize;

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        sample_part(&self.cumulative, rng)
    }

    fn w(&self, x: &usize, y: &usize) -> f64 {
        self.inner.function().value(*x, *y)
    }
}

impl Kernel for StepSampler<StepKernel> {
    fn less(&self, x: &usize, y: &usize) -> bool {
        self.inner.order().less(*x, *y)
    }
}

impl Weighted for StepSampler<StepFunction> {
    type Point = usize;

    fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        sample_part(&self.cumulative, rng)
    }

    fn w(&self, x: &usize, y: &usize) -> f64 {
        self.inner.value(*x, *y)
    }
}

/// The kernel extended by an isolated atom `*` of mass `1 - s`, with the rest
/// of the measure scaled by `s`. Points are `None` for `*`.
#[derive(Clone, Debug)]
pub struct Thinned<K> {
    base: K,
    s: f64,
}

impl<K> Thinned<K> {
    pub fn keep_probability(&self) -> f64 {
        self.s
    }

    pub fn base(&self) -> &K {
        &self.base
    }
}

impl<K: Weighted> Weighted for Thinned<K> {
    type Point = Option<K::Point>;

    fn sample<R: Rng>(&self, rng: &mut R) -> Self::Point {
        if rng.random::<f64>() < self.s {
            Some(self.base.sample(rng))
        } else {
            None
        }
    }

    fn w(&self, x: &Self::Point, y: &Self::Point) -> f64 {
        match (x, y) {
            (Some(a), Some(b)) => self.base.w(a, b),
            _ => 0.0,
        }
    }
}

impl<K: Kernel> Kernel for Thinned<K> {
    fn less(&self, x: &Self::Point, y: &Self::Point) -> bool {
        match (x, y) {
            (Some(a), Some(b)) => self.base.less(a, b),
            _ => false,
        }
    }
}

pub fn two_point(p: f64) -> Result<TwoPoint> {
    check_probability("p", p)?;
    Ok(TwoPoint { p })
}

/// `a` in `(0, ∞]`.
pub fn threshold(a: f64) -> Result<Threshold> {
    if a.is_nan() || a <= 0.0 {
        return Err(Error::ParameterRange {
            name: "a",
            value: a,
            range: "(0, inf]",
        });
    }
    Ok(Threshold { gap: 1.0 / a })
}

pub fn total_unit() -> Indicator<UnitInterval> {
    Indicator(UnitInterval)
}

pub fn trivial() -> Trivial {
    Trivial
}

pub fn product2d() -> Indicator<UnitSquare> {
    Indicator(UnitSquare)
}

pub fn interval() -> Indicator<Intervals> {
    Indicator(Intervals {
        sampler: sorted_uniform_pair,
    })
}

/// Intervals drawn by `sampler`, which must return `(x, y)` with `x <= y`.
pub fn interval_with<F>(sampler: F) -> Indicator<Intervals<F>>
where
    F: Fn(&mut dyn RngCore) -> (f64, f64) + Send + Sync,
{
    Indicator(Intervals { sampler })
}

/// The strict kernel of a finite poset with uniform mass.
pub fn from_poset(p: &Poset) -> Result<Indicator<PosetSpace>> {
    if p.is_empty() {
        return Err(Error::EmptySubset);
    }
    Ok(Indicator(PosetSpace(p.clone())))
}

pub fn step(k: StepKernel) -> StepSampler<StepKernel> {
    k.into()
}

pub fn thin<K: Weighted>(base: K, s: f64) -> Result<Thinned<K>> {
    check_probability("s", s)?;
    Ok(Thinned { base, s })
}

/// Which axiom a sampled triple broke.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum AxiomRule {
    /// `w(x, y) > 0` without `x < y`.
    Support,
    /// `w(x, y) > 0` and `w(y, z) > 0` but `w(x, z) < 1`.
    Transitivity,
    /// `less` is not a strict partial order on the triple.
    Order,
    /// `w` outside `[0, 1]`.
    Range,
}

#[derive(Clone, Debug, Serialize)]
pub struct AxiomWitness {
    pub rule: AxiomRule,
    pub triple: u64,
    pub points: String,
}

/// Violation tallies from [`check_axioms`].
#[derive(Clone, Debug, Default, Serialize)]
pub struct AxiomReport {
    pub triples_checked: u64,
    pub w1_violations: u64,
    pub w2_violations: u64,
    pub order_violations: u64,
    pub range_violations: u64,
    /// Up to [`MAX_WITNESSES`] per rule, in sampling order.
    pub witnesses: Vec<AxiomWitness>,
}

pub const MAX_WITNESSES: usize = 10;

impl AxiomReport {
    pub fn pass(&self) -> bool {
        self.w1_violations == 0
            && self.w2_violations == 0
            && self.order_violations == 0
            && self.range_violations == 0
    }

    fn merge(&mut self, other: AxiomReport) {
        self.triples_checked += other.triples_checked;
        self.w1_violations += other.w1_violations;
        self.w2_violations += other.w2_violations;
        self.order_violations += other.order_violations;
        self.range_violations += other.range_violations;
        for w in other.witnesses {
            let seen = self.witnesses.iter().filter(|x| x.rule == w.rule).count();
            if seen < MAX_WITNESSES {
                self.witnesses.push(w);
            }
        }
    }

    fn record(&mut self, rule: AxiomRule, triple: u64, points: impl FnOnce() -> String) {
        match rule {
            AxiomRule::Support => self.w1_violations += 1,
            AxiomRule::Transitivity => self.w2_violations += 1,
            AxiomRule::Order => self.order_violations += 1,
            AxiomRule::Range => self.range_violations += 1,
        }
        if self.witnesses.iter().filter(|w| w.rule == rule).count() < MAX_WITNESSES {
            self.witnesses.push(AxiomWitness {
                rule,
                triple,
                points: points(),
            });
        }
    }
}

const PERMS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

/// Samples `triples` independent point triples and tallies violations of the
/// kernel axioms. A weight counts as positive when it exceeds `tol`, and as 1
/// when it is at least `1 - tol`.
pub fn check_axioms<K: Kernel>(kernel: &K, triples: u64, seed: u64, tol: f64) -> AxiomReport {
    let parts = map_batches(triples, seed, |rng, first, len| {
        let mut rep = AxiomReport::default();
        for t in first..first + len {
            let pts = [kernel.sample(rng), kernel.sample(rng), kernel.sample(rng)];
            check_triple(kernel, &pts, t, tol, &mut rep);
            rep.triples_checked += 1;
        }
        rep
    });
    let mut total = AxiomReport::default();
    for p in parts {
        total.merge(p);
    }
    total
}

fn check_triple<K: Kernel>(
    kernel: &K,
    pts: &[K::Point; 3],
    t: u64,
    tol: f64,
    rep: &mut AxiomReport,
) {
    let show = || format!("{:?}", pts);
    let mut w = [[0.0; 3]; 3];
    for a in 0..3 {
        for b in 0..3 {
            w[a][b] = kernel.w(&pts[a], &pts[b]);
            if !(0.0..=1.0).contains(&w[a][b]) {
                rep.record(AxiomRule::Range, t, show);
            }
            // a point compared with itself has to be unrelated, so w(x, x) = 0
            if w[a][b] > tol && !kernel.less(&pts[a], &pts[b]) {
                rep.record(AxiomRule::Support, t, show);
            }
        }
    }
    for a in 0..3 {
        if kernel.less(&pts[a], &pts[a]) {
            rep.record(AxiomRule::Order, t, show);
        }
        for b in a + 1..3 {
            if kernel.less(&pts[a], &pts[b]) && kernel.less(&pts[b], &pts[a]) {
                rep.record(AxiomRule::Order, t, show);
            }
        }
    }
    for [a, b, c] in PERMS {
        if kernel.less(&pts[a], &pts[b])
            && kernel.less(&pts[b], &pts[c])
            && !kernel.less(&pts[a], &pts[c])
        {
            rep.record(AxiomRule::Order, t, show);
        }
        if w[a][b] > tol && w[b][c] > tol && w[a][c] < 1.0 - tol {
            rep.record(AxiomRule::Transitivity, t, show);
        }
    }
}

/// Monte-Carlo estimate of `t(Q, W) = ∫ ∏_{i <_Q j} w(x_i, x_j)`.
pub fn t_kernel_mc<K: Weighted>(q: &Poset, kernel: &K, samples: u64, seed: u64) -> DensityEstimate {
    let rels: Vec<(usize, usize)> = q.relations().collect();
    let n = q.len();
    estimate_mean(samples, seed, |rng| {
        let pts: Vec<K::Point> = (0..n).map(|_| kernel.sample(rng)).collect();
        let mut prod = 1.0;
        for &(i, j) in &rels {
            prod *= kernel.w(&pts[i], &pts[j]);
            if prod == 0.0 {
                break;
            }
        }
        prod
    })
}

/// Estimates of the three special-digraph densities for a candidate weight.
#[derive(Clone, Debug, Serialize)]
pub struct PosetLimitReport {
    /// `t(D1)`, path `1 -> 2 -> 3`.
    pub d1: DensityEstimate,
    /// `t(D2)`, the 3-chain.
    pub d2: DensityEstimate,
    /// `t(D3)`, the directed 3-cycle.
    pub d3: DensityEstimate,
    /// `t(D1) - t(D2)`, estimated per sample.
    pub gap: DensityEstimate,
    pub pass: bool,
}

/// Tests whether a weight behaves like a kernel of a poset limit: both
/// `t(D1) - t(D2)` and `t(D3)` must be within 4 standard errors of 0.
pub fn poset_limit_test<W: Weighted>(candidate: &W, samples: u64, seed: u64) -> PosetLimitReport {
    let parts = map_batches(samples, seed, |rng, _, len| {
        let mut acc = [Welford::new(); 4];
        for _ in 0..len {
            let x = [
                candidate.sample(rng),
                candidate.sample(rng),
                candidate.sample(rng),
            ];
            let path = candidate.w(&x[0], &x[1]) * candidate.w(&x[1], &x[2]);
            let chain = path * candidate.w(&x[0], &x[2]);
            let cycle = path * candidate.w(&x[2], &x[0]);
            acc[0].push(path);
            acc[1].push(chain);
            acc[2].push(cycle);
            acc[3].push(path - chain);
        }
        acc
    });
    let mut acc = [Welford::new(); 4];
    for p in &parts {
        for (a, b) in acc.iter_mut().zip(p) {
            a.merge(b);
        }
    }
    let [d1, d2, d3, gap] = acc.map(|a| a.estimate());
    let pass = gap.within(0.0, 4.0) && d3.within(0.0, 4.0);
    PosetLimitReport {
        d1,
        d2,
        d3,
        gap,
        pass,
    }
}

/// Exact special-digraph densities of a step function.
pub fn poset_limit_test_step(f: &StepFunction) -> Result<(f64, f64, f64)> {
    use crate::poset::Digraph;
    use crate::step::digraph_density_step;
    Ok((
        digraph_density_step(&Digraph::d1(), f)?,
        digraph_density_step(&Digraph::d2(), f)?,
        digraph_density_step(&Digraph::d3(), f)?,
    ))
}

/// Receives a concrete kernel type from [`NamedKernel::visit`].
pub trait KernelVisitor {
    type Output;

    fn visit<K: Kernel>(self, kernel: &K) -> Self::Output;
}

#[derive(Clone, Debug)]
enum BaseKernel {
    TwoPoint(TwoPoint),
    Threshold(Threshold),
    Total,
    Trivial,
    Product2d,
    Interval,
    FromPoset(Indicator<PosetSpace>),
    Step(StepSampler<StepKernel>),
}

/// A built-in kernel addressed by a `name:params` string:
///
/// `two_point:P`, `threshold:A` (`inf` allowed), `total`, `trivial`,
/// `product2d`, `interval`, `from_poset:PATH.json`, `step:PATH.json`, and
/// `thin:BASE:S` for any of these as `BASE`. Nested thinning composes.
#[derive(Clone, Debug)]
pub struct NamedKernel {
    spec: String,
    base: BaseKernel,
    keep: Option<f64>,
}

fn parse_number(spec: &str, s: &str) -> Result<f64> {
    s.trim()
        .parse::<f64>()
        .map_err(|_| Error::UnknownKernel(spec.to_string()))
}

impl NamedKernel {
    pub fn parse(spec: &str) -> Result<NamedKernel> {
        let spec = spec.trim();
        if let Some(rest) = spec.strip_prefix("thin:") {
            let (base, s) = rest
                .rsplit_once(':')
                .ok_or_else(|| Error::UnknownKernel(spec.to_string()))?;
            let s = parse_number(spec, s)?;
            check_probability("s", s)?;
            let mut inner = NamedKernel::parse(base)?;
            inner.keep = Some(inner.keep.unwrap_or(1.0) * s);
            inner.spec = spec.to_string();
            return Ok(inner);
        }
        let (name, arg) = match spec.split_once(':') {
            Some((n, a)) => (n, Some(a)),
            None => (spec, None),
        };
        let base = match (name, arg) {
            ("two_point", Some(p)) => BaseKernel::TwoPoint(two_point(parse_number(spec, p)?)?),
            ("threshold", Some(a)) => BaseKernel::Threshold(threshold(parse_number(spec, a)?)?),
            ("total", None) | ("total_unit", None) => BaseKernel::Total,
            ("trivial", None) => BaseKernel::Trivial,
            ("product2d", None) => BaseKernel::Product2d,
            ("interval", None) => BaseKernel::Interval,
            ("from_poset", Some(path)) => {
                let p = crate::io::read_poset(path, crate::poset::Closure::TakeClosure)?;
                BaseKernel::FromPoset(from_poset(&p)?)
            }
            ("step", Some(path)) => BaseKernel::Step(step(crate::io::read_step_kernel(path)?)),
            _ => return Err(Error::UnknownKernel(spec.to_string())),
        };
        Ok(NamedKernel {
            spec: spec.to_string(),
            base,
            keep: None,
        })
    }

    pub fn spec(&self) -> &str {
        &self.spec
    }

    pub fn visit<V: KernelVisitor>(&self, v: V) -> V::Output {
        match &self.base {
            BaseKernel::TwoPoint(k) => self.apply(k, v),
            BaseKernel::Threshold(k) => self.apply(k, v),
            BaseKernel::Total => self.apply(&total_unit(), v),
            BaseKernel::Trivial => self.apply(&Trivial, v),
            BaseKernel::Product2d => self.apply(&product2d(), v),
            BaseKernel::Interval => self.apply(&interval(), v),
            BaseKernel::FromPoset(k) => self.apply(k, v),
            BaseKernel::Step(k) => self.apply(k, v),
        }
    }

    fn apply<K: Kernel, V: KernelVisitor>(&self, k: &K, v: V) -> V::Output {
        match self.keep {
            Some(s) => v.visit(&Thinned { base: k, s }),
            None => v.visit(k),
        }
    }

    /// The finite-type form, when the kernel has one.
    pub fn to_step(&self) -> Result<StepKernel> {
        let base = match &self.base {
            BaseKernel::TwoPoint(k) => k.to_step(),
            BaseKernel::Trivial => StepKernel::from_poset(&Poset::trivial(1)),
            BaseKernel::FromPoset(k) => StepKernel::from_poset(&k.0 .0),
            BaseKernel::Step(k) => k.kernel().clone(),
            _ => return Err(Error::NotFiniteType(self.spec.clone())),
        };
        match self.keep {
            Some(s) => base.thinned(s),
            None => Ok(base),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::step::t_kernel_exact_step;

    #[test]
    fn builtins_pass_axioms() {
        let seed = 4;
        let n = 20_000;
        assert!(check_axioms(&two_point(0.7).unwrap(), n, seed, 0.0).pass());
        assert!(check_axioms(&total_unit(), n, seed, 0.0).pass());
        assert!(check_axioms(&trivial(), n, seed, 0.0).pass());
        assert!(check_axioms(&product2d(), n, seed, 0.0).pass());
        assert!(check_axioms(&interval(), n, seed, 0.0).pass());
        assert!(check_axioms(&threshold(2.0).unwrap(), n, seed, 0.0).pass());
        assert!(check_axioms(&threshold(f64::INFINITY).unwrap(), n, seed, 0.0).pass());
        assert!(check_axioms(&from_poset(&Poset::chain(3)).unwrap(), n, seed, 0.0).pass());
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let sk = step(StepKernel::random(5, &mut rng));
        assert!(check_axioms(&sk, n, seed, 0.0).pass());
        assert!(check_axioms(&thin(two_point(0.4).unwrap(), 0.3).unwrap(), n, seed, 0.0).pass());
    }

    struct HalfLess;

    impl Weighted for HalfLess {
        type Point = f64;
        fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
            rng.random()
        }
        fn w(&self, x: &f64, y: &f64) -> f64 {
            0.5 * (x < y) as u8 as f64
        }
    }

    impl Kernel for HalfLess {
        fn less(&self, x: &f64, y: &f64) -> bool {
            x < y
        }
    }

    #[test]
    fn broken_kernel_is_caught() {
        let rep = check_axioms(&HalfLess, 10_000, 1, 0.0);
        assert!(!rep.pass());
        assert!(rep.w2_violations > 0);
        assert_eq!(rep.w1_violations, 0);
        let w2 = rep
            .witnesses
            .iter()
            .filter(|w| w.rule == AxiomRule::Transitivity)
            .count();
        assert_eq!(w2, MAX_WITNESSES);
        // the report does not depend on the thread count
        let seq = crate::mc::sequential(|| check_axioms(&HalfLess, 10_000, 1, 0.0));
        assert_eq!(seq.w2_violations, rep.w2_violations);
    }

    #[test]
    fn parameter_ranges() {
        assert!(two_point(1.2).is_err());
        assert!(two_point(-0.1).is_err());
        assert!(threshold(0.0).is_err());
        assert!(threshold(f64::NAN).is_err());
        assert!(thin(trivial(), 1.01).is_err());
        assert!(from_poset(&Poset::trivial(0)).is_err());
    }

    #[test]
    fn threshold_below_one_is_zero() {
        let k = threshold(0.9).unwrap();
        let e = t_kernel_mc(&Poset::chain(2), &k, 10_000, 3);
        assert_eq!(e.value, 0.0);
        let k = threshold(1.0).unwrap();
        assert_eq!(k.w(&0.0, &1.0), 0.0);
    }

    #[test]
    fn two_point_zero_is_trivial_in_law() {
        let k = two_point(0.0).unwrap();
        for q in [Poset::chain(2), Poset::chain(3)] {
            assert_eq!(t_kernel_mc(&q, &k, 5000, 1).value, 0.0);
            assert_eq!(t_kernel_mc(&q, &trivial(), 5000, 1).value, 0.0);
        }
    }

    #[test]
    fn kernel_mc_matches_exact_step() {
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(8);
        let sk = StepKernel::random(4, &mut rng);
        let q = Poset::new(3, &[(1, 2), (1, 3)], crate::poset::Closure::TakeClosure).unwrap();
        let exact = t_kernel_exact_step(&q, &sk).unwrap();
        let est = t_kernel_mc(&q, &step(sk), 200_000, 2);
        assert!(est.within(exact, 4.0), "{est:?} vs {exact}");
    }

    #[test]
    fn from_poset_kernel_matches_hom_density() {
        let p = Poset::new(
            4,
            &[(1, 2), (3, 4), (1, 4)],
            crate::poset::Closure::TakeClosure,
        )
        .unwrap();
        let q = Poset::chain(2);
        let exact = crate::density::t_exact(&q, &p).unwrap().value();
        let est = t_kernel_mc(&q, &from_poset(&p).unwrap(), 200_000, 6);
        assert!(est.within(exact, 4.0));
    }

    #[test]
    fn limit_test_examples() {
        let c = poset_limit_test(&Constant(0.5), 20_000, 1);
        assert!(!c.pass);
        assert_eq!(c.d3.value, 0.125);
        assert!(poset_limit_test(&two_point(0.5).unwrap(), 20_000, 1).pass);
        assert!(poset_limit_test(&threshold(2.0).unwrap(), 20_000, 1).pass);
        let (d1, d2, d3) = poset_limit_test_step(&StepFunction::constant(0.5)).unwrap();
        assert_eq!((d1, d2, d3), (0.25, 0.125, 0.125));
        let (d1, d2, d3) =
            poset_limit_test_step(two_point(0.5).unwrap().to_step().function()).unwrap();
        assert_eq!((d1 - d2, d3), (0.0, 0.0));
    }

    #[test]
    fn thinning_examples() {
        let base = two_point(0.5).unwrap();
        let q = Poset::chain(2);
        let e = t_kernel_mc(&q, &thin(base, 0.0).unwrap(), 10_000, 2);
        assert_eq!((e.value, e.stderr), (0.0, 0.0));
        let a = t_kernel_mc(&q, &thin(base, 1.0).unwrap(), 100_000, 2);
        let b = t_kernel_mc(&q, &base, 100_000, 3);
        assert!((a.value - b.value).abs() <= 4.0 * (a.stderr.hypot(b.stderr)));
    }

    #[test]
    fn named_kernels_parse() {
        for s in [
            "two_point:0.5",
            "threshold:2",
            "threshold:inf",
            "total",
            "trivial",
            "product2d",
            "interval",
            "thin:two_point:0.5:0.3",
            "thin:thin:total:0.5:0.5",
        ] {
            NamedKernel::parse(s).unwrap();
        }
        for s in [
            "two_point",
            "two_point:x",
            "thin:total",
            "thin:total:2",
            "bogus",
            "threshold:-1",
        ] {
            assert!(NamedKernel::parse(s).is_err(), "{s}");
        }
        let k = NamedKernel::parse("thin:thin:two_point:0.8:0.5:0.5").unwrap();
        let st = k.to_step().unwrap();
        let t = t_kernel_exact_step(&Poset::chain(2), &st).unwrap();
        assert!((t - 0.0625 * 0.2).abs() < 1e-15);
        assert!(NamedKernel::parse("total").unwrap().to_step().is_err());

        struct Density;
        impl KernelVisitor for Density {
            type Output = f64;
            fn visit<K: Kernel>(self, k: &K) -> f64 {
                t_kernel_mc(&Poset::chain(2), k, 50_000, 1).value
            }
        }
        let v = NamedKernel::parse("thin:two_point:1:0.0")
            .unwrap()
            .visit(Density);
        assert_eq!(v, 0.0);
    }
}
