//! Finite-type functions and kernels.
//!
//! A [`StepFunction`] is constant on each product `A_i x A_j` of a partition
//! of its probability space into parts of mass `mass[i]`. Integrals against it
//! reduce to finite sums over part assignments, which is what makes exact
//! densities and cut norms computable.

use rand::Rng;

use crate::density::DEFAULT_BUDGET;
use crate::poset::{Closure, Digraph, Poset};
use crate::{Error, Result};

/// Tolerance on the total mass.
pub const MASS_TOLERANCE: f64 = 1e-12;

/// A real function on `S x S` that is constant on products of parts.
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    mass: Vec<f64>,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(mass: Vec<f64>, values: Vec<Vec<f64>>) -> Result<StepFunction> {
        let n = mass.len();
        if values.len() != n || values.iter().any(|r| r.len() != n) {
            return Err(Error::InvalidStep(format!(
                "values must be {n}x{n} to match {n} part masses"
            )));
        }
        Self::from_flat(mass, values.into_iter().flatten().collect())
    }

    /// `values` in row-major order.
    pub fn from_flat(mass: Vec<f64>, values: Vec<f64>) -> Result<StepFunction> {
        let n = mass.len();
        if n == 0 {
            return Err(Error::InvalidStep("no parts".into()));
        }
        if values.len() != n * n {
            return Err(Error::InvalidStep(format!("expected {} values", n * n)));
        }
        if mass.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(Error::InvalidStep(
                "masses must be finite and nonnegative".into(),
            ));
        }
        let total: f64 = mass.iter().sum();
        if (total - 1.0).abs() > MASS_TOLERANCE {
            return Err(Error::InvalidStep(format!("masses sum to {total}, not 1")));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidStep("values must be finite".into()));
        }
        Ok(StepFunction { mass, values })
    }

    /// A one-part function with value `c`.
    pub fn constant(c: f64) -> StepFunction {
        StepFunction {
            mass: vec![1.0],
            values: vec![c],
        }
    }

    pub fn parts(&self) -> usize {
        self.mass.len()
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    #[inline]
    pub fn value(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.parts() + j]
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Moves part `i` to position `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> StepFunction {
        let n = self.parts();
        assert_eq!(perm.len(), n, "permutation length");
        let mut mass = vec![0.0; n];
        let mut values = vec![0.0; n * n];
        for i in 0..n {
            mass[perm[i]] = self.mass[i];
            for j in 0..n {
                values[perm[i] * n + perm[j]] = self.value(i, j);
            }
        }
        StepFunction { mass, values }
    }

    /// Pointwise `self - other` over a shared partition.
    pub fn difference(&self, other: &StepFunction) -> Result<StepFunction> {
        self.same_partition(other)?;
        Ok(self.zip_values(other, |a, b| a - b))
    }

    /// Pointwise `self + other` over a shared partition.
    pub fn sum(&self, other: &StepFunction) -> Result<StepFunction> {
        self.same_partition(other)?;
        Ok(self.zip_values(other, |a, b| a + b))
    }

    pub fn scaled(&self, c: f64) -> StepFunction {
        StepFunction {
            mass: self.mass.clone(),
            values: self.values.iter().map(|v| v * c).collect(),
        }
    }

    fn same_partition(&self, other: &StepFunction) -> Result<()> {
        if self.mass != other.mass {
            return Err(Error::InvalidStep("partitions differ".into()));
        }
        Ok(())
    }

    fn zip_values(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> StepFunction {
        StepFunction {
            mass: self.mass.clone(),
            values: self
                .values
                .iter()
                .zip(&other.values)
                .map(|(a, b)| f(*a, *b))
                .collect(),
        }
    }

    /// `∫ F`.
    pub fn integral(&self) -> f64 {
        self.weighted_sum(|v| v)
    }

    /// `∫ |F|`.
    pub fn l1_norm(&self) -> f64 {
        self.weighted_sum(f64::abs)
    }

    fn weighted_sum(&self, f: impl Fn(f64) -> f64) -> f64 {
        let n = self.parts();
        (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| f(self.value(i, j)) * self.mass[i] * self.mass[j])
                    .sum::<f64>()
            })
            .sum()
    }

    pub fn is_unit_valued(&self) -> bool {
        self.values.iter().all(|v| (0.0..=1.0).contains(v))
    }

    /// Random masses bounded away from zero and values uniform in `lo..hi`.
    pub fn random<R: Rng>(parts: usize, lo: f64, hi: f64, rng: &mut R) -> StepFunction {
        let mass = random_masses(parts, rng);
        let values = (0..parts * parts)
            .map(|_| rng.random_range(lo..hi))
            .collect();
        StepFunction { mass, values }
    }
}

/// Masses proportional to uniforms on `[0.2, 1)`.
pub fn random_masses<R: Rng>(parts: usize, rng: &mut R) -> Vec<f64> {
    let raw: Vec<f64> = (0..parts).map(|_| rng.random_range(0.2..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.into_iter().map(|x| x / total).collect()
}

/// A finite-type kernel: a step function with values in `[0, 1]` on an
/// ordered partition, positive only on ordered pairs of parts and equal to 1
/// across any two consecutive positive steps.
#[derive(Clone, Debug, PartialEq)]
pub struct StepKernel {
    func: StepFunction,
    order: Poset,
}

impl StepKernel {
    pub fn new(func: StepFunction, order: Poset) -> Result<StepKernel> {
        let n = func.parts();
        if order.len() != n {
            return Err(Error::SizeMismatch {
                left: n,
                right: order.len(),
            });
        }
        if !func.is_unit_valued() {
            return Err(Error::InvalidStep(
                "kernel values must lie in [0, 1]".into(),
            ));
        }
        for i in 0..n {
            for j in 0..n {
                if func.value(i, j) > 0.0 && !order.less(i, j) {
                    return Err(Error::InvalidStep(format!(
                        "value at ({}, {}) is positive but the parts are not ordered",
                        i + 1,
                        j + 1
                    )));
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if func.value(i, j) == 0.0 {
                    continue;
                }
                for k in 0..n {
                    if func.value(j, k) > 0.0 && func.value(i, k) != 1.0 {
                        return Err(Error::InvalidStep(format!(
                            "positive steps ({0}, {1}) and ({1}, {2}) need value 1 at ({0}, {2})",
                            i + 1,
                            j + 1,
                            k + 1
                        )));
                    }
                }
            }
        }
        Ok(StepKernel { func, order })
    }

    /// Builds a kernel whose part order is the closure of the positive steps.
    pub fn with_induced_order(func: StepFunction) -> Result<StepKernel> {
        let n = func.parts();
        let pairs: Vec<(usize, usize)> = (0..n)
            .flat_map(|i| (0..n).map(move |j| (i, j)))
            .filter(|&(i, j)| func.value(i, j) > 0.0)
            .map(|(i, j)| (i + 1, j + 1))
            .collect();
        let order = Poset::new(n, &pairs, Closure::TakeClosure)?;
        StepKernel::new(func, order)
    }

    /// The kernel `1{x < y}` on the elements of `P` with uniform mass.
    pub fn from_poset(p: &Poset) -> StepKernel {
        let n = p.len().max(1);
        let mut values = vec![0.0; n * n];
        for (i, j) in p.relations() {
            values[i * n + j] = 1.0;
        }
        let func = StepFunction {
            mass: vec![1.0 / n as f64; n],
            values,
        };
        let order = if p.is_empty() {
            Poset::trivial(1)
        } else {
            p.clone()
        };
        StepKernel { func, order }
    }

    pub fn function(&self) -> &StepFunction {
        &self.func
    }

    pub fn order(&self) -> &Poset {
        &self.order
    }

    pub fn parts(&self) -> usize {
        self.func.parts()
    }

    pub fn permuted(&self, perm: &[usize]) -> StepKernel {
        StepKernel {
            func: self.func.permuted(perm),
            order: self.order.relabel(perm),
        }
    }

    /// Adjoins an isolated part `*` of mass `1 - s`, scaling the rest by `s`.
    pub fn thinned(&self, s: f64) -> Result<StepKernel> {
        check_probability("s", s)?;
        let n = self.parts();
        let mut mass: Vec<f64> = self.func.mass.iter().map(|m| m * s).collect();
        mass.push(1.0 - s);
        let mut values = vec![0.0; (n + 1) * (n + 1)];
        for i in 0..n {
            for j in 0..n {
                values[i * (n + 1) + j] = self.func.value(i, j);
            }
        }
        let order = self.order.disjoint_union(&Poset::trivial(1));
        Ok(StepKernel {
            func: StepFunction { mass, values },
            order,
        })
    }

    /// A random kernel on `parts` parts: a random part order, random values in
    /// `(0, 1]` (sometimes 0) on cover pairs and 1 on all other ordered pairs.
    pub fn random<R: Rng>(parts: usize, rng: &mut R) -> StepKernel {
        let perm = {
            let mut p: Vec<usize> = (0..parts).collect();
            rand::seq::SliceRandom::shuffle(p.as_mut_slice(), rng);
            p
        };
        let mut pairs = Vec::new();
        for a in 0..parts {
            for b in a + 1..parts {
                if rng.random_bool(0.5) {
                    pairs.push((perm[a] + 1, perm[b] + 1));
                }
            }
        }
        let order =
            Poset::new(parts, &pairs, Closure::TakeClosure).expect("acyclic by construction");
        let covers = order.cover_pairs();
        let mut values = vec![0.0; parts * parts];
        for (i, j) in order.relations() {
            values[i * parts + j] = if !covers.contains(&(i, j)) {
                1.0
            } else if rng.random_bool(0.2) {
                0.0
            } else {
                1.0 - rng.random::<f64>() * 0.95
            };
        }
        let func = StepFunction {
            mass: random_masses(parts, rng),
            values,
        };
        StepKernel::new(func, order).expect("kernel by construction")
    }
}

pub(crate) fn check_probability(name: &'static str, p: f64) -> Result<()> {
    if (0.0..=1.0).contains(&p) {
        Ok(())
    } else {
        Err(Error::ParameterRange {
            name,
            value: p,
            range: "[0, 1]",
        })
    }
}

/// `∫ ∏_{(u,v) ∈ edges} F(x_u, x_v) dμ(x_1)…dμ(x_k)` for a pattern on `k`
/// vertices with 0-based edges, summed exactly over part assignments.
/// Vertices without edges contribute a factor of exactly 1.
pub fn pattern_density(
    f: &StepFunction,
    vertices: usize,
    edges: &[(usize, usize)],
    budget: u64,
) -> Result<f64> {
    let mut touched = vec![false; vertices];
    for &(u, v) in edges {
        assert!(u < vertices && v < vertices, "edge endpoint out of range");
        touched[u] = true;
        touched[v] = true;
    }
    // Greedy order: next vertex has the most edges into the placed set.
    let mut order: Vec<usize> = Vec::new();
    let mut placed = vec![false; vertices];
    let active = touched.iter().filter(|t| **t).count();
    while order.len() < active {
        let next = (0..vertices)
            .filter(|&v| touched[v] && !placed[v])
            .max_by_key(|&v| {
                let links = edges
                    .iter()
                    .filter(|&&(a, b)| (a == v && placed[b]) || (b == v && placed[a]))
                    .count();
                (links, std::cmp::Reverse(v))
            })
            .expect("unplaced vertex");
        placed[next] = true;
        order.push(next);
    }
    let required = (f.parts() as u128).saturating_pow(active as u32);
    if required > budget as u128 {
        return Err(Error::BudgetExceeded { required, budget });
    }
    let mut pos = vec![usize::MAX; vertices];
    for (d, &v) in order.iter().enumerate() {
        pos[v] = d;
    }
    // Edges closed at each depth, as (earlier depth or self, orientation).
    let closing: Vec<Vec<(usize, bool)>> = (0..order.len())
        .map(|d| {
            edges
                .iter()
                .filter_map(|&(a, b)| {
                    let (pa, pb) = (pos[a], pos[b]);
                    if pa.max(pb) != d {
                        None
                    } else if pb == d {
                        Some((pa, true))
                    } else {
                        Some((pb, false))
                    }
                })
                .collect()
        })
        .collect();
    let mut assign = vec![0usize; order.len()];
    Ok(pattern_rec(f, &closing, 0, &mut assign))
}

fn pattern_rec(
    f: &StepFunction,
    closing: &[Vec<(usize, bool)>],
    depth: usize,
    assign: &mut [usize],
) -> f64 {
    if depth == closing.len() {
        return 1.0;
    }
    let mut total = 0.0;
    for c in 0..f.parts() {
        let m = f.mass[c];
        if m == 0.0 {
            continue;
        }
        assign[depth] = c;
        let mut w = m;
        for &(other, incoming) in &closing[depth] {
            let o = assign[other];
            // incoming: edge other -> depth
            w *= if incoming {
                f.value(o, c)
            } else {
                f.value(c, o)
            };
            if w == 0.0 {
                break;
            }
        }
        if w != 0.0 {
            total += w * pattern_rec(f, closing, depth + 1, assign);
        }
    }
    total
}

/// `t(Q, W)` for a finite-type kernel, summed exactly.
pub fn t_kernel_exact_step(q: &Poset, w: &StepKernel) -> Result<f64> {
    let rels: Vec<(usize, usize)> = q.relations().collect();
    pattern_density(&w.func, q.len(), &rels, DEFAULT_BUDGET)
}

/// `t(F, W)` for a digraph pattern against any step function.
pub fn digraph_density_step(d: &Digraph, f: &StepFunction) -> Result<f64> {
    pattern_density(f, d.len(), &d.edges(), DEFAULT_BUDGET)
}
