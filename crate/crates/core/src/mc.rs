//! Seeded Monte-Carlo machinery.
//!
//! Every estimator splits its sample budget into batches of [`BATCH`] draws.
//! Batch `b` is driven by `ChaCha8Rng::seed_from_u64(seed)` switched to stream
//! `b`, and batch results are merged in batch order. The partition plan depends
//! only on the sample count, so the parallel and sequential builds return
//! bit-identical estimates.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Draws per batch.
pub const BATCH: u64 = 4096;

/// The RNG driving batch `index` of a run seeded with `seed`.
pub fn substream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Runs `f(rng, first, len)` for every batch covering `0..total`, returning the
/// results in batch order.
pub fn map_batches<T, F>(total: u64, seed: u64, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(&mut ChaCha8Rng, u64, u64) -> T + Sync + Send,
{
    let batches = total.div_ceil(BATCH);
    let run = |b: u64| {
        let mut rng = substream(seed, b);
        let first = b * BATCH;
        let len = BATCH.min(total - first);
        f(&mut rng, first, len)
    };
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..batches).into_par_iter().map(run).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..batches).map(run).collect()
    }
}

/// Maps `f` over `0..n` in index order, in parallel when enabled.
pub(crate) fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Runs `f` with data parallelism disabled.
///
/// With the `parallel` feature this installs a one-thread rayon pool for the
/// duration of the call; otherwise it simply calls `f`.
pub fn sequential<R: Send>(f: impl FnOnce() -> R + Send) -> R {
    #[cfg(feature = "parallel")]
    {
        rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build()
            .expect("single-thread pool")
            .install(f)
    }
    #[cfg(not(feature = "parallel"))]
    {
        f()
    }
}

/// Streaming mean and variance (Welford), mergeable in a fixed order.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = self.count + other.count;
        let delta = other.mean - self.mean;
        let wa = self.count as f64;
        let wb = other.count as f64;
        self.mean += delta * (wb / n as f64);
        self.m2 += other.m2 + delta * delta * (wa * wb / n as f64);
        self.count = n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Unbiased sample variance; zero for fewer than two observations.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            0.0
        } else {
            (self.m2 / (self.count - 1) as f64).max(0.0)
        }
    }

    pub fn estimate(&self) -> DensityEstimate {
        let stderr = if self.count == 0 {
            0.0
        } else {
            (self.variance() / self.count as f64).sqrt()
        };
        DensityEstimate {
            value: self.mean,
            stderr,
            samples: self.count,
        }
    }
}

/// A Monte-Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityEstimate {
    pub value: f64,
    /// Sample standard deviation divided by `sqrt(samples)`.
    pub stderr: f64,
    pub samples: u64,
}

impl DensityEstimate {
    pub fn exact(value: f64) -> Self {
        DensityEstimate {
            value,
            stderr: 0.0,
            samples: 0,
        }
    }

    /// `|self - target| <= k * stderr`.
    pub fn within(&self, target: f64, k: f64) -> bool {
        (self.value - target).abs() <= k * self.stderr
    }
}

/// Averages `f` over `samples` seeded draws.
pub fn estimate_mean<F>(samples: u64, seed: u64, f: F) -> DensityEstimate
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync + Send,
{
    let parts = map_batches(samples, seed, |rng, _, len| {
        let mut acc = Welford::new();
        for _ in 0..len {
            acc.push(f(rng));
        }
        acc
    });
    let mut total = Welford::new();
    for p in &parts {
        total.merge(p);
    }
    total.estimate()
}
