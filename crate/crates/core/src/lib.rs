//! Computational toolkit for limits of finite posets.
//!
//! The crate covers:
//!
//! * finite labelled posets and digraphs ([`poset`]),
//! * exact and Monte-Carlo homomorphism densities ([`density`]),
//! * kernels on ordered probability spaces and their densities ([`kernel`]),
//! * finite-type (step) functions and kernels ([`step`]),
//! * W-random posets and exchangeability diagnostics ([`sampler`]),
//! * cut norms and cut-distance bounds ([`cut`]).
//!
//! Monte-Carlo loops are split into fixed-size batches, each driven by its own
//! ChaCha substream, so results depend only on the seed and never on the
//! number of worker threads. With the `parallel` feature (on by default) the
//! batches run on the rayon pool; without it they run in order on the calling
//! thread and produce identical numbers.

mod bits;
pub mod cut;
pub mod density;
mod error;
pub mod io;
pub mod kernel;
pub mod mc;
pub mod poset;
pub mod sampler;
pub mod step;

pub use error::{Error, Result};
pub use mc::DensityEstimate;
pub use poset::{Classification, Closure, Digraph, ForbiddenKind, Poset, Witness};
