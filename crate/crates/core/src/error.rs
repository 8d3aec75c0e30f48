use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("relation {0:?} is not a valid pair of distinct labels")]
    InvalidPair((usize, usize)),
    #[error("label {label} out of range 1..={n}")]
    LabelOutOfRange { label: usize, n: usize },
    #[error("relations contain a directed cycle; no strict order contains them")]
    Cycle,
    #[error("relations are not transitively closed (missing {missing:?})")]
    NotClosed { missing: (usize, usize) },
    #[error("subset must be non-empty")]
    EmptySubset,
    #[error("size mismatch: {left} vs {right}")]
    SizeMismatch { left: usize, right: usize },
    #[error("cannot draw {k} distinct elements from {n}")]
    SampleSize { k: usize, n: usize },
    #[error("enumeration of {required} configurations exceeds budget {budget}")]
    BudgetExceeded { required: u128, budget: u64 },
    #[error("sampled relation is not a strict partial order: {0}")]
    NotAPoset(String),
    #[error("parameter {name} = {value} outside {range}")]
    ParameterRange {
        name: &'static str,
        value: f64,
        range: &'static str,
    },
    #[error("digraph {0} has a loop or a double edge")]
    NotSimple(String),
    #[error("invalid step function: {0}")]
    InvalidStep(String),
    #[error("unknown kernel specification `{0}`")]
    UnknownKernel(String),
    #[error("kernel `{0}` has no finite-type form")]
    NotFiniteType(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
