use std::fmt;
use std::path::PathBuf;

/// A node position written as its multi-index `(x indices..., y indices...)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NodeIndex(pub Vec<usize>);

impl fmt::Display for NodeIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{i}")?;
        }
        write!(f, ")")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("schema violation: {0}")]
    Schema(String),

    #[error("axis {axis} of factor {factor}: {reason} at coordinate index {index}")]
    InvalidAxis {
        factor: &'static str,
        axis: usize,
        index: usize,
        reason: &'static str,
    },

    #[error("non-finite value at node {0}")]
    NonFinite(NodeIndex),

    #[error("node count overflows the platform index type")]
    SizeOverflow,

    #[error("values length {got} does not match node count {expected}")]
    LengthMismatch { expected: usize, got: usize },

    #[error("point component {component} = {value} lies outside the grid bounding box")]
    OutOfBounds { component: usize, value: f64 },

    #[error("point has {got} components, grid expects {expected}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown catalog function `{0}`")]
    UnknownCatalog(String),

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("structuring set is not balanced: {0}")]
    Unbalanced(String),

    #[error("axis {axis} of the {factor} factor is not uniform; the separable kernel is unavailable")]
    NonUniformAxis { factor: &'static str, axis: usize },

    #[error("separable kernel unavailable: {0}")]
    KernelUnavailable(String),

    #[error("functions live on different grids or metrics")]
    GridMismatch,

    #[error("sandwich violated at node {node}: lower {lower} > upper {upper}")]
    SandwichViolation { node: NodeIndex, lower: f64, upper: f64 },

    #[error("invariant violated: {0}")]
    Invariant(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        #[source]
        source: serde_json::Error,
    },

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
