use std::fmt;

use crate::problem::Violation;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("shape mismatch in {op}: expected {expected}, found {found}")]
    ShapeMismatch {
        op: &'static str,
        expected: String,
        found: String,
    },
    #[error("index {index:?} out of range for shape {shape:?}")]
    IndexOutOfRange { index: [usize; 3], shape: [usize; 3] },
    #[error("duplicate coordinate {0}")]
    DuplicateCoordinate(Coord),
    #[error("non-finite value {value} at {coord}")]
    NonFinite { coord: Coord, value: f64 },
    #[error("column {column} of factor {factor} has zero norm")]
    ZeroColumn { factor: &'static str, column: usize },
    #[error("target tensor has zero Frobenius norm")]
    ZeroNormTarget,
    #[error("interim tensor snapshot is missing")]
    MissingSnapshot,
    #[error("matrix is not positive definite (pivot {pivot})")]
    NotPositiveDefinite { pivot: usize },
    #[error("invalid aggregation: {0}")]
    InvalidAggregation(String),
    #[error("invalid selection: {0}")]
    InvalidSelection(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("invalid problem: {}", join_violations(.0))]
    InvalidProblem(Vec<Violation>),
    #[error("no coarse tensor aggregated on mode {0}")]
    MissingCoarse(usize),
    #[error("observation list is empty")]
    EmptyObservations,
    #[error("factors became non-finite at level {level}, iteration {iteration}")]
    Diverged { level: usize, iteration: usize },
}

/// A 1-based coordinate, used only for diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Coord(pub [usize; 3]);

impl Coord {
    pub fn from_zero_based(idx: [usize; 3]) -> Self {
        Coord([idx[0] + 1, idx[1] + 1, idx[2] + 1])
    }
}

impl fmt::Display for Coord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {}, {})", self.0[0], self.0[1], self.0[2])
    }
}

fn join_violations(v: &[Violation]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join("; ")
}

pub(crate) fn shape_err(op: &'static str, expected: impl fmt::Debug, found: impl fmt::Debug) -> Error {
    Error::ShapeMismatch {
        op,
        expected: format!("{expected:?}"),
        found: format!("{found:?}"),
    }
}
