use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid knot vector: {0}")]
    InvalidKnotVector(String),

    #[error("refinement mismatch: {0}")]
    RefinementMismatch(String),

    #[error("nesting violation between level {coarse_level} and level {} in direction {direction}: {reason}", coarse_level + 1)]
    NestingViolation { coarse_level: usize, direction: usize, reason: String },

    #[error("level mismatch: {0}")]
    LevelMismatch(String),

    #[error("invalid cell: {0}")]
    InvalidCell(String),

    #[error("hierarchy nesting: {0}")]
    HierarchyNesting(String),

    #[error("hierarchy depth mismatch: hierarchy has depth {hierarchy}, level sequence has {levels} levels")]
    DepthMismatch { hierarchy: usize, levels: usize },

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("invalid dual functional assignment: {0}")]
    InvalidAssignment(String),

    #[error("non-finite function value {value} at {point:?}")]
    Evaluation { point: Vec<f64>, value: f64 },

    #[error("admissibility: {0}")]
    Admissibility(String),

    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),

    #[error("fixture error at {location}: {message}")]
    Fixture { location: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
