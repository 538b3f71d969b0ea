use thiserror::Error;

/// Unified error type for every fallible operation in the crate.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid generator index {0} (generator count {1})")]
    InvalidGenerator(i32, usize),
    #[error("word parse error: {0}")]
    WordParse(String),
    #[error("presentation parse error: {0}")]
    PresentationParse(String),
    #[error("relator {0} is empty after free and cyclic reduction")]
    EmptyRelator(usize),
    #[error("presentation is not small cancellation (max piece {max_piece}, shortest relator {min_relator})")]
    NotSmallCancellation { max_piece: usize, min_relator: usize },
    #[error("word is not demonstrably null within cap {cap} and budget {budget}")]
    NotFillable { cap: usize, budget: u64 },
    #[error("area search exceeded budget {budget}")]
    BudgetExceeded { budget: u64 },
    #[error("element budget {budget} exceeded while growing ball (radius reached {radius_reached})")]
    BallBudget { budget: usize, radius_reached: usize },
    #[error("model evaluation failure: {0}")]
    ModelEvaluation(String),
    #[error("cycle is not a boundary in the given complex: {0}")]
    NotABoundary(String),
    #[error("linear program is infeasible: {0}")]
    Infeasible(String),
    #[error("chain does not lie in the expected skeleton (offending coordinate {0:?})")]
    NotInSkeleton([f64; 3]),
    #[error("point lies outside the patch footprint: {0:?}")]
    OutsidePatch([f64; 3]),
    #[error("degenerate winding sample near {0:?}")]
    DegenerateSample([f64; 3]),
    #[error("no admissible projection center after {tries} tries in simplex {simplex}")]
    CenterSelection { simplex: usize, tries: u32 },
    #[error("invalid dimension pair i={i}, k={k}; need i > k >= 1")]
    DimensionPair { i: usize, k: usize },
    #[error("patch construction parameter out of range: {0}")]
    PatchParameter(String),
    #[error("profile table range shortfall: needed argument {needed} beyond table maximum {max_n}")]
    RangeShortfall { needed: u64, max_n: u64 },
    #[error("certification failed: {0}")]
    Certification(String),
    #[error("serialization: {0}")]
    Serialization(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
