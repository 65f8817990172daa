use thiserror::Error;

/// Errors raised across the laboratory. Variants mirror the failure modes of
/// the individual operations; recoverable outcomes such as an `Unknown`
/// certificate are values, not errors.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("all homogeneous coordinates vanish")]
    ZeroVector,
    #[error("chart {chart} coordinate has modulus {modulus:e} below 1e-6")]
    NearChartBoundary { chart: usize, modulus: f64 },
    #[error("monomial degree {found} does not match map degree {expected}")]
    DegreeMismatch { expected: u32, found: u32 },
    #[error("degenerate parameter: {0}")]
    DegenerateParameter(String),
    #[error("preimage solver diverged; {found} of {expected} solutions recovered")]
    SolverDivergence { found: usize, expected: usize },
    #[error("preimage solving supports degree 2 and 3 only (got {0})")]
    DegreeUnsupported(u32),
    #[error("preimage tree with {branches} branches exceeds the budget of {budget}")]
    BranchBudgetExceeded { branches: u64, budget: u64 },
    #[error("slice mass unstable under grid refinement: {coarse} vs {fine}")]
    GridTooCoarse { coarse: f64, fine: f64 },
    #[error("clamped negative Laplacian mass {clamped:e} exceeds 1% of total {total:e}")]
    NoisyLaplacian { clamped: f64, total: f64 },
    #[error("slice measure is empty (mass {0:e})")]
    EmptySlice(f64),
    #[error("chart breakdown: {0}")]
    ChartBreakdown(String),
    #[error("no preimage in region at backward step {step}")]
    NoPreimageInRegion { step: usize },
    #[error("Oseledets splitting is degenerate (relative gap {gap:e})")]
    DegenerateSplitting { gap: f64 },
    #[error("no admissible Pesin frame: {0}")]
    FrameNotFound(String),
    #[error("graph escapes the chart bidisk: {0}")]
    GraphEscapesBox(String),
    #[error("Newton iteration diverged: {0}")]
    NewtonDivergence(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no transversal intersection: {0}")]
    NoTransversalIntersection(String),
    #[error("seed budget exceeded; {found} points found before stopping")]
    SeedBudgetExceeded { found: usize },
    #[error("map is not supported by this operation: {0}")]
    UnsupportedMap(String),
    #[error("total masses differ: {0} vs {1}")]
    MassMismatch(f64, f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

pub type Result<T> = std::result::Result<T, Error>;
