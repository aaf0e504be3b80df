use thiserror::Error;

/// Crate-wide error type. Variants are grouped by where they arise: panel
/// ingestion, estimation preconditions, numerical failures inside a solver,
/// and misuse of the verification harness.
#[derive(Debug, Error)]
pub enum Error {
    // ---- panel ingestion ----
    #[error("column {0:?} named in the role map is missing from the CSV header")]
    MissingColumn(String),
    #[error("cell at row {row}, column {column:?} is not numeric: {value:?}")]
    NonNumericCell {
        row: usize,
        column: String,
        value: String,
    },
    #[error("duplicate timestamp {0:?}")]
    DuplicateTimestamp(String),
    #[error("CSV column {0:?} has no role assignment")]
    UnassignedColumn(String),
    #[error("time column value {0:?} is neither an integer tick nor an ISO date")]
    BadTimestamp(String),
    #[error("role map entry {0:?} is malformed (expected `name = policy:k|treated:j|control:j`)")]
    BadRoleEntry(String),
    #[error("{0}")]
    BadPanel(String),

    // ---- estimation preconditions ----
    #[error("sample too short: {rows} usable rows, need at least {needed}")]
    TooShort { rows: usize, needed: usize },
    #[error("cointegration rank {rank} out of bounds for {n} series")]
    RankOutOfBounds { rank: usize, n: usize },
    #[error("policy column is constant; cannot form a dummy policy")]
    ConstantPolicy,
    #[error("no treated periods: the dummy policy is never 1 in the sample")]
    NoTreatedPeriods,
    #[error("sample has no positive mass; non-negative policy weights are undefined")]
    NoPositiveMass,
    #[error("degenerate sample: {0}")]
    DegenerateSample(String),
    #[error("policy distribution or design does not match theorem {theorem}: {detail}")]
    SpecTheoremMismatch { theorem: String, detail: String },
    #[error("too few observations ({0}) for the requested procedure")]
    TooFewObservations(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    // ---- numerical failures ----
    #[error("regressor matrix is singular (column rank {rank} of {cols})")]
    SingularRegressorMatrix { rank: usize, cols: usize },
    #[error("covariance matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("product moment matrix is singular; cannot whiten for the eigenproblem")]
    SingularMomentMatrix,
    #[error("common-trend condition violated: |det| = {0:.3e} below threshold")]
    GrangerConditionViolated(f64),
    #[error("weight variance is not finite")]
    InfiniteVariance,
    #[error("bootstrap degenerate: {failed} of {total} replications failed re-estimation")]
    BootstrapDegenerate { failed: usize, total: usize },
    #[error("no critical values tabulated for {0} remaining relations (limit 12)")]
    CriticalValueRange(usize),

    #[error("I/O error: {0}")]
    Io(#[from] std::io::Error),
    #[error("CSV error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    /// True when the error reflects bad inputs or arguments rather than a
    /// numerical failure inside a solver. The CLI maps validation errors to
    /// exit code 2 and numerical ones to exit code 3.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::SingularRegressorMatrix { .. }
                | Error::NotPositiveDefinite { .. }
                | Error::SingularMomentMatrix
                | Error::GrangerConditionViolated(_)
                | Error::InfiniteVariance
                | Error::BootstrapDegenerate { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
