use std::path::PathBuf;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("polynomial degree must be at least 1")]
    ZeroDegree,

    #[error("scheme length {0} outside the supported range 1..=10000")]
    SchemeLength(usize),

    #[error("scheme level {0} outside the level table (0..={1})")]
    Level(usize, usize),

    #[error("invalid eigenvalue interval [{lo}, {hi}]: need -1 <= lo < hi < 1")]
    Interval { lo: f64, hi: f64 },

    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    #[error("entry ({row}, {col}) out of bounds for an {n}x{n} matrix")]
    OutOfBounds { row: usize, col: usize, n: usize },

    #[error("row {0} has no nonzero diagonal entry")]
    ZeroDiagonal(usize),

    #[error("matrix is not symmetric at ({row}, {col}): {upper} vs {lower}")]
    Asymmetric { row: usize, col: usize, upper: f64, lower: f64 },

    #[error("dense oracle limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },

    #[error("Jacobi iteration matrix has a complex eigenvalue (imaginary part {0:e})")]
    ComplexEigenvalue(f64),

    #[error("initial residual is zero")]
    ZeroInitialResidual,

    #[error("residual norms must be positive (before {before}, after {after})")]
    NonPositiveResidual { before: f64, after: f64 },

    #[error("empty eigenvalue list")]
    NoEigenvalues,

    #[error(
        "non-finite iterate in cycle {cycle} (level {level:?}, M = {m}) at sweep {sweep} with omega = {omega}"
    )]
    NonFinite {
        cycle: usize,
        level: Option<usize>,
        m: usize,
        sweep: usize,
        omega: f64,
    },

    #[error("invalid mesh: {0}")]
    Mesh(String),

    #[error("degenerate triangle {index} (signed area {area:e})")]
    DegenerateTriangle { index: usize, area: f64 },

    #[error("mesh has no interior nodes")]
    NoInteriorNodes,

    #[error("{path}:{line}: {msg}")]
    Parse {
        path: PathBuf,
        line: usize,
        msg: String,
    },

    #[error("invalid argument: {0}")]
    Invalid(String),

    #[error("no data points")]
    NoData,

    #[error("threshold fit needs a conclusive cluster for every action (missing: {0})")]
    MissingAction(String),

    #[error("action bands are not separable by residual ratio; violating clusters: {0}")]
    NotSeparable(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}
