use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

/// Errors raised by the interpolation library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("function has zero mass (mass = {mass:e})")]
    ZeroMass { mass: f64 },

    #[error("negative value {value:e} in cell {cell}")]
    NegativeValue { cell: usize, value: f64 },

    #[error("point mass at x = {x}: cannot be represented as a piecewise-constant density")]
    PointMass { x: f64 },

    #[error("domain mismatch: {0}")]
    DomainMismatch(String),

    #[error("weights must be nonnegative and sum to one (sum = {sum})")]
    WeightSum { sum: f64 },

    #[error("interpolation parameter {0} outside [0, 1]")]
    LambdaRange(f64),

    #[error("degenerate denominator in the sign-pairing coefficient")]
    DegenerateDenominator,

    #[error("operand {operand} is identically zero")]
    BothPartsZero { operand: usize },

    #[error("unsupported sign pattern: {0}")]
    UnsupportedSignPattern(String),

    #[error("component `{component}` has zero mass in one operand only")]
    MismatchedComponents { component: String },

    #[error("sample location {0} outside the open unit interval")]
    OutOfRange(f64),

    #[error("all snapshot differences are zero")]
    AllIdentical,

    #[error("singular value iteration did not converge after {sweeps} sweeps (off-diagonal norm {off_norm:e})")]
    ConvergenceFailure { sweeps: usize, off_norm: f64 },

    #[error("rank {rank} exceeds the {modes} available modes")]
    RankTooLarge { rank: usize, modes: usize },

    #[error("empty input")]
    EmptyInput,

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("inversion stopped after {iterations} iterations with relative residual {residual:e}")]
    NoConvergence { iterations: usize, residual: f64 },

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("image dimension {0} must be even")]
    OddDimension(usize),

    #[error("support leaves the domain: {0}")]
    OutOfDomain(String),

    #[error("unsupported initial condition `{0}`")]
    UnsupportedIC(String),

    #[error("unknown scenario `{0}`")]
    UnknownScenario(String),

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: u64,
        column: usize,
        message: String,
    },

    #[error("invariant violation: {0}")]
    InvariantViolation(String),

    #[error("angle {angle}: {source}")]
    AtAngle {
        angle: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("component `{name}`: {source}")]
    AtComponent {
        name: String,
        #[source]
        source: Box<Error>,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn at_angle(angle: usize) -> impl FnOnce(Error) -> Error {
        move |e| Error::AtAngle {
            angle,
            source: Box::new(e),
        }
    }

    pub(crate) fn at_component(name: &str) -> impl FnOnce(Error) -> Error + '_ {
        move |e| Error::AtComponent {
            name: name.to_string(),
            source: Box::new(e),
        }
    }

    /// Innermost error, skipping angle/component context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtAngle { source, .. } | Error::AtComponent { source, .. } => source.root(),
            other => other,
        }
    }
}
