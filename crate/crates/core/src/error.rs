use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at position {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("unknown identifier `{name}` at position {pos}")]
    UnknownIdentifier { name: String, pos: usize },
    #[error("non-polynomial construct at position {pos}: {msg}")]
    NonPolynomial { pos: usize, msg: String },
    #[error("map has a nonzero constant term (F(0) must be 0)")]
    NonzeroConstantTerm,

    #[error("Gauss triple vanishes (norm {norm:e}) at {point:?}")]
    ZeroTriple { norm: f64, point: [f64; 4] },
    #[error("Jacobian has rank < 2 at {point:?}")]
    RankDeficient { point: [f64; 4] },
    #[error("isolated critical point check failed: min sum of squared minors {min:e} <= {threshold:e}")]
    NotIsolated { min: f64, threshold: f64 },

    #[error("point is the projection pole")]
    AtPole,
    #[error("value is not attained by the map")]
    NoPreimage,
    #[error("constraint Jacobian lost rank during tracing (condition {condition:e})")]
    RankDrop { condition: f64 },
    #[error("curve tracing exceeded {0} steps")]
    MaxStepsExceeded(usize),
    #[error("curves too close for linking (distance {distance:e})")]
    CurvesTooClose { distance: f64 },
    #[error("linking integral poorly conditioned (residual {residual:.3})")]
    PoorConditioning { residual: f64 },
    #[error("Monte Carlo budget too small (standard error {stderr:.3})")]
    BudgetTooSmall { stderr: f64 },

    #[error("braid generator index {index} out of range for B{n}")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("plumbing graph is not a tree: {0}")]
    NotATree(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
}
