use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("not a distribution: {0}")]
    NotADistribution(String),
    #[error("malformed instance: {0}")]
    Malformed(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("missing field `{0}`")]
    MissingField(String),
    #[error("commodity {commodity}: target unreachable from source")]
    NoPath { commodity: usize },
    #[error("flow violates conservation by {residual:e}")]
    InfeasibleFlow { residual: f64 },
    #[error("no convergence after {iterations} iterations (relative gap {gap:e})")]
    NonConvergence {
        iterations: usize,
        gap: f64,
        best_loads: Vec<f64>,
    },
    #[error("singular support system: {0}")]
    SingularSystem(String),
    #[error("instance is not a parallel-links network")]
    NotParallelLinks,
    #[error("operation requires exactly two states")]
    RequiresTwoStates,
    #[error("operation requires state-independent slopes")]
    RequiresOffsetsOnly,
    #[error("degenerate instance: {0}")]
    DegenerateInstance(String),
    #[error("cost profile discontinuous at alpha = {alpha}: {left} vs {right}")]
    DiscontinuityDetected { alpha: f64, left: f64, right: f64 },
    #[error("linear program infeasible: {0}")]
    LpInfeasible(String),
    #[error("linear program unbounded: {0}")]
    LpUnbounded(String),
    #[error("support enumeration failed: {0}")]
    Enumeration(String),
    #[error("terminals invalid: {0}")]
    BadTerminals(String),
    #[error("graph is series-parallel")]
    GraphIsSeriesParallel,
    #[error("no Wheatstone embedding found: {0}")]
    WitnessNotFound(String),
    #[error("bad parameter: {0}")]
    BadParameter(String),
    #[error("closed form available only for j = 1 (got j = {0})")]
    UnsupportedJ(usize),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse {
            line: e.line(),
            msg: e.to_string(),
        }
    }
}
