use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("invalid time grid: {0}")]
    InvalidTimeGrid(String),

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("rank mismatch: expected {expected}, found {found}")]
    RankMismatch { expected: String, found: String },

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("axis {axis} out of range for dimension {d}")]
    InvalidAxis { axis: usize, d: usize },

    #[error("negative time {0}")]
    NegativeTime(f64),

    #[error("time {t} beyond final time {final_time}")]
    TimeOutOfRange { t: f64, final_time: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("flow map inversion failed at point {point}: residual {residual:e} after {iterations} iterations")]
    Inversion {
        point: usize,
        residual: f64,
        iterations: usize,
    },

    #[error("stress integration blew up at t = {time}")]
    Growth { time: f64 },

    #[error("invariant violated at frame {frame}: {what}")]
    InvariantViolation { frame: usize, what: String },

    #[error("Picard iteration did not converge after {} iterations (last distance {:e})", .history.len(), .history.last().map(|h| h.distance).unwrap_or(f64::NAN))]
    NonConvergence {
        history: Vec<crate::solver::IterationRecord>,
    },

    #[error("Eulerian reference blew up at t = {time}")]
    BlowUp { time: f64 },

    #[error("snapshot i/o: {0}")]
    Io(#[from] std::io::Error),

    #[error("snapshot header: {0}")]
    Header(#[from] serde_json::Error),
}
