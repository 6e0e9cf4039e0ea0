use thiserror::Error;

/// Failures surfaced by the simulator kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum EchoError {
    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("grid too coarse: {0}")]
    GridTooCoarse(String),

    #[error("grid mismatch between operands")]
    GridMismatch,

    #[error("time step {dt} violates the stability bound {bound} ({reason})")]
    UnstableTimeStep { dt: f64, bound: f64, reason: &'static str },

    #[error("boundary leakage {probability:.3e} exceeds {tolerance:.1e} at t = {time}")]
    Leakage { time: f64, probability: f64, tolerance: f64 },

    #[error("realization {index} failed: {source}")]
    Realization {
        index: usize,
        #[source]
        source: Box<EchoError>,
    },

    #[error("source series has {got} steps, evolution needs {expected}")]
    SourceLength { expected: usize, got: usize },

    #[error("degenerate state: {0}")]
    DegenerateState(String),

    #[error("vanishing overlap between the two Wigner functions")]
    VanishingOverlap,

    #[error("domain error: {0}")]
    Domain(String),

    #[error("no decay to report: {0}")]
    NoDecay(String),

    #[error("classical trajectory escaped |x| > {bound} at t = {time}")]
    TrajectoryEscape { bound: f64, time: f64 },

    #[error("trace never leaves [0.9, 1]: insufficient decay")]
    InsufficientDecay,

    #[error("no fit window above the saturation floor ({0})")]
    FloorDominated(String),

    #[error("missing series: {0}")]
    MissingSeries(&'static str),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for EchoError {
    fn from(e: std::io::Error) -> Self {
        EchoError::Io(e.to_string())
    }
}

pub type Result<T, E = EchoError> = std::result::Result<T, E>;
