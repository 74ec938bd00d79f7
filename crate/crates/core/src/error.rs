use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("utility U[{from},{to}][{row}][{col}] = {value} lies outside [-1, 1]")]
    BoundViolation {
        from: usize,
        to: usize,
        row: usize,
        col: usize,
        value: f64,
    },
    #[error("missing utility matrix for directed edge ({0},{1})")]
    MissingMatrix(usize, usize),
    #[error("utility matrix given for ({0},{1}) which is not an edge")]
    UnexpectedMatrix(usize, usize),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("player {0} has no neighbors")]
    IsolatedPlayer(usize),
    #[error("edge ({0},{1}) violates U_ji = -U_ij^T")]
    ZeroSumViolation(usize, usize),
    #[error("invalid edge ({0},{1})")]
    InvalidEdge(usize, usize),
    #[error("invalid game: {0}")]
    InvalidGame(String),
    #[error("player {player} expects {expected} neighbor strategies, got {got}")]
    NeighborCountMismatch {
        player: usize,
        expected: usize,
        got: usize,
    },
    #[error("trace is empty")]
    EmptyTrace,
    #[error("non-finite input")]
    NonFiniteInput,
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("learning rate must be positive, got {0}")]
    NonPositiveEta(f64),
    #[error("need at least two players, got {0}")]
    TooFewPlayers(usize),
    #[error("invalid run configuration: {0}")]
    InvalidConfig(String),
    #[error("games are not adjacent: {0}")]
    NotAdjacent(String),
    #[error("degenerate schedule: {0}")]
    DegenerateSchedule(String),
    #[error("edge ({0},{1}) is not in the game")]
    EdgeNotInGame(usize, usize),
    #[error("sigma is zero; privacy budget is undefined")]
    ZeroSigma,
    #[error("alpha must be > 1 (or +inf), got {0}")]
    InvalidAlpha(f64),
    #[error("delta must lie in (0, 1), got {0}")]
    InvalidDelta(f64),
    #[error("traces do not match: {0}")]
    TraceMismatch(String),
    #[error("fixture too large: {0}")]
    FixtureTooLarge(String),
    #[error("invalid sweep configuration: {0}")]
    InvalidSweep(String),
    #[error("i/o error: {0}")]
    Io(String),
    #[error("parse error: {0}")]
    Parse(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        if e.is_io() {
            Error::Io(e.to_string())
        } else {
            Error::Parse(e.to_string())
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
