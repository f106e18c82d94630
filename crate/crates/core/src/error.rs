use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by the library. The CLI maps each variant family onto an
/// exit code (see [`Error::exit_code`]).
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("syntax error at byte {pos}: {msg}")]
    Syntax { pos: usize, msg: String },
    #[error("line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error("symbol `{symbol}` expects {expected} children, found {found}")]
    ArityMismatch {
        symbol: String,
        expected: usize,
        found: usize,
    },
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(String),
    #[error("unknown state `{0}`")]
    UnknownState(String),
    #[error("reserved name `{0}`")]
    ReservedName(String),
    #[error("malformed stepwise encoding: {0}")]
    MalformedEncoding(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("run does not match tree: {0}")]
    RunMismatch(String),
    #[error("no rule {0}")]
    MissingRule(String),
    #[error("too many candidate runs ({0} > 10^6)")]
    RunGuard(u128),
    #[error("no run exists for the tree")]
    NoRun,
    #[error("invalid PTA: {0}")]
    InvalidPta(String),
    #[error("sampling exceeded max depth {0}")]
    DepthExceeded(usize),
    #[error("sampled tree exceeded {0} nodes")]
    SizeExceeded(usize),
    #[error("negative weight {0}")]
    NegativeWeight(f64),
    #[error("fixed point diverged (mass above 1e12)")]
    Divergence,
    #[error("fixed point did not converge after {0} iterations")]
    NotConverged(usize),
    #[error("total mass is zero")]
    ZeroMass,
    #[error("operation requires a {0} semiring")]
    WrongSemiring(&'static str),
    #[error("tree #{index} `{tree}` has probability zero under the model")]
    ZeroProbability { index: usize, tree: String },
    #[error("empty sample")]
    EmptySample,
    #[error("numerical rank instability: value {0:e} too close to the cut")]
    RankInstability(f64),
    #[error("{0}")]
    Io(String),
}

impl Error {
    /// Process exit code for this error: 2 parse, 3 invalid model, 4 numeric.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Syntax { .. }
            | Error::Format { .. }
            | Error::Io(_)
            | Error::ArityMismatch { .. }
            | Error::UnknownSymbol(_)
            | Error::ReservedName(_)
            | Error::MalformedEncoding(_) => 2,
            Error::UnknownState(_)
            | Error::InvalidModel(_)
            | Error::RunMismatch(_)
            | Error::MissingRule(_)
            | Error::InvalidPta(_)
            | Error::NegativeWeight(_)
            | Error::WrongSemiring(_)
            | Error::ZeroProbability { .. }
            | Error::EmptySample => 3,
            Error::RunGuard(_)
            | Error::NoRun
            | Error::DepthExceeded(_)
            | Error::SizeExceeded(_)
            | Error::Divergence
            | Error::NotConverged(_)
            | Error::ZeroMass
            | Error::RankInstability(_) => 4,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
