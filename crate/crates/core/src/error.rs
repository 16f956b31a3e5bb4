use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("line {line}: {msg}")]
    Syntax { line: usize, msg: String },

    #[error("line {line}: probability {value} not in open interval (0,1)")]
    Probability { line: usize, value: f64 },

    #[error("line {line}: duplicate target {target}")]
    DuplicateTarget { line: usize, target: String },

    #[error("line {line}: unsupported directive `{directive}`")]
    Unsupported { line: usize, directive: String },

    #[error("model is not matchable: columns {columns:?} trigger more than two detectors")]
    NotMatchable { columns: Vec<usize> },

    #[error("mechanism {mechanism} triggers no detector")]
    EmptyColumn { mechanism: usize },

    #[error("malformed syndrome: {0}")]
    MalformedSyndrome(String),

    #[error("odd number of defects ({0})")]
    OddDefects(usize),

    #[error("defects {0} and {1} are not connected")]
    Unreachable(usize, usize),

    #[error("edge {0} has negative cost; shortest paths are undefined")]
    NegativeCycle(usize),

    #[error("{defects} defects exceed the exact matcher cap of {cap}; lower p or raise the cap")]
    TooManyDefects { defects: usize, cap: usize },

    #[error("worm did not close within {0} elementary moves")]
    Timeout(u64),

    #[error("invalid dimer configuration: {0}")]
    InvalidDimer(String),

    #[error("enumeration size {size} exceeds cap {cap}")]
    TooLarge { size: usize, cap: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
