use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("empty prime table: limit {0} < 2")]
    EmptyTable(u64),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("incomplete sum: primes up to {required} needed, {available} available")]
    IncompleteSum { required: u64, available: u64 },
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("divergent: {0}")]
    Divergent(String),
    #[error("internal consistency: {0}")]
    Consistency(String),
    #[error("degenerate sieve at p = {p}: nu = {nu} >= p^k")]
    DegenerateSieve { p: u64, nu: u64 },
    #[error("integer width exceeded: {0}")]
    Width(String),
    #[error("unknown constant '{0}'")]
    UnknownConstant(String),
    #[error("unknown name '{0}'")]
    UnknownName(String),
    #[error("config error at {path}: {msg}")]
    Config { path: String, msg: String },
    #[error("missing dependency: {0}")]
    Dependency(String),
    #[error("incompatible truncations: {0}")]
    Truncation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
