use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("division by zero")]
    DivisionByZero,
    #[error("element is not a unit: {0}")]
    NotUnit(String),
    #[error("argument must be nilpotent (zero constant term)")]
    NotNilpotent,
    #[error("incompatible operands: {0}")]
    Incompatible(String),
    #[error("window insufficient: {what} (suggest hi >= {suggest_hi})")]
    WindowInsufficient { what: String, suggest_hi: i64 },
    #[error("empty window [{lo},{hi})")]
    EmptyWindow { lo: i64, hi: i64 },
    #[error("point is not in the big cell: {0}")]
    NotInBigCell(String),
    #[error("invalid curve: {0}")]
    InvalidCurve(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("no stabilization: {0}")]
    NoStabilization(String),
}

impl Error {
    pub fn window(what: impl Into<String>, suggest_hi: i64) -> Self {
        Error::WindowInsufficient { what: what.into(), suggest_hi }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
