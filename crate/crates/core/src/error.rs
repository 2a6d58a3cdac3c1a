use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("cells {0} and {1} lie in different components")]
    Unreachable(usize, usize),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("parameter error: {0}")]
    Parameter(String),
    #[error("level error: {0}")]
    Level(String),
    #[error("conditioning error on a set of {cells} cells: {msg}")]
    Conditioning { cells: usize, msg: String },
    #[error("coverage error at cell {cell}: hat sum {sum}")]
    Coverage { cell: usize, sum: f64 },
    #[error("assembly error: {0}")]
    Assembly(String),
    #[error("chain error between cubes {0} and {1}: dist_k {2} above threshold {3}")]
    Chain(usize, usize, f64, f64),
    #[error("invalid value for `{field}`: {msg}")]
    Config { field: String, msg: String },
    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
