use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs an even number of modes >= 8, got {0}")]
    InvalidGrid(usize),

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("{name} = {value} is outside {allowed}")]
    OutOfRange {
        name: &'static str,
        value: f64,
        allowed: &'static str,
    },

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("eigensolver failed to converge (eigenpair {index}, residual {residual:e})")]
    NonConvergence { index: usize, residual: f64 },

    #[error("eigenbasis is ill-conditioned (condition number {0:e})")]
    IllConditioned(f64),

    #[error("non-finite state at step {0}")]
    Blowup(usize),

    #[error("fit window holds {found} samples, need at least {needed}")]
    WindowTooShort { found: usize, needed: usize },

    #[error("configuration error{}: {message}", at_line(*.line))]
    Config { line: usize, message: String },

    #[error("linear algebra backend: {0}")]
    Backend(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn out_of_range(name: &'static str, value: f64, allowed: &'static str) -> Self {
        Error::OutOfRange {
            name,
            value,
            allowed,
        }
    }
}

fn at_line(line: usize) -> String {
    if line == 0 {
        String::new()
    } else {
        format!(" at line {line}")
    }
}
