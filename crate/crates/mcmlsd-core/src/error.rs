use core::fmt;

/// Errors shared across the detection and evaluation modules.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// An argument violated a documented precondition.
    InvalidArgument(&'static str),
    /// Training data lacked samples for the named hidden state.
    EmptyTrainingState(&'static str),
    /// An edge lies outside the image bounds it was declared against.
    EdgeOutOfBounds { x: f64, y: f64 },
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::InvalidArgument(msg) => write!(f, "invalid argument: {msg}"),
            Error::EmptyTrainingState(state) => {
                write!(f, "no training samples for state {state}")
            }
            Error::EdgeOutOfBounds { x, y } => {
                write!(f, "edge at ({x}, {y}) lies outside the image bounds")
            }
        }
    }
}

impl core::error::Error for Error {}

pub type Result<T> = core::result::Result<T, Error>;
