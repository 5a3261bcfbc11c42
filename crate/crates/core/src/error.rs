use thiserror::Error;

use crate::Vec3;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("point ({}, {}, {}) lies outside the field domain", .0.x, .0.y, .0.z)]
    OutOfDomain(Vec3),

    #[error("trajectory left the field domain at time {time}")]
    DomainExit { time: f64, position: Vec3 },

    #[error("{fraction} of the advected samples left the field domain")]
    SampleExit { fraction: f64 },

    #[error("invalid parameter: {0}")]
    Parameter(String),

    #[error("precondition violated: {0}")]
    Precondition(String),

    #[error("kernel is singular at the origin")]
    Singular,

    #[error("non-finite value {value} at R = {radius}")]
    NonFinite { radius: f64, value: f64 },

    #[error("malformed grid file: {0}")]
    GridFormat(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn param<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Parameter(msg.into()))
}
