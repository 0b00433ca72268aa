//! Error type shared across the crate.

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("unknown unit id `{0}`")]
    UnknownUnit(String),
    #[error("unknown outcome id `{0}`")]
    UnknownOutcome(String),
    #[error("unknown treatment id `{0}`")]
    UnknownTreatment(String),
    #[error("unknown factor `{0}`")]
    UnknownFactor(String),
    #[error("factor `{factor}` has no level `{level}`")]
    UnknownFactorLevel { factor: String, level: String },
    #[error("unit `{0}` does not appear in the assignment")]
    UnitNotAssigned(String),
    #[error("treatment arm `{0}` is empty")]
    EmptyArm(String),
    #[error("no measured value for unit `{unit}`, outcome `{outcome}`")]
    MissingMeasurement { unit: String, outcome: String },
    #[error("{0}")]
    Domain(String),
    #[error("{0}")]
    Resource(String),
    #[error("timecourse has no signal: mean |response| is zero at every sampled time")]
    NoSignal,
    #[error("protocol violation: {0}")]
    Protocol(String),
    #[error("protocol `{0}` is not registered; refusing to produce an exclusion list")]
    Unregistered(String),
    #[error("invalid scenario ({} issue{}):\n  - {}", .0.len(), if .0.len() == 1 { "" } else { "s" }, .0.join("\n  - "))]
    Scenario(Vec<String>),
    #[error("{0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
