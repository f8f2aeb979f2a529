use alloc::string::String;
use core::fmt;

/// Error type shared by every module.
#[derive(Debug, Clone, PartialEq)]
pub enum Error {
    /// A caller-supplied argument violates a documented precondition.
    Input(String),
    /// The mathematical object is outside the operation's domain
    /// (singular matrix, non-contractive map, ...).
    Domain(String),
    /// An enumeration or sampling budget would be exceeded.
    Resource(String),
    /// Not enough usable data to produce an estimate.
    Estimation(String),
}

impl fmt::Display for Error {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Error::Input(m) => write!(f, "invalid input: {m}"),
            Error::Domain(m) => write!(f, "domain error: {m}"),
            Error::Resource(m) => write!(f, "resource limit: {m}"),
            Error::Estimation(m) => write!(f, "estimation error: {m}"),
        }
    }
}

#[cfg(feature = "std")]
impl std::error::Error for Error {}

impl Error {
    pub fn input(m: impl Into<String>) -> Self {
        Error::Input(m.into())
    }
    pub fn domain(m: impl Into<String>) -> Self {
        Error::Domain(m.into())
    }
    pub fn resource(m: impl Into<String>) -> Self {
        Error::Resource(m.into())
    }
    pub fn estimation(m: impl Into<String>) -> Self {
        Error::Estimation(m.into())
    }
}
