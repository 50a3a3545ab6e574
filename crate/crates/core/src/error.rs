use thiserror::Error;

/// One violated invariant found while validating a topology or class list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation(pub String);

impl std::fmt::Display for Violation {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

fn join(violations: &[Violation]) -> String {
    violations.iter().map(|v| v.0.as_str()).collect::<Vec<_>>().join("; ")
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid topology: {}", join(.0))]
    Topology(Vec<Violation>),

    #[error("invalid traffic class: {}", join(.0))]
    Class(Vec<Violation>),

    #[error("infeasible class {class}: {reason}")]
    InfeasibleClass { class: usize, reason: String },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("negative argument {value} passed to {what}")]
    Domain { what: &'static str, value: f64 },

    #[error("enumeration of {what} refused: {size} candidates exceed the limit of {limit}")]
    TooLarge {
        what: &'static str,
        size: usize,
        limit: usize,
    },

    #[error("infeasible rate vector: {0}")]
    InfeasibleRates(String),

    #[error("internal consistency fault: {0}")]
    Fault(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Parse { path: String, message: String },
}

pub type Result<T> = std::result::Result<T, Error>;
