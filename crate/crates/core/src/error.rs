use std::path::PathBuf;

use thiserror::Error;

/// Failures of the geometric and flow computations.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("spacelikeness breached at node {node}: v^2 = {v2:e}")]
    SpacelikeBreached { node: usize, v2: f64 },

    #[error("mean convexity lost at node {node}: H1 = {h1:e}")]
    MeanConvexityLost { node: usize, h1: f64 },

    #[error("time step underflow: dt = {dt:e}")]
    StepUnderflow { dt: f64 },

    #[error("not strictly convex at node {node}: kappa = {kappa:e}")]
    NotConvex { node: usize, kappa: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

/// Failures of the command-line layer.
#[derive(Debug, Error)]
pub enum ShellError {
    #[error("config error at line {line}, key `{key}`: {message}")]
    Config {
        line: usize,
        key: String,
        message: String,
    },

    #[error("invalid scenario: {0}")]
    Scenario(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },

    #[error(transparent)]
    Geometry(#[from] Error),
}

impl ShellError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        ShellError::Io {
            path: path.into(),
            source,
        }
    }
}
