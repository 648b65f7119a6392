use std::fmt;

/// Result alias used throughout the crate.
pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// Malformed or out-of-domain input.
    #[error("invalid input: {0}")]
    Input(String),
    #[error("{0}")]
    Parse(#[from] ParseError),
    #[error("point ({x}, {y}, {z}) lies outside the grid bounds")]
    OutOfBounds { x: f64, y: f64, z: f64 },
    #[error("tag `{0}` has no features")]
    MissingTag(String),
    #[error("resource limit exceeded: {0}")]
    Resource(String),
    #[error("goal is unreachable from start")]
    Unreachable,
    #[error("at node ({x}, {y}, {z}): {source}")]
    AtNode {
        x: f64,
        y: f64,
        z: f64,
        #[source]
        source: Box<Error>,
    },
    #[error("waypoint {index}: {source}")]
    Waypoint {
        index: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn input(msg: impl Into<String>) -> Self {
        Error::Input(msg.into())
    }

    pub(crate) fn out_of_bounds(p: [f64; 3]) -> Self {
        Error::OutOfBounds {
            x: p[0],
            y: p[1],
            z: p[2],
        }
    }
}

/// A lexical or syntax error with its source position.
#[derive(Debug, Clone, PartialEq)]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
    pub expected: Vec<String>,
}

impl fmt::Display for ParseError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}: {}", self.line, self.column, self.message)?;
        if !self.expected.is_empty() {
            write!(f, " (expected {})", self.expected.join(", "))?;
        }
        Ok(())
    }
}

impl std::error::Error for ParseError {}
