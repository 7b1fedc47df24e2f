//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by the geometry toolkit.
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    /// Malformed array container (bad magic, header, or field syntax).
    #[error("invalid array format: {0}")]
    Format(String),

    #[error("unsupported dtype descriptor {0:?}")]
    UnsupportedDtype(String),

    /// Header-declared payload size disagrees with the file length.
    #[error("array payload mismatch: header declares {expected} bytes, file holds {found}")]
    Truncated { expected: usize, found: usize },

    #[error("empty input: {0}")]
    EmptyInput(String),

    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("degenerate input: {0}")]
    DegenerateInput(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    /// A class mean coincides with the center of means, so its angle
    /// against other classes is undefined.
    #[error("class {class_id} mean coincides with the center of means; angles are undefined")]
    DegenerateAngle { class_id: i64 },

    /// Two reports cannot be compared entrywise.
    #[error("incomparable reports: {0}")]
    Comparison(String),

    /// The margin solver ran out of iterations; the optimum is bracketed.
    #[error(
        "margin solver for classes {class_a} vs {class_b} exhausted {iterations} iterations; \
         hull distance bracketed in [{lower:e}, {upper:e}]"
    )]
    MarginConvergence {
        class_a: i64,
        class_b: i64,
        iterations: usize,
        lower: f64,
        upper: f64,
    },

    /// A pipeline stage failed; names the stage for CLI diagnostics.
    #[error("stage {stage} failed: {source}")]
    Stage {
        stage: &'static str,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Attach a pipeline stage name to an error.
    pub fn at_stage(self, stage: &'static str) -> Error {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
