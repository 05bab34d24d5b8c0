use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("segment {segment}: {source}")]
    Segment {
        segment: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("malformed triangle: isosceles defect {defect:.3e} exceeds tolerance {tolerance:.3e}")]
    MalformedTriangle { defect: f64, tolerance: f64 },

    #[error("unsupported goal specification: {0}")]
    UnsupportedSpecification(String),

    #[error("shape mismatch: {0}")]
    Shape(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("environment too dense: no admissible sample after {attempts} attempts")]
    EnvironmentTooDense { attempts: usize },

    #[error("unknown environment kind `{0}`")]
    UnknownEnvironment(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn in_segment(self, segment: usize) -> Self {
        Error::Segment {
            segment,
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
