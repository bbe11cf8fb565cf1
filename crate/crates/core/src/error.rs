use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("design matrix is rank deficient")]
    Singular,
    #[error("insufficient data: {0}")]
    InsufficientData(String),
    #[error("degenerate binary response: {0}")]
    DegenerateResponse(String),
    #[error("probit likelihood appears unbounded (perfect separation)")]
    Separation,
    #[error("argument out of domain: {0}")]
    Domain(String),
    #[error("outcome model residual scale is zero")]
    DegenerateResidual,
    #[error("treatment vector does not contain both groups")]
    DegenerateGroups,
    #[error("dimension mismatch: {0}")]
    Shape(String),
    #[error("design cannot be enumerated: {0}")]
    UnsupportedDesign(String),
    #[error("no grid point within the kernel window at {0}")]
    UndefinedWindow(f64),
    #[error("missing column `{0}`")]
    Schema(String),
    #[error("no rows left after removing incomplete records")]
    EmptyDataset,
    #[error("data integrity: {0}")]
    DataIntegrity(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unknown suite `{0}`")]
    UnknownSuite(String),
    #[error("year {year}: {source}")]
    Year {
        year: usize,
        #[source]
        source: Box<Error>,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_year(self, year: usize) -> Error {
        Error::Year {
            year,
            source: Box::new(self),
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Error {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
