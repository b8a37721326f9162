use thiserror::Error;

/// Errors produced by mesh construction, assembly, the linear solver, the
/// time integrator and the experiment drivers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("size mismatch for {what}: expected {expected}, found {found}")]
    SizeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("matrix entry ({row}, {col}) out of range for a {nrows}x{ncols} matrix")]
    IndexOutOfRange {
        row: usize,
        col: usize,
        nrows: usize,
        ncols: usize,
    },

    #[error("matrix is not square ({nrows}x{ncols})")]
    NotSquare { nrows: usize, ncols: usize },

    #[error("singular pivot at elimination step {step} (column {column})")]
    SingularPivot { step: usize, column: usize },

    #[error("singular circuit system: {0}")]
    SingularCircuit(String),

    #[error("{context}: {source}")]
    Solver {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("exact solution undefined: {0}")]
    Oracle(String),

    #[error("degenerate reference: {0}")]
    DegenerateReference(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn in_context(self, context: impl Into<String>) -> Self {
        Error::Solver {
            context: context.into(),
            source: Box::new(self),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
