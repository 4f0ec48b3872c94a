use thiserror::Error;

/// Errors raised by mesh construction, assembly, solves and post-processing.
#[derive(Debug, Error)]
pub enum Error {
    #[error("degenerate triangle {0}")]
    DegenerateTriangle(usize),
    #[error("boundary not closed: node {0} has odd degree on {1} boundary")]
    BoundaryNotClosed(usize, &'static str),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("inconsistent tags: {0}")]
    InconsistentTags(String),
    #[error("malformed mesh file, line {line}: {msg}")]
    MalformedMesh { line: usize, msg: String },
    #[error("defect touches or crosses the outer boundary")]
    DefectNotInterior,
    #[error("unmeshable parameters: {0}")]
    Unmeshable(String),
    #[error("unsupported defect shape: {0}")]
    UnsupportedShape(String),
    #[error("invalid domain: {0}")]
    InvalidDomain(String),
    #[error("load does not match the outer boundary edges: {0}")]
    LoadMismatch(String),
    #[error("incompatible load: force residual {force:.3e}, couple residual [{couple0:.3e}, {couple1:.3e}]")]
    IncompatibleLoad { force: f64, couple0: f64, couple1: f64 },
    #[error("solver did not converge: relative residual {residual:.3e} after {iterations} iterations")]
    NotConverged { residual: f64, iterations: usize },
    #[error("factorization failed: {0}")]
    Factorization(String),
    #[error("the mesh has no defect region")]
    NoDefect,
    #[error("the active region is disconnected")]
    Disconnected,
    #[error("{0}")]
    Domain(String),
    #[error("eigensolver stagnated after {0} iterations")]
    EigenStagnation(usize),
    #[error("empty family")]
    EmptyFamily,
    #[error("invalid config: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Process exit status: 3 for solver failures, 2 for bad input.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::NotConverged { .. } | Error::Factorization(_) | Error::EigenStagnation(_) => 3,
            _ => 2,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
