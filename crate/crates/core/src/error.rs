use thiserror::Error;

/// Error type shared by all solver and post-processing modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("index ({i}, {j}, {k}) out of range for grid dims ({nx}, {ny}, {nz})")]
    IndexOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        nx: usize,
        ny: usize,
        nz: usize,
    },

    #[error("stencil footprint at ({i}, {j}, {k}) along {axis} leaves the grid")]
    StencilOutOfRange {
        i: usize,
        j: usize,
        k: usize,
        axis: &'static str,
    },

    #[error("PQR parse error at line {line}: {msg}")]
    PqrParse { line: usize, msg: String },

    #[error("PQR stream contains no ATOM/HETATM records")]
    EmptySystem,

    #[error("atom {index} at ({x:.3}, {y:.3}, {z:.3}) lies outside the grid interior")]
    AtomOutsideGrid {
        index: usize,
        x: f64,
        y: f64,
        z: f64,
    },

    #[error("atom {index} coincides with a boundary node; Coulomb boundary data is singular")]
    SingularBoundary { index: usize },

    #[error("zero pivot at row {row} during tridiagonal elimination")]
    ZeroPivot { row: usize },

    #[error("solution blew up at step {step}: max |phi| = {max_abs:.3e}")]
    BlowUp { step: usize, max_abs: f64 },

    #[error("inner linear solver did not converge: residual {residual:.3e} after {iters} iterations")]
    InnerSolverDiverged { residual: f64, iters: usize },

    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("serialization failed: {0}")]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Process exit code: 2 for bad arguments, 3 for numerical failures,
    /// 4 for I/O and input-data problems.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidArgument(_) => 2,
            Error::ZeroPivot { .. }
            | Error::BlowUp { .. }
            | Error::InnerSolverDiverged { .. }
            | Error::SingularBoundary { .. } => 3,
            _ => 4,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
