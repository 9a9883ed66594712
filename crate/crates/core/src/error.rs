use std::path::PathBuf;

/// Errors raised by mesh construction, element setup and the slab solver.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),

    #[error("cell {cell}: {reason}")]
    InvalidCell { cell: usize, reason: String },

    #[error("degenerate seed configuration: {0}")]
    DegenerateSeeds(String),

    #[error("failed to parse mesh file {path}: {reason}")]
    MeshParse { path: PathBuf, reason: String },

    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("cell {cell}: singular local system ({what})")]
    SingularElement { cell: usize, what: &'static str },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("slab {slab}: singular system matrix ({reason})")]
    SingularSlab { slab: usize, reason: String },

    #[error("slab {slab}: Krylov solver did not converge after {iterations} iterations (final relative residual {:.3e})", residuals.last().copied().unwrap_or(f64::NAN))]
    KrylovNotConverged {
        slab: usize,
        iterations: usize,
        residuals: Vec<f64>,
    },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
