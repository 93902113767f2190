use std::path::PathBuf;

/// Every failure the workbench can report.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("geometry error: {0}")]
    Geometry(String),
    #[error("mesh error: {0}")]
    Mesh(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("unknown boundary tag `{0}`")]
    Tag(String),
    #[error("linear solver failed: {0}")]
    Solver(String),
    #[error("value outside the domain of the constitutive law: {0}")]
    Domain(String),
    #[error("exponent condition violated: {0}")]
    Admissibility(String),
    #[error("velocity field is not admissible: {0}")]
    Divergence(String),
    #[error("active-set iteration did not converge after {0} sweeps")]
    Convergence(usize),
    #[error("Picard iteration did not converge in {iters} sweeps (last increment {increment:.3e})")]
    PicardDivergence { iters: usize, increment: f64 },
    #[error("coefficient is not strictly positive on triangle {0}")]
    Coercivity(usize),
    #[error("point ({0}, {1}) is outside the mesh")]
    Interpolation(f64, f64),
    #[error("time grids differ: {0}")]
    GridMismatch(String),
    #[error("{path}: line {line}: key `{key}`: {message}")]
    Config {
        path: String,
        line: usize,
        key: String,
        message: String,
    },
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors caused by bad input rather than by a solver.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::Solver(_)
                | Error::Convergence(_)
                | Error::PicardDivergence { .. }
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
