use thiserror::Error;

/// Errors raised by the numerical pipeline and the I/O layer.
#[derive(Debug, Error)]
pub enum Error {
    #[error("grid {nx}x{ny} is too small for 5-point stencils")]
    GridTooSmall { nx: usize, ny: usize },

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grids differ")]
    GridMismatch,

    #[error("non-conformal input at node ({i},{j}): residual {residual:.3e}")]
    NonConformal { i: usize, j: usize, residual: f64 },

    #[error("degenerate immersion at node ({i},{j})")]
    Degenerate { i: usize, j: usize },

    #[error("branch continuation failed at node ({i},{j})")]
    Branch { i: usize, j: usize },

    #[error("vertical point at node ({i},{j}): h = {h:.3e}")]
    Vertical { i: usize, j: usize, h: f64 },

    #[error("spinors do not solve a Dirac system: max residual {0:.3e}")]
    NotSurfaceSpinor(f64),

    #[error("input is not minimal: max |H| = {0:.3e}")]
    NotMinimal(f64),

    #[error("B cannot be extracted: a spinor component vanishes identically")]
    DegenerateB,

    #[error("B vanishes identically; horizontal umbrellas have no dual surface")]
    HorizontalUmbrella,

    #[error("element is not in the real span of the su(1,1) basis: residual {0:.3e}")]
    NotInSu11(f64),

    #[error("connection is not flat: max residual {0:.3e}")]
    NotFlat(f64),

    #[error("initial value is not invertible")]
    Singular,

    #[error("Iwasawa factorization failed: {0}")]
    BigCell(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error("unknown example '{0}'")]
    UnknownExample(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
