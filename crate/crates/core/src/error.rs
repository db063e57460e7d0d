use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("grid needs at least {min} points per axis, got {nx}x{ny}")]
    GridTooSmall { nx: usize, ny: usize, min: usize },

    #[error("value shape {got} does not match grid {nx}x{ny}")]
    ShapeMismatch { nx: usize, ny: usize, got: usize },

    #[error("non-finite value {value} at node ({i}, {j}) = ({x}, {y})")]
    NonFinite {
        i: usize,
        j: usize,
        x: f64,
        y: f64,
        value: f64,
    },

    #[error("coefficient box {nmax}x{mmax} does not fit grid {nx}x{ny} (need 2*nmax+1 <= nx, 2*mmax+1 <= ny)")]
    BoxTooLarge {
        nmax: usize,
        mmax: usize,
        nx: usize,
        ny: usize,
    },

    #[error("index {index} outside coefficient range |.| <= {max}")]
    IndexOutOfRange { index: i64, max: usize },

    #[error("coefficients are not Hermitian: imaginary residual {residual:e} exceeds {bound:e}")]
    NonHermitian { residual: f64, bound: f64 },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("missing derivative `{0}` on analytic function")]
    MissingDerivative(&'static str),

    #[error("function is not boundary-flat: max |f| on the boundary lines is {max:e} (tolerance {tol:e})")]
    NotBoundaryFlat { max: f64, tol: f64 },

    #[error("cannot construct term {term}: {reason}")]
    Unconstructible { term: usize, reason: String },

    #[error("derivative undefined at break node x = {x} of term {term}")]
    BreakNode { term: usize, x: f64 },

    #[error("report contains a non-finite number at `{0}`")]
    NonFiniteReport(String),

    #[error("csv: {0}")]
    Csv(#[from] csv::Error),

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}
