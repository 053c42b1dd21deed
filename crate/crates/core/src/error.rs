use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid coefficient layout: {0}")]
    Layout(String),
    #[error("grid size mismatch: {left} vs {right}")]
    GridMismatch { left: usize, right: usize },
    #[error("product order {order} exceeds the alias-free bound {bound} of grid {grid}")]
    WindowOverflow { order: usize, bound: usize, grid: usize },
    #[error("sup norm of u is {sup} > 1")]
    SupNormExceeded { sup: f64 },
    #[error("not purely contractive: |u(0)| = {modulus}")]
    NotPurelyContractive { modulus: f64 },
    #[error("1 - |u|^2 reaches {min} < 0")]
    NegativeDefect { min: f64 },
    #[error("truncation order {n} too small for deg u = {deg} (need N >= deg + 2)")]
    OrderTooSmall { n: usize, deg: usize },
    #[error("model space has dimension zero")]
    EmptySpace,
    #[error("raw vector leaves the coefficient window: {0}")]
    OutsideWindow(String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("closed form and projection disagree for {name}: {residual:e}")]
    SpecialVectorMismatch { name: &'static str, residual: f64 },
    #[error("{what}: residual {residual:e} exceeds {tol:e}")]
    Residual { what: String, residual: f64, tol: f64 },
    #[error("symbol is not of commutant form: {0}")]
    NotCommutantForm(String),
    #[error("operator is not invariant: residual {residual:e} exceeds {tol:e}")]
    NotInvariant { residual: f64, tol: f64 },
    #[error("Delta vanishes identically; the (2,2) entry of the symbol is not determined")]
    NotDetermined,
    #[error("|alpha| = {modulus} is not inside the unit disk")]
    BadAlpha { modulus: f64 },
    #[error("{0}")]
    Config(String),
    #[error("io: {0}")]
    Io(String),
    #[error("json: {0}")]
    Json(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json(e.to_string())
    }
}
