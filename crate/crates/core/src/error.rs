use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("inadmissible state: {quantity} = {value:e} below margin {margin:e}")]
    Inadmissible { quantity: &'static str, value: f64, margin: f64 },

    #[error("degenerate Jacobian: |d1 Phi| = {value:e} < {threshold:e}; the front is too large for the cutoff lift")]
    DegenerateJacobian { value: f64, threshold: f64 },

    #[error("stability condition violated: margin {margin:e} < {k:e}")]
    StabilityViolated { margin: f64, k: f64 },

    #[error("B0 positivity lost in the boundary strip (min eigenvalue {min_eig:e}); use a smaller epsilon")]
    PositivityLost { min_eig: f64 },

    #[error("outside the admissible regime: {0}")]
    Domain(String),

    #[error("grid too small: {0}")]
    GridTooSmall(String),

    #[error("basic-state constraint {constraint} violated: residual {residual:e}")]
    ConstraintViolated { constraint: &'static str, residual: f64 },

    #[error("CFL violated: dt = {dt:e} exceeds the stable step {limit:e}")]
    Cfl { dt: f64, limit: f64 },

    #[error("non-finite value in {field} at t = {t}")]
    NonFinite { field: &'static str, t: f64 },

    #[error("iteration diverged: {0}")]
    Diverged(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl Error {
    /// Numerical aborts (as opposed to invalid input).
    pub fn is_numerical(&self) -> bool {
        matches!(self, Error::Cfl { .. } | Error::NonFinite { .. } | Error::Diverged(_))
    }
}
