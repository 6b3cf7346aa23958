use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("drift matrix is singular at omega = {omega} (reciprocal condition {rcond:.3e})")]
    SingularAtFrequency { omega: f64, rcond: f64 },

    #[error("output covariance has imaginary residue {residue:.3e}")]
    NonHermitianResult { residue: f64 },

    #[error("meter variance {v22:.3e} is too small to condition on")]
    DegenerateMeter { v22: f64 },

    #[error("model is unstable: largest eigenvalue real part {max_re:.3e}")]
    UnstableModel { max_re: f64 },

    #[error("optically broadened linewidth {gamma_m:.3e} is not positive")]
    NegativeLinewidth { gamma_m: f64 },

    #[error("no sign change of the curve between {lo} and {hi}")]
    NoBracket { lo: f64, hi: f64 },

    #[error("quadrature for {integral} did not converge (estimate {estimate:.6e}, error {error:.3e})")]
    QuadratureFailed {
        integral: &'static str,
        estimate: f64,
        error: f64,
    },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidParameter(msg.into())
}
