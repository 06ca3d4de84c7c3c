use thiserror::Error;

use crate::expr::ExprError;
use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("degree error: {0}")]
    Degree(String),
    #[error("precondition failed: {what} (residual {residual:.3e} at {at:?})")]
    Precondition { what: String, at: Vec<f64>, residual: f64 },
    #[error("interpolated form is degenerate at t={t}, point {point:?} (condition number {cond:.3e})")]
    Degenerate { t: f64, point: Vec<f64>, cond: f64 },
    #[error("trajectory left the domain box at t={time} (last point {point:?})")]
    Escape { time: f64, point: Vec<f64> },
    #[error("point {point:?} is not in the tubular image: {reason}")]
    NotInTubularImage { point: Vec<f64>, reason: String },
    #[error("stratum `{stratum}` is not isotropic (|omega| on its tangent = {residual:.3e}); r*omega obstruction {obstruction:.3e}")]
    NotIsotropic { stratum: String, residual: f64, obstruction: f64 },
    #[error("invalid model: {0}")]
    Model(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("{0}")]
    Diagnostic(String),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

impl Error {
    pub(crate) fn precondition(what: impl Into<String>, at: &[f64], residual: f64) -> Self {
        Error::Precondition { what: what.into(), at: at.to_vec(), residual }
    }
}
