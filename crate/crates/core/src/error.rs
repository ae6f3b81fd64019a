use num_complex::Complex64;
use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Errors raised by every module. Each variant names the module and operation
/// that produced it so that the CLI can surface them verbatim.
#[derive(Debug, Error)]
pub enum Error {
    #[error("{module}::{op}: invalid `{param}`: {reason}")]
    InvalidParameter {
        module: &'static str,
        op: &'static str,
        param: String,
        reason: String,
    },

    #[error("{module}::{op}: fields live on different grids")]
    GridMismatch {
        module: &'static str,
        op: &'static str,
    },

    #[error("{module}::{op}: non-finite value in `{param}`")]
    NonFinite {
        module: &'static str,
        op: &'static str,
        param: String,
    },

    #[error(
        "solver::{op}: no convergence after {} iterations (last increment {:e})",
        trace.len(),
        trace.last().copied().unwrap_or(f64::NAN)
    )]
    NonConvergence { op: &'static str, trace: Vec<f64> },

    #[error("{module}::{op}: degenerate Jacobian {det:e} at z = {point}")]
    DegenerateJacobian {
        module: &'static str,
        op: &'static str,
        point: Complex64,
        det: f64,
    },

    #[error("{module}::{op}: inversion failed for sample {index} (target {target})")]
    InversionFailed {
        module: &'static str,
        op: &'static str,
        index: usize,
        target: Complex64,
    },

    #[error("{module}::{op}: malformed input: {reason}")]
    Format {
        module: &'static str,
        op: &'static str,
        reason: String,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn invalid(
        module: &'static str,
        op: &'static str,
        param: impl Into<String>,
        reason: impl Into<String>,
    ) -> Self {
        Error::InvalidParameter {
            module,
            op,
            param: param.into(),
            reason: reason.into(),
        }
    }
}
