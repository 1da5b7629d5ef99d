use thiserror::Error;

use crate::reconstruct::elastica::ElasticaSolution;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("degenerate lattice: {0}")]
    DegenerateLattice(String),

    #[error("extrapolation not defined at ({x}, {y})")]
    ExtrapolationNotDefined { x: f64, y: f64 },

    #[error("infeasible excess: constraints need arc length {required} but only {available} is available")]
    InfeasibleExcess { required: f64, available: f64 },

    #[error(
        "elastica solver did not converge after {iterations} iterations (residual {residual:e})"
    )]
    NotConverged {
        iterations: usize,
        residual: f64,
        best: Box<ElasticaSolution>,
    },

    #[error("axial load at buckling threshold: N = {axial} N reaches the mode-{mode} critical load {critical} N")]
    BucklingThreshold {
        mode: u32,
        axial: f64,
        critical: f64,
    },

    #[error("rigid-limit undefined: foundation stiffness is zero (classification: no collapse)")]
    RigidLimit,

    #[error("no peak: reconstruction is identically zero")]
    NoPeak,

    #[error("beam {beam} {end} end compression {compression} mm exceeds servo travel {travel} mm")]
    ServoTravelExceeded {
        beam: usize,
        end: &'static str,
        compression: f64,
        travel: f64,
    },

    #[error("trace not sorted in time at record {index}")]
    UnsortedTrace { index: usize },

    #[error("trace line {line}: {message}")]
    TraceFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
