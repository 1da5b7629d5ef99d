//! Numerical laboratory for pixel-based haptic shape displays.
//!
//! The crate models three ways a display can render a target bump from a
//! lattice of height-controlled pixels:
//!
//! * pixel-only (zero-order hold over each pixel's Voronoi cell),
//! * linear connection (piecewise-linear / barycentric interpolation),
//! * a continuity reinforcement skeleton (CRS): thin beams tied to the pixels
//!   and compressed at their ends so that buckling interpolates between them.
//!
//! On top of the reconstructions it provides Monte Carlo estimators for the
//! peak-position and shape distortion metrics, analytic beam-on-Winkler
//! foundation results (deflection series, critical loads, collapse index),
//! and a simulation of the fingertip-to-servo control pipeline.

pub mod beam;
pub mod control;
pub mod distortion;
pub mod error;
pub mod quadrature;
pub mod reconstruct;
pub mod shape;

mod linalg;

pub use error::{Error, Result};
