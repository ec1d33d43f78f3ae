//! Numerical Finsler geometry.
//!
//! The crate evaluates the fundamental tensors, Chern connection and flag
//! curvature of user-declared Finsler metrics through higher-order forward
//! Taylor jets, and cross-checks the Numata closed-form curvature and its
//! one-dimensional prolongation as a Schwarzian derivative.
//!
//! Layers, bottom up:
//!
//! * [`jet`] — dense truncated multivariate Taylor arithmetic, the derivative
//!   carrier for everything above it; [`fd`] holds the finite-difference
//!   oracle used only for cross-validation.
//! * [`expr`] — a small expression language so metric coefficient functions
//!   can live in config files.
//! * [`metric`] — metric families (Riemannian, Randers, Numata, 1D Numata)
//!   and the pointwise tensor frame: fundamental tensor, distinguished
//!   section, angular metric, Cartan tensor.
//! * [`connection`] / [`curvature`] — geodesic spray, nonlinear connection,
//!   Chern coefficients, hh-curvature and flag curvature.
//! * [`numata`] / [`schwarz`] — the closed-form Numata flag curvature and the
//!   one-dimensional Schwarzian-derivative bridge.
//! * [`verify`] — the bundled property-check suite with reproducible
//!   random sampling.

pub mod connection;
pub mod curvature;
pub mod error;
pub mod expr;
pub mod fd;
pub mod jet;
mod linalg;
pub mod metric;
pub mod numata;
pub mod oracle;
pub mod schwarz;
pub mod tol;
pub mod verify;

pub use connection::ConnectionFrame;
pub use curvature::{CurvatureFrame, ScalarCurvatureReport};
pub use error::{Error, Result};
pub use expr::Expr;
pub use jet::Jet;
pub use metric::{HomogeneityReport, Metric, MetricFamily, TensorFrame};
pub use numata::NumataData;
pub use schwarz::{CircleMap, Interval, Orientation};
pub use verify::{VerifyOptions, VerifyReport};
