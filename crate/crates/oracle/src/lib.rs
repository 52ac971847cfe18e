//! Slow, independent reference computations for the test suites.
//!
//! Nothing here shares code with `pcpd-core`: quadrature is a fixed composite
//! Gauss–Legendre rule, matrices are plain row-major `Vec<f64>`, inverses use
//! Gauss–Jordan elimination, and every expectation is summed entry by entry.

pub mod naive;
pub mod quad;
