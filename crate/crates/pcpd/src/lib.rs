//! Files, command line and benchmark runner around `pcpd-core`.

pub mod algo;
pub mod bench;
pub mod format;
pub mod report;

pub use algo::Algorithm;
