//! Probabilistic canonical polyadic decomposition with automatic rank learning.
//!
//! The crate fits a CP model `Y ≈ ⟦U⁽¹⁾, …, U⁽ᴺ⁾⟧ + noise` by mean-field
//! variational inference, with each column group of the factor matrices given
//! a sparsity-promoting prior. Columns driven to zero are pruned, and the
//! number of survivors is the estimated tensor rank.
//!
//! Two column priors share one inference engine:
//!
//! * [`vi_gh`]: the generalized hyperbolic prior, written as a Gaussian scale
//!   mixture with generalized inverse Gaussian (GIG) mixing.
//! * [`vi_gg`]: the classical Gaussian-gamma (ARD) prior, with an optional
//!   hyper-prior on the gamma rate.
//!
//! The crate is `no_std` and needs only `alloc`. File formats, the CLI and the
//! parallel benchmark runner live in the `pcpd` companion crate.
//!
//! ```
//! use pcpd_core::{synth, vi_gh, FitOptions, RankBound};
//!
//! let spec = synth::SynthSpec::iid(vec![8, 8, 8], 2, 1);
//! let (x, _) = synth::gen_cpd(&spec).unwrap();
//! let opts = FitOptions { rank_bound: RankBound::Explicit(4), ..FitOptions::default() };
//! let report = vi_gh::fit(&x, &opts).unwrap();
//! assert_eq!(report.estimated_rank, 2);
//! ```

#![no_std]
#![warn(missing_docs)]

extern crate alloc;

pub mod engine;
mod error;
pub mod linalg;
pub mod priors;
pub mod quadrature;
pub mod special;
pub mod synth;
pub mod tensor;
pub mod vi_gg;
pub mod vi_gh;

pub use error::{Error, Result};
pub use engine::{FitOptions, FitReport, NoisePosterior, RankBound};
pub use nalgebra;
pub use tensor::{DenseTensor, KruskalModel};
