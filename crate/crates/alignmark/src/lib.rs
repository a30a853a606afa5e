//! Binary alignment marks with sharp aperiodic autocorrelations.
//!
//! Core pieces:
//! - [`matrix`]: bit-packed binary matrices, symmetry operations, parsing.
//! - [`correlation`]: exact integer autocorrelation and real-valued
//!   crosscorrelation kernels.
//! - [`spectrum`]: peak-sidelobe distance histograms, the dictionary-order
//!   ranking of marks, sharpness.
//! - [`bounds`]: analytic bounds on the best attainable peak-sidelobe
//!   distance per pattern weight, with an explicit construction.
//! - [`search`]: exhaustive branch-and-bound search for optimal marks, with
//!   work partitioning, parallelism and checkpointing.
//! - [`simulate`]: Monte-Carlo alignment trials under additive Gaussian
//!   noise across an SNR sweep.

pub mod bounds;
pub mod correlation;
pub mod error;
pub mod matrix;
pub mod search;
pub mod simulate;
pub mod spectrum;

pub use bounds::{bound_table, construct_bound_matrix, BoundRow, BoundTable};
pub use correlation::{
    autocorrelate, crosscorrelate, CorrelationMap, RealCorrelationMap, RealImage,
};
pub use error::{Error, Result};
pub use matrix::{BinaryMatrix, MAX_SIDE};
pub use search::{search, Optimum, SearchConfig, SearchReport, SymmetryRestriction};
pub use simulate::{run_sweep, SnrStats, TrialConfig, TrialOutcome};
pub use spectrum::{compare, sharpness, spectrum_of, DistanceSpectrum};
