//! Deterministic CLT functionals for linear spectral statistics of generalized
//! Wigner matrices, and a seeded Monte Carlo harness to check them.
// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod ensemble;
pub mod error;
pub mod functionals;
pub mod harness;
pub mod profile;
pub mod quadrature;
pub mod semicircle;
pub mod spectral;
pub mod testfn;

pub use ensemble::{Beta, CumulantSummary, EnsembleSpec, EntryDistribution};
pub use error::{Error, Result};
pub use functionals::{predict, CltPrediction, PredictOptions};
pub use profile::VarianceProfile;
pub use spectral::{LssEvaluator, SpectralSample};
pub use testfn::{ChebCoeffs, TestFunction};
