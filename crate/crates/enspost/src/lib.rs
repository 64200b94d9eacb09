//! Two-step multivariate post-processing of ensemble weather forecasts.
//!
//! The pipeline calibrates each forecast horizon independently with EMOS
//! (nonhomogeneous regression) and then restores the temporal dependence
//! between horizons with an empirical copula: ensemble copula coupling
//! (ECC), dual ECC, the Schaake shuffle and its minimum-divergence and
//! similarity-based variants. A verification suite (CRPS, energy score,
//! variogram score, rank histograms, L1 medians, Diebold-Mariano tests)
//! and a synthetic forecast-archive generator round out the toolkit.

pub mod dists;
pub mod marginals;
pub mod reorder;
pub mod verify;
pub mod emos;
pub mod error;
pub mod optim;
pub mod rng;

pub use error::{Error, Result};
