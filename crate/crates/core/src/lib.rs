//! Variable screening with false negative control under dependence.
//!
//! Builds around a signal-count estimator driven by a simulated bounding
//! sequence, two cutoff procedures on ranked p-values (an adaptive rule with
//! beta-median critical values and a conservative step-down comparator),
//! local-fdr and step-up comparators, a Monte Carlo engine over four
//! dependence designs, and a covariate-adjusted marginal regression pipeline
//! with a phenotype-permutation null.

pub mod error;
pub mod experiment;
pub mod io;
pub mod lfdr;
pub mod linalg;
pub mod metrics;
pub mod mr;
pub mod pvalues;
pub mod regression;
pub mod rng;
pub mod screening;
pub mod sim;
pub mod special;

pub use error::{Error, Result};
pub use pvalues::{PValueVector, Sided};
