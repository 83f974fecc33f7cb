//! Information-based subsampling with orthogonal-array structure and
//! additive-model fitting on the selected rows.
//!
//! The pipeline: load a [`data::Dataset`], scale predictors to the unit cube,
//! pick a subsample with [`sampler::ies_select`], fit an additive model with
//! [`backfit::backfit`] using bandwidths from [`bandwidth`], and score the fit.

pub mod backfit;
pub mod bandwidth;
pub mod bench;
pub mod criterion;
pub mod data;
pub mod error;
pub mod oa;
pub mod rng;
pub mod sampler;
pub mod smooth;

pub use error::{Error, Result};
pub use rng::SeededRng;
