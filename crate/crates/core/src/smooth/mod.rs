//! Kernels, local-linear smoothers and the binned approximation used for
//! very large columns.

mod binned;
mod kernel;
mod matrix;

pub use binned::{BinnedSmoother, DEFAULT_BINS};
pub use kernel::{epanechnikov, kernel_moments, Kernel, KernelMoments};
pub use matrix::{center, smoother_matrix, smoother_matrix_for, SmootherMatrix, SINGULARITY_EPS};

pub(crate) use binned::{interpolate, locate};
pub(crate) use matrix::{dot, local_weights};
