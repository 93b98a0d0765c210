//! Gaussian-process surrogates: anisotropic product kernels, a cached
//! Cholesky factorization, posterior prediction and maximum-likelihood
//! hyperparameter fitting.

mod cholesky;
mod fit;
mod kernel;
mod surrogate;

pub use cholesky::Cholesky;
pub use fit::{fit, nelder_mead, FitOptions};
pub use kernel::{kernel_eval, KernelFamily, KernelSpec, DEFAULT_NUGGET};
pub use surrogate::{GpDocument, GpSurrogate, InputScaling, PriorMean};
