//! Adaptive robust stochastic control with Gaussian-process value surrogates.
//!
//! The numerical kernels in [`dynamics`], [`numerics`] and [`gp`] are generic
//! over [`Scalar`] (`f32` or `f64`); the solver and evaluator work in `f64`.

pub mod dynamics;
pub mod error;
pub mod evaluator;
pub mod gp;
pub mod numerics;
pub mod rng;
pub mod scalar;
pub mod solver;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Real = f64;
pub type Beliefs = dynamics::Beliefs<Real>;
pub type ModelParams = dynamics::ModelParams<Real>;
pub type ProblemSpec = dynamics::ProblemSpec<Real>;
pub type AugmentedState = dynamics::AugmentedState<Real>;
pub type GpSurrogate = gp::GpSurrogate<Real>;
pub type KernelSpec = gp::KernelSpec<Real>;
pub type QuadratureRule = numerics::QuadratureRule<Real>;

pub type Beliefs32 = dynamics::Beliefs<f32>;
pub type GpSurrogate32 = gp::GpSurrogate<f32>;
pub type QuadratureRule32 = numerics::QuadratureRule<f32>;
