//! Quadrature over the standard-normal shock, plain Monte Carlo, bounded
//! scalar minimization, Sobol sequences and convex-hull design utilities.

mod hull;
mod minimize;
mod montecarlo;
mod quadrature;
mod sobol;

pub use hull::{convex_hull, convex_hull_3d, Hull2D, Hull3D};
pub use minimize::{minimize_scalar, minimize_scalar_try, minimize_with_endpoints, Minimum};
pub use montecarlo::{mc_expect, standard_normal_samples};
pub use quadrature::{expect, gaussian_rule, QuadratureRule};
pub use sobol::{sobol, Sobol, MAX_SOBOL_DIM};
