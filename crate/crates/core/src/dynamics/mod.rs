//! Market dynamics, belief recursions, uncertainty sets and the objective
//! functions of the two built-in problems.

mod beliefs;
mod objective;
mod problem;
mod state;
mod uncertainty;

pub use beliefs::{update_beliefs, Beliefs, ModelParams};
pub use objective::{call_payoff, crra_utility, LossFunction};
pub use problem::{ProblemKind, ProblemSpec};
pub use state::{transition, transition_hedging, transition_portfolio, AugmentedState, Market};
pub use uncertainty::{chi2_quantile_2dof, drift_interval, uncertainty_set, UncertaintyEllipsoid};
