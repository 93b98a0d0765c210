//! Backward recursion over time steps: experimental design, inner worst-case
//! and outer control optimization per site, and surrogate fitting.

mod backward;
mod bundle;
mod config;
mod design;
mod optimize;

pub use backward::{
    design_csv, macro_replicate, optimize_design, price_scale, site_rule, solve,
    solve_with_diagnostics,
};
pub use bundle::{
    FeatureMap, NextValue, PolicyBundle, SiteRecord, StepSolution, TerminalCondition, WorstCase,
};
pub use config::{DesignSizes, Formulation, IntegratorKind, SolverConfig};
pub use design::{
    build_design_hedging, build_design_portfolio, simulate_pilots, Design, PilotPaths, Provenance,
};
pub use optimize::{
    hedging_grid, inner_worst_case_hedging, inner_worst_case_portfolio, outer_optimize,
    InnerResult, OuterResult, StepContext, GROSS_RETURN_FLOOR,
};
