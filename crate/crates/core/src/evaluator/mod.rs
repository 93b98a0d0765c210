//! Forward Monte Carlo evaluation of feedback strategies under a test measure,
//! the baseline strategies, and summary statistics of the terminal outcome.

mod black_scholes;
mod measure;
mod report;
mod simulate;
mod strategy;

pub use black_scholes::{bs_delta, bs_price};
pub use measure::TestMeasure;
pub use report::{quantile_sorted, report_stats, EvalReport, Histogram, Summary};
pub use simulate::{evaluate, EvalOptions};
pub use strategy::{
    bundle_initial_control, merton_control, myopic_adaptive_table, static_robust_solve,
    MyopicTable, StrategyKind, StrategyName, ThetaInterpolator,
};
