use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::measure::TestMeasure;
use super::report::{report_stats, EvalReport, Histogram};
use super::strategy::StrategyKind;
use crate::dynamics::{transition, AugmentedState, ModelParams, ProblemSpec};
use crate::error::{Error, Result};
use crate::rng::stream;
use crate::solver::TerminalCondition;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EvalOptions {
    pub paths: usize,
    pub seed: u64,
    pub record_controls: bool,
    pub histogram_bins: usize,
}

impl EvalOptions {
    pub fn new(paths: usize, seed: u64) -> Self {
        EvalOptions {
            paths,
            seed,
            record_controls: false,
            histogram_bins: 40,
        }
    }
}

struct PathOutcome {
    terminal: f64,
    objective: f64,
    theta: ModelParams,
    controls: Vec<f64>,
}

/// Forward Monte Carlo of `strategy` from `x0` under `measure`. Path `n` uses
/// its own generator derived from `(seed, n)`, so results do not depend on
/// scheduling.
pub fn evaluate(
    spec: &ProblemSpec,
    strategy: &StrategyKind,
    measure: &TestMeasure,
    x0: &AugmentedState,
    opts: &EvalOptions,
) -> Result<EvalReport> {
    spec.validate()?;
    measure.validate()?;
    if opts.paths < 1 {
        return Err(Error::invalid("evaluation needs at least one path"));
    }
    if x0.k != 0 {
        return Err(Error::invalid("evaluation starts at step 0"));
    }
    let terminal = TerminalCondition::of(spec);
    let u0 = strategy.initial_control(spec, x0)?;
    let outcomes: Vec<PathOutcome> = (0..opts.paths)
        .into_par_iter()
        .map(|n| {
            let mut rng = stream(opts.seed, "eval-path", n as u64);
            let theta = measure.draw(spec, &mut rng)?;
            let mut x = *x0;
            let mut controls =
                Vec::with_capacity(if opts.record_controls { spec.steps } else { 0 });
            for k in 0..spec.steps {
                let u = if k == 0 {
                    u0
                } else {
                    strategy.control(spec, &x)?
                };
                if opts.record_controls {
                    controls.push(u);
                }
                let z: f64 = rng.sample(StandardNormal);
                x = transition(&x, u, &theta, z, spec)?;
            }
            let objective = terminal.value(&x.market)?;
            let terminal_value = match terminal {
                TerminalCondition::CrraUtility { .. } => x.market.wealth(),
                TerminalCondition::HedgingLoss { strike, .. } => {
                    (x.market.price().unwrap_or(0.0) - strike).max(0.0) - x.market.wealth()
                }
            };
            Ok(PathOutcome {
                terminal: terminal_value,
                objective,
                theta,
                controls,
            })
        })
        .collect::<Result<_>>()?;
    let terminal_values: Vec<f64> = outcomes.iter().map(|o| o.terminal).collect();
    let objective: Vec<f64> = outcomes.iter().map(|o| o.objective).collect();
    let summary = report_stats(&terminal_values, &objective)?;
    let histogram = Histogram::build(&terminal_values, opts.histogram_bins.max(1));
    Ok(EvalReport {
        strategy: strategy.name().to_string(),
        seed: opts.seed,
        thetas: outcomes.iter().map(|o| o.theta).collect(),
        controls: opts
            .record_controls
            .then(|| outcomes.into_iter().map(|o| o.controls).collect()),
        terminal: terminal_values,
        objective,
        summary,
        histogram,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dynamics::ModelParams;

    #[test]
    fn constant_zero_compounds_deterministically() {
        let spec = ProblemSpec::portfolio_default();
        let x0 = AugmentedState::portfolio(1.0, spec.initial_beliefs(), 0);
        let measure = TestMeasure::Fixed {
            theta: ModelParams::new(0.1, 0.08),
        };
        let r = evaluate(
            &spec,
            &StrategyKind::Constant(0.0),
            &measure,
            &x0,
            &EvalOptions::new(200, 3),
        )
        .unwrap();
        let want = 1.001f64.powi(20);
        assert!(r.terminal.iter().all(|w| (w - want).abs() < 1e-12));
        assert!(r.summary.std.unwrap() < 1e-12);
    }

    #[test]
    fn same_seed_same_report() {
        let spec = ProblemSpec::hedging_default();
        let x0 = AugmentedState::hedging(100.0, 20.0, spec.initial_beliefs(), 0);
        let opts = EvalOptions::new(300, 9);
        let a = evaluate(
            &spec,
            &StrategyKind::AdaptiveDelta,
            &TestMeasure::SampledUniformSet,
            &x0,
            &opts,
        )
        .unwrap();
        let b = evaluate(
            &spec,
            &StrategyKind::AdaptiveDelta,
            &TestMeasure::SampledUniformSet,
            &x0,
            &opts,
        )
        .unwrap();
        assert_eq!(a, b);
        let again = report_stats(&a.terminal, &a.objective).unwrap();
        assert!((again.v0 - a.summary.v0).abs() < 1e-12);
    }
}
