//! Run configuration: a sectioned TOML document. Missing keys take the
//! defaults of the chosen problem; unknown keys are rejected.

use std::path::{Path, PathBuf};

use robustbell::dynamics::{LossFunction, ModelParams, ProblemKind, ProblemSpec};
use robustbell::evaluator::{StrategyName, TestMeasure};
use robustbell::gp::KernelFamily;
use robustbell::solver::{DesignSizes, Formulation, IntegratorKind, SolverConfig};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProblemName {
    Portfolio,
    Hedging,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FormulationName {
    AdaptiveRobust,
    Adaptive,
    StaticRobust,
}

impl FormulationName {
    pub fn formulation(self) -> Formulation {
        match self {
            FormulationName::AdaptiveRobust => Formulation::AdaptiveRobust,
            FormulationName::Adaptive => Formulation::Adaptive,
            FormulationName::StaticRobust => Formulation::StaticRobust,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSection {
    pub kind: ProblemName,
    pub r: f64,
    pub dt: f64,
    pub steps: usize,
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kappa: Option<f64>,
    pub k0: u32,
    pub mu: f64,
    pub sigma: f64,
    pub control_domain: [f64; 2],
    pub relaxed_control_domain: [f64; 2],
    /// Portfolio risk aversion.
    pub gamma: f64,
    /// Hedging strike and loss asymmetry.
    pub strike: f64,
    pub lambda: f64,
    /// Initial stock price (hedging only).
    pub initial_price: f64,
    pub initial_wealth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub formulation: FormulationName,
    pub n_pilot: usize,
    pub n_qmc: usize,
    pub n_adaptive: usize,
    pub n_edge: usize,
    pub quadrature_size: usize,
    pub integrator: IntegratorKind,
    pub inner_grid: [usize; 2],
    pub phi_scan: usize,
    pub u_scan: usize,
    pub tolerance: f64,
    pub control_tolerance: f64,
    pub kernel: KernelFamily,
    pub nugget: f64,
    pub control_nugget: f64,
    pub warm_start: bool,
    pub freeze_hyperparameters: bool,
    pub flat_threshold: f64,
    pub wealth_range: [f64; 2],
    pub seed: u64,
    /// `(n_mu, n_sigma)` parameter grid of the myopic-adaptive table.
    pub myopic_grid: [usize; 2],
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EvaluationSection {
    pub paths: usize,
    pub seed: u64,
    pub strategies: Vec<StrategyName>,
    pub measure: TestMeasure,
    pub record_controls: bool,
    pub histogram_bins: usize,
    /// Control used by the `constant` strategy.
    pub constant_control: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: PathBuf,
    pub diagnostics: bool,
}

/// Fully resolved configuration; this is what the manifest echoes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub problem: ProblemSection,
    pub solver: SolverSection,
    pub evaluation: EvaluationSection,
    pub output: OutputSection,
}

impl RunConfig {
    pub fn default_for(kind: ProblemName) -> Self {
        let (spec, cfg) = match kind {
            ProblemName::Portfolio => (ProblemSpec::portfolio_default(), SolverConfig::portfolio_default()),
            ProblemName::Hedging => (ProblemSpec::hedging_default(), SolverConfig::hedging_default()),
        };
        let (gamma, strike, lambda) = match spec.kind {
            ProblemKind::Portfolio { gamma } => (gamma, 100.0, 0.75),
            ProblemKind::Hedging { strike, loss } => (4.0, strike, loss.lambda),
        };
        let portfolio = kind == ProblemName::Portfolio;
        RunConfig {
            problem: ProblemSection {
                kind,
                r: spec.r,
                dt: spec.dt,
                steps: spec.steps,
                alpha: spec.alpha,
                kappa: spec.kappa,
                k0: spec.k0,
                mu: spec.prior.mu,
                sigma: spec.prior.sigma,
                control_domain: [spec.control_domain.0, spec.control_domain.1],
                relaxed_control_domain: [spec.relaxed_control_domain.0, spec.relaxed_control_domain.1],
                gamma,
                strike,
                lambda,
                initial_price: 100.0,
                initial_wealth: if portfolio { 1.0 } else { 20.0 },
            },
            solver: SolverSection {
                formulation: FormulationName::AdaptiveRobust,
                n_pilot: cfg.design.n_pilot,
                n_qmc: cfg.design.n_qmc,
                n_adaptive: cfg.design.n_adaptive,
                n_edge: cfg.design.n_edge,
                quadrature_size: cfg.quadrature_size,
                integrator: cfg.integrator,
                inner_grid: [cfg.inner_grid.0, cfg.inner_grid.1],
                phi_scan: cfg.phi_scan,
                u_scan: cfg.u_scan,
                tolerance: cfg.tolerance,
                control_tolerance: cfg.control_tolerance,
                kernel: cfg.kernel,
                nugget: cfg.nugget,
                control_nugget: cfg.control_nugget,
                warm_start: cfg.warm_start,
                freeze_hyperparameters: cfg.freeze_hyperparameters,
                flat_threshold: cfg.flat_threshold,
                wealth_range: [cfg.wealth_range.0, cfg.wealth_range.1],
                seed: cfg.seed,
                myopic_grid: [8, 8],
            },
            evaluation: EvaluationSection {
                paths: 5000,
                seed: 7,
                strategies: if portfolio {
                    vec![StrategyName::AdaptiveRobust, StrategyName::StaticRobust, StrategyName::MyopicAdaptive]
                } else {
                    vec![
                        StrategyName::AdaptiveRobust,
                        StrategyName::StaticRobust,
                        StrategyName::MyopicAdaptive,
                        StrategyName::AdaptiveDelta,
                    ]
                },
                measure: TestMeasure::SampledUniformSet,
                record_controls: false,
                histogram_bins: 40,
                constant_control: 0.0,
            },
            output: OutputSection {
                dir: PathBuf::from(if portfolio { "runs/portfolio" } else { "runs/hedging" }),
                diagnostics: false,
            },
        }
    }

    /// Parses a config document, filling missing keys from the problem defaults.
    pub fn parse(text: &str) -> CliResult<Self> {
        let user: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| CliError::Validation(format!("config syntax: {e}")))?;
        for key in user.keys() {
            if !matches!(key.as_str(), "problem" | "solver" | "evaluation" | "output") {
                return Err(CliError::Validation(format!("unknown section `{key}`")));
            }
        }
        let kind = match user.get("problem").and_then(|p| p.get("kind")) {
            None => ProblemName::Portfolio,
            Some(v) => v
                .clone()
                .try_into()
                .map_err(|e| CliError::Validation(format!("problem.kind: {e}")))?,
        };
        let defaults = toml::Table::try_from(RunConfig::default_for(kind))
            .map_err(|e| CliError::Validation(format!("default config: {e}")))?;
        let section = |name: &str| -> CliResult<toml::Value> {
            let mut merged = defaults.get(name).cloned().unwrap_or(toml::Value::Table(Default::default()));
            if let Some(over) = user.get(name) {
                let over = over
                    .as_table()
                    .ok_or_else(|| CliError::Validation(format!("`{name}` must be a section")))?;
                let base = merged.as_table_mut().expect("default sections are tables");
                for (k, v) in over {
                    // A user-supplied measure replaces the default one wholesale.
                    base.insert(k.clone(), v.clone());
                }
            }
            Ok(merged)
        };
        fn typed<T: serde::de::DeserializeOwned>(name: &str, v: toml::Value) -> CliResult<T> {
            v.try_into().map_err(|e: toml::de::Error| {
                CliError::Validation(format!("{name}: {}", e.message().trim()))
            })
        }
        let cfg = RunConfig {
            problem: typed("problem", section("problem")?)?,
            solver: typed("solver", section("solver")?)?,
            evaluation: typed("evaluation", section("evaluation")?)?,
            output: typed("output", section("output")?)?,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("run config serializes to TOML")
    }

    /// Range checks with the offending key in every message.
    pub fn validate(&self) -> CliResult<()> {
        let p = &self.problem;
        let s = &self.solver;
        let e = &self.evaluation;
        let fail = |field: &str, why: &str, got: String| {
            Err(CliError::Validation(format!("{field}: {why}, got {got}")))
        };
        if !(p.dt > 0.0) {
            return fail("problem.dt", "must be > 0", p.dt.to_string());
        }
        if p.steps < 1 {
            return fail("problem.steps", "must be >= 1", p.steps.to_string());
        }
        if !(p.alpha > 0.0 && p.alpha <= 1.0) {
            return fail("problem.alpha", "must be in (0, 1]", p.alpha.to_string());
        }
        if let Some(k) = p.kappa {
            if !(k >= 0.0) || !k.is_finite() {
                return fail("problem.kappa", "must be >= 0", k.to_string());
            }
        }
        if p.k0 < 1 {
            return fail("problem.k0", "must be >= 1", p.k0.to_string());
        }
        if !(p.sigma > 0.0) {
            return fail("problem.sigma", "must be > 0", p.sigma.to_string());
        }
        let [lo, hi] = p.control_domain;
        if !(lo <= hi) {
            return fail("problem.control_domain", "must be an interval", format!("[{lo}, {hi}]"));
        }
        let [rlo, rhi] = p.relaxed_control_domain;
        if !(rlo <= lo && hi <= rhi) {
            return fail(
                "problem.relaxed_control_domain",
                "must contain the control domain",
                format!("[{rlo}, {rhi}]"),
            );
        }
        match p.kind {
            ProblemName::Portfolio => {
                if !(p.gamma > 0.0) || p.gamma == 1.0 {
                    return fail("problem.gamma", "must be > 0 and != 1", p.gamma.to_string());
                }
                if !(p.initial_wealth > 0.0) {
                    return fail("problem.initial_wealth", "must be > 0", p.initial_wealth.to_string());
                }
            }
            ProblemName::Hedging => {
                if !(p.strike > 0.0) {
                    return fail("problem.strike", "must be > 0", p.strike.to_string());
                }
                if !(p.lambda >= 0.0) {
                    return fail("problem.lambda", "must be >= 0", p.lambda.to_string());
                }
                if !(p.initial_price > 0.0) {
                    return fail("problem.initial_price", "must be > 0", p.initial_price.to_string());
                }
                if !p.initial_wealth.is_finite() {
                    return fail("problem.initial_wealth", "must be finite", p.initial_wealth.to_string());
                }
            }
        }
        if s.quadrature_size < 2 {
            return fail("solver.quadrature_size", "must be >= 2", s.quadrature_size.to_string());
        }
        if !(s.tolerance > 0.0) {
            return fail("solver.tolerance", "must be > 0", s.tolerance.to_string());
        }
        if !(s.control_tolerance > 0.0) {
            return fail("solver.control_tolerance", "must be > 0", s.control_tolerance.to_string());
        }
        if !(s.nugget >= 0.0) {
            return fail("solver.nugget", "must be >= 0", s.nugget.to_string());
        }
        if !(s.control_nugget >= 0.0) {
            return fail("solver.control_nugget", "must be >= 0", s.control_nugget.to_string());
        }
        if s.myopic_grid[0] < 1 || s.myopic_grid[1] < 1 {
            return fail("solver.myopic_grid", "needs at least one node per axis", format!("{:?}", s.myopic_grid));
        }
        if e.paths < 1 {
            return fail("evaluation.paths", "must be >= 1", e.paths.to_string());
        }
        if e.histogram_bins < 1 {
            return fail("evaluation.histogram_bins", "must be >= 1", e.histogram_bins.to_string());
        }
        if e.strategies.is_empty() {
            return fail("evaluation.strategies", "must not be empty", "[]".into());
        }
        e.measure
            .validate()
            .map_err(|err| CliError::Validation(format!("evaluation.measure: {err}")))?;
        let spec = self.spec();
        spec.validate().map_err(|err| CliError::Validation(format!("problem: {err}")))?;
        self.solver_config()
            .validate(&spec)
            .map_err(|err| CliError::Validation(format!("solver: {err}")))?;
        Ok(())
    }

    pub fn spec(&self) -> ProblemSpec {
        let p = &self.problem;
        ProblemSpec {
            kind: match p.kind {
                ProblemName::Portfolio => ProblemKind::Portfolio { gamma: p.gamma },
                ProblemName::Hedging => ProblemKind::Hedging {
                    strike: p.strike,
                    loss: LossFunction { lambda: p.lambda },
                },
            },
            r: p.r,
            dt: p.dt,
            steps: p.steps,
            alpha: p.alpha,
            kappa: p.kappa,
            k0: p.k0,
            prior: ModelParams::new(p.mu, p.sigma),
            control_domain: (p.control_domain[0], p.control_domain[1]),
            relaxed_control_domain: (p.relaxed_control_domain[0], p.relaxed_control_domain[1]),
        }
    }

    pub fn solver_config(&self) -> SolverConfig {
        let s = &self.solver;
        SolverConfig {
            formulation: s.formulation.formulation(),
            design: DesignSizes {
                n_pilot: s.n_pilot,
                n_qmc: s.n_qmc,
                n_adaptive: s.n_adaptive,
                n_edge: s.n_edge,
            },
            quadrature_size: s.quadrature_size,
            integrator: s.integrator,
            inner_grid: (s.inner_grid[0], s.inner_grid[1]),
            phi_scan: s.phi_scan,
            u_scan: s.u_scan,
            tolerance: s.tolerance,
            control_tolerance: s.control_tolerance,
            kernel: s.kernel,
            nugget: s.nugget,
            control_nugget: s.control_nugget,
            warm_start: s.warm_start,
            freeze_hyperparameters: s.freeze_hyperparameters,
            flat_threshold: s.flat_threshold,
            wealth_range: (s.wealth_range[0], s.wealth_range[1]),
            seed: s.seed,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_document_is_the_portfolio_default() {
        let cfg = RunConfig::parse("").unwrap();
        assert_eq!(cfg, RunConfig::default_for(ProblemName::Portfolio));
        assert_eq!(cfg.spec(), ProblemSpec::portfolio_default());
        assert_eq!(cfg.solver_config(), SolverConfig::portfolio_default());
    }

    #[test]
    fn hedging_defaults_and_overrides() {
        let cfg = RunConfig::parse("[problem]\nkind = \"hedging\"\nlambda = 0.5\n[solver]\nn_pilot = 150\n").unwrap();
        assert_eq!(cfg.problem.lambda, 0.5);
        assert_eq!(cfg.solver.n_pilot, 150);
        assert_eq!(cfg.solver.quadrature_size, 40);
        assert_eq!(cfg.problem.k0, 150);
    }

    #[test]
    fn echo_round_trips() {
        let cfg = RunConfig::default_for(ProblemName::Hedging);
        assert_eq!(RunConfig::parse(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn errors_name_the_field() {
        let err = RunConfig::parse("[problem]\ngamma = -1\n").unwrap_err();
        assert!(matches!(err, CliError::Validation(_)));
        assert!(err.to_string().contains("problem.gamma"), "{err}");
        let err = RunConfig::parse("[solver]\nquadrature_sise = 3\n").unwrap_err();
        assert!(err.to_string().contains("solver") && err.to_string().contains("quadrature_sise"), "{err}");
        assert!(RunConfig::parse("[extra]\na = 1\n").is_err());
        let err = RunConfig::parse("[evaluation]\nmeasure = { kind = \"fixed\" }\n").unwrap_err();
        assert!(err.to_string().contains("evaluation"), "{err}");
    }
}
