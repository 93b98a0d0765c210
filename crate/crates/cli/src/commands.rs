use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use robustbell::dynamics::{AugmentedState, Beliefs, ProblemKind, ProblemSpec};
use robustbell::evaluator::{
    evaluate, myopic_adaptive_table, quantile_sorted, EvalOptions, EvalReport, MyopicTable, StrategyKind,
    StrategyName, Summary,
};
use robustbell::numerics::gaussian_rule;
use robustbell::solver::{
    macro_replicate, solve_with_diagnostics, DesignSizes, Formulation, PolicyBundle, SolverConfig,
};
use serde::{Deserialize, Serialize};

use crate::artifact::{
    load_bundle, load_manifest, load_table, policy_dir, reports_dir, save_bundle, save_table, write_json,
    write_text, Manifest, VERSION,
};
use crate::config::{EvaluationSection, ProblemSection, RunConfig};
use crate::error::{CliError, CliResult};

pub fn strategy_label(s: StrategyName) -> &'static str {
    match s {
        StrategyName::AdaptiveRobust => "adaptive_robust",
        StrategyName::StaticRobust => "static_robust",
        StrategyName::MyopicAdaptive => "myopic_adaptive",
        StrategyName::AdaptiveDelta => "adaptive_delta",
        StrategyName::MertonStatic => "merton_static",
        StrategyName::Constant => "constant",
    }
}

/// Starting state of every forward path.
pub fn initial_state(cfg: &RunConfig) -> AugmentedState {
    let spec = cfg.spec();
    let p = &cfg.problem;
    if spec.is_portfolio() {
        AugmentedState::portfolio(p.initial_wealth, spec.initial_beliefs(), 0)
    } else {
        AugmentedState::hedging(p.initial_price, p.initial_wealth, spec.initial_beliefs(), 0)
    }
}

fn solve_policy(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    out: &Path,
    name: &str,
    diagnostics: bool,
) -> CliResult<PolicyBundle> {
    let diag = diagnostics.then(|| out.join("diagnostics").join(name));
    log::info!("solving {name}");
    Ok(solve_with_diagnostics(spec, cfg, diag.as_deref())?)
}

/// Solves every policy the configured strategies need and writes the artifact.
pub fn cmd_solve(cfg: &RunConfig, out: &Path, diagnostics: bool) -> CliResult<Manifest> {
    cfg.validate()?;
    let spec = cfg.spec();
    let solver = cfg.solver_config();
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut timings = BTreeMap::new();
    let mut wanted = cfg.evaluation.strategies.clone();
    wanted.dedup();
    for s in wanted {
        let name = strategy_label(s);
        let started = Instant::now();
        match s {
            StrategyName::AdaptiveRobust => {
                let b = solve_policy(&spec, &solver, out, name, diagnostics)?;
                save_bundle(&policy_dir(out, name), &b)?;
            }
            StrategyName::StaticRobust => {
                let sr = SolverConfig {
                    formulation: Formulation::StaticRobust,
                    ..solver.clone()
                };
                let b = solve_policy(&spec, &sr, out, name, diagnostics)?;
                save_bundle(&policy_dir(out, name), &b)?;
            }
            StrategyName::MyopicAdaptive if !spec.is_portfolio() => {
                let node_cfg = SolverConfig {
                    freeze_hyperparameters: true,
                    ..solver.clone()
                };
                let grid = cfg.solver.myopic_grid;
                let table = myopic_adaptive_table(&spec, (grid[0], grid[1]), &node_cfg)?;
                save_table(&policy_dir(out, name), &table, grid)?;
            }
            _ => continue,
        }
        timings.insert(name.to_string(), started.elapsed().as_secs_f64());
    }
    let manifest = Manifest {
        version: VERSION.to_string(),
        seed: cfg.solver.seed,
        config: cfg.clone(),
        timings,
    };
    write_text(&out.join("config.toml"), &cfg.to_toml())?;
    write_json(&crate::artifact::manifest_path(out), &manifest)?;
    Ok(manifest)
}

/// JSON summary written next to each evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportSummary {
    pub strategy: String,
    pub seed: u64,
    pub paths: usize,
    pub summary: Summary,
    pub problem: ProblemSection,
    pub evaluation: EvaluationSection,
}

fn load_strategy(dir: &Path, cfg: &RunConfig, s: StrategyName) -> CliResult<StrategyKind> {
    let spec = cfg.spec();
    let missing = |name: &str| {
        CliError::Io(format!(
            "policy `{name}` is not in {}; list it in evaluation.strategies when solving",
            dir.display()
        ))
    };
    let bundle = |name: &str| -> CliResult<Arc<PolicyBundle>> {
        let d = policy_dir(dir, name);
        if !d.exists() {
            return Err(missing(name));
        }
        Ok(Arc::new(load_bundle(&d)?))
    };
    Ok(match s {
        StrategyName::AdaptiveRobust => StrategyKind::AdaptiveRobust(bundle("adaptive_robust")?),
        StrategyName::StaticRobust => StrategyKind::StaticRobust(bundle("static_robust")?),
        StrategyName::MyopicAdaptive => match spec.kind {
            ProblemKind::Portfolio { gamma } => {
                StrategyKind::MyopicAdaptive(Arc::new(MyopicTable::Merton { r: spec.r, gamma }))
            }
            ProblemKind::Hedging { .. } => {
                let d = policy_dir(dir, "myopic_adaptive");
                if !d.exists() {
                    return Err(missing("myopic_adaptive"));
                }
                StrategyKind::MyopicAdaptive(Arc::new(load_table(&d)?))
            }
        },
        StrategyName::AdaptiveDelta => StrategyKind::AdaptiveDelta,
        StrategyName::MertonStatic => StrategyKind::MertonStatic(spec.prior),
        StrategyName::Constant => StrategyKind::Constant(cfg.evaluation.constant_control),
    })
}

/// Evaluates the requested strategies of a solved artifact. `evaluation`
/// replaces the manifest's evaluation section; `seed` overrides its seed.
/// Reports go to `out` or to the artifact's `reports/` directory.
pub fn cmd_evaluate(
    dir: &Path,
    evaluation: Option<EvaluationSection>,
    seed: Option<u64>,
    out: Option<&Path>,
) -> CliResult<Vec<EvalReport>> {
    let manifest = load_manifest(dir)?;
    let mut cfg = manifest.config;
    if let Some(e) = evaluation {
        cfg.evaluation = e;
    }
    if let Some(s) = seed {
        cfg.evaluation.seed = s;
    }
    cfg.validate()?;
    let spec = cfg.spec();
    let x0 = initial_state(&cfg);
    let ev = &cfg.evaluation;
    let opts = EvalOptions {
        paths: ev.paths,
        seed: ev.seed,
        record_controls: ev.record_controls,
        histogram_bins: ev.histogram_bins,
    };
    let out = out.map(Path::to_path_buf).unwrap_or_else(|| reports_dir(dir));
    let mut reports = Vec::with_capacity(ev.strategies.len());
    for &s in &ev.strategies {
        let strategy = load_strategy(dir, &cfg, s)?;
        let name = strategy_label(s);
        let started = Instant::now();
        let report = evaluate(&spec, &strategy, &ev.measure, &x0, &opts)?;
        log::info!(
            "{name}: mean {:.4}, V0 {:.4}, {:.1}s",
            report.summary.mean,
            report.summary.v0,
            started.elapsed().as_secs_f64()
        );
        let summary = ReportSummary {
            strategy: name.to_string(),
            seed: ev.seed,
            paths: ev.paths,
            summary: report.summary.clone(),
            problem: cfg.problem.clone(),
            evaluation: ev.clone(),
        };
        write_json(&out.join(format!("{name}.json")), &summary)?;
        write_text(&out.join(format!("{name}_paths.csv")), &report.paths_csv())?;
        write_text(&out.join(format!("{name}_histogram.csv")), &report.histogram.to_csv())?;
        if let Some(controls) = &report.controls {
            let mut csv = String::from("path,step,control\n");
            for (p, us) in controls.iter().enumerate() {
                for (k, u) in us.iter().enumerate() {
                    let _ = writeln!(csv, "{p},{k},{u}");
                }
            }
            write_text(&out.join(format!("{name}_controls.csv")), &csv)?;
        }
        reports.push(report);
    }
    Ok(reports)
}

fn same_up_to_lambda(a: &ProblemSection, b: &ProblemSection) -> bool {
    let mut b = b.clone();
    b.lambda = a.lambda;
    *a == b
}

/// Combines evaluated artifacts into one table with a row per method and
/// loss asymmetry: `method,lambda,mean,std,q95,V0`.
pub fn cmd_compare(dirs: &[PathBuf], lambdas: Option<&[f64]>) -> CliResult<String> {
    if dirs.len() < 2 {
        return Err(CliError::Validation("need ≥ 2 artifacts".into()));
    }
    let manifests = dirs.iter().map(|d| load_manifest(d)).collect::<CliResult<Vec<_>>>()?;
    let first = &manifests[0].config.problem;
    for (d, m) in dirs.iter().zip(&manifests).skip(1) {
        if !same_up_to_lambda(first, &m.config.problem) {
            return Err(CliError::Validation(format!(
                "inconsistent problem specs: {} differs from {} beyond lambda",
                d.display(),
                dirs[0].display()
            )));
        }
    }
    let lambdas: Vec<f64> = match lambdas {
        Some(l) => l.to_vec(),
        None => manifests.iter().map(|m| m.config.problem.lambda).collect(),
    };
    let mut columns = Vec::with_capacity(lambdas.len());
    for &l in &lambdas {
        let hits: Vec<usize> = (0..dirs.len())
            .filter(|&i| manifests[i].config.problem.lambda == l)
            .collect();
        match hits.as_slice() {
            [i] => columns.push(*i),
            [] => return Err(CliError::Validation(format!("no artifact with lambda = {l}"))),
            _ => return Err(CliError::Validation(format!("several artifacts with lambda = {l}"))),
        }
    }
    let methods: Vec<StrategyName> = manifests[columns[0]].config.evaluation.strategies.clone();
    let mut out = String::from("method,lambda,mean,std,q95,V0\n");
    for &s in &methods {
        let name = strategy_label(s);
        for (&l, &i) in lambdas.iter().zip(&columns) {
            let path = reports_dir(&dirs[i]).join(format!("{name}.json"));
            if !path.exists() {
                return Err(CliError::Io(format!("missing report {}", path.display())));
            }
            let r: ReportSummary = crate::artifact::read_json(&path)?;
            let sm = &r.summary;
            let std = sm.std.map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(out, "{name},{l},{},{std},{},{}", sm.mean, sm.q95, sm.v0);
        }
    }
    Ok(out)
}

/// Design sizes with `n` sites per step, keeping the default proportions.
pub fn scaled_design(spec: &ProblemSpec, base: &DesignSizes, n: usize) -> DesignSizes {
    if spec.is_portfolio() {
        let n_qmc = (0.7 * n as f64).round() as usize;
        DesignSizes {
            n_qmc,
            n_adaptive: n - n_qmc,
            ..*base
        }
    } else {
        DesignSizes {
            n_pilot: n,
            n_qmc: (0.4 * n as f64).round() as usize,
            n_adaptive: 0,
            n_edge: (0.1 * n as f64).round() as usize,
        }
    }
}

/// Portfolio: beliefs at `t = 0.8` with `sigma_bar^2 = 0.01` over a drift grid.
/// Hedging: prior beliefs at mid-horizon over a price grid around the strike.
pub fn default_probes(cfg: &RunConfig) -> Vec<AugmentedState> {
    let spec = cfg.spec();
    let last = spec.steps.saturating_sub(1).max(1);
    match spec.kind {
        ProblemKind::Portfolio { .. } => {
            let k = ((0.8 / spec.dt).round() as usize).clamp(1, last);
            (0..7)
                .map(|i| {
                    let b = Beliefs::new(0.05 * i as f64, 0.1, spec.n_eff_at(k));
                    AugmentedState::portfolio(1.0, b, k)
                })
                .collect()
        }
        ProblemKind::Hedging { strike, .. } => {
            let k = (spec.steps / 2).clamp(1, last);
            let b = Beliefs::new(spec.prior.mu, spec.prior.sigma, spec.n_eff_at(k));
            [0.8, 0.9, 1.0, 1.1, 1.2]
                .iter()
                .map(|m| AugmentedState::hedging(m * strike, cfg.problem.initial_wealth, b, k))
                .collect()
        }
    }
}

/// Output of [`cmd_stability`]: every replicated control and a five-number
/// summary per probe and design size.
pub struct StabilityReport {
    pub rows_csv: String,
    pub boxplot_csv: String,
}

fn probe_columns(x: &AugmentedState) -> String {
    format!(
        "{},{},{},{}",
        x.k,
        x.beliefs.mu_bar,
        x.beliefs.sigma_bar,
        x.market.price().map(|s| s.to_string()).unwrap_or_default()
    )
}

pub fn cmd_stability(cfg: &RunConfig, reps: usize, sizes: &[usize]) -> CliResult<StabilityReport> {
    cfg.validate()?;
    if sizes.is_empty() {
        return Err(CliError::Validation("stability needs at least one design size".into()));
    }
    let spec = cfg.spec();
    let base = cfg.solver_config();
    let probes = default_probes(cfg);
    let mut rows = String::from("n,probe,k,mu_bar,sigma_bar,price,rep,control\n");
    let mut boxes = String::from("n,probe,k,mu_bar,sigma_bar,price,min,q25,median,q75,max\n");
    for &n in sizes {
        let solver = SolverConfig {
            design: scaled_design(&spec, &base.design, n),
            ..base.clone()
        };
        let us = macro_replicate(&spec, &solver, reps, &probes)?;
        for (j, x) in probes.iter().enumerate() {
            let cols = probe_columns(x);
            let mut vals: Vec<f64> = us.iter().map(|rep| rep[j]).collect();
            for (r, u) in vals.iter().enumerate() {
                let _ = writeln!(rows, "{n},{j},{cols},{r},{u}");
            }
            vals.sort_by(f64::total_cmp);
            let q = |p| quantile_sorted(&vals, p);
            let _ = writeln!(
                boxes,
                "{n},{j},{cols},{},{},{},{},{}",
                q(0.0),
                q(0.25),
                q(0.5),
                q(0.75),
                q(1.0)
            );
        }
    }
    Ok(StabilityReport {
        rows_csv: rows,
        boxplot_csv: boxes,
    })
}

pub fn cmd_quantizer(size: usize) -> CliResult<String> {
    Ok(gaussian_rule::<f64>(size)?.to_csv())
}
