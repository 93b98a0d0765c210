use std::borrow::Cow;
use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use super::bundle::{
    FeatureMap, NextValue, PolicyBundle, SiteRecord, StepSolution, TerminalCondition,
};
use super::config::{IntegratorKind, SolverConfig};
use super::design::{build_design_hedging, build_design_portfolio, simulate_pilots, Design};
use super::optimize::{outer_optimize, OuterResult, StepContext};
use crate::dynamics::{AugmentedState, ProblemKind, ProblemSpec};
use crate::error::{Error, Result};
use crate::evaluator::bs_price;
use crate::gp::{fit, FitOptions, KernelSpec, PriorMean};
use crate::numerics::{gaussian_rule, standard_normal_samples, QuadratureRule};
use crate::rng::{stream, stream_seed};

/// Scale used to turn the relative flat threshold into an absolute one:
/// the initial at-the-money option price for hedging, 1 for the portfolio.
pub fn price_scale(spec: &ProblemSpec) -> Result<f64> {
    match spec.kind {
        ProblemKind::Portfolio { .. } => Ok(1.0),
        ProblemKind::Hedging { strike, .. } => bs_price(
            0.0,
            strike,
            strike,
            spec.r,
            spec.prior.sigma,
            spec.horizon(),
        ),
    }
}

/// Shock rule for one site: the shared quadrature, or that site's own Monte
/// Carlo draws reused for every control and parameter it evaluates.
pub fn site_rule<'a>(
    cfg: &SolverConfig,
    rule: &'a QuadratureRule,
    k: usize,
    site: usize,
) -> Result<Cow<'a, QuadratureRule>> {
    match cfg.integrator {
        IntegratorKind::Quadrature => Ok(Cow::Borrowed(rule)),
        IntegratorKind::MonteCarlo => {
            let mut rng = stream(cfg.seed, "mc-shocks", ((k as u64) << 32) | site as u64);
            let draws: Vec<f64> = standard_normal_samples(cfg.quadrature_size, &mut rng);
            Ok(Cow::Owned(QuadratureRule::from_samples(draws)?))
        }
    }
}

/// Runs the outer optimization at every site of `design` in parallel.
pub fn optimize_design(
    design: &Design,
    ctx: &StepContext,
    cfg: &SolverConfig,
    rule: &QuadratureRule,
) -> Result<Vec<OuterResult>> {
    design
        .sites
        .par_iter()
        .enumerate()
        .map(|(i, x)| {
            let local = site_rule(cfg, rule, design.k, i)?;
            outer_optimize(x, ctx, &local).map_err(|e| e.at_site(design.k, i))
        })
        .collect()
}

struct Hyper {
    value: KernelSpec,
    control: KernelSpec,
}

fn fit_options(
    cfg: &SolverConfig,
    nugget: f64,
    prior: PriorMean,
    prev: Option<&KernelSpec>,
) -> FitOptions {
    FitOptions {
        family: cfg.kernel,
        init: if cfg.warm_start || cfg.freeze_hyperparameters {
            prev.cloned()
        } else {
            None
        },
        freeze: cfg.freeze_hyperparameters && prev.is_some(),
        prior,
        nugget,
        ..FitOptions::default()
    }
}

fn fit_step(
    design: Design,
    results: Vec<OuterResult>,
    features: FeatureMap,
    cfg: &SolverConfig,
    hyper: &mut Option<Hyper>,
) -> Result<StepSolution> {
    let x: Vec<Vec<f64>> = design.sites.iter().map(|s| features.features(s)).collect();
    let v: Vec<f64> = results.iter().map(|r| r.value).collect();
    let u: Vec<f64> = results.iter().map(|r| r.u).collect();
    let value = fit(
        &x,
        &v,
        &fit_options(cfg, cfg.nugget, PriorMean::OutputMean, hyper.as_ref().map(|h| &h.value)),
    )?;
    let control = fit(
        &x,
        &u,
        &fit_options(
            cfg,
            cfg.control_nugget,
            PriorMean::Constant(0.0),
            hyper.as_ref().map(|h| &h.control),
        ),
    )?;
    *hyper = Some(Hyper {
        value: value.kernel().clone(),
        control: control.kernel().clone(),
    });
    let sites = design
        .sites
        .into_iter()
        .zip(design.provenance)
        .zip(results)
        .map(|((state, provenance), r)| SiteRecord {
            state,
            provenance,
            value: r.value,
            control: r.u,
            worst_case: r.worst_case,
        })
        .collect();
    Ok(StepSolution {
        k: design.k,
        value,
        control,
        sites,
    })
}

/// Backward recursion: builds designs, optimizes every site and fits the
/// value and control surrogates for `k = K-1, ..., 1`.
pub fn solve(spec: &ProblemSpec, cfg: &SolverConfig) -> Result<PolicyBundle> {
    solve_with_diagnostics(spec, cfg, None)
}

/// As [`solve`], writing one design CSV per step into `diagnostics` if given.
pub fn solve_with_diagnostics(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    diagnostics: Option<&Path>,
) -> Result<PolicyBundle> {
    spec.validate()?;
    cfg.validate(spec)?;
    let rule = gaussian_rule(cfg.quadrature_size)?;
    let features = FeatureMap::for_problem(spec, &cfg.formulation);
    let terminal = TerminalCondition::of(spec);
    let flat = cfg.flat_threshold * price_scale(spec)?;
    let mut steps: Vec<StepSolution> = Vec::with_capacity(spec.steps.saturating_sub(1));
    if spec.steps >= 2 {
        let pilots = simulate_pilots(spec, &cfg.design, cfg.seed)?;
        if let Some(dir) = diagnostics {
            std::fs::create_dir_all(dir)?;
        }
        let mut hyper = None;
        for k in (1..spec.steps).rev() {
            let started = std::time::Instant::now();
            let design = if spec.is_portfolio() {
                build_design_portfolio(k, &pilots, steps.last(), &cfg.design, spec)
            } else {
                build_design_hedging(k, &pilots, &cfg.design, spec, cfg)
            }
            .map_err(|e| e.at_step(k))?;
            let next = match steps.last() {
                None => NextValue::Terminal(terminal),
                Some(prev) => NextValue::Surrogate {
                    gp: &prev.value,
                    features,
                },
            };
            let ctx = StepContext::new(spec, cfg, next, flat);
            let results = optimize_design(&design, &ctx, cfg, &rule)?;
            let step =
                fit_step(design, results, features, cfg, &mut hyper).map_err(|e| e.at_step(k))?;
            log::info!(
                "step {k}: {} sites, value lml {:.3}, control lml {:.3}, {:.2}s",
                step.sites.len(),
                step.value.log_marginal_likelihood(),
                step.control.log_marginal_likelihood(),
                started.elapsed().as_secs_f64()
            );
            if let Some(dir) = diagnostics {
                std::fs::write(
                    dir.join(format!("design_step_{k:02}.csv")),
                    design_csv(&step, features),
                )?;
            }
            steps.push(step);
        }
        steps.reverse();
    }
    Ok(PolicyBundle {
        spec: spec.clone(),
        config: cfg.clone(),
        features,
        terminal,
        quadrature: rule,
        steps,
    })
}

/// Per-site diagnostics: coordinates, provenance, value, control and worst case.
pub fn design_csv(step: &StepSolution, features: FeatureMap) -> String {
    let mut out = String::from("site,provenance,");
    for name in features.names() {
        out.push_str(name);
        out.push(',');
    }
    out.push_str("value,control,phi_check,rho_check,mu_check,sigma_check\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for (i, s) in step.sites.iter().enumerate() {
        let _ = write!(out, "{i},{},", s.provenance.as_str());
        for f in features.features(&s.state) {
            let _ = write!(out, "{f},");
        }
        let w = &s.worst_case;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            s.value,
            s.control,
            opt(w.phi),
            opt(w.rho),
            w.mu,
            w.sigma
        );
    }
    out
}

/// Re-runs [`solve`] with `reps` derived seeds and reports the projected
/// control at each probe state (`probes[i].k >= 1`) per replication.
pub fn macro_replicate(
    spec: &ProblemSpec,
    cfg: &SolverConfig,
    reps: usize,
    probes: &[AugmentedState],
) -> Result<Vec<Vec<f64>>> {
    if reps < 2 {
        return Err(Error::invalid("macro replication needs at least 2 reps"));
    }
    (0..reps)
        .map(|r| {
            let cfg = SolverConfig {
                seed: stream_seed(cfg.seed, "macro-rep", r as u64),
                ..cfg.clone()
            };
            let bundle = solve(spec, &cfg).map_err(|e| Error::Replication {
                rep: r,
                source: Box::new(e),
            })?;
            probes.iter().map(|p| bundle.control_at(p)).collect()
        })
        .collect()
}
