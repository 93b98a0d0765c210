//! On-disk run layout:
//!
//! ```text
//! <dir>/manifest.json
//! <dir>/config.toml
//! <dir>/policies/<strategy>/bundle.json        solver metadata
//! <dir>/policies/<strategy>/step_XX.json       one per interior step
//! <dir>/policies/myopic_adaptive/table.json    hedging only, with node_XX/ bundles
//! <dir>/diagnostics/<strategy>/design_step_XX.csv
//! <dir>/reports/<strategy>.json, _paths.csv, _histogram.csv
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use robustbell::dynamics::{ModelParams, ProblemSpec};
use robustbell::evaluator::{MyopicTable, ThetaInterpolator};
use robustbell::numerics::QuadratureRule;
use robustbell::solver::{FeatureMap, PolicyBundle, SolverConfig, StepSolution, TerminalCondition};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub seed: u64,
    pub config: RunConfig,
    /// Policy directory name to solver wall time in seconds.
    pub timings: BTreeMap<String, f64>,
}

impl Manifest {
    pub fn check_version(&self) -> CliResult<()> {
        let major_minor = |v: &str| v.split('.').take(2).collect::<Vec<_>>().join(".");
        if major_minor(&self.version) != major_minor(VERSION) {
            return Err(CliError::Validation(format!(
                "artifact written by version {}, this is {VERSION}",
                self.version
            )));
        }
        Ok(())
    }
}

#[derive(Serialize, Deserialize)]
struct BundleMeta {
    spec: ProblemSpec,
    config: SolverConfig,
    features: FeatureMap,
    terminal: TerminalCondition,
    quadrature: QuadratureRule,
    steps: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct TableMeta {
    grid: [usize; 2],
    nodes: Vec<ModelParams>,
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    let mut text = serde_json::to_string_pretty(value).map_err(|e| CliError::io(path, e))?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> CliResult<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> CliResult<T> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| CliError::io(path, e))
}

pub fn manifest_path(dir: &Path) -> PathBuf {
    dir.join("manifest.json")
}

pub fn policy_dir(dir: &Path, name: &str) -> PathBuf {
    dir.join("policies").join(name)
}

pub fn reports_dir(dir: &Path) -> PathBuf {
    dir.join("reports")
}

pub fn load_manifest(dir: &Path) -> CliResult<Manifest> {
    let path = manifest_path(dir);
    if !path.exists() {
        return Err(CliError::Io(format!("no run artifact at {}", dir.display())));
    }
    let m: Manifest = read_json(&path)?;
    m.check_version()?;
    Ok(m)
}

pub fn save_bundle(dir: &Path, bundle: &PolicyBundle) -> CliResult<()> {
    let meta = BundleMeta {
        spec: bundle.spec.clone(),
        config: bundle.config.clone(),
        features: bundle.features,
        terminal: bundle.terminal,
        quadrature: bundle.quadrature.clone(),
        steps: bundle.steps.iter().map(|s| s.k).collect(),
    };
    write_json(&dir.join("bundle.json"), &meta)?;
    for step in &bundle.steps {
        write_json(&dir.join(format!("step_{:02}.json", step.k)), step)?;
    }
    Ok(())
}

pub fn load_bundle(dir: &Path) -> CliResult<PolicyBundle> {
    let meta: BundleMeta = read_json(&dir.join("bundle.json"))?;
    let steps = meta
        .steps
        .iter()
        .map(|k| read_json::<StepSolution>(&dir.join(format!("step_{k:02}.json"))))
        .collect::<CliResult<Vec<_>>>()?;
    Ok(PolicyBundle {
        spec: meta.spec,
        config: meta.config,
        features: meta.features,
        terminal: meta.terminal,
        quadrature: meta.quadrature,
        steps,
    })
}

pub fn save_table(dir: &Path, table: &MyopicTable, grid: [usize; 2]) -> CliResult<()> {
    if let MyopicTable::Hedging { bundles, interpolator } = table {
        let meta = TableMeta {
            grid,
            nodes: interpolator.nodes().to_vec(),
        };
        write_json(&dir.join("table.json"), &meta)?;
        for (i, b) in bundles.iter().enumerate() {
            save_bundle(&dir.join(format!("node_{i:02}")), b)?;
        }
    }
    Ok(())
}

pub fn load_table(dir: &Path) -> CliResult<MyopicTable> {
    let meta: TableMeta = read_json(&dir.join("table.json"))?;
    let bundles = (0..meta.nodes.len())
        .map(|i| load_bundle(&dir.join(format!("node_{i:02}"))).map(Arc::new))
        .collect::<CliResult<Vec<_>>>()?;
    let interpolator = ThetaInterpolator::new(meta.nodes, (meta.grid[0], meta.grid[1]))?;
    Ok(MyopicTable::Hedging { bundles, interpolator })
}
