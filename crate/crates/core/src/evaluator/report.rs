use serde::{Deserialize, Serialize};

use crate::dynamics::ModelParams;
use crate::error::{Error, Result};

/// Summary statistics of per-path terminal values and objectives.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub count: usize,
    pub mean: f64,
    /// Sample standard deviation; absent for a single path.
    pub std: Option<f64>,
    pub q95: f64,
    /// Mean objective: mean loss for hedging, mean utility for the portfolio.
    #[serde(rename = "V0")]
    pub v0: f64,
    /// Monte Carlo estimate of the value of the evaluated policy.
    pub lower_bound: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Histogram {
    pub edges: Vec<f64>,
    pub counts: Vec<usize>,
}

impl Histogram {
    pub fn build(values: &[f64], bins: usize) -> Self {
        let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (lo, hi) = if hi > lo {
            (lo, hi)
        } else {
            (lo - 0.5, lo + 0.5)
        };
        let width = (hi - lo) / bins as f64;
        let edges = (0..=bins).map(|i| lo + width * i as f64).collect();
        let mut counts = vec![0; bins];
        for v in values {
            let i = (((v - lo) / width) as usize).min(bins - 1);
            counts[i] += 1;
        }
        Histogram { edges, counts }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("lower,upper,count\n");
        for (i, c) in self.counts.iter().enumerate() {
            out.push_str(&format!("{},{},{}\n", self.edges[i], self.edges[i + 1], c));
        }
        out
    }
}

/// Output of a forward evaluation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub strategy: String,
    pub seed: u64,
    /// `W_T` for the portfolio, `H = payoff - W_T` for hedging.
    pub terminal: Vec<f64>,
    /// Utility or loss per path.
    pub objective: Vec<f64>,
    pub thetas: Vec<ModelParams>,
    /// Per-path control sequences when requested.
    pub controls: Option<Vec<Vec<f64>>>,
    pub summary: Summary,
    pub histogram: Histogram,
}

impl EvalReport {
    pub fn paths_csv(&self) -> String {
        let mut out = String::from("path,terminal,objective,mu_star,sigma_star\n");
        for (i, ((t, o), th)) in self
            .terminal
            .iter()
            .zip(&self.objective)
            .zip(&self.thetas)
            .enumerate()
        {
            out.push_str(&format!("{i},{t},{o},{},{}\n", th.mu, th.sigma));
        }
        out
    }
}

/// Linearly interpolated quantile of ascending `sorted` (nonempty).
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * q;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Mean, sample std (n-1), linearly interpolated 95% quantile of `terminal`
/// and the mean of `objective`.
pub fn report_stats(terminal: &[f64], objective: &[f64]) -> Result<Summary> {
    if terminal.is_empty() || objective.len() != terminal.len() {
        return Err(Error::invalid(
            "statistics need at least one path with matching objective values",
        ));
    }
    let n = terminal.len() as f64;
    let mean = terminal.iter().sum::<f64>() / n;
    let std = (terminal.len() > 1)
        .then(|| (terminal.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt());
    let mut sorted = terminal.to_vec();
    sorted.sort_by(f64::total_cmp);
    let v0 = objective.iter().sum::<f64>() / n;
    Ok(Summary {
        count: terminal.len(),
        mean,
        std,
        q95: quantile_sorted(&sorted, 0.95),
        v0,
        lower_bound: v0,
    })
}
