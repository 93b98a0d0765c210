use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use robustbell_cli::artifact::write_text;
use robustbell_cli::{cmd_compare, cmd_evaluate, cmd_quantizer, cmd_solve, cmd_stability, CliError, CliResult, RunConfig};

#[derive(Parser)]
#[command(name = "robustbell", version, about = "Adaptive robust control with GP surrogates")]
struct Cli {
    /// Worker threads for the solver and evaluator.
    #[arg(long, global = true, env = "ROBUSTBELL_THREADS")]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured policies and write a run artifact.
    Solve {
        #[arg(long)]
        config: PathBuf,
        /// Artifact directory; defaults to `output.dir` of the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Write per-step design CSVs.
        #[arg(long)]
        diagnostics: bool,
    },
    /// Forward-evaluate the strategies of a solved artifact.
    Evaluate {
        #[arg(long)]
        artifact: PathBuf,
        /// Config whose `[evaluation]` section replaces the artifact's.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Combine evaluated artifacts that differ only in the loss asymmetry.
    Compare {
        #[arg(long, num_args = 1.., required = true)]
        artifacts: Vec<PathBuf>,
        #[arg(long, value_delimiter = ',')]
        lambdas: Option<Vec<f64>>,
        /// CSV destination; stdout if absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Macro-replicate the solver across design sizes.
    Stability {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 10)]
        reps: usize,
        #[arg(long, value_delimiter = ',', default_value = "100,250")]
        sizes: Vec<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Dump the Gauss-Hermite rule of a given size as CSV.
    Quantizer {
        #[arg(long)]
        size: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(config: &PathBuf, seed: Option<u64>) -> CliResult<RunConfig> {
    let mut cfg = RunConfig::load(config)?;
    if let Some(s) = seed {
        cfg.solver.seed = s;
    }
    Ok(cfg)
}

fn emit(text: &str, out: Option<&PathBuf>) -> CliResult<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> CliResult<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Validation("--threads must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Validation(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Solve { config, out, seed, diagnostics } => {
            let cfg = load(&config, seed)?;
            let out = out.unwrap_or_else(|| cfg.output.dir.clone());
            let manifest = cmd_solve(&cfg, &out, diagnostics || cfg.output.diagnostics)?;
            for (name, secs) in &manifest.timings {
                println!("{name}: solved in {secs:.1}s");
            }
            println!("artifact written to {}", out.display());
        }
        Command::Evaluate { artifact, config, out, seed } => {
            let evaluation = match config {
                Some(p) => Some(RunConfig::load(&p)?.evaluation),
                None => None,
            };
            for r in cmd_evaluate(&artifact, evaluation, seed, out.as_deref())? {
                let s = &r.summary;
                println!(
                    "{:<16} mean {:>12.6} std {:>12.6} q95 {:>12.6} V0 {:>12.6}",
                    r.strategy,
                    s.mean,
                    s.std.unwrap_or(f64::NAN),
                    s.q95,
                    s.v0
                );
            }
        }
        Command::Compare { artifacts, lambdas, out } => {
            let table = cmd_compare(&artifacts, lambdas.as_deref())?;
            emit(&table, out.as_ref())?;
        }
        Command::Stability { config, reps, sizes, out, seed } => {
            let cfg = load(&config, seed)?;
            let report = cmd_stability(&cfg, reps, &sizes)?;
            let out = out.unwrap_or_else(|| cfg.output.dir.join("stability"));
            write_text(&out.join("replications.csv"), &report.rows_csv)?;
            write_text(&out.join("boxplot.csv"), &report.boxplot_csv)?;
            println!("stability tables written to {}", out.display());
        }
        Command::Quantizer { size, out } => emit(&cmd_quantizer(size)?, out.as_ref())?,
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
