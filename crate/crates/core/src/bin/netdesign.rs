use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use netdesign::experiment::{parse_config, run_experiment, summarize, ExperimentKind, ResultStore};
use netdesign::{Error, Result};

#[derive(Parser)]
#[command(name = "netdesign", version, about = "Design and evaluation of network sampling experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct RunArgs {
    /// Experiment configuration (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the number of replicates.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output directory; defaults to `<store>/<run id>`.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Result store directory holding `runs.jsonl`.
    #[arg(long, default_value = "results")]
    store: PathBuf,
    /// Worker threads; 0 uses every core.
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Use exhaustive posterior draws and add exact scores.
    #[arg(long)]
    exact: bool,
    /// Allow full-scale configurations that take hours.
    #[arg(long)]
    extended: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Lindley design loss of every candidate.
    Compare(RunArgs),
    /// Frequentist risk at fixed parameters.
    Risk(RunArgs),
    /// Data-compression score of every candidate.
    CompressScore(RunArgs),
    /// Entropy of graph models and the implied compression bounds.
    Entropy(RunArgs),
    /// Two-stage RDS optimisation by backward induction.
    Sequential(RunArgs),
    /// Distribution-equivalence checks of the design-order relations.
    Suffcheck(RunArgs),
    /// Rank designs across stored runs.
    Summarize {
        #[arg(long, default_value = "results")]
        store: PathBuf,
        /// Run ids, comma separated or repeated.
        #[arg(long, value_delimiter = ',', required = true)]
        ids: Vec<String>,
        /// Column to sort by, such as `SL(P)` or `DC`; defaults to the first.
        #[arg(long)]
        criterion: Option<String>,
        /// Interval half-width in standard errors for tie flags.
        #[arg(long, default_value_t = 2.0)]
        z: f64,
        /// Where to write the ranking CSV; defaults to `<store>/ranking.csv`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

/// Replicate budget above which `--extended` is required.
const DESK_BUDGET: usize = 20_000_000;

fn run(kind: ExperimentKind, a: RunArgs) -> Result<()> {
    let mut cfg = parse_config(&a.config)?;
    if cfg.kind != kind {
        return Err(Error::Config(vec![format!(
            "kind: the file declares {}, the subcommand runs {}",
            cfg.kind.as_str(),
            kind.as_str()
        )]));
    }
    if let Some(s) = a.seed {
        cfg.seed = s;
    }
    if let Some(k) = a.replicates {
        cfg.replicates = k;
    }
    if a.exact {
        cfg.exact = true;
    }
    let problems = cfg.problems();
    if !problems.is_empty() {
        return Err(Error::Config(problems));
    }
    let work = cfg.replicates * cfg.designs.len().max(1) * cfg.n_total * cfg.inference.n_draws.max(1);
    if work > DESK_BUDGET && !a.extended {
        return Err(Error::Parameter(format!(
            "this configuration is full-scale ({} replicates, N = {}); rerun with --extended",
            cfg.replicates, cfg.n_total
        )));
    }
    let store = ResultStore::open(&a.store)?;
    let out = a
        .out
        .or_else(|| cfg.out.clone().map(PathBuf::from))
        .unwrap_or_else(|| store.dir().join(cfg.run_id()));
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(a.threads)
        .build()
        .map_err(|e| Error::Parameter(e.to_string()))?;
    let report = pool.install(|| run_experiment(&cfg, &out))?;
    store.append(&report)?;
    println!("run {} written to {}", report.run_id, out.display());
    for r in &report.rows {
        let main: Vec<String> =
            r.metrics.iter().map(|m| format!("{} {:.5} ± {:.5}", m.criterion, m.value.mean, m.value.se)).collect();
        println!("  {:<40} {}{}", r.design, main.join("  "), if r.tie { "  (tie)" } else { "" });
    }
    for e in &report.entropy {
        println!("  {:<40} H = {:.4} {}  bound [{:.4}, {:.4})", e.model, e.entropy, e.unit, e.lower, e.upper);
    }
    for s in &report.suffcheck {
        println!(
            "  {:<14} {:<6} {:?} TV {:.4} {}",
            s.relation,
            s.fixture,
            s.params,
            s.tv_estimate,
            if s.pass { "pass" } else { "FAIL" }
        );
    }
    if let Some(s) = &report.sequential {
        println!("  stage one w0 = {}; staged loss {:.5} ± {:.5}; best static {}", s.w0, s.staged.mean, s.staged.se, s.best_static);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Compare(a) => run(ExperimentKind::Compare, a),
        Command::Risk(a) => run(ExperimentKind::Risk, a),
        Command::CompressScore(a) => run(ExperimentKind::CompressScore, a),
        Command::Entropy(a) => run(ExperimentKind::Entropy, a),
        Command::Sequential(a) => run(ExperimentKind::Sequential, a),
        Command::Suffcheck(a) => run(ExperimentKind::Suffcheck, a),
        Command::Summarize { store, ids, criterion, z, out } => (|| {
            let store = ResultStore::open(&store)?;
            let ranking = summarize(&store, &ids, criterion.as_deref(), z)?;
            print!("{}", ranking.to_text());
            let path = out.unwrap_or_else(|| store.dir().join("ranking.csv"));
            std::fs::write(&path, ranking.to_csv()?)?;
            println!("ranking written to {}", path.display());
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(Error::Config(errs)) => {
            eprintln!("configuration errors:");
            for e in errs {
                eprintln!("  {e}");
            }
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
