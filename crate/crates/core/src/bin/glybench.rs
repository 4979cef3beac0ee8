use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use glybench::grid::{cmd_inspect, cmd_report, cmd_run, cmd_synth, load_synth_config, write_files, GridConfig};
use glybench::synth::SynthConfig;
use glybench::Error;

#[derive(Parser)]
#[command(name = "glybench", version, about = "Meal-to-meal blood glucose prediction benchmark")]
struct Cli {
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "GLYBENCH_JOBS")]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic diary cohort.
    Synth {
        /// Synthetic cohort TOML; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Diary CSV to write; demographics go next to it.
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Print cleaning, EP and per-variant row statistics for a cohort.
    Inspect {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Cross-validate a model x variant grid.
    Run {
        #[command(flatten)]
        grid: GridArgs,
    },
    /// Summarize a results directory.
    Report {
        /// Results directory written by `run`.
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct GridArgs {
    /// Grid TOML document.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated variant ids.
    #[arg(long, value_delimiter = ',')]
    variants: Option<Vec<String>>,
    /// Comma-separated model names or symbols.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<String>>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    min_records: Option<usize>,
    /// `zone,weight` CSV.
    #[arg(long)]
    penalty_table: Option<PathBuf>,
}

impl GridArgs {
    fn resolve(self) -> Result<GridConfig, Error> {
        let mut cfg = match &self.config {
            Some(p) => GridConfig::from_file(p)?,
            None => GridConfig::default(),
        };
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
        if let Some(v) = self.variants {
            cfg.variants = v;
        }
        if let Some(v) = self.models {
            cfg.models = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.min_records {
            cfg.min_records = v;
        }
        if self.penalty_table.is_some() {
            cfg.penalty_table = self.penalty_table;
        }
        if self.out.is_some() {
            cfg.out = self.out;
        }
        Ok(cfg)
    }
}

fn init_pool(jobs: Option<usize>) -> Result<(), Error> {
    if let Some(n) = jobs {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Config(format!("cannot start {n} workers: {e}")))?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Error> {
    if !matches!(cli.command, Command::Run { .. }) {
        init_pool(cli.jobs)?;
    }
    match cli.command {
        Command::Synth { config, out, seed } => {
            let mut cfg = match config {
                Some(p) => load_synth_config(&p)?,
                None => SynthConfig::default(),
            };
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let cohort = cmd_synth(&cfg, &out)?;
            let records: usize = cohort.values().map(|h| h.len()).sum();
            println!("wrote {records} records for {} patients to {}", cohort.len(), out.display());
        }
        Command::Inspect { grid } => {
            let cfg = grid.resolve()?;
            let files = cmd_inspect(&cfg)?;
            match &cfg.out {
                Some(dir) => write_files(dir, &files)?,
                None => {
                    for (name, bytes) in &files {
                        println!("# {name}\n{}", String::from_utf8_lossy(bytes));
                    }
                }
            }
        }
        Command::Run { grid } => {
            let cfg = grid.resolve()?;
            init_pool(cli.jobs.or(cfg.jobs))?;
            let out = cfg
                .out
                .clone()
                .ok_or_else(|| Error::Config("`run` needs --out or `out` in the config".into()))?;
            let outcome = cmd_run(&cfg, &out)?;
            println!("{} cells written to {}", outcome.cells.len(), out.display());
        }
        Command::Report { out } => {
            println!("metric,naive,best_value,improvement_pct,best_model,best_variant");
            for r in cmd_report(&out)? {
                println!(
                    "{},{:.4},{:.4},{:.2},{},{}",
                    r.metric, r.naive, r.best_value, r.improvement_pct, r.best_model, r.best_variant
                );
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Fit { .. } | Error::Numerical(_) => ExitCode::FAILURE,
                _ => ExitCode::from(2),
            }
        }
    }
}
