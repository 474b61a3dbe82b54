//! `imubench` command-line entry point.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use imubench_core::experiment::{self, ExperimentConfig, FailureStage, PlanFilter, TechniqueId};
use imubench_core::ingest::{summarize, DatasetKind};
use imubench_core::Error;

#[derive(Parser)]
#[command(name = "imubench", version, about = "Inertial activity-classification benchmark")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train and evaluate the configured dataset × technique × seed matrix.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Only this dataset (ridi, motion_sense, uci_har, usc_had).
        #[arg(long)]
        dataset: Option<String>,
        /// Only this technique; the baseline always runs as well.
        #[arg(long)]
        technique: Option<String>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Build improvement tables and charts from a results file.
    Report {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print minutes of recording per class.
    SummarizeDataset {
        #[arg(long)]
        name: String,
        #[arg(long)]
        root: PathBuf,
        /// Emit CSV instead of a table.
        #[arg(long)]
        csv: bool,
    },
}

const EXIT_CONFIG: u8 = 1;
const EXIT_DATASET: u8 = 2;
const EXIT_TRAINING: u8 = 3;

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Ingest { .. } | Error::Split(_) => EXIT_DATASET,
        Error::Train(_) | Error::Nn(_) | Error::DegenerateChannel { .. } | Error::NonFinite(_) => EXIT_TRAINING,
        _ => EXIT_CONFIG,
    }
}

fn run(config: &Path, dataset: Option<String>, technique: Option<String>, seed: Option<u64>) -> Result<u8, Error> {
    let cfg = ExperimentConfig::load(config)?;
    let filter = PlanFilter {
        dataset: dataset.map(|d| d.parse::<DatasetKind>().map_err(|e| Error::Config(e.to_string()))).transpose()?,
        technique: technique.map(|t| t.parse::<TechniqueId>()).transpose()?,
        seed,
    };
    let base = config.parent().unwrap_or(Path::new("."));
    let plan = cfg.plan(base, &filter)?;
    let outcome = experiment::run_plan(&plan)?;
    for r in &outcome.runs {
        let delta = r.delta.map_or("n/a".to_string(), |d| format!("{d:+.2}"));
        println!("{:<13} {:<9} seed {:<4} acc {:>6.2}%  delta {delta}", r.dataset, r.technique, r.seed, r.accuracy);
    }
    for f in &outcome.failures {
        eprintln!("FAILED {} {:?}: {}", f.dataset, f.stage, f.message);
    }
    println!("results: {}", outcome.results_path.display());
    Ok(if outcome.has_failure(FailureStage::Dataset) {
        EXIT_DATASET
    } else if outcome.has_failure(FailureStage::Training) {
        EXIT_TRAINING
    } else {
        0
    })
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, dataset, technique, seed } => run(&config, dataset, technique, seed),
        Command::Report { results, out } => experiment::report(&results, &out).map(|rep| {
            print!("{}", rep.summary_csv());
            println!("report written to {}", out.display());
            0
        }),
        Command::SummarizeDataset { name, root, csv } => name
            .parse::<DatasetKind>()
            .map_err(|e| Error::Config(e.to_string()))
            .and_then(|kind| kind.read(&root))
            .map(|raw| {
                let table = summarize(&raw);
                if csv {
                    print!("{}", table.to_csv());
                } else {
                    println!("{table}");
                    println!("  subjects: {}, rejected rows: {}, excluded recordings: {}",
                        raw.subjects().len(), raw.provenance.rejected_rows, raw.provenance.excluded_recordings);
                }
                0
            }),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            log::error!("{e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
