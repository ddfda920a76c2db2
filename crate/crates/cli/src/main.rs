//! `balderdash`: run multi-agent Balderdash experiments, label known words,
//! benchmark judges, and report metrics from persisted runs.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use balderdash_cli::commands::{self, ReportKind};
use balderdash_core::domain::HistoryType;

#[derive(Parser)]
#[command(name = "balderdash", version, about = "Multi-agent Balderdash experiment runner")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand an experiment config into games, play them, persist the run.
    Run {
        /// Experiment TOML file.
        #[arg(long)]
        config: PathBuf,
        /// Run directory to create (games/rounds/players JSONL + manifest).
        #[arg(long)]
        out: PathBuf,
        /// Override the config's random seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Games to play in parallel.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Run only this history type instead of the experiment's set.
        #[arg(long)]
        history: Option<String>,
    },
    /// Filter a deck down to the words a model defines correctly.
    LabelKnownWords {
        /// Bindings TOML: [definition_agent], [judge], samples, threshold.
        #[arg(long)]
        config: PathBuf,
        /// Deck file (JSON or CSV).
        #[arg(long)]
        deck: PathBuf,
        /// Output deck path; a .verdicts.jsonl log lands next to it.
        #[arg(long)]
        out: PathBuf,
    },
    /// Score a judge binding against a human-labeled fixture file.
    EvaluateJudge {
        /// Bindings TOML with a [judge] table.
        #[arg(long)]
        config: PathBuf,
        /// JSON array of labeled examples.
        #[arg(long)]
        fixture: PathBuf,
    },
    /// Recompute metrics from a run directory and write report CSVs.
    Report {
        /// Run directory produced by `run`.
        #[arg(long = "run-dir")]
        run_dir: PathBuf,
        /// leaderboard | lkr_series
        #[arg(long)]
        kind: String,
        /// Where to write the CSVs (default: <run-dir>/reports).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Display scale for std, recorded in report_meta.json; CSV columns
        /// always carry the raw values.
        #[arg(long = "std-scale", default_value_t = 1.0)]
        std_scale: f64,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();

    let result = match &cli.command {
        Command::Run {
            config,
            out,
            seed,
            jobs,
            history,
        } => {
            let history = match history.as_deref().map(str::parse::<HistoryType>).transpose() {
                Ok(h) => h,
                Err(e) => return fail(commands::CliError::Validation(vec![e.to_string()])),
            };
            commands::cmd_run(config, out, *seed, *jobs, history)
        }
        Command::LabelKnownWords { config, deck, out } => {
            commands::cmd_label_known_words(config, deck, out)
        }
        Command::EvaluateJudge { config, fixture } => {
            commands::cmd_evaluate_judge(config, fixture)
        }
        Command::Report {
            run_dir,
            kind,
            out,
            std_scale,
        } => match kind.parse::<ReportKind>() {
            Ok(kind) => commands::cmd_report(run_dir, kind, out.as_deref(), *std_scale),
            Err(e) => Err(commands::CliError::Validation(vec![e])),
        },
    };

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(error) => fail(error),
    }
}

fn fail(error: commands::CliError) -> ExitCode {
    error.print();
    ExitCode::from(error.exit_code() as u8)
}
