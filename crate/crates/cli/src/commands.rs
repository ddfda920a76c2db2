//! The four subcommands: run, label-known-words, evaluate-judge, report.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use balderdash_core::agents::build_agent;
use balderdash_core::domain::{load_deck, save_deck_json, GameConfig, GameRecord, HistoryType};
use balderdash_core::engine::{EngineOptions, GameRunner, JudgeSeat, Seat};
use balderdash_core::judge::{evaluate_judge, label_known_words, Judge, LabelOptions};
use balderdash_core::metrics::{aggregate_leaderboard, leaderboard_csv, lkr_series_cells, lkr_series_csv};
use balderdash_core::prompts::PromptSet;
use balderdash_core::store::{RunManifest, Store, SCHEMA_VERSION};

use crate::config::{load_experiment, JudgeConfig, LabelConfig, PlayerSpec};

/// Failures split by exit code: 1 for validation, 2 for runtime.
#[derive(Debug)]
pub enum CliError {
    Validation(Vec<String>),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }

    pub fn print(&self) {
        match self {
            CliError::Validation(errors) => {
                eprintln!("configuration invalid ({} error(s)):", errors.len());
                for error in errors {
                    eprintln!("  - {error}");
                }
            }
            CliError::Runtime(detail) => eprintln!("run failed: {detail}"),
        }
    }
}

fn runtime<E: std::fmt::Display>(e: E) -> CliError {
    CliError::Runtime(e.to_string())
}

/// Expand the experiment, play every game, and persist the run.
pub fn cmd_run(
    config_path: &Path,
    out_dir: &Path,
    seed_override: Option<u64>,
    jobs: usize,
    history_override: Option<HistoryType>,
) -> Result<(), CliError> {
    let (mut config, deck, prompts, config_text) =
        load_experiment(config_path).map_err(CliError::Validation)?;
    if let Some(seed) = seed_override {
        config.seed = seed;
    }
    if let Some(history) = history_override {
        config.history_types = Some(vec![history]);
    }

    let games = config.expand(&deck).map_err(|e| CliError::Validation(vec![e]))?;
    let mut store = Store::create(out_dir).map_err(runtime)?;

    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        description: config.description.clone(),
        seed: config.seed,
        config_hash: sha256_hex(config_text.as_bytes()),
        prompt_bundle_hash: prompts.bundle_hash(),
        deck_name: deck.name.clone(),
        game_count: games.len() as u32,
    };
    manifest.write(out_dir).map_err(runtime)?;

    let records = run_games(&games, &config.players, &config.judge, &prompts, jobs)?;
    let mut total_rounds = 0;
    for record in &records {
        total_rounds += record.rounds.len();
        store.persist_game(record).map_err(runtime)?;
    }

    println!(
        "ran {} game(s), {} round(s); records in {}",
        records.len(),
        total_rounds,
        out_dir.display()
    );
    Ok(())
}

/// Play the expanded games, up to `jobs` at a time. Every game gets freshly
/// built agents so scripted cursors start at zero, and records come back in
/// expansion order regardless of scheduling.
fn run_games(
    games: &[GameConfig],
    players: &[PlayerSpec],
    judge: &balderdash_core::agents::AgentBinding,
    prompts: &PromptSet,
    jobs: usize,
) -> Result<Vec<GameRecord>, CliError> {
    let run_one = |game_id: u64, game: &GameConfig| -> Result<GameRecord, CliError> {
        let seats: Vec<Seat> = players
            .iter()
            .map(|p| Seat::from_binding(&p.llm_group, &p.binding))
            .collect::<Result<_, _>>()
            .map_err(runtime)?;
        let judge_seat = JudgeSeat::from_binding(judge).map_err(runtime)?;
        GameRunner::new(game, &seats, &judge_seat, prompts, EngineOptions::default())
            .map_err(runtime)?
            .run(game_id)
            .map_err(runtime)
    };

    let mut records = Vec::with_capacity(games.len());
    if jobs <= 1 {
        for (i, game) in games.iter().enumerate() {
            log::info!("game {}/{}: {}", i + 1, games.len(), game.description);
            records.push(run_one(i as u64 + 1, game)?);
        }
    } else {
        for (chunk_index, chunk) in games.chunks(jobs).enumerate() {
            let base = chunk_index * jobs;
            let chunk_records: Vec<Result<GameRecord, CliError>> = std::thread::scope(|scope| {
                let handles: Vec<_> = chunk
                    .iter()
                    .enumerate()
                    .map(|(j, game)| scope.spawn(move || run_one((base + j) as u64 + 1, game)))
                    .collect();
                handles
                    .into_iter()
                    .map(|h| h.join().expect("game thread panicked"))
                    .collect()
            });
            for record in chunk_records {
                records.push(record?);
            }
        }
    }
    Ok(records)
}

/// Label which deck words a model already knows; write the filtered deck
/// and a per-word verdict log.
pub fn cmd_label_known_words(
    config_path: &Path,
    deck_path: &Path,
    out_path: &Path,
) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", config_path.display())]))?;
    let config = LabelConfig::parse(&text).map_err(|e| CliError::Validation(vec![e]))?;
    let errors = config.validate();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let deck = load_deck(deck_path).map_err(|e| CliError::Validation(vec![e.to_string()]))?;

    let prompts = PromptSet::builtin();
    let definition_agent = build_agent(&config.definition_agent).map_err(runtime)?;
    let judge_agent = build_agent(&config.judge).map_err(runtime)?;
    let judge = Judge::new(judge_agent.as_ref(), &prompts, config.judge.retry_limit);
    let options = LabelOptions {
        samples: config.samples,
        threshold: config.threshold,
    };
    let (known, reports) =
        label_known_words(&deck, definition_agent.as_ref(), &judge, &prompts, options);

    save_deck_json(&known, out_path).map_err(runtime)?;
    let log_path = verdict_log_path(out_path);
    let mut log_lines = String::new();
    for report in &reports {
        log_lines.push_str(&serde_json::to_string(report).expect("report serializes"));
        log_lines.push('\n');
    }
    std::fs::write(&log_path, log_lines).map_err(runtime)?;

    let failures = reports.iter().filter(|r| r.failure.is_some()).count();
    println!(
        "labeled {} of {} word(s) as known ({} failure(s)); deck in {}, verdicts in {}",
        known.len(),
        deck.len(),
        failures,
        out_path.display(),
        log_path.display()
    );
    Ok(())
}

fn verdict_log_path(out_path: &Path) -> PathBuf {
    let stem = out_path.file_stem().and_then(|s| s.to_str()).unwrap_or("known");
    out_path.with_file_name(format!("{stem}.verdicts.jsonl"))
}

/// Benchmark a judge binding against a labeled fixture file; print the four
/// metrics as one CSV row.
pub fn cmd_evaluate_judge(config_path: &Path, fixture_path: &Path) -> Result<(), CliError> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| CliError::Validation(vec![format!("cannot read {}: {e}", config_path.display())]))?;
    let config = JudgeConfig::parse(&text).map_err(|e| CliError::Validation(vec![e]))?;
    let errors = config.judge.validate();
    if !errors.is_empty() {
        return Err(CliError::Validation(errors));
    }
    let dataset = balderdash_core::judge::load_labeled_examples(fixture_path)
        .map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    if dataset.is_empty() {
        return Err(CliError::Validation(vec![format!(
            "fixture {} holds no examples",
            fixture_path.display()
        )]));
    }

    let prompts = PromptSet::builtin();
    let agent = build_agent(&config.judge).map_err(runtime)?;
    let judge = Judge::new(agent.as_ref(), &prompts, config.judge.retry_limit);
    let report = evaluate_judge(&judge, &dataset).map_err(runtime)?;

    println!("precision,recall,f1,accuracy");
    println!(
        "{},{},{},{}",
        report.precision, report.recall, report.f1, report.accuracy
    );
    if report.failures > 0 {
        eprintln!(
            "warning: {} of {} example(s) failed and were counted as predicted-false",
            report.failures, report.examples
        );
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportKind {
    Leaderboard,
    LkrSeries,
}

impl std::str::FromStr for ReportKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "leaderboard" => Ok(ReportKind::Leaderboard),
            "lkr_series" => Ok(ReportKind::LkrSeries),
            other => Err(format!("unknown report kind '{other}' (expected leaderboard or lkr_series)")),
        }
    }
}

/// Recompute metrics from a persisted run directory and write report CSVs.
pub fn cmd_report(
    run_dir: &Path,
    kind: ReportKind,
    out_dir: Option<&Path>,
    std_scale: f64,
) -> Result<(), CliError> {
    let store = Store::open(run_dir).map_err(|e| CliError::Validation(vec![e.to_string()]))?;
    let games = store.load_all().map_err(runtime)?;
    if games.is_empty() {
        return Err(CliError::Validation(vec![format!(
            "run directory {} holds no games",
            run_dir.display()
        )]));
    }

    let reports_dir = out_dir
        .map(Path::to_path_buf)
        .unwrap_or_else(|| run_dir.join("reports"));
    std::fs::create_dir_all(&reports_dir).map_err(runtime)?;

    let mut files = Vec::new();
    match kind {
        ReportKind::Leaderboard => {
            let rows = aggregate_leaderboard(&games).map_err(runtime)?;
            let path = reports_dir.join("leaderboard.csv");
            std::fs::write(&path, leaderboard_csv(&rows)).map_err(runtime)?;
            println!("leaderboard: {} row(s) -> {}", rows.len(), path.display());
            files.push(path);
        }
        ReportKind::LkrSeries => {
            let mut by_history: BTreeMap<HistoryType, Vec<GameRecord>> = BTreeMap::new();
            for game in games {
                by_history.entry(game.config.history_type).or_default().push(game);
            }
            for (history, group_games) in by_history {
                let groups: Vec<String> = group_games
                    .iter()
                    .flat_map(|g| g.groups())
                    .collect::<std::collections::BTreeSet<_>>()
                    .into_iter()
                    .collect();
                if groups.len() != 1 {
                    return Err(CliError::Validation(vec![format!(
                        "lkr_series needs a single group per history type, found {groups:?} under history={history}"
                    )]));
                }
                let cells = lkr_series_cells(&group_games, &groups[0]).map_err(runtime)?;
                let path = reports_dir.join(format!("lkr_series_{history}.csv"));
                std::fs::write(&path, lkr_series_csv(&cells)).map_err(runtime)?;
                println!(
                    "lkr series (history={history}): {} round(s) -> {}",
                    cells.len(),
                    path.display()
                );
                files.push(path);
            }
        }
    }

    let meta = serde_json::json!({
        "schema_version": SCHEMA_VERSION,
        "std_aggregation": "population standard deviation over all (round, game) samples",
        "std_display_scale": std_scale,
        "files": files.iter().map(|p| p.display().to_string()).collect::<Vec<_>>(),
    });
    std::fs::write(
        reports_dir.join("report_meta.json"),
        serde_json::to_string_pretty(&meta).expect("meta serializes") + "\n",
    )
    .map_err(runtime)?;
    Ok(())
}

fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
