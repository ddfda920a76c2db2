//! Durable persistence: one run directory holding three JSONL collections
//! (games, rounds, players), one JSON document per line, plus an optional
//! run manifest.
//!
//! Round documents carry everything needed to recompute every metric without
//! the engine: the announced word and its definitions, each player's
//! generated definition, both judge booleans, votes, and scores.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::domain::{GameConfig, GameRecord, PlayerState, RoundRecord, SkippedRound};
use crate::error::StoreError;

pub const SCHEMA_VERSION: u32 = 1;

pub const GAMES_FILE: &str = "games.jsonl";
pub const ROUNDS_FILE: &str = "rounds.jsonl";
pub const PLAYERS_FILE: &str = "players.jsonl";
pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Serialize, Deserialize)]
struct GameDoc {
    schema_version: u32,
    game_id: u64,
    config: GameConfig,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    skipped_rounds: Vec<SkippedRound>,
}

#[derive(Debug, Serialize, Deserialize)]
struct PlayerDoc {
    schema_version: u32,
    game_id: u64,
    player: PlayerState,
}

#[derive(Debug, Serialize, Deserialize)]
struct RoundDoc {
    schema_version: u32,
    game_id: u64,
    round: RoundRecord,
}

/// Document counts written by one `persist_game`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StoredIds {
    pub game_id: u64,
    pub player_docs: usize,
    pub round_docs: usize,
}

/// Selects games on load. Empty filter matches everything.
#[derive(Debug, Clone, Default)]
pub struct GameFilter {
    pub description_contains: Option<String>,
    pub deck_name: Option<String>,
    pub game_ids: Option<Vec<u64>>,
}

impl GameFilter {
    fn matches(&self, doc: &GameDoc) -> bool {
        if let Some(needle) = &self.description_contains {
            if !doc.config.description.contains(needle.as_str()) {
                return false;
            }
        }
        if let Some(deck) = &self.deck_name {
            if &doc.config.deck.name != deck {
                return false;
            }
        }
        if let Some(ids) = &self.game_ids {
            if !ids.contains(&doc.game_id) {
                return false;
            }
        }
        true
    }
}

/// Append-only store over one run directory. Single writer; any number of
/// concurrent readers.
pub struct Store {
    dir: PathBuf,
    game_ids: BTreeSet<u64>,
}

impl Store {
    /// Open a run directory for writing, creating it if needed. Existing
    /// collections are indexed so duplicate game ids are rejected.
    pub fn create(dir: &Path) -> Result<Self, StoreError> {
        std::fs::create_dir_all(dir).map_err(|e| StoreError::Io {
            path: dir.display().to_string(),
            source: e,
        })?;
        let mut store = Self {
            dir: dir.to_path_buf(),
            game_ids: BTreeSet::new(),
        };
        if store.dir.join(GAMES_FILE).exists() {
            for doc in store.read_docs::<GameDoc>(GAMES_FILE)? {
                store.game_ids.insert(doc.game_id);
            }
        }
        Ok(store)
    }

    /// Open an existing run directory read-only style (loads still work,
    /// writes too, but a missing directory is an error).
    pub fn open(dir: &Path) -> Result<Self, StoreError> {
        if !dir.join(GAMES_FILE).exists() {
            return Err(StoreError::Missing(dir.display().to_string()));
        }
        Self::create(dir)
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn game_ids(&self) -> &BTreeSet<u64> {
        &self.game_ids
    }

    /// Write one games document, one players document per player, and one
    /// rounds document per round. Rejects a game id that is already stored.
    pub fn persist_game(&mut self, record: &GameRecord) -> Result<StoredIds, StoreError> {
        if self.game_ids.contains(&record.game_id) {
            return Err(StoreError::DuplicateGame(record.game_id));
        }

        let game_line = to_line(&GameDoc {
            schema_version: SCHEMA_VERSION,
            game_id: record.game_id,
            config: record.config.clone(),
            skipped_rounds: record.skipped_rounds.clone(),
        });
        let player_lines: Vec<String> = record
            .players
            .iter()
            .map(|p| {
                to_line(&PlayerDoc {
                    schema_version: SCHEMA_VERSION,
                    game_id: record.game_id,
                    player: p.clone(),
                })
            })
            .collect();
        let round_lines: Vec<String> = record
            .rounds
            .iter()
            .map(|r| {
                to_line(&RoundDoc {
                    schema_version: SCHEMA_VERSION,
                    game_id: record.game_id,
                    round: r.clone(),
                })
            })
            .collect();

        self.append(GAMES_FILE, &[game_line])?;
        self.append(PLAYERS_FILE, &player_lines)?;
        self.append(ROUNDS_FILE, &round_lines)?;
        self.game_ids.insert(record.game_id);

        Ok(StoredIds {
            game_id: record.game_id,
            player_docs: record.players.len(),
            round_docs: record.rounds.len(),
        })
    }

    /// Rehydrate matching games with players and rounds reattached in order.
    pub fn load_games(&self, filter: &GameFilter) -> Result<Vec<GameRecord>, StoreError> {
        let games = self.read_docs::<GameDoc>(GAMES_FILE)?;

        let mut players: BTreeMap<u64, Vec<PlayerState>> = BTreeMap::new();
        for doc in self.read_docs::<PlayerDoc>(PLAYERS_FILE)? {
            players.entry(doc.game_id).or_default().push(doc.player);
        }
        let mut rounds: BTreeMap<u64, Vec<RoundRecord>> = BTreeMap::new();
        for doc in self.read_docs::<RoundDoc>(ROUNDS_FILE)? {
            rounds.entry(doc.game_id).or_default().push(doc.round);
        }

        let mut records = Vec::new();
        for doc in games {
            if !filter.matches(&doc) {
                continue;
            }
            let mut game_players = players.remove(&doc.game_id).unwrap_or_default();
            game_players.sort_by_key(|p| p.player_id);
            let mut game_rounds = rounds.remove(&doc.game_id).unwrap_or_default();
            game_rounds.sort_by_key(|r| r.round_id);
            records.push(GameRecord {
                game_id: doc.game_id,
                config: doc.config,
                players: game_players,
                rounds: game_rounds,
                skipped_rounds: doc.skipped_rounds,
            });
        }
        records.sort_by_key(|r| r.game_id);
        Ok(records)
    }

    /// All games, unfiltered.
    pub fn load_all(&self) -> Result<Vec<GameRecord>, StoreError> {
        self.load_games(&GameFilter::default())
    }

    fn append(&self, file: &str, lines: &[String]) -> Result<(), StoreError> {
        if lines.is_empty() {
            return Ok(());
        }
        let path = self.dir.join(file);
        let io_err = |e: std::io::Error| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        };
        let mut handle = OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .map_err(io_err)?;
        for line in lines {
            writeln!(handle, "{line}").map_err(io_err)?;
        }
        handle.flush().map_err(io_err)
    }

    fn read_docs<T: serde::de::DeserializeOwned + HasSchemaVersion>(
        &self,
        file: &str,
    ) -> Result<Vec<T>, StoreError> {
        let path = self.dir.join(file);
        if !path.exists() {
            return Ok(Vec::new());
        }
        let data = std::fs::read_to_string(&path).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        let mut docs = Vec::new();
        for (i, line) in data.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let doc: T = serde_json::from_str(line).map_err(|e| StoreError::Corrupt {
                file: file.to_string(),
                line: i + 1,
                detail: e.to_string(),
            })?;
            if doc.schema_version() != SCHEMA_VERSION {
                return Err(StoreError::SchemaVersion {
                    found: doc.schema_version(),
                    expected: SCHEMA_VERSION,
                });
            }
            docs.push(doc);
        }
        Ok(docs)
    }
}

trait HasSchemaVersion {
    fn schema_version(&self) -> u32;
}

impl HasSchemaVersion for GameDoc {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl HasSchemaVersion for PlayerDoc {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

impl HasSchemaVersion for RoundDoc {
    fn schema_version(&self) -> u32 {
        self.schema_version
    }
}

fn to_line<T: Serialize>(doc: &T) -> String {
    serde_json::to_string(doc).expect("documents serialize")
}

/// Reproducibility metadata written once per run directory.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub schema_version: u32,
    pub description: String,
    pub seed: u64,
    /// SHA-256 of the experiment config file bytes.
    pub config_hash: String,
    /// SHA-256 over the prompt bundle (see `PromptSet::bundle_hash`).
    pub prompt_bundle_hash: String,
    pub deck_name: String,
    pub game_count: u32,
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> Result<(), StoreError> {
        let path = dir.join(MANIFEST_FILE);
        let body = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, body + "\n").map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })
    }

    pub fn load(dir: &Path) -> Result<Self, StoreError> {
        let path = dir.join(MANIFEST_FILE);
        let data = std::fs::read_to_string(&path).map_err(|e| StoreError::Io {
            path: path.display().to_string(),
            source: e,
        })?;
        serde_json::from_str(&data).map_err(|e| StoreError::Corrupt {
            file: MANIFEST_FILE.to_string(),
            line: 1,
            detail: e.to_string(),
        })
    }
}
