//! Core data types shared by every module: word decks, game configuration,
//! per-round records, and deck validation/sampling.
//!
//! Everything here is immutable after construction; the engine is the only
//! writer and it builds fresh values per round.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::DomainError;

/// Player identifier (`p_k`). Unique within a game.
pub type PlayerId = u32;

/// Delimiter joining multiple definitions in one CSV deck cell.
pub const DEFINITION_DELIMITER: &str = " ||| ";

/// A word with its part of speech and ordered dictionary definitions.
///
/// `definitions[0]` is the reference definition the judge compares against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordEntry {
    pub word: String,
    pub pos: String,
    pub definitions: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub frequency: Option<f64>,
}

impl WordEntry {
    pub fn new(word: impl Into<String>, pos: impl Into<String>, definitions: Vec<String>) -> Self {
        Self {
            word: word.into(),
            pos: pos.into(),
            definitions,
            frequency: None,
        }
    }

    /// The reference dictionary definition (`definitions[0]`).
    pub fn reference_definition(&self) -> &str {
        &self.definitions[0]
    }
}

/// A named collection of word entries used as a game's word source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WordDeck {
    pub name: String,
    pub entries: Vec<WordEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub avg_frequency: Option<f64>,
}

impl WordDeck {
    pub fn new(name: impl Into<String>, entries: Vec<WordEntry>) -> Self {
        let mut deck = Self {
            name: name.into(),
            entries,
            avg_frequency: None,
        };
        deck.avg_frequency = deck.computed_avg_frequency();
        deck
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Mean of the frequencies that are present, or None when no entry has one.
    pub fn computed_avg_frequency(&self) -> Option<f64> {
        let freqs: Vec<f64> = self.entries.iter().filter_map(|e| e.frequency).collect();
        if freqs.is_empty() {
            None
        } else {
            Some(freqs.iter().sum::<f64>() / freqs.len() as f64)
        }
    }
}

/// Points awarded for the three scorable acts. Negative and zero values are
/// legal so rule-variation experiments can invert incentives.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoringRules {
    pub correct_definition_points: i64,
    pub correct_vote_points: i64,
    pub receiving_vote_points: i64,
}

impl ScoringRules {
    pub fn new(
        correct_definition_points: i64,
        correct_vote_points: i64,
        receiving_vote_points: i64,
    ) -> Self {
        Self {
            correct_definition_points,
            correct_vote_points,
            receiving_vote_points,
        }
    }
}

impl Default for ScoringRules {
    /// The original game's 3/2/1 scoring.
    fn default() -> Self {
        Self::new(3, 2, 1)
    }
}

/// Which per-round review players receive before acting.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum HistoryType {
    None,
    Mini,
    Full,
}

impl HistoryType {
    pub fn as_str(self) -> &'static str {
        match self {
            HistoryType::None => "none",
            HistoryType::Mini => "mini",
            HistoryType::Full => "full",
        }
    }
}

impl fmt::Display for HistoryType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for HistoryType {
    type Err = DomainError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(HistoryType::None),
            "mini" => Ok(HistoryType::Mini),
            "full" => Ok(HistoryType::Full),
            other => Err(DomainError::InvalidHistoryType(other.to_string())),
        }
    }
}

/// Everything the games collection stores about one game.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub description: String,
    pub num_rounds: u32,
    pub judge_model: String,
    pub random_seed: u64,
    pub scoring: ScoringRules,
    pub history_type: HistoryType,
    pub history_window: u32,
    pub temperature: f64,
    pub deck: WordDeck,
    pub prompt_set: String,
}

impl GameConfig {
    /// Check the config's own invariants. Returns violation descriptions.
    pub fn validate(&self) -> Vec<String> {
        let mut violations = Vec::new();
        if self.num_rounds == 0 {
            violations.push("num_rounds must be positive".to_string());
        }
        if self.num_rounds as usize > self.deck.len() {
            violations.push(format!(
                "num_rounds ({}) exceeds deck size ({}); each round consumes a distinct word",
                self.num_rounds,
                self.deck.len()
            ));
        }
        if self.history_type != HistoryType::None && self.history_window == 0 {
            violations
                .push("history_window must be >= 1 when history_type is not none".to_string());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            violations.push(format!("temperature {} outside [0, 2]", self.temperature));
        }
        violations.extend(validate_deck(&self.deck));
        violations
    }
}

/// Per-player standings carried across rounds.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlayerState {
    pub player_id: PlayerId,
    pub llm_group: String,
    pub llm_name: String,
    pub cumulative_score: i64,
    pub rank_history: Vec<u32>,
}

impl PlayerState {
    pub fn new(
        player_id: PlayerId,
        llm_group: impl Into<String>,
        llm_name: impl Into<String>,
    ) -> Self {
        Self {
            player_id,
            llm_group: llm_group.into(),
            llm_name: llm_name.into(),
            cumulative_score: 0,
            rank_history: Vec::new(),
        }
    }
}

/// One player's definition for a round, with the judge's two verdicts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DefinitionRecord {
    pub player_id: PlayerId,
    pub raw_response: String,
    pub parsed_definition: String,
    /// Response carried a properly quoted definition.
    pub conforming: bool,
    /// Semantically equal to the reference definition (`definitions[0]`).
    pub judge_decision: bool,
    /// Semantically equal to at least one of the word's definitions.
    pub llm_knows_one: bool,
}

impl DefinitionRecord {
    /// Player produced no usable definition this round (kept off the ballot).
    pub fn abstained(&self) -> bool {
        self.parsed_definition.is_empty()
    }
}

/// Author of a ballot entry or target of a vote: a player, or the reference
/// dictionary definition. Serialized as the player id, with `-1` for the
/// reference.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum VoteTarget {
    Reference,
    Player(PlayerId),
}

impl VoteTarget {
    pub fn as_i64(self) -> i64 {
        match self {
            VoteTarget::Reference => -1,
            VoteTarget::Player(id) => id as i64,
        }
    }

    pub fn from_i64(v: i64) -> Result<Self, DomainError> {
        match v {
            -1 => Ok(VoteTarget::Reference),
            id if id >= 0 => Ok(VoteTarget::Player(id as PlayerId)),
            other => Err(DomainError::InvalidVoteTarget(other)),
        }
    }
}

impl Serialize for VoteTarget {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_i64(self.as_i64())
    }
}

impl<'de> Deserialize<'de> for VoteTarget {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let v = i64::deserialize(deserializer)?;
        VoteTarget::from_i64(v).map_err(serde::de::Error::custom)
    }
}

/// One shuffled definition shown to voters.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct BallotEntry {
    /// 1-based index as displayed in the vote prompt.
    pub display_index: u32,
    pub source: VoteTarget,
    pub text: String,
}

/// The shuffled list of surviving fake definitions plus the reference, and
/// the indices each voter may choose from.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize, Default)]
pub struct Ballot {
    pub entries: Vec<BallotEntry>,
    /// Per-voter allowed display indices, ascending. Excludes only the
    /// voter's own entry.
    pub allowed: BTreeMap<PlayerId, Vec<u32>>,
}

impl Ballot {
    /// Display index of a player's own entry, if their definition is listed.
    pub fn index_of_player(&self, player: PlayerId) -> Option<u32> {
        self.entries
            .iter()
            .find(|e| e.source == VoteTarget::Player(player))
            .map(|e| e.display_index)
    }

    /// Resolve a display index back to the entry's author.
    pub fn source_of_index(&self, index: u32) -> Option<VoteTarget> {
        self.entries
            .iter()
            .find(|e| e.display_index == index)
            .map(|e| e.source)
    }
}

/// Everything recorded about one round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub round_id: u32,
    pub word: WordEntry,
    pub definitions: BTreeMap<PlayerId, DefinitionRecord>,
    pub ballot: Ballot,
    pub votes: BTreeMap<PlayerId, VoteTarget>,
    pub scores: BTreeMap<PlayerId, i64>,
    /// (definition, outcome) for each player tied at the round's top score.
    pub winners_strategies: Vec<(String, String)>,
}

/// A round the engine had to abandon (judge failure). No scores were awarded.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedRound {
    pub round_id: u32,
    pub word: String,
    pub reason: String,
}

/// A complete game: configuration, final player standings, and every round.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameRecord {
    pub game_id: u64,
    pub config: GameConfig,
    pub players: Vec<PlayerState>,
    pub rounds: Vec<RoundRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub skipped_rounds: Vec<SkippedRound>,
}

impl GameRecord {
    pub fn player(&self, id: PlayerId) -> Option<&PlayerState> {
        self.players.iter().find(|p| p.player_id == id)
    }

    /// Ids of the players belonging to one LLM group, in player order.
    pub fn group_members(&self, group: &str) -> Vec<PlayerId> {
        self.players
            .iter()
            .filter(|p| p.llm_group == group)
            .map(|p| p.player_id)
            .collect()
    }

    /// Distinct group names, in first-appearance order.
    pub fn groups(&self) -> Vec<String> {
        let mut seen = Vec::new();
        for p in &self.players {
            if !seen.contains(&p.llm_group) {
                seen.push(p.llm_group.clone());
            }
        }
        seen
    }
}

const FREQ_TOLERANCE: f64 = 1e-9;

/// Check every WordDeck/WordEntry invariant. Returns one description per
/// violation; an empty list means the deck is well formed.
pub fn validate_deck(deck: &WordDeck) -> Vec<String> {
    let mut violations = Vec::new();
    let mut seen: BTreeMap<String, &str> = BTreeMap::new();

    for entry in &deck.entries {
        let word = entry.word.trim();
        if word.is_empty() {
            violations.push(format!(
                "deck '{}': entry with empty word (pos '{}')",
                deck.name, entry.pos
            ));
        }
        if entry.definitions.is_empty() {
            violations.push(format!(
                "deck '{}': entry '{}' has no definitions",
                deck.name, entry.word
            ));
        }
        if let Some(f) = entry.frequency {
            if f.is_nan() || f < 0.0 {
                violations.push(format!(
                    "deck '{}': entry '{}' has negative or non-finite frequency {}",
                    deck.name, entry.word, f
                ));
            }
        }
        let key = word.to_lowercase();
        if !key.is_empty() {
            if let Some(first) = seen.get(&key) {
                violations.push(format!(
                    "deck '{}': duplicate word '{}' (case-insensitive match with '{}')",
                    deck.name, entry.word, first
                ));
            } else {
                seen.insert(key, &entry.word);
            }
        }
    }

    if let Some(declared) = deck.avg_frequency {
        match deck.computed_avg_frequency() {
            Some(actual) if (declared - actual).abs() <= FREQ_TOLERANCE => {}
            Some(actual) => violations.push(format!(
                "deck '{}': avg_frequency {} does not match mean of entry frequencies {}",
                deck.name, declared, actual
            )),
            None => violations.push(format!(
                "deck '{}': avg_frequency {} declared but no entry has a frequency",
                deck.name, declared
            )),
        }
    }

    violations
}

/// Draw `count` subsets of `size` words each from `deck`, deterministically
/// for a fixed seed.
///
/// When `count * size` fits in the deck the subsets are pairwise disjoint
/// (one shuffle, chunked). Otherwise each subset is drawn independently,
/// still without replacement within itself.
pub fn sample_subsets(
    deck: &WordDeck,
    count: usize,
    size: usize,
    seed: u64,
) -> Result<Vec<WordDeck>, DomainError> {
    if count == 0 || size == 0 {
        return Err(DomainError::InvalidSubsetSpec { count, size });
    }
    if size > deck.len() {
        return Err(DomainError::SubsetTooLarge {
            size,
            deck_size: deck.len(),
            deck: deck.name.clone(),
        });
    }

    let mut subsets = Vec::with_capacity(count);
    if count * size <= deck.len() {
        let mut indices: Vec<usize> = (0..deck.len()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        indices.shuffle(&mut rng);
        for (i, chunk) in indices.chunks(size).take(count).enumerate() {
            let entries = chunk.iter().map(|&j| deck.entries[j].clone()).collect();
            subsets.push(WordDeck::new(
                format!("{}_subset{}", deck.name, i + 1),
                entries,
            ));
        }
    } else {
        for i in 0..count {
            let mut indices: Vec<usize> = (0..deck.len()).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(
                seed.wrapping_add(i as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15),
            );
            indices.shuffle(&mut rng);
            let entries = indices[..size].iter().map(|&j| deck.entries[j].clone()).collect();
            subsets.push(WordDeck::new(
                format!("{}_subset{}", deck.name, i + 1),
                entries,
            ));
        }
    }
    Ok(subsets)
}

/// Load a deck from a UTF-8 JSON array of `{word, pos, definitions, frequency?}`
/// objects. The deck name is the file stem.
pub fn load_deck_json(path: &Path) -> Result<WordDeck, DomainError> {
    let data = std::fs::read_to_string(path).map_err(|e| DomainError::DeckIo {
        path: path.display().to_string(),
        source: e,
    })?;
    let entries: Vec<WordEntry> =
        serde_json::from_str(&data).map_err(|e| DomainError::DeckParse {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
    Ok(WordDeck::new(deck_name_from_path(path), entries))
}

/// Load a deck from CSV with columns `word,pos,definitions,frequency`;
/// multiple definitions are joined by ` ||| ` inside the definitions cell.
pub fn load_deck_csv(path: &Path) -> Result<WordDeck, DomainError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| DomainError::DeckParse {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;

    let mut entries = Vec::new();
    for (i, row) in reader.deserialize::<CsvDeckRow>().enumerate() {
        let row = row.map_err(|e| DomainError::DeckParse {
            path: path.display().to_string(),
            detail: format!("row {}: {}", i + 2, e),
        })?;
        let definitions = row
            .definitions
            .split(DEFINITION_DELIMITER)
            .map(|s| s.to_string())
            .collect();
        entries.push(WordEntry {
            word: row.word,
            pos: row.pos,
            definitions,
            frequency: row.frequency,
        });
    }
    Ok(WordDeck::new(deck_name_from_path(path), entries))
}

/// Load a deck, deciding the format from the file extension (`.csv` is CSV,
/// anything else is treated as JSON).
pub fn load_deck(path: &Path) -> Result<WordDeck, DomainError> {
    match path.extension().and_then(|e| e.to_str()) {
        Some("csv") => load_deck_csv(path),
        _ => load_deck_json(path),
    }
}

/// Write a deck as the JSON array format understood by `load_deck_json`.
pub fn save_deck_json(deck: &WordDeck, path: &Path) -> Result<(), DomainError> {
    let body = serde_json::to_string_pretty(&deck.entries).expect("deck serializes");
    std::fs::write(path, body).map_err(|e| DomainError::DeckIo {
        path: path.display().to_string(),
        source: e,
    })
}

fn deck_name_from_path(path: &Path) -> String {
    path.file_stem()
        .and_then(|s| s.to_str())
        .unwrap_or("deck")
        .to_string()
}

#[derive(Debug, Deserialize)]
struct CsvDeckRow {
    word: String,
    pos: String,
    definitions: String,
    #[serde(default)]
    frequency: Option<f64>,
}

/// Cross-field invariants over a finished game record. Used by tests and by
/// consumers of loaded stores; an empty list means the record is coherent.
pub fn validate_game_record(record: &GameRecord) -> Vec<String> {
    let mut violations = Vec::new();
    let player_ids: Vec<PlayerId> = record.players.iter().map(|p| p.player_id).collect();

    if record.rounds.len() > record.config.num_rounds as usize {
        violations.push(format!(
            "game {}: {} rounds exceed configured {}",
            record.game_id,
            record.rounds.len(),
            record.config.num_rounds
        ));
    }

    for player in &record.players {
        if player.rank_history.len() != record.rounds.len() {
            violations.push(format!(
                "game {}: player {} has {} ranks for {} completed rounds",
                record.game_id,
                player.player_id,
                player.rank_history.len(),
                record.rounds.len()
            ));
        }
        for &rank in &player.rank_history {
            if rank == 0 || rank as usize > record.players.len() {
                violations.push(format!(
                    "game {}: player {} rank {} outside [1, {}]",
                    record.game_id,
                    player.player_id,
                    rank,
                    record.players.len()
                ));
            }
        }
    }

    let mut words_seen: BTreeMap<String, u32> = BTreeMap::new();
    for round in &record.rounds {
        if let Some(prev) = words_seen.insert(round.word.word.to_lowercase(), round.round_id) {
            violations.push(format!(
                "game {}: word '{}' reused in rounds {} and {}",
                record.game_id, round.word.word, prev, round.round_id
            ));
        }
        violations.extend(validate_round(record.game_id, round, &player_ids));
    }

    // Ranks recomputed from stored per-round scores must reproduce rank_history.
    let mut cumulative: BTreeMap<PlayerId, i64> = player_ids.iter().map(|&p| (p, 0)).collect();
    for (i, round) in record.rounds.iter().enumerate() {
        for (&p, &s) in &round.scores {
            *cumulative.entry(p).or_insert(0) += s;
        }
        for player in &record.players {
            let mine = cumulative[&player.player_id];
            let rank = 1 + cumulative.values().filter(|&&c| c > mine).count() as u32;
            if player.rank_history.get(i) != Some(&rank) {
                violations.push(format!(
                    "game {}: player {} rank after round {} is {:?}, recomputed {}",
                    record.game_id,
                    player.player_id,
                    round.round_id,
                    player.rank_history.get(i),
                    rank
                ));
            }
        }
    }

    violations
}

fn validate_round(game_id: u64, round: &RoundRecord, players: &[PlayerId]) -> Vec<String> {
    let mut violations = Vec::new();

    let reference_entries = round
        .ballot
        .entries
        .iter()
        .filter(|e| e.source == VoteTarget::Reference)
        .count();
    if !round.ballot.entries.is_empty() && reference_entries != 1 {
        violations.push(format!(
            "game {} round {}: ballot has {} reference entries",
            game_id, round.round_id, reference_entries
        ));
    }

    for (player, record) in &round.definitions {
        if record.judge_decision && !record.llm_knows_one {
            violations.push(format!(
                "game {} round {}: player {} judge_decision without llm_knows_one",
                game_id, round.round_id, player
            ));
        }
        if record.judge_decision {
            if round.ballot.index_of_player(*player).is_some() {
                violations.push(format!(
                    "game {} round {}: correct player {} appears on the ballot",
                    game_id, round.round_id, player
                ));
            }
            if round.votes.contains_key(player) {
                violations.push(format!(
                    "game {} round {}: correct player {} appears in votes",
                    game_id, round.round_id, player
                ));
            }
        } else if !record.abstained() && round.ballot.index_of_player(*player).is_none() {
            violations.push(format!(
                "game {} round {}: player {}'s surviving definition is missing from the ballot",
                game_id, round.round_id, player
            ));
        }
    }

    // Each voter's allowed set is every display index except their own entry.
    for (voter, allowed) in &round.ballot.allowed {
        let own = round.ballot.index_of_player(*voter);
        for entry in &round.ballot.entries {
            let should_hold = Some(entry.display_index) != own;
            if allowed.contains(&entry.display_index) != should_hold {
                violations.push(format!(
                    "game {} round {}: voter {} allowed set {:?} wrong at index {}",
                    game_id, round.round_id, voter, allowed, entry.display_index
                ));
            }
        }
    }

    for (voter, target) in &round.votes {
        if *target == VoteTarget::Player(*voter) {
            violations.push(format!(
                "game {} round {}: player {} voted for themselves",
                game_id, round.round_id, voter
            ));
        }
    }

    for player in players {
        if !round.scores.contains_key(player) {
            violations.push(format!(
                "game {} round {}: player {} missing from scores",
                game_id, round.round_id, player
            ));
        }
    }

    violations
}
