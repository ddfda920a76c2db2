//! The five prompt categories, history CSV rendering, and response parsing.
//!
//! Template texts are a replication surface: the builtin bundle must stay
//! byte-identical to the shipped `prompts/*.txt` files, including the
//! misspelled `guessed_correct_definiton` history column and the `True`/
//! `False` boolean literals. Treat any edit there as a breaking change.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::domain::{Ballot, HistoryType, PlayerId, ScoringRules};
use crate::error::PromptError;

/// Template ids, one file per id in an on-disk bundle.
pub const TEMPLATE_IDS: [&str; 13] = [
    "game_rules_history",
    "game_rules_no_history",
    "generate_definition_history",
    "generate_definition_no_history",
    "vote_on_definitions_history",
    "vote_on_definitions_no_history",
    "full_history",
    "mini_history",
    "judge_system",
    "judge_user",
    "dictionary_system",
    "dictionary_user",
    "deceive_user",
];

const BUILTIN_TEMPLATES: [(&str, &str); 13] = [
    ("game_rules_history", include_str!("../prompts/game_rules_history.txt")),
    ("game_rules_no_history", include_str!("../prompts/game_rules_no_history.txt")),
    (
        "generate_definition_history",
        include_str!("../prompts/generate_definition_history.txt"),
    ),
    (
        "generate_definition_no_history",
        include_str!("../prompts/generate_definition_no_history.txt"),
    ),
    (
        "vote_on_definitions_history",
        include_str!("../prompts/vote_on_definitions_history.txt"),
    ),
    (
        "vote_on_definitions_no_history",
        include_str!("../prompts/vote_on_definitions_no_history.txt"),
    ),
    ("full_history", include_str!("../prompts/full_history.txt")),
    ("mini_history", include_str!("../prompts/mini_history.txt")),
    ("judge_system", include_str!("../prompts/judge_system.txt")),
    ("judge_user", include_str!("../prompts/judge_user.txt")),
    ("dictionary_system", include_str!("../prompts/dictionary_system.txt")),
    ("dictionary_user", include_str!("../prompts/dictionary_user.txt")),
    ("deceive_user", include_str!("../prompts/deceive_user.txt")),
];

/// One row of a player's per-round history review.
///
/// `definition` through `round_winners_strategies` only appear in full
/// history; `guessed_correct_definiton` keeps its original spelling because
/// the rendered column name is part of the prompt contract.
#[derive(Debug, Clone, PartialEq)]
pub struct HistoryRow {
    pub round_id: u32,
    pub rank_among_players: u32,
    pub score: i64,
    pub word: String,
    pub definition: String,
    pub generated_definition: String,
    pub wrote_true_definition: bool,
    pub guessed_correct_definiton: bool,
    /// Votes received / (voters - 1); -1 when `wrote_true_definition`.
    pub deception_ratio: f64,
    pub round_winners_strategies: Vec<(String, String)>,
}

pub const FULL_HISTORY_HEADER: &str = "round_id,rank_among_players,score,word,definition,generated_definition,wrote_true_definition,guessed_correct_definiton,deception_ratio,round_winners_strategies";
pub const MINI_HISTORY_HEADER: &str = "round_id,rank_among_players,score,word,generated_definition";

/// A named bundle of prompt templates.
#[derive(Debug, Clone, PartialEq)]
pub struct PromptSet {
    id: String,
    templates: BTreeMap<String, String>,
}

impl PromptSet {
    /// The default bundle, compiled in from `prompts/*.txt`.
    pub fn builtin() -> Self {
        let templates = BUILTIN_TEMPLATES
            .iter()
            .map(|(id, text)| ((*id).to_string(), strip_one_newline(text).to_string()))
            .collect();
        Self {
            id: "builtin".to_string(),
            templates,
        }
    }

    /// Load a bundle from a directory holding one `<template_id>.txt` per id.
    /// A single trailing newline per file is not part of the template.
    pub fn load_dir(path: &Path) -> Result<Self, PromptError> {
        let mut templates = BTreeMap::new();
        for id in TEMPLATE_IDS {
            let file = path.join(format!("{id}.txt"));
            let text = std::fs::read_to_string(&file).map_err(|e| {
                if e.kind() == std::io::ErrorKind::NotFound {
                    PromptError::MissingTemplate(id.to_string())
                } else {
                    PromptError::BundleIo {
                        path: file.display().to_string(),
                        detail: e.to_string(),
                    }
                }
            })?;
            templates.insert(id.to_string(), strip_one_newline(&text).to_string());
        }
        Ok(Self {
            id: path.display().to_string(),
            templates,
        })
    }

    /// Write the bundle as a directory of `<template_id>.txt` files.
    pub fn write_dir(&self, path: &Path) -> Result<(), PromptError> {
        std::fs::create_dir_all(path).map_err(|e| PromptError::BundleIo {
            path: path.display().to_string(),
            detail: e.to_string(),
        })?;
        for (id, text) in &self.templates {
            let file = path.join(format!("{id}.txt"));
            std::fs::write(&file, format!("{text}\n")).map_err(|e| PromptError::BundleIo {
                path: file.display().to_string(),
                detail: e.to_string(),
            })?;
        }
        Ok(())
    }

    /// Bundle identifier: "builtin" or the directory it was loaded from.
    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn template(&self, id: &str) -> Result<&str, PromptError> {
        self.templates
            .get(id)
            .map(String::as_str)
            .ok_or_else(|| PromptError::MissingTemplate(id.to_string()))
    }

    /// SHA-256 over all template ids and bodies, for run manifests.
    pub fn bundle_hash(&self) -> String {
        let mut hasher = Sha256::new();
        for (id, text) in &self.templates {
            hasher.update(id.as_bytes());
            hasher.update([0]);
            hasher.update(text.as_bytes());
            hasher.update([0]);
        }
        hex_digest(hasher)
    }

    /// The game-rules system prompt with the three point placeholders filled.
    pub fn render_game_rules(&self, rules: &ScoringRules, with_history: bool) -> String {
        let id = if with_history {
            "game_rules_history"
        } else {
            "game_rules_no_history"
        };
        self.template(id)
            .expect("builtin template present")
            .replace(
                "{correct_definition_points}",
                &rules.correct_definition_points.to_string(),
            )
            .replace("{correct_vote_points}", &rules.correct_vote_points.to_string())
            .replace(
                "{receiving_vote_points}",
                &rules.receiving_vote_points.to_string(),
            )
    }

    /// The full or mini history user prompt with the CSV spliced in.
    pub fn render_history_block(&self, kind: HistoryType, history_csv: &str) -> Result<String, PromptError> {
        let id = match kind {
            HistoryType::Full => "full_history",
            HistoryType::Mini => "mini_history",
            HistoryType::None => return Err(PromptError::MissingTemplate("none".to_string())),
        };
        Ok(self.template(id)?.replace("{history_csv}", history_csv))
    }

    /// The definition-phase user prompt. `history_block` is a rendered
    /// history prompt (see [`PromptSet::render_history_block`]); when present
    /// the history-aware variant is used and the block is appended.
    pub fn render_generate_definition(
        &self,
        word: &str,
        history_block: Option<&str>,
    ) -> Result<String, PromptError> {
        if word.trim().is_empty() {
            return Err(PromptError::EmptyWord);
        }
        let (id, suffix) = match history_block {
            Some(block) => ("generate_definition_history", Some(block)),
            None => ("generate_definition_no_history", None),
        };
        let mut text = self.template(id)?.replace("{word}", word);
        if let Some(block) = suffix {
            text.push('\n');
            text.push_str(block);
        }
        Ok(text)
    }

    /// The voting-phase user prompt for one voter.
    pub fn render_vote_prompt(
        &self,
        word: &str,
        own_definition: &str,
        ballot: &Ballot,
        voter: PlayerId,
        history_block: Option<&str>,
    ) -> Result<String, PromptError> {
        let allowed = ballot
            .allowed
            .get(&voter)
            .ok_or(PromptError::UnknownVoter(voter))?;

        let mut definitions = String::new();
        for (i, entry) in ballot.entries.iter().enumerate() {
            if i > 0 {
                definitions.push('\n');
            }
            write!(definitions, "{}. {}", entry.display_index, entry.text).unwrap();
        }

        let id = if history_block.is_some() {
            "vote_on_definitions_history"
        } else {
            "vote_on_definitions_no_history"
        };
        // {definitions} must be substituted before {definition}: the latter
        // is a prefix of the former.
        let mut text = self
            .template(id)?
            .replace("{definitions}", &definitions)
            .replace("{word}", word)
            .replace("{definition}", own_definition)
            .replace(
                "{all_indexes_excluding_player_descriptive}",
                &prose_enumeration(allowed),
            )
            .replace("{all_indexes_excluding_player}", &comma_list(allowed));
        if let Some(block) = history_block {
            text.push('\n');
            text.push_str(block);
        }
        Ok(text)
    }

    /// The judge's system prompt (no placeholders).
    pub fn judge_system(&self) -> &str {
        self.template("judge_system").expect("builtin template present")
    }

    /// The judge's user prompt for one (word, reference, candidate) triple.
    pub fn render_judge_user(&self, word: &str, reference: &str, candidate: &str) -> String {
        self.template("judge_user")
            .expect("builtin template present")
            .replace("{word}", word)
            .replace("{correct_definition}", reference)
            .replace("{definition}", candidate)
    }

    /// The universal-dictionary system prompt used by known-word labeling.
    pub fn dictionary_system(&self) -> &str {
        self.template("dictionary_system").expect("builtin template present")
    }

    /// The universal-dictionary user prompt: the word and its part of speech.
    pub fn render_dictionary_user(&self, word: &str, pos: &str) -> String {
        self.template("dictionary_user")
            .expect("builtin template present")
            .replace("{word}", word)
            .replace("{pos}", pos)
    }

    /// Prompt asking a model for a deliberately deceiving definition.
    pub fn render_deceive_user(&self, word: &str) -> String {
        self.template("deceive_user")
            .expect("builtin template present")
            .replace("{word}", word)
    }
}

impl Default for PromptSet {
    fn default() -> Self {
        Self::builtin()
    }
}

/// Render history rows as CSV: header plus the last `window` rows.
///
/// Full and mini column sets are fixed; booleans render as `True`/`False`,
/// the winners list as `[(definition, outcome), ...]`, and fields containing
/// commas, quotes, or newlines get RFC 4180 quoting.
pub fn render_history_csv(rows: &[HistoryRow], kind: HistoryType, window: u32) -> String {
    let header = match kind {
        HistoryType::Full => FULL_HISTORY_HEADER,
        _ => MINI_HISTORY_HEADER,
    };
    let mut out = String::from(header);
    out.push('\n');

    let start = rows.len().saturating_sub(window as usize);
    for row in &rows[start..] {
        let mut fields: Vec<String> = vec![
            row.round_id.to_string(),
            row.rank_among_players.to_string(),
            row.score.to_string(),
            csv_escape(&row.word),
        ];
        match kind {
            HistoryType::Full => {
                fields.push(csv_escape(&row.definition));
                fields.push(csv_escape(&row.generated_definition));
                fields.push(python_bool(row.wrote_true_definition).to_string());
                fields.push(python_bool(row.guessed_correct_definiton).to_string());
                fields.push(row.deception_ratio.to_string());
                fields.push(csv_escape(&render_winners_list(&row.round_winners_strategies)));
            }
            _ => {
                fields.push(csv_escape(&row.generated_definition));
            }
        }
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

/// `[(definition, outcome), ...]` cell content for the winners column.
pub fn render_winners_list(winners: &[(String, String)]) -> String {
    let body = winners
        .iter()
        .map(|(def, outcome)| format!("({def}, {outcome})"))
        .collect::<Vec<_>>()
        .join(", ");
    format!("[{body}]")
}

/// Extract the player's definition from a raw response.
///
/// Returns `(definition, conforming)`: the contents of the first complete
/// double-quoted span when one exists, otherwise the whole trimmed response
/// flagged non-conforming.
pub fn parse_definition(raw: &str) -> Result<(String, bool), PromptError> {
    let trimmed = raw.trim();
    if trimmed.is_empty() {
        return Err(PromptError::EmptyResponse);
    }
    if let Some(open) = raw.find('"') {
        if let Some(len) = raw[open + 1..].find('"') {
            return Ok((raw[open + 1..open + 1 + len].to_string(), true));
        }
    }
    Ok((trimmed.to_string(), false))
}

/// Parse a vote: a single decimal digit, after trimming whitespace and
/// surrounding quotes, that is a member of `allowed`.
pub fn parse_vote(raw: &str, allowed: &[u32]) -> Result<u32, PromptError> {
    let token = raw.trim().trim_matches(|c| c == '"' || c == '\'').trim();
    let err = || PromptError::VoteFormat {
        got: raw.trim().to_string(),
        allowed: allowed.to_vec(),
    };
    let mut chars = token.chars();
    let (first, rest) = (chars.next().ok_or_else(err)?, chars.next());
    if rest.is_some() || !first.is_ascii_digit() {
        return Err(err());
    }
    let index = first.to_digit(10).unwrap();
    if allowed.contains(&index) {
        Ok(index)
    } else {
        Err(err())
    }
}

/// Parse a judge verdict: the first whitespace token must read `true` or
/// `false` (case-insensitive) once surrounding quotes/punctuation are shed.
pub fn parse_judge_verdict(raw: &str) -> Result<bool, PromptError> {
    let token = raw
        .split_whitespace()
        .next()
        .ok_or_else(|| PromptError::VerdictFormat(raw.to_string()))?
        .trim_matches(|c: char| !c.is_alphanumeric());
    match token.to_lowercase().as_str() {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(PromptError::VerdictFormat(raw.trim().to_string())),
    }
}

fn python_bool(b: bool) -> &'static str {
    if b {
        "True"
    } else {
        "False"
    }
}

fn csv_escape(field: &str) -> String {
    if field.contains(',') || field.contains('"') || field.contains('\n') || field.contains('\r') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

/// "1, 2, or 4" style enumeration for the descriptive placeholder.
fn prose_enumeration(indices: &[u32]) -> String {
    match indices {
        [] => String::new(),
        [only] => only.to_string(),
        [a, b] => format!("{a} or {b}"),
        [init @ .., last] => {
            let head = init.iter().map(u32::to_string).collect::<Vec<_>>().join(", ");
            format!("{head}, or {last}")
        }
    }
}

fn comma_list(indices: &[u32]) -> String {
    indices.iter().map(u32::to_string).collect::<Vec<_>>().join(", ")
}

fn strip_one_newline(text: &str) -> &str {
    text.strip_suffix('\n')
        .map(|t| t.strip_suffix('\r').unwrap_or(t))
        .unwrap_or(text)
}

fn hex_digest(hasher: Sha256) -> String {
    hasher
        .finalize()
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
