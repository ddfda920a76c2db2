//! Error types, one enum per module boundary.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum DomainError {
    #[error("unknown history type '{0}' (expected none, mini, or full)")]
    InvalidHistoryType(String),
    #[error("invalid vote target {0}: must be -1 or a player id")]
    InvalidVoteTarget(i64),
    #[error("subset count ({count}) and size ({size}) must both be positive")]
    InvalidSubsetSpec { count: usize, size: usize },
    #[error("subset size {size} exceeds deck '{deck}' with {deck_size} entries")]
    SubsetTooLarge {
        size: usize,
        deck_size: usize,
        deck: String,
    },
    #[error("cannot read deck file {path}: {source}")]
    DeckIo {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("cannot parse deck file {path}: {detail}")]
    DeckParse { path: String, detail: String },
}

#[derive(Debug, Error)]
pub enum PromptError {
    #[error("prompt bundle is missing template '{0}'")]
    MissingTemplate(String),
    #[error("word must be non-empty")]
    EmptyWord,
    #[error("voter {0} has no allowed-index set on this ballot")]
    UnknownVoter(u32),
    #[error("response is empty or whitespace-only")]
    EmptyResponse,
    #[error("vote response '{got}' is not a single digit among the allowed choices {allowed:?}")]
    VoteFormat { got: String, allowed: Vec<u32> },
    #[error("judge response '{0}' contains neither 'true' nor 'false'")]
    VerdictFormat(String),
    #[error("cannot read prompt bundle at {path}: {detail}")]
    BundleIo { path: String, detail: String },
}

#[derive(Debug, Error)]
pub enum AgentError {
    #[error("message list is empty")]
    EmptyMessages,
    #[error("first message must be a system or user message")]
    BadLeadingRole,
    #[error("message content must be non-empty")]
    EmptyContent,
    #[error("scripted agent '{0}' exhausted its script after {1} calls")]
    ScriptExhausted(String, usize),
    #[error("scripted agent '{0}' has no response matching the prompt")]
    NoScriptMatch(String),
    #[error("agent '{agent}' transport failure after {attempts} attempts: {detail}")]
    Transport {
        agent: String,
        attempts: u32,
        detail: String,
    },
    #[error("agent '{agent}' endpoint returned status {status}: {body}")]
    Http {
        agent: String,
        status: u16,
        body: String,
    },
    #[error("agent '{agent}' authentication failure: environment variable '{var}' is not set")]
    MissingApiKey { agent: String, var: String },
    #[error("agent '{0}' response carries no assistant content")]
    MissingContent(String),
}

#[derive(Debug, Error)]
pub enum JudgeError {
    #[error("judge verdict unparseable after {attempts} attempts: {detail}")]
    Unparseable { attempts: u32, detail: String },
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error("judge evaluation dataset is empty")]
    EmptyDataset,
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("game needs at least one player")]
    NoPlayers,
    #[error("player ids must be unique (duplicate {0})")]
    DuplicatePlayer(u32),
    #[error("invalid game config: {0:?}")]
    InvalidConfig(Vec<String>),
    #[error(transparent)]
    Prompt(#[from] PromptError),
    #[error(transparent)]
    Agent(#[from] AgentError),
    #[error(transparent)]
    Store(#[from] StoreError),
}

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("group '{0}' has no members in this round")]
    EmptyGroup(String),
    #[error("game {game_id} has {found} rounds, expected {expected}")]
    UnequalRoundCounts {
        game_id: u64,
        found: usize,
        expected: usize,
    },
    #[error("no games to aggregate")]
    NoGames,
    #[error("convergence threshold T={t} is not below the series length {len}")]
    ConvergenceThreshold { t: usize, len: usize },
    #[error("epsilon {0} outside (0, 1)")]
    InvalidEpsilon(f64),
}

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("store I/O failure at {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{file}:{line}: corrupt document: {detail}")]
    Corrupt {
        file: String,
        line: usize,
        detail: String,
    },
    #[error("game {0} is already persisted in this store")]
    DuplicateGame(u64),
    #[error("no store found at {0}")]
    Missing(String),
    #[error("document schema version {found} unsupported (expected {expected})")]
    SchemaVersion { found: u32, expected: u32 },
}
