//! Multi-agent Balderdash: a game engine where chat-model agents invent and
//! judge definitions for obscure words, with per-round metrics, convergence
//! analysis, and reproducible runs persisted as JSONL collections.

pub mod agents;
pub mod domain;
pub mod engine;
pub mod error;
pub mod judge;
pub mod metrics;
pub mod prompts;
pub mod store;
