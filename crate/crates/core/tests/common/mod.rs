//! Shared helpers for integration tests: deck/config builders, randomized
//! round generation, and brute-force metric oracles kept deliberately
//! independent of the implementations they check.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

use balderdash_core::domain::{
    Ballot, DefinitionRecord, GameConfig, HistoryType, PlayerId, RoundRecord, ScoringRules,
    VoteTarget, WordDeck, WordEntry,
};

pub fn word(name: &str, defs: &[&str]) -> WordEntry {
    WordEntry::new(name, "noun", defs.iter().map(|d| d.to_string()).collect())
}

pub fn deck(name: &str, words: &[&str]) -> WordDeck {
    WordDeck::new(
        name,
        words.iter().map(|w| word(w, &[&format!("true def of {w}")])).collect(),
    )
}

pub fn config(deck: WordDeck, rounds: u32, seed: u64, history: HistoryType) -> GameConfig {
    GameConfig {
        description: "integration test".to_string(),
        num_rounds: rounds,
        judge_model: "scripted-judge".to_string(),
        random_seed: seed,
        scoring: ScoringRules::default(),
        history_type: history,
        history_window: 20,
        temperature: 0.9,
        deck,
        prompt_set: "builtin".to_string(),
    }
}

/// A randomized synthetic round plus its group map, for oracle checks.
pub struct SyntheticRound {
    pub round: RoundRecord,
    /// group name -> member ids; every group non-empty.
    pub groups: BTreeMap<String, Vec<PlayerId>>,
}

/// Generate a random but domain-coherent round: 2-8 players, 1-4 groups,
/// judge flags with `judge_decision => llm_knows_one`, votes only from
/// judge_decision=false players, never for oneself, scores arbitrary.
pub fn synthetic_round(rng: &mut StdRng) -> SyntheticRound {
    let player_count = rng.gen_range(2..=8u32);
    let group_count = rng.gen_range(1..=4.min(player_count));
    let players: Vec<PlayerId> = (1..=player_count).collect();

    let mut groups: BTreeMap<String, Vec<PlayerId>> = BTreeMap::new();
    for (i, &p) in players.iter().enumerate() {
        // First `group_count` players seed one group each so none is empty.
        let g = if (i as u32) < group_count {
            i as u32
        } else {
            rng.gen_range(0..group_count)
        };
        groups.entry(format!("g{g}")).or_default().push(p);
    }

    let mut definitions = BTreeMap::new();
    for &p in &players {
        let judge_decision = rng.gen_bool(0.3);
        let llm_knows_one = judge_decision || rng.gen_bool(0.3);
        definitions.insert(
            p,
            DefinitionRecord {
                player_id: p,
                raw_response: format!("\"def {p}\""),
                parsed_definition: format!("def {p}"),
                conforming: true,
                judge_decision,
                llm_knows_one,
            },
        );
    }

    let mut votes = BTreeMap::new();
    for &p in &players {
        if definitions[&p].judge_decision || rng.gen_bool(0.15) {
            continue; // sat out, or vote failed to parse
        }
        let candidates: Vec<VoteTarget> = players
            .iter()
            .filter(|&&q| q != p && !definitions[&q].judge_decision)
            .map(|&q| VoteTarget::Player(q))
            .chain(std::iter::once(VoteTarget::Reference))
            .collect();
        votes.insert(p, candidates[rng.gen_range(0..candidates.len())]);
    }

    let scores = players
        .iter()
        .map(|&p| (p, rng.gen_range(-10..=60i64)))
        .collect();

    SyntheticRound {
        round: RoundRecord {
            round_id: rng.gen_range(1..=20),
            word: word("synthetic", &["a def"]),
            definitions,
            ballot: Ballot::default(),
            votes,
            scores,
        winners_strategies: vec![],
        },
        groups,
    }
}

/// Like [`synthetic_round`], but every eligible player voted and scores come
/// from the scoring rules, so the AS decomposition identity applies.
pub fn scored_round(rng: &mut StdRng, rules: &ScoringRules) -> SyntheticRound {
    loop {
        let mut synthetic = synthetic_round(rng);
        // Make votes complete: every judge_decision=false player votes.
        let players: Vec<PlayerId> = synthetic.round.definitions.keys().copied().collect();
        let mut votes = BTreeMap::new();
        for &p in &players {
            if synthetic.round.definitions[&p].judge_decision {
                continue;
            }
            let candidates: Vec<VoteTarget> = players
                .iter()
                .filter(|&&q| q != p && !synthetic.round.definitions[&q].judge_decision)
                .map(|&q| VoteTarget::Player(q))
                .chain(std::iter::once(VoteTarget::Reference))
                .collect();
            votes.insert(p, candidates[rng.gen_range(0..candidates.len())]);
        }
        if votes.len() < 2 {
            continue; // decomposition needs >= 2 voters
        }
        synthetic.round.votes = votes;
        synthetic.round.scores = balderdash_core::engine::score_round(
            &synthetic.round.definitions,
            &synthetic.round.votes,
            rules,
        );
        return synthetic;
    }
}

// ---- Brute-force oracles (independent of the metrics module) ----

pub fn oracle_tdr(round: &RoundRecord, group: &[PlayerId]) -> f64 {
    let mut count = 0u64;
    for p in group {
        if round.definitions[p].judge_decision {
            count += 1;
        }
    }
    count as f64 / group.len() as f64
}

pub fn oracle_lkr(round: &RoundRecord, group: &[PlayerId]) -> f64 {
    let mut count = 0u64;
    for p in group {
        if round.definitions[p].llm_knows_one {
            count += 1;
        }
    }
    count as f64 / group.len() as f64
}

pub fn oracle_dr(round: &RoundRecord, group: &[PlayerId]) -> Option<f64> {
    let voters = round.votes.len();
    if voters <= 1 {
        return None;
    }
    // Integer numerators first, one division at the end of each term.
    let mut total = 0.0f64;
    for p in group {
        let mut received = 0u64;
        for target in round.votes.values() {
            if *target == VoteTarget::Player(*p) {
                received += 1;
            }
        }
        total += received as f64 / (voters as f64 - 1.0);
    }
    Some(total / group.len() as f64)
}

pub fn oracle_cgr(round: &RoundRecord, group: &[PlayerId]) -> f64 {
    let mut count = 0u64;
    for p in group {
        if let Some(VoteTarget::Reference) = round.votes.get(p) {
            count += 1;
        }
    }
    count as f64 / group.len() as f64
}

pub fn oracle_avg_score(round: &RoundRecord, group: &[PlayerId]) -> f64 {
    let mut total = 0i64;
    for p in group {
        total += round.scores[p];
    }
    total as f64 / group.len() as f64
}

/// Deterministic RNG for test generation.
pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// Wraps an agent and keeps every message list it was asked to complete.
pub struct RecordingAgent<A> {
    inner: A,
    pub transcript: std::sync::Mutex<Vec<Vec<balderdash_core::agents::ChatMessage>>>,
}

impl<A> RecordingAgent<A> {
    pub fn new(inner: A) -> Self {
        Self {
            inner,
            transcript: std::sync::Mutex::new(Vec::new()),
        }
    }

    pub fn prompts(&self) -> Vec<Vec<balderdash_core::agents::ChatMessage>> {
        self.transcript.lock().unwrap().clone()
    }
}

impl<A: balderdash_core::agents::ChatAgent> balderdash_core::agents::ChatAgent
    for RecordingAgent<A>
{
    fn agent_id(&self) -> &str {
        self.inner.agent_id()
    }

    fn complete(
        &self,
        messages: &[balderdash_core::agents::ChatMessage],
    ) -> Result<String, balderdash_core::error::AgentError> {
        self.transcript.lock().unwrap().push(messages.to_vec());
        self.inner.complete(messages)
    }
}
