//! Round-by-round game orchestration: announce a word, collect definitions,
//! judge them, build the ballot, collect votes, score, and rank.
//!
//! A game is fully deterministic given its seed and scripted agents: word
//! order and ballot shuffles come from per-stream ChaCha seeds, player agent
//! calls join in seat order whether or not a phase fans out, and judge calls
//! are always sequential in player order (the judge is a shared agent).

use std::collections::BTreeMap;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::{AgentBinding, ChatAgent, ChatMessage};
use crate::domain::{
    Ballot, BallotEntry, DefinitionRecord, GameConfig, GameRecord, HistoryType, PlayerId,
    PlayerState, RoundRecord, ScoringRules, SkippedRound, VoteTarget, WordEntry,
};
use crate::error::{AgentError, EngineError};
use crate::judge::Judge;
use crate::prompts::{parse_definition, parse_vote, render_history_csv, HistoryRow, PromptSet};
use crate::store::Store;

/// One player's chair at the table: identity plus the agent answering for it.
#[derive(Clone)]
pub struct Seat {
    pub llm_group: String,
    pub llm_name: String,
    pub agent: Arc<dyn ChatAgent>,
    /// Re-asks on format errors before the player abstains for the phase.
    pub retry_limit: u32,
}

impl Seat {
    pub fn new(
        llm_group: impl Into<String>,
        llm_name: impl Into<String>,
        agent: Arc<dyn ChatAgent>,
        retry_limit: u32,
    ) -> Self {
        Self {
            llm_group: llm_group.into(),
            llm_name: llm_name.into(),
            agent,
            retry_limit,
        }
    }

    /// Seat backed by whatever agent the binding describes.
    pub fn from_binding(group: impl Into<String>, binding: &AgentBinding) -> Result<Self, AgentError> {
        Ok(Self {
            llm_group: group.into(),
            llm_name: binding.model_name.clone(),
            agent: crate::agents::build_agent(binding)?.into(),
            retry_limit: binding.retry_limit,
        })
    }
}

/// The judge's agent and its format-retry limit.
#[derive(Clone)]
pub struct JudgeSeat {
    pub agent: Arc<dyn ChatAgent>,
    pub retry_limit: u32,
}

impl JudgeSeat {
    pub fn new(agent: Arc<dyn ChatAgent>, retry_limit: u32) -> Self {
        Self { agent, retry_limit }
    }

    pub fn from_binding(binding: &AgentBinding) -> Result<Self, AgentError> {
        Ok(Self {
            agent: crate::agents::build_agent(binding)?.into(),
            retry_limit: binding.retry_limit,
        })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineOptions {
    /// Fan player agent calls out across threads within each phase. Output
    /// is identical either way; judge calls stay sequential regardless.
    pub parallel_phases: bool,
}

/// Runs games for one (config, seats, judge) triple.
pub struct GameRunner<'a> {
    config: &'a GameConfig,
    seats: &'a [Seat],
    judge: &'a JudgeSeat,
    prompts: &'a PromptSet,
    options: EngineOptions,
}

/// Outcome labels for `winners_strategies` tuples.
pub mod outcome {
    pub const WROTE_TRUE_DEFINITION: &str = "wrote_true_definition";
    pub const DECEIVED_AND_GUESSED: &str = "deceived_and_guessed";
    pub const DECEIVED: &str = "deceived";
    pub const GUESSED_CORRECT: &str = "guessed_correct";
    pub const NONE: &str = "none";
}

// Seed streams: 0 shuffles the deck, and each round's ballot uses the round
// id as its stream, so a skipped round never shifts later shuffles.
const WORD_ORDER_STREAM: u64 = 0;

impl<'a> GameRunner<'a> {
    pub fn new(
        config: &'a GameConfig,
        seats: &'a [Seat],
        judge: &'a JudgeSeat,
        prompts: &'a PromptSet,
        options: EngineOptions,
    ) -> Result<Self, EngineError> {
        if seats.is_empty() {
            return Err(EngineError::NoPlayers);
        }
        let violations = config.validate();
        if !violations.is_empty() {
            return Err(EngineError::InvalidConfig(violations));
        }
        Ok(Self {
            config,
            seats,
            judge,
            prompts,
            options,
        })
    }

    /// Play the configured number of rounds and return the full record.
    pub fn run(&self, game_id: u64) -> Result<GameRecord, EngineError> {
        let mut players: Vec<PlayerState> = self
            .seats
            .iter()
            .enumerate()
            .map(|(i, seat)| PlayerState::new(i as PlayerId + 1, &seat.llm_group, &seat.llm_name))
            .collect();

        let words = self.word_order();
        let mut rounds = Vec::new();
        let mut skipped = Vec::new();
        let mut histories: BTreeMap<PlayerId, Vec<HistoryRow>> =
            players.iter().map(|p| (p.player_id, Vec::new())).collect();

        for (i, word) in words.iter().take(self.config.num_rounds as usize).enumerate() {
            let round_id = i as u32 + 1;
            match self.play_round(round_id, word, &mut players, &histories) {
                Ok(round) => {
                    self.append_history_rows(&round, &players, &mut histories);
                    rounds.push(round);
                }
                Err(RoundAbort::Judge(reason)) => {
                    log::warn!("game {game_id} round {round_id} skipped: {reason}");
                    skipped.push(SkippedRound {
                        round_id,
                        word: word.word.clone(),
                        reason,
                    });
                }
                Err(RoundAbort::Fatal(e)) => return Err(e),
            }
        }

        Ok(GameRecord {
            game_id,
            config: self.config.clone(),
            players,
            rounds,
            skipped_rounds: skipped,
        })
    }

    /// [`GameRunner::run`], then persist the record before returning it.
    pub fn run_into(&self, game_id: u64, store: &mut Store) -> Result<GameRecord, EngineError> {
        let record = self.run(game_id)?;
        store.persist_game(&record)?;
        Ok(record)
    }

    /// Seeded shuffle of the deck; rounds consume words front to back.
    fn word_order(&self) -> Vec<WordEntry> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.random_seed);
        rng.set_stream(WORD_ORDER_STREAM);
        let mut words = self.config.deck.entries.clone();
        words.shuffle(&mut rng);
        words
    }

    fn play_round(
        &self,
        round_id: u32,
        word: &WordEntry,
        players: &mut [PlayerState],
        histories: &BTreeMap<PlayerId, Vec<HistoryRow>>,
    ) -> Result<RoundRecord, RoundAbort> {
        let definitions = self.collect_definitions(round_id, word, histories)?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.config.random_seed);
        rng.set_stream(round_id as u64);
        let ballot = build_ballot(&definitions, word.reference_definition(), &mut rng);

        let votes = self
            .collect_votes(word, &definitions, &ballot, histories)
            .map_err(RoundAbort::Fatal)?;
        let scores = score_round(&definitions, &votes, &self.config.scoring);
        update_ranks(players, &scores);
        let winners_strategies = compute_winners_strategies(&definitions, &votes, &scores);

        Ok(RoundRecord {
            round_id,
            word: word.clone(),
            definitions,
            ballot,
            votes,
            scores,
            winners_strategies,
        })
    }

    /// Prompt every player for a definition, then judge the usable ones.
    fn collect_definitions(
        &self,
        round_id: u32,
        word: &WordEntry,
        histories: &BTreeMap<PlayerId, Vec<HistoryRow>>,
    ) -> Result<BTreeMap<PlayerId, DefinitionRecord>, RoundAbort> {
        let asks: Vec<_> = self
            .seats
            .iter()
            .enumerate()
            .map(|(i, seat)| {
                let player_id = i as PlayerId + 1;
                let history_block = self.history_block(player_id, histories);
                move || self.ask_definition(seat, word, history_block.as_deref())
            })
            .collect();
        let responses = join_in_order(self.options.parallel_phases, asks);

        // Judge sequentially: the judge is one shared agent and scan order
        // is part of the contract.
        let judge = Judge::new(self.judge.agent.as_ref(), self.prompts, self.judge.retry_limit);
        let mut definitions = BTreeMap::new();
        for (i, outcome) in responses.into_iter().enumerate() {
            let player_id = i as PlayerId + 1;
            let mut record = match outcome {
                Some((raw, parsed, conforming)) => DefinitionRecord {
                    player_id,
                    raw_response: raw,
                    parsed_definition: parsed,
                    conforming,
                    judge_decision: false,
                    llm_knows_one: false,
                },
                None => DefinitionRecord {
                    player_id,
                    raw_response: String::new(),
                    parsed_definition: String::new(),
                    conforming: false,
                    judge_decision: false,
                    llm_knows_one: false,
                },
            };
            if !record.parsed_definition.is_empty() {
                let (judge_decision, llm_knows_one) = judge
                    .against_all(word, &record.parsed_definition)
                    .map_err(|e| {
                        RoundAbort::Judge(format!(
                            "round {round_id}: judging player {player_id}: {e}"
                        ))
                    })?;
                record.judge_decision = judge_decision;
                record.llm_knows_one = llm_knows_one;
            }
            definitions.insert(player_id, record);
        }
        Ok(definitions)
    }

    /// One player's definition exchange. `None` means the player abstains.
    fn ask_definition(
        &self,
        seat: &Seat,
        word: &WordEntry,
        history_block: Option<&str>,
    ) -> Option<(String, String, bool)> {
        let system = self.system_prompt();
        let user = self
            .prompts
            .render_generate_definition(&word.word, history_block)
            .expect("word is non-empty");
        let messages = [ChatMessage::system(system), ChatMessage::user(user)];

        for _ in 0..=seat.retry_limit {
            match seat.agent.complete(&messages) {
                Ok(raw) => match parse_definition(&raw) {
                    Ok((parsed, conforming)) => return Some((raw, parsed, conforming)),
                    Err(_) => continue, // empty response, re-ask
                },
                Err(e) => {
                    log::warn!(
                        "player agent '{}' failed definition phase: {e}",
                        seat.agent.agent_id()
                    );
                    return None;
                }
            }
        }
        None
    }

    /// Prompt everyone still in the round for a vote. Players whose
    /// definitions were judged correct sit out; format failures abstain.
    fn collect_votes(
        &self,
        word: &WordEntry,
        definitions: &BTreeMap<PlayerId, DefinitionRecord>,
        ballot: &Ballot,
        histories: &BTreeMap<PlayerId, Vec<HistoryRow>>,
    ) -> Result<BTreeMap<PlayerId, VoteTarget>, EngineError> {
        let voters: Vec<PlayerId> = definitions
            .values()
            .filter(|d| !d.judge_decision)
            .map(|d| d.player_id)
            .collect();
        if voters.is_empty() {
            return Ok(BTreeMap::new());
        }

        let asks: Vec<_> = voters
            .iter()
            .map(|&voter| {
                let seat = &self.seats[voter as usize - 1];
                let own_definition = definitions[&voter].parsed_definition.clone();
                let history_block = self.history_block(voter, histories);
                move || self.ask_vote(seat, voter, word, &own_definition, ballot, history_block.as_deref())
            })
            .collect();
        let choices = join_in_order(self.options.parallel_phases, asks);

        let mut votes = BTreeMap::new();
        for (voter, choice) in voters.into_iter().zip(choices) {
            if let Some(index) = choice {
                let target = ballot
                    .source_of_index(index)
                    .expect("parsed vote is a ballot index");
                votes.insert(voter, target);
            }
        }
        Ok(votes)
    }

    /// One voter's exchange. `None` means the voter abstains.
    fn ask_vote(
        &self,
        seat: &Seat,
        voter: PlayerId,
        word: &WordEntry,
        own_definition: &str,
        ballot: &Ballot,
        history_block: Option<&str>,
    ) -> Option<u32> {
        let allowed = ballot.allowed.get(&voter)?.clone();
        let user = self
            .prompts
            .render_vote_prompt(&word.word, own_definition, ballot, voter, history_block)
            .expect("voter is on the ballot map");
        let messages = [
            ChatMessage::system(self.system_prompt()),
            ChatMessage::user(user),
        ];

        for _ in 0..=seat.retry_limit {
            match seat.agent.complete(&messages) {
                Ok(raw) => match parse_vote(&raw, &allowed) {
                    Ok(index) => return Some(index),
                    Err(_) => continue, // format error, re-ask
                },
                Err(e) => {
                    log::warn!(
                        "player agent '{}' failed voting phase: {e}",
                        seat.agent.agent_id()
                    );
                    return None;
                }
            }
        }
        None
    }

    fn system_prompt(&self) -> String {
        self.prompts.render_game_rules(
            &self.config.scoring,
            self.config.history_type != HistoryType::None,
        )
    }

    /// The rendered history prompt for one player, when the game uses
    /// history and at least one round has completed.
    fn history_block(
        &self,
        player: PlayerId,
        histories: &BTreeMap<PlayerId, Vec<HistoryRow>>,
    ) -> Option<String> {
        if self.config.history_type == HistoryType::None {
            return None;
        }
        let rows = histories.get(&player)?;
        if rows.is_empty() {
            return None;
        }
        let csv = render_history_csv(rows, self.config.history_type, self.config.history_window);
        Some(
            self.prompts
                .render_history_block(self.config.history_type, &csv)
                .expect("history type is mini or full"),
        )
    }

    fn append_history_rows(
        &self,
        round: &RoundRecord,
        players: &[PlayerState],
        histories: &mut BTreeMap<PlayerId, Vec<HistoryRow>>,
    ) {
        for player in players {
            let rank = *player.rank_history.last().expect("round just ranked");
            histories
                .entry(player.player_id)
                .or_default()
                .push(history_row(round, player.player_id, rank));
        }
    }
}

/// One player's history row for one round, given their rank after it.
pub fn history_row(round: &RoundRecord, player: PlayerId, rank_after_round: u32) -> HistoryRow {
    let record = &round.definitions[&player];
    let wrote_true = record.judge_decision;
    HistoryRow {
        round_id: round.round_id,
        rank_among_players: rank_after_round,
        score: round.scores[&player],
        word: round.word.word.clone(),
        definition: round.word.reference_definition().to_string(),
        generated_definition: record.parsed_definition.clone(),
        wrote_true_definition: wrote_true,
        guessed_correct_definiton: round.votes.get(&player) == Some(&VoteTarget::Reference),
        deception_ratio: deception_ratio(round, player, wrote_true),
        round_winners_strategies: round.winners_strategies.clone(),
    }
}

/// Rebuild a player's full history from a finished record. Equals what the
/// engine fed that player's prompts, row for row.
pub fn history_rows(record: &GameRecord, player: PlayerId) -> Vec<HistoryRow> {
    let state = record.player(player).expect("player is in the game");
    record
        .rounds
        .iter()
        .zip(&state.rank_history)
        .map(|(round, &rank)| history_row(round, player, rank))
        .collect()
}

/// Votes received / (voters − 1); −1 when the player wrote the true
/// definition. 0 when fewer than two voters participated.
fn deception_ratio(round: &RoundRecord, player: PlayerId, wrote_true: bool) -> f64 {
    if wrote_true {
        return -1.0;
    }
    let received = round
        .votes
        .values()
        .filter(|&&v| v == VoteTarget::Player(player))
        .count();
    let denominator = round.votes.len() as i64 - 1;
    if denominator <= 0 {
        0.0
    } else {
        received as f64 / denominator as f64
    }
}

/// Mix the surviving fake definitions with the reference definition in a
/// seeded uniform shuffle and assign 1-based display indices.
///
/// Definitions judged correct are excluded; so are empty (abstained)
/// definitions, though their authors still vote. Each voter's allowed set
/// excludes exactly their own entry.
pub fn build_ballot(
    definitions: &BTreeMap<PlayerId, DefinitionRecord>,
    reference_definition: &str,
    rng: &mut impl Rng,
) -> Ballot {
    let mut sources: Vec<(VoteTarget, String)> = definitions
        .values()
        .filter(|d| !d.judge_decision && !d.abstained())
        .map(|d| (VoteTarget::Player(d.player_id), d.parsed_definition.clone()))
        .collect();
    sources.push((VoteTarget::Reference, reference_definition.to_string()));
    sources.shuffle(rng);

    let entries: Vec<BallotEntry> = sources
        .into_iter()
        .enumerate()
        .map(|(i, (source, text))| BallotEntry {
            display_index: i as u32 + 1,
            source,
            text,
        })
        .collect();

    let mut allowed = BTreeMap::new();
    for definition in definitions.values() {
        if definition.judge_decision {
            continue;
        }
        let own = entries
            .iter()
            .find(|e| e.source == VoteTarget::Player(definition.player_id))
            .map(|e| e.display_index);
        let indices: Vec<u32> = entries
            .iter()
            .map(|e| e.display_index)
            .filter(|i| Some(*i) != own)
            .collect();
        allowed.insert(definition.player_id, indices);
    }

    Ballot { entries, allowed }
}

/// Apply the scoring rules to one round.
///
/// score(p) = cdp·[judge_decision] + cvp·[voted reference] + rvp·(votes received)
pub fn score_round(
    definitions: &BTreeMap<PlayerId, DefinitionRecord>,
    votes: &BTreeMap<PlayerId, VoteTarget>,
    rules: &ScoringRules,
) -> BTreeMap<PlayerId, i64> {
    let mut scores = BTreeMap::new();
    for definition in definitions.values() {
        let player = definition.player_id;
        let mut score = 0;
        if definition.judge_decision {
            score += rules.correct_definition_points;
        }
        if votes.get(&player) == Some(&VoteTarget::Reference) {
            score += rules.correct_vote_points;
        }
        let received = votes
            .values()
            .filter(|&&v| v == VoteTarget::Player(player))
            .count() as i64;
        score += rules.receiving_vote_points * received;
        scores.insert(player, score);
    }
    scores
}

/// Add the round's scores to the cumulative totals and append competition
/// ranks (ties share the better rank).
pub fn update_ranks(players: &mut [PlayerState], round_scores: &BTreeMap<PlayerId, i64>) {
    for player in players.iter_mut() {
        player.cumulative_score += round_scores.get(&player.player_id).copied().unwrap_or(0);
    }
    let totals: Vec<i64> = players.iter().map(|p| p.cumulative_score).collect();
    for player in players.iter_mut() {
        let rank = 1 + totals
            .iter()
            .filter(|&&t| t > player.cumulative_score)
            .count() as u32;
        player.rank_history.push(rank);
    }
}

/// (definition, outcome) for every player tied at the round's top score.
pub fn compute_winners_strategies(
    definitions: &BTreeMap<PlayerId, DefinitionRecord>,
    votes: &BTreeMap<PlayerId, VoteTarget>,
    scores: &BTreeMap<PlayerId, i64>,
) -> Vec<(String, String)> {
    let Some(top) = scores.values().max().copied() else {
        return Vec::new();
    };
    scores
        .iter()
        .filter(|(_, &score)| score == top)
        .map(|(&player, _)| {
            let record = &definitions[&player];
            let deceived = votes.values().any(|&v| v == VoteTarget::Player(player));
            let guessed = votes.get(&player) == Some(&VoteTarget::Reference);
            let outcome = if record.judge_decision {
                outcome::WROTE_TRUE_DEFINITION
            } else if deceived && guessed {
                outcome::DECEIVED_AND_GUESSED
            } else if deceived {
                outcome::DECEIVED
            } else if guessed {
                outcome::GUESSED_CORRECT
            } else {
                outcome::NONE
            };
            (record.parsed_definition.clone(), outcome.to_string())
        })
        .collect()
}

enum RoundAbort {
    /// Judge failure: skip the round, keep the game.
    Judge(String),
    Fatal(EngineError),
}

/// Run tasks, possibly on threads, returning results in task order.
fn join_in_order<T, F>(parallel: bool, tasks: Vec<F>) -> Vec<T>
where
    T: Send,
    F: FnOnce() -> T + Send,
{
    if parallel {
        std::thread::scope(|scope| {
            let handles: Vec<_> = tasks.into_iter().map(|t| scope.spawn(t)).collect();
            handles
                .into_iter()
                .map(|h| h.join().expect("phase task panicked"))
                .collect()
        })
    } else {
        tasks.into_iter().map(|t| t()).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(player_id: PlayerId, text: &str, judge_decision: bool) -> DefinitionRecord {
        DefinitionRecord {
            player_id,
            raw_response: format!("\"{text}\""),
            parsed_definition: text.to_string(),
            conforming: true,
            judge_decision,
            llm_knows_one: judge_decision,
        }
    }

    fn four_definitions(one_true: bool) -> BTreeMap<PlayerId, DefinitionRecord> {
        (1..=4)
            .map(|p| (p, record(p, &format!("def{p}"), one_true && p == 1)))
            .collect()
    }

    #[test]
    fn ballot_counts_fakes_plus_reference() {
        let defs = four_definitions(true);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ballot = build_ballot(&defs, "the truth", &mut rng);
        assert_eq!(ballot.entries.len(), 4); // 3 fakes + reference
        assert!(ballot.index_of_player(1).is_none());
        assert!(!ballot.allowed.contains_key(&1));
        for p in 2..=4 {
            let own = ballot.index_of_player(p).unwrap();
            let allowed = &ballot.allowed[&p];
            assert_eq!(allowed.len(), 3);
            assert!(!allowed.contains(&own));
        }
    }

    #[test]
    fn all_correct_leaves_reference_only_ballot() {
        let defs: BTreeMap<PlayerId, DefinitionRecord> =
            (1..=3).map(|p| (p, record(p, "same", true))).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ballot = build_ballot(&defs, "the truth", &mut rng);
        assert_eq!(ballot.entries.len(), 1);
        assert_eq!(ballot.entries[0].source, VoteTarget::Reference);
        assert!(ballot.allowed.is_empty());
    }

    #[test]
    fn abstainer_off_ballot_but_still_votes() {
        let mut defs = four_definitions(false);
        defs.get_mut(&3).unwrap().parsed_definition = String::new();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let ballot = build_ballot(&defs, "the truth", &mut rng);
        assert_eq!(ballot.entries.len(), 4); // 3 fakes + reference
        assert!(ballot.index_of_player(3).is_none());
        // voter 3 may choose anything on the ballot
        assert_eq!(ballot.allowed[&3].len(), 4);
    }

    #[test]
    fn scoring_matches_rule_terms() {
        let rules = ScoringRules::new(3, 2, 1);
        let defs = four_definitions(true);
        let votes: BTreeMap<PlayerId, VoteTarget> = [
            (2, VoteTarget::Reference),
            (3, VoteTarget::Player(2)),
            (4, VoteTarget::Player(2)),
        ]
        .into_iter()
        .collect();
        let scores = score_round(&defs, &votes, &rules);
        assert_eq!(scores[&1], 3); // judge_decision
        assert_eq!(scores[&2], 2 + 2); // correct vote + two received votes
        assert_eq!(scores[&3], 0);
        assert_eq!(scores[&4], 0);

        let zeroed = score_round(&defs, &votes, &ScoringRules::new(0, 2, 1));
        assert_eq!(zeroed[&1], 0);
    }

    #[test]
    fn receiving_vote_points_are_conserved() {
        let rules = ScoringRules::new(3, 2, 1);
        let defs = four_definitions(false);
        let votes: BTreeMap<PlayerId, VoteTarget> = [
            (1, VoteTarget::Player(2)),
            (2, VoteTarget::Reference),
            (3, VoteTarget::Player(2)),
            (4, VoteTarget::Player(1)),
        ]
        .into_iter()
        .collect();
        let scores = score_round(&defs, &votes, &rules);
        let non_reference = votes.values().filter(|&&v| v != VoteTarget::Reference).count() as i64;
        let receiving_total: i64 = scores
            .keys()
            .map(|p| {
                votes.values().filter(|&&v| v == VoteTarget::Player(*p)).count() as i64
                    * rules.receiving_vote_points
            })
            .sum();
        assert_eq!(receiving_total, rules.receiving_vote_points * non_reference);
        // And the full scores decompose: total = cvp·(ref votes) + rvp·(non-ref votes)
        let total: i64 = scores.values().sum();
        assert_eq!(total, rules.correct_vote_points + rules.receiving_vote_points * non_reference);
    }

    #[test]
    fn competition_ranking_shares_better_rank() {
        let mut players = vec![
            PlayerState::new(1, "g", "m"),
            PlayerState::new(2, "g", "m"),
            PlayerState::new(3, "g", "m"),
        ];
        let scores: BTreeMap<PlayerId, i64> = [(1, 5), (2, 5), (3, 3)].into_iter().collect();
        update_ranks(&mut players, &scores);
        assert_eq!(
            players.iter().map(|p| *p.rank_history.last().unwrap()).collect::<Vec<_>>(),
            vec![1, 1, 3]
        );

        let scores: BTreeMap<PlayerId, i64> = [(1, 2), (2, 0), (3, 0)].into_iter().collect();
        update_ranks(&mut players, &scores);
        assert_eq!(
            players.iter().map(|p| *p.rank_history.last().unwrap()).collect::<Vec<_>>(),
            vec![1, 2, 3]
        );
    }

    #[test]
    fn single_player_is_always_rank_one() {
        let mut players = vec![PlayerState::new(1, "g", "m")];
        for score in [0i64, 5, -2] {
            let scores: BTreeMap<PlayerId, i64> = [(1, score)].into_iter().collect();
            update_ranks(&mut players, &scores);
        }
        assert_eq!(players[0].rank_history, vec![1, 1, 1]);
    }

    #[test]
    fn distinct_scores_rank_strictly() {
        let mut players: Vec<PlayerState> =
            (1..=4).map(|i| PlayerState::new(i, "g", "m")).collect();
        let scores: BTreeMap<PlayerId, i64> =
            [(1, 7), (2, 5), (3, 3), (4, 1)].into_iter().collect();
        update_ranks(&mut players, &scores);
        let ranks: Vec<u32> = players.iter().map(|p| p.rank_history[0]).collect();
        assert_eq!(ranks, vec![1, 2, 3, 4]);
    }

    #[test]
    fn winners_outcomes_cover_flags() {
        let defs = four_definitions(true);
        let votes: BTreeMap<PlayerId, VoteTarget> = [
            (2, VoteTarget::Reference),
            (3, VoteTarget::Player(2)),
            (4, VoteTarget::Player(2)),
        ]
        .into_iter()
        .collect();
        let scores = score_round(&defs, &votes, &ScoringRules::new(3, 2, 1));
        // p2 has 4 points, unique max
        let winners = compute_winners_strategies(&defs, &votes, &scores);
        assert_eq!(winners, vec![("def2".to_string(), "deceived_and_guessed".to_string())]);

        // unique max who wrote the true definition
        let scores_50 = score_round(&defs, &votes, &ScoringRules::new(50, 2, 1));
        let winners = compute_winners_strategies(&defs, &votes, &scores_50);
        assert_eq!(winners, vec![("def1".to_string(), "wrote_true_definition".to_string())]);
    }

    #[test]
    fn all_zero_round_lists_everyone_as_none() {
        let defs = four_definitions(false);
        let votes = BTreeMap::new();
        let scores = score_round(&defs, &votes, &ScoringRules::default());
        let winners = compute_winners_strategies(&defs, &votes, &scores);
        assert_eq!(winners.len(), 4);
        assert!(winners.iter().all(|(_, o)| o == "none"));
    }

    #[test]
    fn tied_winners_all_listed() {
        let defs = four_definitions(false);
        let votes: BTreeMap<PlayerId, VoteTarget> = [
            (1, VoteTarget::Reference),
            (2, VoteTarget::Reference),
            (3, VoteTarget::Player(4)),
            (4, VoteTarget::Player(3)),
        ]
        .into_iter()
        .collect();
        let scores = score_round(&defs, &votes, &ScoringRules::new(3, 2, 2));
        // p1, p2 guessed (2 each); p3, p4 each received one vote (2 each)
        let winners = compute_winners_strategies(&defs, &votes, &scores);
        assert_eq!(winners.len(), 4);
        assert_eq!(winners[0].1, "guessed_correct");
        assert_eq!(winners[2].1, "deceived");
    }
}
