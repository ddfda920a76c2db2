//! Per-round group metrics (TDR, LKR, DR, CGR, AS), the cross-game LKR
//! series with its convergence check, and leaderboard aggregation.
//!
//! All ratios are per (round, group). DR is undefined when a round had
//! fewer than two successful voters; undefined values are absent, never
//! zero, so single-voter rounds cannot bias aggregates.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::domain::{GameRecord, HistoryType, PlayerId, RoundRecord, VoteTarget};
use crate::error::MetricsError;

/// The five metrics for one (game, round, group) triple.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupRoundMetrics {
    pub game_id: u64,
    pub round_id: u32,
    pub group: String,
    pub tdr: f64,
    pub lkr: f64,
    pub dr: Option<f64>,
    pub cgr: f64,
    pub avg_score: f64,
}

/// Convergence test parameters: the series must stay strictly above
/// `1 - epsilon` for every round after `t_threshold`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceParams {
    pub epsilon: f64,
    pub t_threshold: usize,
}

/// Mean and population standard deviation over a sample set.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AggregateCell {
    pub mean: f64,
    pub std: f64,
    pub sample_count: usize,
}

impl AggregateCell {
    pub fn from_values(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let variance = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
        Some(Self {
            mean,
            std: variance.sqrt(),
            sample_count: values.len(),
        })
    }
}

/// Ratio of group members whose definition matched the reference (Eq. 1).
pub fn tdr(round: &RoundRecord, group: &[PlayerId]) -> Result<f64, MetricsError> {
    ratio_over_group(group, |p| {
        round.definitions.get(&p).is_some_and(|d| d.judge_decision)
    })
}

/// Ratio of group members whose definition matched any definition (Eq. 2).
pub fn lkr(round: &RoundRecord, group: &[PlayerId]) -> Result<f64, MetricsError> {
    ratio_over_group(group, |p| {
        round.definitions.get(&p).is_some_and(|d| d.llm_knows_one)
    })
}

/// Deception ratio (Eq. 3): mean over members of
/// (votes received) / (|votes| - 1). Undefined with fewer than two voters.
pub fn dr(round: &RoundRecord, group: &[PlayerId]) -> Result<Option<f64>, MetricsError> {
    if group.is_empty() {
        return Err(MetricsError::EmptyGroup(String::new()));
    }
    let voters = round.votes.len();
    if voters <= 1 {
        return Ok(None);
    }
    let denominator = (voters - 1) as f64;
    let sum: f64 = group
        .iter()
        .map(|&p| {
            let received = round
                .votes
                .values()
                .filter(|&&v| v == VoteTarget::Player(p))
                .count() as f64;
            received / denominator
        })
        .sum();
    Ok(Some(sum / group.len() as f64))
}

/// Ratio of group members who voted for the reference definition (Eq. 4).
/// Members without a vote (correct definition, or abstained) contribute 0.
pub fn cgr(round: &RoundRecord, group: &[PlayerId]) -> Result<f64, MetricsError> {
    ratio_over_group(group, |p| {
        round.votes.get(&p) == Some(&VoteTarget::Reference)
    })
}

/// Mean round score over the group (Eq. 5).
pub fn avg_score(round: &RoundRecord, group: &[PlayerId]) -> Result<f64, MetricsError> {
    if group.is_empty() {
        return Err(MetricsError::EmptyGroup(String::new()));
    }
    let sum: i64 = group
        .iter()
        .map(|p| round.scores.get(p).copied().unwrap_or(0))
        .sum();
    Ok(sum as f64 / group.len() as f64)
}

fn ratio_over_group(
    group: &[PlayerId],
    predicate: impl Fn(PlayerId) -> bool,
) -> Result<f64, MetricsError> {
    if group.is_empty() {
        return Err(MetricsError::EmptyGroup(String::new()));
    }
    let hits = group.iter().filter(|&&p| predicate(p)).count();
    Ok(hits as f64 / group.len() as f64)
}

/// All five metrics for every (round, group) pair of one game.
pub fn group_round_metrics(game: &GameRecord) -> Result<Vec<GroupRoundMetrics>, MetricsError> {
    let mut out = Vec::new();
    for group in game.groups() {
        let members = game.group_members(&group);
        for round in &game.rounds {
            out.push(GroupRoundMetrics {
                game_id: game.game_id,
                round_id: round.round_id,
                group: group.clone(),
                tdr: tdr(round, &members)?,
                lkr: lkr(round, &members)?,
                dr: dr(round, &members)?,
                cgr: cgr(round, &members)?,
                avg_score: avg_score(round, &members)?,
            });
        }
    }
    Ok(out)
}

/// Mean LKR per round position across games (the convergence series).
/// All games must have the same number of completed rounds.
pub fn lkr_series(games: &[GameRecord], group: &str) -> Result<Vec<f64>, MetricsError> {
    Ok(lkr_series_cells(games, group)?.into_iter().map(|c| c.mean).collect())
}

/// The LKR series with per-round mean, std, and sample count.
pub fn lkr_series_cells(
    games: &[GameRecord],
    group: &str,
) -> Result<Vec<AggregateCell>, MetricsError> {
    let Some(first) = games.first() else {
        return Err(MetricsError::NoGames);
    };
    let rounds = first.rounds.len();
    for game in games {
        if game.rounds.len() != rounds {
            return Err(MetricsError::UnequalRoundCounts {
                game_id: game.game_id,
                found: game.rounds.len(),
                expected: rounds,
            });
        }
    }

    let mut cells = Vec::with_capacity(rounds);
    for i in 0..rounds {
        let mut values = Vec::with_capacity(games.len());
        for game in games {
            let members = game.group_members(group);
            if members.is_empty() {
                return Err(MetricsError::EmptyGroup(group.to_string()));
            }
            values.push(lkr(&game.rounds[i], &members)?);
        }
        cells.push(AggregateCell::from_values(&values).expect("games is non-empty"));
    }
    Ok(cells)
}

/// Eq. 6: true iff every element after position `t_threshold` (1-based
/// round numbering) strictly exceeds `1 - epsilon`.
pub fn check_convergence(
    series: &[f64],
    params: &ConvergenceParams,
) -> Result<bool, MetricsError> {
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) {
        return Err(MetricsError::InvalidEpsilon(params.epsilon));
    }
    if params.t_threshold >= series.len() {
        return Err(MetricsError::ConvergenceThreshold {
            t: params.t_threshold,
            len: series.len(),
        });
    }
    let floor = 1.0 - params.epsilon;
    Ok(series[params.t_threshold..].iter().all(|&v| v > floor))
}

/// One aggregated leaderboard line: a (history type, group) cell over all
/// (round, game) samples.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LeaderboardRow {
    pub history_type: HistoryType,
    pub group: String,
    pub lkr: AggregateCell,
    pub tdr: AggregateCell,
    /// Absent when every sample in the cell was undefined.
    pub dr: Option<AggregateCell>,
    pub cgr: AggregateCell,
    pub avg_score: AggregateCell,
}

/// Aggregate per-round metrics over all games, grouped by
/// (history type, group). Undefined DR samples are excluded from the DR
/// cell; the other metrics keep their full sample sets.
pub fn aggregate_leaderboard(games: &[GameRecord]) -> Result<Vec<LeaderboardRow>, MetricsError> {
    if games.is_empty() {
        return Err(MetricsError::NoGames);
    }

    #[derive(Default)]
    struct Samples {
        tdr: Vec<f64>,
        lkr: Vec<f64>,
        dr: Vec<f64>,
        cgr: Vec<f64>,
        avg_score: Vec<f64>,
    }

    let mut cells: BTreeMap<(HistoryType, String), Samples> = BTreeMap::new();
    for game in games {
        for m in group_round_metrics(game)? {
            let entry = cells
                .entry((game.config.history_type, m.group.clone()))
                .or_default();
            entry.tdr.push(m.tdr);
            entry.lkr.push(m.lkr);
            if let Some(dr) = m.dr {
                entry.dr.push(dr);
            }
            entry.cgr.push(m.cgr);
            entry.avg_score.push(m.avg_score);
        }
    }

    let mut rows = Vec::with_capacity(cells.len());
    for ((history_type, group), samples) in cells {
        if samples.dr.is_empty() {
            log::warn!(
                "leaderboard cell ({history_type}, {group}): DR undefined in every round, cell left absent"
            );
        }
        rows.push(LeaderboardRow {
            history_type,
            group,
            lkr: AggregateCell::from_values(&samples.lkr).expect("cell has samples"),
            tdr: AggregateCell::from_values(&samples.tdr).expect("cell has samples"),
            dr: AggregateCell::from_values(&samples.dr),
            cgr: AggregateCell::from_values(&samples.cgr).expect("cell has samples"),
            avg_score: AggregateCell::from_values(&samples.avg_score).expect("cell has samples"),
        });
    }
    Ok(rows)
}

pub const LEADERBOARD_CSV_HEADER: &str = "history_type,group,lkr_mean,lkr_std,tdr_mean,tdr_std,dr_mean,dr_std,cgr_mean,cgr_std,as_mean,as_std";
pub const LKR_SERIES_CSV_HEADER: &str = "round_index,mean,std";

/// The leaderboard table as CSV, one row per (history type, group).
pub fn leaderboard_csv(rows: &[LeaderboardRow]) -> String {
    let mut out = String::from(LEADERBOARD_CSV_HEADER);
    out.push('\n');
    for row in rows {
        let (dr_mean, dr_std) = match &row.dr {
            Some(cell) => (cell.mean.to_string(), cell.std.to_string()),
            None => (String::new(), String::new()),
        };
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{},{},{}\n",
            row.history_type,
            row.group,
            row.lkr.mean,
            row.lkr.std,
            row.tdr.mean,
            row.tdr.std,
            dr_mean,
            dr_std,
            row.cgr.mean,
            row.cgr.std,
            row.avg_score.mean,
            row.avg_score.std,
        ));
    }
    out
}

/// The LKR series as CSV with 1-based round indices.
pub fn lkr_series_csv(cells: &[AggregateCell]) -> String {
    let mut out = String::from(LKR_SERIES_CSV_HEADER);
    out.push('\n');
    for (i, cell) in cells.iter().enumerate() {
        out.push_str(&format!("{},{},{}\n", i + 1, cell.mean, cell.std));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::{Ballot, DefinitionRecord, GameConfig, PlayerState, ScoringRules, WordDeck, WordEntry};

    /// Build a round from (judge_decision, llm_knows_one) flags, votes, and scores.
    fn round(
        flags: &[(PlayerId, bool, bool)],
        votes: &[(PlayerId, i64)],
        scores: &[(PlayerId, i64)],
    ) -> RoundRecord {
        RoundRecord {
            round_id: 1,
            word: WordEntry::new("w", "noun", vec!["d".to_string()]),
            definitions: flags
                .iter()
                .map(|&(p, jd, lko)| {
                    (
                        p,
                        DefinitionRecord {
                            player_id: p,
                            raw_response: "\"x\"".to_string(),
                            parsed_definition: "x".to_string(),
                            conforming: true,
                            judge_decision: jd,
                            llm_knows_one: lko,
                        },
                    )
                })
                .collect(),
            ballot: Ballot::default(),
            votes: votes
                .iter()
                .map(|&(p, t)| (p, VoteTarget::from_i64(t).unwrap()))
                .collect(),
            scores: scores.iter().copied().collect(),
            winners_strategies: vec![],
        }
    }

    #[test]
    fn tdr_counts_judge_decisions() {
        let r = round(&[(1, true, true), (2, false, false)], &[], &[]);
        assert_eq!(tdr(&r, &[1, 2]).unwrap(), 0.5);
        let r = round(&[(1, true, true), (2, true, true)], &[], &[]);
        assert_eq!(tdr(&r, &[1, 2]).unwrap(), 1.0);
        assert!(tdr(&r, &[]).is_err());
    }

    #[test]
    fn lkr_counts_knows_one() {
        let r = round(&[(1, true, true), (2, false, false), (3, false, false)], &[], &[]);
        assert!((lkr(&r, &[1, 2, 3]).unwrap() - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn dr_uses_votes_minus_one_denominator() {
        // 4 players, 3 voters; p1 receives 2 votes -> 2/(3-1) = 1.0
        let r = round(
            &[(1, false, false), (2, false, false), (3, false, false), (4, true, true)],
            &[(1, -1), (2, 1), (3, 1)],
            &[],
        );
        assert_eq!(dr(&r, &[1]).unwrap(), Some(1.0));
    }

    #[test]
    fn dr_zero_for_correct_player() {
        let r = round(
            &[(1, true, true), (2, false, false), (3, false, false)],
            &[(2, -1), (3, -1)],
            &[],
        );
        assert_eq!(dr(&r, &[1]).unwrap(), Some(0.0));
    }

    #[test]
    fn dr_undefined_with_one_voter() {
        let r = round(&[(1, false, false)], &[(1, -1)], &[]);
        assert_eq!(dr(&r, &[1]).unwrap(), None);
        let r = round(&[(1, false, false)], &[], &[]);
        assert_eq!(dr(&r, &[1]).unwrap(), None);
    }

    #[test]
    fn cgr_counts_reference_votes() {
        let r = round(
            &[(1, false, false), (2, false, false), (3, false, false)],
            &[(1, -1), (2, 3)],
            &[],
        );
        assert_eq!(cgr(&r, &[1, 2]).unwrap(), 0.5);
    }

    #[test]
    fn cgr_nonvoter_contributes_zero() {
        // p1 wrote the true definition, so p1 has no vote.
        let r = round(&[(1, true, true), (2, false, false)], &[(2, -1)], &[]);
        assert_eq!(cgr(&r, &[1]).unwrap(), 0.0);
        assert_eq!(cgr(&r, &[1, 2]).unwrap(), 0.5);
    }

    #[test]
    fn avg_score_is_group_mean() {
        let r = round(&[(1, true, true), (2, false, false)], &[], &[(1, 3), (2, 1)]);
        assert_eq!(avg_score(&r, &[1, 2]).unwrap(), 2.0);
    }

    fn game_with_lkrs(game_id: u64, lkr_per_round: &[f64]) -> GameRecord {
        // Two players in group "g"; LKR x is realized as x*2 members knowing.
        let players = vec![PlayerState::new(1, "g", "m"), PlayerState::new(2, "g", "m")];
        let rounds: Vec<RoundRecord> = lkr_per_round
            .iter()
            .enumerate()
            .map(|(i, &x)| {
                let knows = (x * 2.0).round() as usize;
                let mut r = round(
                    &[(1, false, knows >= 1), (2, false, knows >= 2)],
                    &[],
                    &[(1, 0), (2, 0)],
                );
                r.round_id = i as u32 + 1;
                r
            })
            .collect();
        let deck = WordDeck::new(
            "d",
            (0..rounds.len())
                .map(|i| WordEntry::new(format!("w{i}"), "n", vec!["x".to_string()]))
                .collect(),
        );
        GameRecord {
            game_id,
            config: GameConfig {
                description: String::new(),
                num_rounds: rounds.len() as u32,
                judge_model: "j".to_string(),
                random_seed: 0,
                scoring: ScoringRules::default(),
                history_type: HistoryType::None,
                history_window: 1,
                temperature: 0.9,
                deck,
                prompt_set: "builtin".to_string(),
            },
            players,
            rounds,
            skipped_rounds: vec![],
        }
    }

    #[test]
    fn lkr_series_averages_round_positions() {
        let games = [game_with_lkrs(1, &[1.0, 0.5]), game_with_lkrs(2, &[0.0, 0.5])];
        let series = lkr_series(&games, "g").unwrap();
        assert_eq!(series, vec![0.5, 0.5]);
    }

    #[test]
    fn single_game_series_is_its_lkrs() {
        let games = [game_with_lkrs(1, &[1.0, 0.0, 0.5])];
        assert_eq!(lkr_series(&games, "g").unwrap(), vec![1.0, 0.0, 0.5]);
    }

    #[test]
    fn unequal_round_counts_rejected() {
        let games = [game_with_lkrs(1, &[1.0, 0.5]), game_with_lkrs(2, &[0.0])];
        assert!(matches!(
            lkr_series(&games, "g"),
            Err(MetricsError::UnequalRoundCounts { game_id: 2, .. })
        ));
    }

    #[test]
    fn convergence_boundary_is_strict() {
        let params = ConvergenceParams {
            epsilon: 0.05,
            t_threshold: 0,
        };
        assert!(check_convergence(&[1.0, 1.0, 1.0], &params).unwrap());

        // dips to 0.9 < 0.95 after T
        let params2 = ConvergenceParams {
            epsilon: 0.05,
            t_threshold: 1,
        };
        assert!(!check_convergence(&[0.2, 1.0, 0.9, 1.0], &params2).unwrap());

        // exactly 1 - epsilon fails the strict inequality
        assert!(!check_convergence(&[1.0, 0.95, 1.0], &params).unwrap());

        assert!(check_convergence(&[1.0], &ConvergenceParams { epsilon: 0.05, t_threshold: 3 }).is_err());
    }

    #[test]
    fn aggregate_cell_population_std() {
        let cell = AggregateCell::from_values(&[0.2, 0.4]).unwrap();
        assert!((cell.mean - 0.3).abs() < 1e-15);
        assert!((cell.std - 0.1).abs() < 1e-15);
        assert_eq!(cell.sample_count, 2);

        let single = AggregateCell::from_values(&[0.7]).unwrap();
        assert_eq!(single.std, 0.0);
    }

    #[test]
    fn leaderboard_drops_undefined_dr_cells() {
        // Single player per game: every DR sample undefined.
        let players = vec![PlayerState::new(1, "solo", "m")];
        let r = round(&[(1, false, false)], &[], &[(1, 0)]);
        let mut game = game_with_lkrs(1, &[0.0]);
        game.players = players;
        game.rounds = vec![r];
        let rows = aggregate_leaderboard(&[game]).unwrap();
        assert_eq!(rows.len(), 1);
        assert!(rows[0].dr.is_none());

        let csv = leaderboard_csv(&rows);
        let line = csv.lines().nth(1).unwrap();
        assert!(line.contains(",,"));
    }

    #[test]
    fn csv_headers_are_pinned() {
        assert_eq!(
            leaderboard_csv(&[]).trim_end(),
            LEADERBOARD_CSV_HEADER
        );
        let cells = [AggregateCell::from_values(&[0.5]).unwrap()];
        let csv = lkr_series_csv(&cells);
        assert_eq!(csv, "round_index,mean,std\n1,0.5,0\n");
    }
}
