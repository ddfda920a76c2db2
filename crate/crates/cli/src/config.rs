//! Experiment configuration: one TOML file describes an experiment kind,
//! the deck and its subsetting, the scoring rules, and the agent bindings;
//! expansion turns it into the individual games to run.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use balderdash_core::agents::AgentBinding;
use balderdash_core::domain::{
    load_deck, sample_subsets, validate_deck, GameConfig, HistoryType, ScoringRules, WordDeck,
};
use balderdash_core::prompts::PromptSet;

/// The three experiment designs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    /// Distinct-group players compete on word subsets across history types.
    Leaderboard,
    /// Same-group players on their known words; tracks the LKR series.
    Convergence,
    /// One player under contrasting correct-definition point values.
    GameRules,
}

impl ExperimentKind {
    fn default_history_types(self) -> Vec<HistoryType> {
        match self {
            ExperimentKind::Leaderboard => {
                vec![HistoryType::None, HistoryType::Mini, HistoryType::Full]
            }
            ExperimentKind::Convergence => vec![HistoryType::Mini, HistoryType::Full],
            ExperimentKind::GameRules => vec![HistoryType::None],
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            ExperimentKind::Leaderboard => "leaderboard",
            ExperimentKind::Convergence => "convergence",
            ExperimentKind::GameRules => "game_rules",
        }
    }
}

/// A player entry: the group it counts under, plus its agent binding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerSpec {
    pub llm_group: String,
    #[serde(flatten)]
    pub binding: AgentBinding,
}

fn default_subsets() -> usize {
    5
}

fn default_history_window() -> u32 {
    20
}

fn default_temperature() -> f64 {
    0.9
}

fn default_prompt_bundle() -> String {
    "builtin".to_string()
}

/// The experiment file as written on disk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub description: String,
    pub kind: ExperimentKind,
    pub seed: u64,
    /// Path to the deck file, relative to the config file's directory.
    pub deck: PathBuf,
    #[serde(default = "default_subsets")]
    pub subsets: usize,
    pub subset_size: usize,
    /// Rounds per game; defaults to the subset size (each word once).
    #[serde(default)]
    pub rounds_per_game: Option<u32>,
    #[serde(default = "default_history_window")]
    pub history_window: u32,
    #[serde(default = "default_temperature")]
    pub temperature: f64,
    /// "builtin" or a directory of template files.
    #[serde(default = "default_prompt_bundle")]
    pub prompt_bundle: String,
    /// Overrides the kind's default history types when present.
    #[serde(default)]
    pub history_types: Option<Vec<HistoryType>>,
    pub scoring: ScoringRules,
    pub judge: AgentBinding,
    pub players: Vec<PlayerSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }

    /// Resolve the deck path against the config file's directory.
    pub fn deck_path(&self, config_path: &Path) -> PathBuf {
        if self.deck.is_absolute() {
            self.deck.clone()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(&self.deck)
        }
    }

    pub fn history_types(&self) -> Vec<HistoryType> {
        self.history_types
            .clone()
            .unwrap_or_else(|| self.kind.default_history_types())
    }

    /// The scoring-rule variants the experiment runs: the game-rules design
    /// contrasts 50 and 0 correct-definition points with the other two
    /// point values unchanged; the other designs use the config's rules.
    pub fn rule_sets(&self) -> Vec<ScoringRules> {
        match self.kind {
            ExperimentKind::GameRules => [50, 0]
                .into_iter()
                .map(|cdp| ScoringRules {
                    correct_definition_points: cdp,
                    ..self.scoring
                })
                .collect(),
            _ => vec![self.scoring],
        }
    }

    /// Every validation failure, collected before anything runs.
    pub fn validate(&self, deck: &WordDeck, prompts: Option<&PromptSet>) -> Vec<String> {
        let mut errors = Vec::new();

        if self.players.is_empty() {
            errors.push("at least one player is required".to_string());
        }
        match self.kind {
            ExperimentKind::Leaderboard => {
                if self.players.len() < 2 {
                    errors.push("leaderboard needs at least two players".to_string());
                }
                let mut groups: Vec<&str> =
                    self.players.iter().map(|p| p.llm_group.as_str()).collect();
                groups.sort_unstable();
                let before = groups.len();
                groups.dedup();
                if groups.len() != before {
                    errors.push("leaderboard players must belong to distinct groups".to_string());
                }
            }
            ExperimentKind::Convergence => {
                if self.players.len() < 2 {
                    errors.push("convergence needs at least two players".to_string());
                }
                if self
                    .players
                    .iter()
                    .any(|p| p.llm_group != self.players[0].llm_group)
                {
                    errors.push("convergence players must share one group".to_string());
                }
            }
            ExperimentKind::GameRules => {
                if self.players.len() != 1 {
                    errors.push(format!(
                        "game_rules runs exactly one player, got {}",
                        self.players.len()
                    ));
                }
            }
        }

        for player in &self.players {
            errors.extend(player.binding.validate());
        }
        errors.extend(self.judge.validate());

        if self.subsets == 0 || self.subset_size == 0 {
            errors.push("subsets and subset_size must be positive".to_string());
        }
        if self.subset_size > deck.len() {
            errors.push(format!(
                "subset_size {} exceeds deck '{}' with {} entries",
                self.subset_size,
                deck.name,
                deck.len()
            ));
        }
        let rounds = self.rounds_per_game.unwrap_or(self.subset_size as u32);
        if rounds as usize > self.subset_size {
            errors.push(format!(
                "rounds_per_game {rounds} exceeds subset_size {}; each round consumes a distinct word",
                self.subset_size
            ));
        }
        if rounds == 0 {
            errors.push("rounds_per_game must be positive".to_string());
        }
        if !(0.0..=2.0).contains(&self.temperature) {
            errors.push(format!("temperature {} outside [0, 2]", self.temperature));
        }
        if self.history_window == 0 && self.history_types().iter().any(|h| *h != HistoryType::None)
        {
            errors.push("history_window must be >= 1 when history is enabled".to_string());
        }
        errors.extend(validate_deck(deck));
        if prompts.is_none() {
            errors.push(format!("prompt bundle '{}' cannot be loaded", self.prompt_bundle));
        }

        errors
    }

    /// Expand into per-game configs: one game per
    /// (subset × history type × rule set), in that nesting order.
    pub fn expand(&self, deck: &WordDeck) -> Result<Vec<GameConfig>, String> {
        let subsets = sample_subsets(deck, self.subsets, self.subset_size, self.seed)
            .map_err(|e| e.to_string())?;
        let rounds = self.rounds_per_game.unwrap_or(self.subset_size as u32);

        let mut games = Vec::new();
        for (subset_index, subset) in subsets.iter().enumerate() {
            for history_type in self.history_types() {
                for rules in self.rule_sets() {
                    let game_index = games.len() as u64;
                    games.push(GameConfig {
                        description: format!(
                            "{} kind={} subset={} history={} cdp={}",
                            self.description,
                            self.kind.as_str(),
                            subset_index + 1,
                            history_type,
                            rules.correct_definition_points,
                        ),
                        num_rounds: rounds,
                        judge_model: self.judge.model_name.clone(),
                        random_seed: self.seed.wrapping_add(game_index + 1),
                        scoring: rules,
                        history_type,
                        history_window: self.history_window,
                        temperature: self.temperature,
                        deck: subset.clone(),
                        prompt_set: self.prompt_bundle.clone(),
                    });
                }
            }
        }
        Ok(games)
    }

    /// Load the prompt bundle this config names.
    pub fn load_prompts(&self, config_path: &Path) -> Option<PromptSet> {
        if self.prompt_bundle == "builtin" {
            return Some(PromptSet::builtin());
        }
        let path = Path::new(&self.prompt_bundle);
        let resolved = if path.is_absolute() {
            path.to_path_buf()
        } else {
            config_path
                .parent()
                .unwrap_or_else(|| Path::new("."))
                .join(path)
        };
        PromptSet::load_dir(&resolved).ok()
    }
}

/// Load an experiment config plus its deck, or the full list of what is
/// wrong with them.
pub fn load_experiment(
    config_path: &Path,
) -> Result<(ExperimentConfig, WordDeck, PromptSet, String), Vec<String>> {
    let text = std::fs::read_to_string(config_path)
        .map_err(|e| vec![format!("cannot read {}: {e}", config_path.display())])?;
    let config = ExperimentConfig::parse(&text).map_err(|e| vec![e])?;

    let mut errors = Vec::new();
    let deck = match load_deck(&config.deck_path(config_path)) {
        Ok(deck) => Some(deck),
        Err(e) => {
            errors.push(e.to_string());
            None
        }
    };
    let prompts = config.load_prompts(config_path);

    if let Some(deck) = &deck {
        errors.extend(config.validate(deck, prompts.as_ref()));
    } else if prompts.is_none() {
        errors.push(format!("prompt bundle '{}' cannot be loaded", config.prompt_bundle));
    }

    if errors.is_empty() {
        Ok((config, deck.unwrap(), prompts.unwrap(), text))
    } else {
        Err(errors)
    }
}

/// Bindings for the known-word labeling pipeline.
#[derive(Debug, Clone, Deserialize)]
pub struct LabelConfig {
    #[serde(default = "LabelConfig::default_samples")]
    pub samples: u32,
    #[serde(default = "LabelConfig::default_threshold")]
    pub threshold: u32,
    pub definition_agent: AgentBinding,
    pub judge: AgentBinding,
}

impl LabelConfig {
    fn default_samples() -> u32 {
        5
    }

    fn default_threshold() -> u32 {
        3
    }

    pub fn parse(text: &str) -> Result<Self, String> {
        let config: Self =
            toml::from_str(text).map_err(|e| format!("config parse error: {e}"))?;
        Ok(config)
    }

    pub fn validate(&self) -> Vec<String> {
        let mut errors = Vec::new();
        if self.threshold == 0 || self.threshold > self.samples {
            errors.push(format!(
                "threshold {} must be within 1..=samples ({})",
                self.threshold, self.samples
            ));
        }
        errors.extend(self.definition_agent.validate());
        errors.extend(self.judge.validate());
        errors
    }
}

/// Binding for the judge-benchmark command.
#[derive(Debug, Clone, Deserialize)]
pub struct JudgeConfig {
    pub judge: AgentBinding,
}

impl JudgeConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        toml::from_str(text).map_err(|e| format!("config parse error: {e}"))
    }
}
