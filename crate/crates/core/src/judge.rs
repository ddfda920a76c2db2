//! Semantic-equivalence decisions, known-word labeling, and the
//! judge-benchmark evaluator.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::agents::{ChatAgent, ChatMessage};
use crate::domain::{WordDeck, WordEntry};
use crate::error::{JudgeError, PromptError};
use crate::prompts::{parse_judge_verdict, PromptSet};

/// One equivalence decision, with the raw response that produced it.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct JudgeVerdict {
    pub word: String,
    pub reference_definition: String,
    pub candidate_definition: String,
    pub verdict: bool,
    pub raw_response: String,
}

/// Human-labeled fixture row for benchmarking a judge model.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledJudgeExample {
    pub word: String,
    pub reference_definition: String,
    pub candidate_definition: String,
    pub human_label: bool,
}

/// Load a fixture file: a JSON array of [`LabeledJudgeExample`] objects.
pub fn load_labeled_examples(path: &Path) -> Result<Vec<LabeledJudgeExample>, JudgeError> {
    let data = std::fs::read_to_string(path).map_err(|e| JudgeError::Prompt(PromptError::BundleIo {
        path: path.display().to_string(),
        detail: e.to_string(),
    }))?;
    serde_json::from_str(&data).map_err(|e| {
        JudgeError::Prompt(PromptError::BundleIo {
            path: path.display().to_string(),
            detail: e.to_string(),
        })
    })
}

/// Confusion-matrix metrics with `verdict = true` as the positive class.
/// Divisions by zero yield 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JudgeEvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub accuracy: f64,
    pub examples: usize,
    /// Examples where the judge failed outright and was counted as a
    /// predicted-false.
    pub failures: usize,
}

/// The Dasher role: an agent plus the judge prompts and a format-retry limit.
pub struct Judge<'a> {
    agent: &'a dyn ChatAgent,
    prompts: &'a PromptSet,
    retry_limit: u32,
}

impl<'a> Judge<'a> {
    pub fn new(agent: &'a dyn ChatAgent, prompts: &'a PromptSet, retry_limit: u32) -> Self {
        Self {
            agent,
            prompts,
            retry_limit,
        }
    }

    /// Is `candidate` semantically equal to `reference`? Re-asks the same
    /// prompt up to the retry limit when the verdict does not parse.
    pub fn equivalence(
        &self,
        word: &str,
        reference: &str,
        candidate: &str,
    ) -> Result<JudgeVerdict, JudgeError> {
        let messages = [
            ChatMessage::system(self.prompts.judge_system()),
            ChatMessage::user(self.prompts.render_judge_user(word, reference, candidate)),
        ];
        let attempts = self.retry_limit + 1;
        let mut last_raw = String::new();
        for _ in 0..attempts {
            let raw = self.agent.complete(&messages)?;
            match parse_judge_verdict(&raw) {
                Ok(verdict) => {
                    return Ok(JudgeVerdict {
                        word: word.to_string(),
                        reference_definition: reference.to_string(),
                        candidate_definition: candidate.to_string(),
                        verdict,
                        raw_response: raw,
                    })
                }
                Err(_) => last_raw = raw,
            }
        }
        Err(JudgeError::Unparseable {
            attempts,
            detail: last_raw,
        })
    }

    /// Judge a candidate against every definition of a word.
    ///
    /// Returns `(judge_decision, llm_knows_one)`: equivalence to
    /// `definitions[0]`, and equivalence to any definition. The reference is
    /// checked first and the scan short-circuits, so the first flag implies
    /// the second by construction.
    pub fn against_all(
        &self,
        entry: &WordEntry,
        candidate: &str,
    ) -> Result<(bool, bool), JudgeError> {
        let reference = entry.reference_definition();
        if self.equivalence(&entry.word, reference, candidate)?.verdict {
            return Ok((true, true));
        }
        for definition in &entry.definitions[1..] {
            if self.equivalence(&entry.word, definition, candidate)?.verdict {
                return Ok((false, true));
            }
        }
        Ok((false, false))
    }
}

/// Knobs for the known-word labeling pipeline.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelOptions {
    /// Definitions sampled per word.
    pub samples: u32,
    /// Minimum matching samples for a word to count as known.
    pub threshold: u32,
}

impl Default for LabelOptions {
    /// Majority of five samples.
    fn default() -> Self {
        Self {
            samples: 5,
            threshold: 3,
        }
    }
}

/// Outcome of labeling one word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordLabelReport {
    pub word: String,
    /// Per-sample equivalence verdicts; empty-response samples count false.
    pub verdicts: Vec<bool>,
    pub known: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub failure: Option<String>,
}

/// Build the deck of words a model already knows: sample a definition
/// `samples` times through the universal-dictionary prompt and keep the word
/// when at least `threshold` samples are judged equivalent to the reference
/// definition.
///
/// Agent or judge failures exclude the affected word and are recorded in its
/// report; they never abort the pipeline. Sampling temperature lives on the
/// definition agent's binding.
pub fn label_known_words(
    deck: &WordDeck,
    definition_agent: &dyn ChatAgent,
    judge: &Judge<'_>,
    prompts: &PromptSet,
    options: LabelOptions,
) -> (WordDeck, Vec<WordLabelReport>) {
    assert!(
        options.threshold >= 1 && options.threshold <= options.samples,
        "threshold must be within 1..=samples"
    );

    let mut known = Vec::new();
    let mut reports = Vec::with_capacity(deck.len());

    'words: for entry in &deck.entries {
        let mut verdicts = Vec::with_capacity(options.samples as usize);
        for _ in 0..options.samples {
            let messages = [
                ChatMessage::system(prompts.dictionary_system()),
                ChatMessage::user(prompts.render_dictionary_user(&entry.word, &entry.pos)),
            ];
            let candidate = match definition_agent.complete(&messages) {
                Ok(raw) => raw.trim().to_string(),
                Err(e) => {
                    reports.push(WordLabelReport {
                        word: entry.word.clone(),
                        verdicts,
                        known: false,
                        failure: Some(format!("definition agent: {e}")),
                    });
                    continue 'words;
                }
            };
            if candidate.is_empty() {
                // Unusable sample: counted as a non-matching verdict.
                verdicts.push(false);
                continue;
            }
            match judge.equivalence(&entry.word, entry.reference_definition(), &candidate) {
                Ok(v) => verdicts.push(v.verdict),
                Err(e) => {
                    reports.push(WordLabelReport {
                        word: entry.word.clone(),
                        verdicts,
                        known: false,
                        failure: Some(format!("judge: {e}")),
                    });
                    continue 'words;
                }
            }
        }
        let matches = verdicts.iter().filter(|&&v| v).count() as u32;
        let is_known = matches >= options.threshold;
        if is_known {
            known.push(entry.clone());
        }
        reports.push(WordLabelReport {
            word: entry.word.clone(),
            verdicts,
            known: is_known,
            failure: None,
        });
    }

    (WordDeck::new(format!("{}_known", deck.name), known), reports)
}

/// Benchmark a judge against human labels.
pub fn evaluate_judge(
    judge: &Judge<'_>,
    dataset: &[LabeledJudgeExample],
) -> Result<JudgeEvalReport, JudgeError> {
    if dataset.is_empty() {
        return Err(JudgeError::EmptyDataset);
    }

    let (mut tp, mut fp, mut tn, mut fn_) = (0usize, 0usize, 0usize, 0usize);
    let mut failures = 0usize;
    for example in dataset {
        let predicted = match judge.equivalence(
            &example.word,
            &example.reference_definition,
            &example.candidate_definition,
        ) {
            Ok(v) => v.verdict,
            Err(e) => {
                log::warn!("judge failed on '{}', counting as false: {e}", example.word);
                failures += 1;
                false
            }
        };
        match (predicted, example.human_label) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, false) => tn += 1,
            (false, true) => fn_ += 1,
        }
    }

    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fn_);
    let f1 = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    let accuracy = ratio(tp + tn, dataset.len());
    Ok(JudgeEvalReport {
        precision,
        recall,
        f1,
        accuracy,
        examples: dataset.len(),
        failures,
    })
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}
