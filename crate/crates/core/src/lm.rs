//! Verb-centred bigram/trigram counts.
//!
//! For every verb occurrence the model counts a preposition right after it
//! (weight 1) and one two tokens after it (weight `trigram_weight`), plus
//! whether a `se` clitic touches the verb. Corpus lines hold `surface/lemma/tag`
//! tokens separated by spaces.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::LexicalCategory;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaggedToken {
    pub surface: String,
    pub lemma: String,
    pub tag: LexicalCategory,
}

/// Maps the coarse tags accepted in corpora onto lexical categories.
pub fn parse_tag(tag: &str) -> Option<LexicalCategory> {
    use LexicalCategory::*;
    Some(match tag.to_ascii_lowercase().as_str() {
        "noun" | "n" => Noun,
        "verb" | "v" => Verb,
        "adj" | "adjective" | "a" => Adjective,
        "adv" | "adverb" | "r" => Adverb,
        "det" | "determiner" | "d" => Determiner,
        "pro" | "pron" | "pronoun" => Pronoun,
        "conj" | "conjunction" | "c" => Conjunction,
        "prep" | "preposition" | "p" | "s" => Preposition,
        "np" | "propn" | "proper_name" => ProperName,
        _ => return None,
    })
}

pub fn parse_tagged_line(line: &str) -> Result<Vec<TaggedToken>, String> {
    line.split_whitespace()
        .map(|tok| {
            let parts: Vec<&str> = tok.split('/').collect();
            match parts.as_slice() {
                [s, l, t] if !s.is_empty() && !l.is_empty() => {
                    let tag =
                        parse_tag(t).ok_or_else(|| format!("unknown tag `{t}` in `{tok}`"))?;
                    Ok(TaggedToken {
                        surface: s.to_string(),
                        lemma: l.to_string(),
                        tag,
                    })
                }
                _ => Err(format!("malformed token `{tok}`")),
            }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub trigram_weight: f64,
    pub smoothing_k: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            trigram_weight: 0.5,
            smoothing_k: 0.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainReport {
    pub sentences: usize,
    pub skipped_lines: Vec<usize>,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbCounts {
    pub total: u64,
    pub reflexive: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct NGramModel {
    pub verbs: BTreeMap<String, VerbCounts>,
    pub prepositions: BTreeMap<String, BTreeMap<String, f64>>,
    pub smoothing_k: f64,
}

#[derive(Debug, Error)]
#[error("line {line}: {message}")]
pub struct ModelParseError {
    pub line: usize,
    pub message: String,
}

fn is_se(t: &TaggedToken) -> bool {
    t.surface.eq_ignore_ascii_case("se") || t.lemma == "se"
}

impl NGramModel {
    pub fn train<'a, I>(sentences: I, cfg: &TrainConfig) -> NGramModel
    where
        I: IntoIterator<Item = &'a [TaggedToken]>,
    {
        let mut m = NGramModel {
            smoothing_k: cfg.smoothing_k,
            ..Default::default()
        };
        for s in sentences {
            for (i, tok) in s.iter().enumerate() {
                if tok.tag != LexicalCategory::Verb {
                    continue;
                }
                let counts = m.verbs.entry(tok.lemma.clone()).or_default();
                counts.total += 1;
                let before = i.checked_sub(1).map(|j| &s[j]);
                if before.is_some_and(is_se) || s.get(i + 1).is_some_and(is_se) {
                    counts.reflexive += 1;
                }
                for (offset, weight) in [(1, 1.0), (2, cfg.trigram_weight)] {
                    if let Some(p) = s
                        .get(i + offset)
                        .filter(|p| p.tag == LexicalCategory::Preposition)
                    {
                        *m.prepositions
                            .entry(tok.lemma.clone())
                            .or_default()
                            .entry(p.lemma.to_lowercase())
                            .or_insert(0.0) += weight;
                    }
                }
            }
        }
        m
    }

    /// Trains from corpus text, skipping (and reporting) malformed lines.
    pub fn train_text(text: &str, cfg: &TrainConfig) -> (NGramModel, TrainReport) {
        let mut report = TrainReport::default();
        let mut sentences = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            match parse_tagged_line(line) {
                Ok(s) => sentences.push(s),
                Err(_) => report.skipped_lines.push(i + 1),
            }
        }
        report.sentences = sentences.len();
        let model = NGramModel::train(sentences.iter().map(|s| s.as_slice()), cfg);
        (model, report)
    }

    fn vocabulary(&self) -> BTreeSet<&str> {
        self.prepositions
            .values()
            .flat_map(|m| m.keys().map(String::as_str))
            .collect()
    }

    /// Preposition distribution after `verb`, most probable first; `None` for unseen verbs.
    pub fn preposition_after(&self, verb: &str) -> Option<Vec<(String, f64)>> {
        self.verbs.get(verb)?;
        let counts = self.prepositions.get(verb);
        let k = self.smoothing_k;
        let mut dist: Vec<(String, f64)> = if k > 0.0 {
            let vocab = self.vocabulary();
            let total: f64 =
                counts.map(|c| c.values().sum()).unwrap_or(0.0) + k * vocab.len() as f64;
            vocab
                .into_iter()
                .map(|p| {
                    let c = counts.and_then(|c| c.get(p)).copied().unwrap_or(0.0);
                    (p.to_string(), (c + k) / total)
                })
                .collect()
        } else {
            let Some(counts) = counts else {
                return Some(Vec::new());
            };
            let total: f64 = counts.values().sum();
            counts.iter().map(|(p, c)| (p.clone(), c / total)).collect()
        };
        dist.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        Some(dist)
    }

    /// Weighted preposition mass per occurrence of `verb`.
    pub fn preposition_rate(&self, verb: &str) -> Option<f64> {
        let v = self.verbs.get(verb)?;
        let mass: f64 = self
            .prepositions
            .get(verb)
            .map(|c| c.values().sum())
            .unwrap_or(0.0);
        Some(mass / v.total as f64)
    }

    pub fn reflexive_probability(&self, verb: &str) -> Option<f64> {
        self.verbs
            .get(verb)
            .map(|v| v.reflexive as f64 / v.total as f64)
    }

    /// Sorted plain-text count table.
    pub fn to_text(&self) -> String {
        let mut lines = Vec::new();
        if self.smoothing_k != 0.0 {
            lines.push(format!("K {}", self.smoothing_k));
        }
        for (v, c) in &self.verbs {
            lines.push(format!("V {v} {} {}", c.total, c.reflexive));
        }
        for (v, ps) in &self.prepositions {
            for (p, c) in ps {
                lines.push(format!("P {v} {p} {c}"));
            }
        }
        lines.sort();
        let mut out = lines.join("\n");
        out.push('\n');
        out
    }

    pub fn from_text(text: &str) -> Result<NGramModel, ModelParseError> {
        let mut m = NGramModel::default();
        for (i, line) in text.lines().enumerate() {
            let err = |message: &str| ModelParseError {
                line: i + 1,
                message: message.to_string(),
            };
            let fields: Vec<&str> = line.split_whitespace().collect();
            match fields.as_slice() {
                [] => {}
                [c, ..] if c.starts_with('#') => {}
                ["K", k] => m.smoothing_k = k.parse().map_err(|_| err("bad smoothing constant"))?,
                ["V", v, total, refl] => {
                    let total: u64 = total.parse().map_err(|_| err("bad total"))?;
                    let reflexive: u64 = refl.parse().map_err(|_| err("bad reflexive count"))?;
                    if reflexive > total || total == 0 {
                        return Err(err("reflexive count must not exceed a positive total"));
                    }
                    m.verbs
                        .insert(v.to_string(), VerbCounts { total, reflexive });
                }
                ["P", v, p, c] => {
                    let c: f64 = c.parse().map_err(|_| err("bad count"))?;
                    if !(c >= 0.0 && c.is_finite()) {
                        return Err(err("counts must be finite and non-negative"));
                    }
                    m.prepositions
                        .entry(v.to_string())
                        .or_default()
                        .insert(p.to_string(), c);
                }
                _ => {
                    return Err(err(
                        "expected `V verb total reflexive` or `P verb prep count`",
                    ))
                }
            }
        }
        if let Some(v) = m.prepositions.keys().find(|v| !m.verbs.contains_key(*v)) {
            return Err(ModelParseError {
                line: 0,
                message: format!("P lines for `{v}` without a V line"),
            });
        }
        Ok(m)
    }
}
