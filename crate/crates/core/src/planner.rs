//! Keyword interpretation and sentence planning.
//!
//! Content words keep their order. The planner splits them at the first verb,
//! decides which function words to add, and keeps every lexicalization the
//! grammar can derive. Two lexicalization variants are produced: a full one
//! (articles on common nouns, explicit default subject) and a minimal one
//! (articles only inside the subject, default subject elided). Full plans
//! always rank first.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::grammar::{Grammar, SyntaxTree};
use crate::lexicon::{LexicalCategory, LexicalEntry, Lexicon, Mood, Number, WordForm};
use crate::lm::NGramModel;

use LexicalCategory as Cat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Marker {
    Negation,
    Question,
    /// An explicit `se`: forces the reflexive reading of the main verb.
    Reflexive,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Resolved {
    pub entry: LexicalEntry,
    pub form: WordForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputToken {
    pub raw: String,
    /// `None` for markers and out-of-vocabulary words.
    pub resolved: Option<Resolved>,
    pub marker: Option<Marker>,
}

impl InputToken {
    /// Lexical category; out-of-vocabulary words count as proper names. `None` for markers.
    pub fn category(&self) -> Option<LexicalCategory> {
        if self.marker.is_some() {
            return None;
        }
        Some(
            self.resolved
                .as_ref()
                .map_or(Cat::ProperName, |r| r.entry.category),
        )
    }

    pub fn is_oov(&self) -> bool {
        self.marker.is_none() && self.resolved.is_none()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SentenceMode {
    Affirmative,
    Negative,
    Interrogative,
    NegativeInterrogative,
}

impl SentenceMode {
    pub fn is_negative(self) -> bool {
        matches!(
            self,
            SentenceMode::Negative | SentenceMode::NegativeInterrogative
        )
    }

    pub fn is_question(self) -> bool {
        matches!(
            self,
            SentenceMode::Interrogative | SentenceMode::NegativeInterrogative
        )
    }

    pub fn as_str(self) -> &'static str {
        match self {
            SentenceMode::Affirmative => "affirmative",
            SentenceMode::Negative => "negative",
            SentenceMode::Interrogative => "interrogative",
            SentenceMode::NegativeInterrogative => "negative_interrogative",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum PlanError {
    #[error("no content words in the input")]
    EmptyInput,
    #[error("no verb among the input words")]
    NoVerb { echo: String },
    #[error("no grammar structure fits the input: {reason}")]
    NoStructure { echo: String, reason: String },
}

impl PlanError {
    /// The input words to show in place of a sentence, when generation was attempted.
    pub fn echo(&self) -> Option<&str> {
        match self {
            PlanError::EmptyInput => None,
            PlanError::NoVerb { echo } | PlanError::NoStructure { echo, .. } => Some(echo),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rationale {
    Determiner,
    Preposition,
    Conjunction,
    DefaultSubject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Full,
    Minimal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SlotSource {
    /// Index into the plan's token list.
    Token(usize),
    Inserted {
        lemma: String,
        rationale: Rationale,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Slot {
    pub category: LexicalCategory,
    pub source: SlotSource,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Insertion {
    /// Slot index.
    pub position: usize,
    pub category: LexicalCategory,
    pub word: String,
    pub rationale: Rationale,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SentencePlan {
    pub mode: SentenceMode,
    pub tokens: Vec<InputToken>,
    pub subject: Vec<usize>,
    pub predicate: Vec<usize>,
    /// The user gave no subject; agreement defaults to first person singular.
    pub default_subject: bool,
    pub reflexive: bool,
    pub variant: Variant,
    pub slots: Vec<Slot>,
    pub tree: SyntaxTree,
    pub inserted: Vec<Insertion>,
    /// Sum of log probabilities of prepositions chosen from the n-gram model.
    pub lm_score: f64,
    /// Position among the variant's lexicalizations before ranking.
    pub discovery: usize,
}

impl SentencePlan {
    /// Slot words before inflection; inserted words appear as lemmas.
    pub fn slot_words(&self) -> Vec<&str> {
        self.slots
            .iter()
            .map(|s| match &s.source {
                SlotSource::Token(i) => self.tokens[*i].raw.as_str(),
                SlotSource::Inserted { lemma, .. } => lemma.as_str(),
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlannerConfig {
    /// Minimum share of a verb's occurrences followed by a preposition before one is inserted.
    pub preposition_threshold: f64,
    /// Most linker positions explored per input (each doubles the search).
    pub max_linker_gaps: usize,
}

impl Default for PlannerConfig {
    fn default() -> Self {
        PlannerConfig {
            preposition_threshold: 0.5,
            max_linker_gaps: 6,
        }
    }
}

pub const DEFAULT_SUBJECT: &str = "yo";
pub const DEFINITE_ARTICLE: &str = "el";
const LINKERS: [(&str, Cat, Rationale); 2] = [
    ("y", Cat::Conjunction, Rationale::Conjunction),
    ("de", Cat::Preposition, Rationale::Preposition),
];

fn marker_of(word: &str) -> Option<Marker> {
    match word {
        "no" => Some(Marker::Negation),
        "se" => Some(Marker::Reflexive),
        w if !w.is_empty() && w.chars().all(|c| c == '?' || c == '¿') => Some(Marker::Question),
        _ => None,
    }
}

/// Resolves each word through the surface index, then the lemma index; the
/// first reading in lexicon order is kept.
pub fn tokenize_and_resolve<S: AsRef<str>>(
    words: &[S],
    lex: &Lexicon,
) -> Result<Vec<InputToken>, PlanError> {
    let tokens: Vec<InputToken> = words
        .iter()
        .map(|w| w.as_ref().trim())
        .filter(|w| !w.is_empty())
        .map(|raw| {
            let lower = raw.to_lowercase();
            if let Some(m) = marker_of(&lower) {
                return InputToken {
                    raw: raw.to_string(),
                    resolved: None,
                    marker: Some(m),
                };
            }
            let resolved = lex
                .lookup_form(&lower)
                .first()
                .map(|(e, f)| Resolved {
                    entry: (*e).clone(),
                    form: (*f).clone(),
                })
                .or_else(|| {
                    lex.lookup_lemma(&lower, None).first().and_then(|e| {
                        let form = e
                            .forms
                            .iter()
                            .find(|f| f.surface == e.lemma)
                            .or(e.forms.first())?;
                        Some(Resolved {
                            entry: (*e).clone(),
                            form: form.clone(),
                        })
                    })
                });
            InputToken {
                raw: raw.to_string(),
                resolved,
                marker: None,
            }
        })
        .collect();
    if tokens.iter().all(|t| t.marker.is_some()) {
        return Err(PlanError::EmptyInput);
    }
    Ok(tokens)
}

pub fn detect_mode(tokens: &[InputToken]) -> SentenceMode {
    let neg = tokens.iter().any(|t| t.marker == Some(Marker::Negation));
    let q = tokens.iter().any(|t| t.marker == Some(Marker::Question));
    match (neg, q) {
        (false, false) => SentenceMode::Affirmative,
        (true, false) => SentenceMode::Negative,
        (false, true) => SentenceMode::Interrogative,
        (true, true) => SentenceMode::NegativeInterrogative,
    }
}

fn echo_of(tokens: &[InputToken]) -> String {
    tokens
        .iter()
        .map(|t| t.raw.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Content-token indices before the first verb, and from it onwards.
pub fn split_subject_predicate(
    tokens: &[InputToken],
) -> Result<(Vec<usize>, Vec<usize>), PlanError> {
    let content: Vec<usize> = (0..tokens.len())
        .filter(|&i| tokens[i].marker.is_none())
        .collect();
    let main = content
        .iter()
        .position(|&i| tokens[i].category() == Some(Cat::Verb))
        .ok_or_else(|| PlanError::NoVerb {
            echo: echo_of(tokens),
        })?;
    Ok((content[..main].to_vec(), content[main..].to_vec()))
}

/// Plans for an empty subject start with an inserted `yo`; returns whether one is needed.
pub fn insert_default_subject(subject: &[usize]) -> bool {
    subject.is_empty()
}

fn is_nominal_head(c: Cat) -> bool {
    matches!(c, Cat::Noun | Cat::Pronoun | Cat::ProperName)
}

fn starts_nominal(c: Cat) -> bool {
    is_nominal_head(c) || c == Cat::Determiner
}

struct Context<'a> {
    tokens: &'a [InputToken],
    content: Vec<usize>,
    /// Position of the main verb within `content`.
    main: usize,
    lex: &'a Lexicon,
    lm: &'a NGramModel,
    cfg: PlannerConfig,
}

impl Context<'_> {
    fn cat(&self, k: usize) -> Cat {
        self.tokens[self.content[k]]
            .category()
            .expect("content token")
    }

    fn entry(&self, k: usize) -> Option<&LexicalEntry> {
        self.tokens[self.content[k]]
            .resolved
            .as_ref()
            .map(|r| &r.entry)
    }

    fn form(&self, k: usize) -> Option<&WordForm> {
        self.tokens[self.content[k]]
            .resolved
            .as_ref()
            .map(|r| &r.form)
    }

    fn ends_nominal(&self, k: usize) -> bool {
        match self.cat(k) {
            c if is_nominal_head(c) => true,
            Cat::Adjective => k > 0 && self.ends_nominal(k - 1),
            _ => false,
        }
    }

    /// Gaps between two adjacent nominal syntagms on the same side of the main verb.
    fn linker_gaps(&self) -> Vec<usize> {
        (0..self.content.len().saturating_sub(1))
            .filter(|&k| {
                k + 1 != self.main && self.ends_nominal(k) && starts_nominal(self.cat(k + 1))
            })
            .take(self.cfg.max_linker_gaps)
            .collect()
    }

    /// Preposition the model prefers after the verb at `k`, if it is used often enough.
    fn verb_preposition(&self, k: usize) -> Option<(String, f64)> {
        let key = self.entry(k)?.lm_key();
        if self.lm.preposition_rate(key)? < self.cfg.preposition_threshold {
            return None;
        }
        let (p, prob) = self.lm.preposition_after(key)?.into_iter().next()?;
        self.lex.lookup_lemma(&p, Some(Cat::Preposition)).first()?;
        Some((p, prob))
    }

    fn after_verb_preposition(&self, k: usize) -> Option<(String, f64)> {
        if k == 0 || self.cat(k - 1) != Cat::Verb {
            return None;
        }
        let c = self.cat(k);
        if starts_nominal(c) || c == Cat::Verb {
            self.verb_preposition(k - 1)
        } else {
            None
        }
    }

    /// A plural object noun right after the verb with nothing coordinated to it goes without article.
    fn is_bare_object(&self, k: usize, linkers: &[Option<usize>]) -> bool {
        if k == 0 || self.cat(k - 1) != Cat::Verb || self.after_verb_preposition(k).is_some() {
            return false;
        }
        if self.form(k).map(|f| f.features.number) != Some(Number::Plural) {
            return false;
        }
        let mut end = k;
        while end + 1 < self.content.len() && self.cat(end + 1) == Cat::Adjective {
            end += 1;
        }
        let linked = linkers.get(end).copied().flatten().is_some();
        let coordinated = end + 1 < self.content.len() && self.cat(end + 1) == Cat::Conjunction;
        !linked && !coordinated
    }

    fn lexicalize(
        &self,
        variant: Variant,
        default_subject: bool,
        linkers: &[Option<usize>],
    ) -> (Vec<Slot>, f64) {
        let mut slots = Vec::new();
        let mut score = 0.0;
        let ins = |lemma: &str, category: Cat, rationale: Rationale| Slot {
            category,
            source: SlotSource::Inserted {
                lemma: lemma.to_string(),
                rationale,
            },
        };
        if default_subject && variant == Variant::Full {
            slots.push(ins(
                DEFAULT_SUBJECT,
                Cat::Pronoun,
                Rationale::DefaultSubject,
            ));
        }
        for k in 0..self.content.len() {
            let cat = self.cat(k);
            if let Some((p, prob)) = self.after_verb_preposition(k) {
                slots.push(ins(&p, Cat::Preposition, Rationale::Preposition));
                score += prob.ln();
            }
            if cat == Cat::Noun {
                let explicit_det = k > 0 && self.cat(k - 1) == Cat::Determiner;
                let no_article = self.entry(k).is_some_and(|e| e.no_article);
                let wanted = match variant {
                    Variant::Full => !self.is_bare_object(k, linkers),
                    Variant::Minimal => k < self.main,
                };
                if wanted && !explicit_det && !no_article {
                    slots.push(ins(
                        DEFINITE_ARTICLE,
                        Cat::Determiner,
                        Rationale::Determiner,
                    ));
                }
            }
            slots.push(Slot {
                category: cat,
                source: SlotSource::Token(self.content[k]),
            });
            if let Some(Some(l)) = linkers.get(k) {
                let (w, c, r) = LINKERS[*l];
                slots.push(ins(w, c, r));
            }
        }
        (slots, score)
    }
}

/// Every choice vector over `gaps` linker positions, leftmost gap most significant.
fn linker_choices(n_content: usize, gaps: &[usize]) -> Vec<Vec<Option<usize>>> {
    let mut out = Vec::new();
    let total = LINKERS.len().pow(gaps.len() as u32);
    for mut code in 0..total {
        let mut v = vec![None; n_content];
        for &g in gaps.iter().rev() {
            v[g] = Some(code % LINKERS.len());
            code /= LINKERS.len();
        }
        out.push(v);
    }
    if out.is_empty() {
        out.push(vec![None; n_content]);
    }
    out
}

/// All derivable plans, best first, without duplicates.
pub fn plan_structures(
    tokens: Vec<InputToken>,
    grammar: &Grammar,
    lex: &Lexicon,
    lm: &NGramModel,
    cfg: PlannerConfig,
) -> Result<Vec<SentencePlan>, PlanError> {
    let mode = detect_mode(&tokens);
    let (subject, predicate) = split_subject_predicate(&tokens)?;
    let echo = echo_of(&tokens);
    // Later verbs must be infinitives; a second finite verb means a second clause.
    for &i in &predicate[1..] {
        if let Some(r) = tokens[i]
            .resolved
            .as_ref()
            .filter(|r| r.entry.category == Cat::Verb)
        {
            if r.form.features.mood != Mood::Infinitive {
                return Err(PlanError::NoStructure {
                    echo,
                    reason: format!("`{}` is a finite form after the main verb", tokens[i].raw),
                });
            }
        }
    }
    let default_subject = insert_default_subject(&subject);
    let reflexive = tokens.iter().any(|t| t.marker == Some(Marker::Reflexive));
    let content: Vec<usize> = subject.iter().chain(&predicate).copied().collect();
    let ctx = Context {
        tokens: &tokens,
        content,
        main: subject.len(),
        lex,
        lm,
        cfg,
    };
    let gaps = ctx.linker_gaps();
    let mut plans: Vec<SentencePlan> = Vec::new();
    let mut seen: Vec<Vec<String>> = Vec::new();
    for variant in [Variant::Full, Variant::Minimal] {
        for (discovery, linkers) in linker_choices(ctx.content.len(), &gaps)
            .into_iter()
            .enumerate()
        {
            let (slots, lm_score) = ctx.lexicalize(variant, default_subject, &linkers);
            let cats: Vec<Cat> = slots.iter().map(|s| s.category).collect();
            let Some(tree) = grammar.first_match(&cats) else {
                continue;
            };
            let inserted = slots
                .iter()
                .enumerate()
                .filter_map(|(position, s)| match &s.source {
                    SlotSource::Inserted { lemma, rationale } => Some(Insertion {
                        position,
                        category: s.category,
                        word: lemma.clone(),
                        rationale: *rationale,
                    }),
                    SlotSource::Token(_) => None,
                })
                .collect();
            let plan = SentencePlan {
                mode,
                tokens: tokens.clone(),
                subject: subject.clone(),
                predicate: predicate.clone(),
                default_subject,
                reflexive,
                variant,
                slots,
                tree,
                inserted,
                lm_score,
                discovery,
            };
            let key: Vec<String> = plan.slot_words().iter().map(|s| s.to_string()).collect();
            if !seen.contains(&key) {
                seen.push(key);
                plans.push(plan);
            }
        }
    }
    if plans.is_empty() {
        return Err(PlanError::NoStructure {
            echo,
            reason: "no lexicalization is derivable".into(),
        });
    }
    plans.sort_by(|a, b| {
        a.variant
            .cmp(&b.variant)
            .then(a.inserted.len().cmp(&b.inserted.len()))
            .then(b.lm_score.total_cmp(&a.lm_score))
            .then(a.discovery.cmp(&b.discovery))
    });
    Ok(plans)
}
