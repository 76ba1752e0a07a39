//! Exact-match harness and inter-annotator agreement (nominal Krippendorff's alpha).

use std::collections::{BTreeMap, BTreeSet};

use quick_xml::events::Event;
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::LineCounter;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("need at least two observers, got {0}")]
    TooFewObservers(usize),
    #[error("need more than one pairable value, got {0}")]
    TooFewValues(f64),
    #[error("reliability matrix is not rectangular")]
    Ragged,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub target: String,
    pub keywords: Vec<String>,
}

/// Reads `target<TAB>kw1,kw2,...` lines. Blank lines and `#` comments are skipped.
pub fn load_corpus(src: &str) -> Result<Vec<CorpusItem>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        let err = |message: &str| EvalError::Parse {
            line: i + 1,
            message: message.to_string(),
        };
        if line.trim().is_empty() || line.starts_with('#') {
            continue;
        }
        let (target, kws) = line
            .split_once('\t')
            .ok_or_else(|| err("expected target<TAB>keywords"))?;
        let keywords: Vec<String> = kws
            .split(',')
            .map(str::trim)
            .filter(|k| !k.is_empty())
            .map(String::from)
            .collect();
        let target = normalize_whitespace(target);
        if target.is_empty() || keywords.is_empty() {
            return Err(err("target and keywords must be non-empty"));
        }
        out.push(CorpusItem { target, keywords });
    }
    Ok(out)
}

pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Why a generator produced no candidates.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GeneratorFailure {
    pub message: String,
    /// Set when the pipeline fell back to echoing the keywords.
    pub echo: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemOutcome {
    pub target: String,
    pub keywords: Vec<String>,
    pub matched: bool,
    pub candidates: Vec<String>,
    pub echo: Option<String>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchReport {
    pub matched: usize,
    pub total: usize,
    pub rate: f64,
    pub outcomes: Vec<ItemOutcome>,
}

/// Runs `generator` on every item; an item matches when any candidate equals
/// the target after whitespace normalization.
pub fn exact_match_rate<F>(items: &[CorpusItem], mut generator: F) -> MatchReport
where
    F: FnMut(&[String]) -> Result<Vec<String>, GeneratorFailure>,
{
    let outcomes: Vec<ItemOutcome> = items
        .iter()
        .map(|item| {
            let mut o = ItemOutcome {
                target: item.target.clone(),
                keywords: item.keywords.clone(),
                matched: false,
                candidates: Vec::new(),
                echo: None,
                error: None,
            };
            match generator(&item.keywords) {
                Ok(c) => {
                    o.matched = c.iter().any(|c| normalize_whitespace(c) == item.target);
                    o.candidates = c;
                }
                Err(f) => {
                    o.echo = f.echo;
                    o.error = Some(f.message);
                }
            }
            o
        })
        .collect();
    let matched = outcomes.iter().filter(|o| o.matched).count();
    let total = outcomes.len();
    let rate = if total == 0 {
        0.0
    } else {
        matched as f64 / total as f64
    };
    MatchReport {
        matched,
        total,
        rate,
        outcomes,
    }
}

/// Observers by units; `None` marks a missing label.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReliabilityMatrix {
    pub values: Vec<Vec<Option<String>>>,
}

impl ReliabilityMatrix {
    pub fn new(values: Vec<Vec<Option<String>>>) -> Result<Self, EvalError> {
        if let Some(first) = values.first() {
            if values.iter().any(|r| r.len() != first.len()) {
                return Err(EvalError::Ragged);
            }
        }
        Ok(ReliabilityMatrix { values })
    }

    /// Builds a complete matrix from string labels.
    pub fn from_labels<S: AsRef<str>>(rows: &[Vec<S>]) -> Result<Self, EvalError> {
        Self::new(
            rows.iter()
                .map(|r| r.iter().map(|v| Some(v.as_ref().to_string())).collect())
                .collect(),
        )
    }

    pub fn observers(&self) -> usize {
        self.values.len()
    }

    pub fn units(&self) -> usize {
        self.values.first().map_or(0, Vec::len)
    }

    pub fn restrict(&self, observers: &[usize]) -> ReliabilityMatrix {
        ReliabilityMatrix {
            values: observers.iter().map(|&o| self.values[o].clone()).collect(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoincidenceMatrix {
    /// Sorted distinct labels; row/column `i` of `o` refers to `labels[i]`.
    pub labels: Vec<String>,
    pub o: Vec<Vec<f64>>,
}

impl CoincidenceMatrix {
    pub fn row_sums(&self) -> Vec<f64> {
        self.o.iter().map(|r| r.iter().sum()).collect()
    }

    pub fn total(&self) -> f64 {
        self.row_sums().iter().sum()
    }

    pub fn get(&self, c: &str, k: &str) -> f64 {
        let i = self.labels.iter().position(|l| l == c);
        let j = self.labels.iter().position(|l| l == k);
        match (i, j) {
            (Some(i), Some(j)) => self.o[i][j],
            _ => 0.0,
        }
    }
}

pub fn coincidence_matrix(r: &ReliabilityMatrix) -> Result<CoincidenceMatrix, EvalError> {
    if r.observers() < 2 {
        return Err(EvalError::TooFewObservers(r.observers()));
    }
    let labels: Vec<String> = r
        .values
        .iter()
        .flatten()
        .flatten()
        .cloned()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let index: BTreeMap<&str, usize> = labels
        .iter()
        .enumerate()
        .map(|(i, l)| (l.as_str(), i))
        .collect();
    let mut o = vec![vec![0.0; labels.len()]; labels.len()];
    for u in 0..r.units() {
        let unit: Vec<usize> = r
            .values
            .iter()
            .filter_map(|row| row[u].as_deref())
            .map(|l| index[l])
            .collect();
        let m = unit.len();
        if m < 2 {
            continue;
        }
        let mut counts = vec![0usize; labels.len()];
        for &c in &unit {
            counts[c] += 1;
        }
        let w = 1.0 / (m - 1) as f64;
        for (c, &nc) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
            for (k, &nk) in counts.iter().enumerate().filter(|(_, n)| **n > 0) {
                let pairs = if c == k { nc * (nc - 1) } else { nc * nk };
                o[c][k] += pairs as f64 * w;
            }
        }
    }
    Ok(CoincidenceMatrix { labels, o })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alpha {
    pub value: f64,
    /// True when expected disagreement is zero and the value was defined as 1.
    pub degenerate: bool,
}

/// Nominal alpha: one minus observed over expected disagreement.
pub fn krippendorff_alpha(m: &CoincidenceMatrix) -> Result<Alpha, EvalError> {
    let n = m.total();
    if n <= 1.0 {
        return Err(EvalError::TooFewValues(n));
    }
    let nc = m.row_sums();
    let mut observed = 0.0;
    let mut expected = 0.0;
    for c in 0..nc.len() {
        for k in 0..nc.len() {
            if c != k {
                observed += m.o[c][k];
                expected += nc[c] * nc[k];
            }
        }
    }
    let d_o = observed / n;
    let d_e = expected / (n * (n - 1.0));
    if d_e == 0.0 {
        return Ok(Alpha {
            value: 1.0,
            degenerate: true,
        });
    }
    Ok(Alpha {
        value: 1.0 - d_o / d_e,
        degenerate: false,
    })
}

/// Share of pairable values that agree (diagonal mass).
pub fn accuracy(m: &CoincidenceMatrix) -> Result<f64, EvalError> {
    let n = m.total();
    if n <= 0.0 {
        return Err(EvalError::TooFewValues(n));
    }
    let diag: f64 = (0..m.labels.len()).map(|c| m.o[c][c]).sum();
    Ok(diag / n)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Alpha,
    Accuracy,
}

/// Upper-triangular observer-by-observer table; cells on or below the diagonal are `None`.
pub fn pairwise_agreement(
    r: &ReliabilityMatrix,
    measure: Measure,
) -> Result<Vec<Vec<Option<f64>>>, EvalError> {
    let n = r.observers();
    if n < 2 {
        return Err(EvalError::TooFewObservers(n));
    }
    let mut out = vec![vec![None; n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate().skip(i + 1) {
            let cm = coincidence_matrix(&r.restrict(&[i, j]))?;
            *cell = Some(match measure {
                Measure::Alpha => krippendorff_alpha(&cm)?.value,
                Measure::Accuracy => accuracy(&cm)?,
            });
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorType {
    /// a: morphological
    A,
    /// b: syntactic
    B,
    /// c: lexicon
    C,
    /// d: grammar
    D,
    /// e: target
    E,
    /// f: lemmatizer
    F,
}

impl ErrorType {
    pub fn parse(s: &str) -> Option<ErrorType> {
        Some(match s.trim() {
            "a" => ErrorType::A,
            "b" => ErrorType::B,
            "c" => ErrorType::C,
            "d" => ErrorType::D,
            "e" => ErrorType::E,
            "f" => ErrorType::F,
            _ => return None,
        })
    }

    pub fn code(self) -> &'static str {
        ["a", "b", "c", "d", "e", "f"][self as usize]
    }

    pub fn description(self) -> &'static str {
        [
            "morphological",
            "syntactic",
            "lexicon",
            "grammar",
            "target",
            "lemmatizer",
        ][self as usize]
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub sentence_id: String,
    pub annotator_id: String,
    pub error_type: ErrorType,
    pub rating: u8,
    pub best_generation: Option<usize>,
    pub suggestion: Option<String>,
}

/// Reads `<annotations><annotation sentence=".." annotator="..">...</annotation>...</annotations>`.
/// The root element name is not checked.
pub fn load_annotations(src: &str) -> Result<Vec<AnnotationRecord>, EvalError> {
    let mut lines = LineCounter::new(src);
    let mut reader = Reader::from_str(src);
    reader.config_mut().trim_text(true);
    let mut out = Vec::new();
    let mut cur: Option<(usize, String, String, BTreeMap<String, String>)> = None;
    let mut field: Option<String> = None;
    loop {
        let pos = reader.buffer_position() as usize;
        let ev = reader.read_event().map_err(|e| EvalError::Parse {
            line: lines.at(pos),
            message: e.to_string(),
        })?;
        let line = lines.tag_at(src, pos);
        let err = |message: String| EvalError::Parse { line, message };
        match ev {
            Event::Start(s) if s.name().as_ref() == b"annotation" => {
                let mut sentence = None;
                let mut annotator = None;
                for a in s.attributes() {
                    let a = a.map_err(|e| err(e.to_string()))?;
                    let v = a
                        .unescape_value()
                        .map_err(|e| err(e.to_string()))?
                        .into_owned();
                    match a.key.as_ref() {
                        b"sentence" => sentence = Some(v),
                        b"annotator" => annotator = Some(v),
                        _ => {}
                    }
                }
                match (sentence, annotator) {
                    (Some(s), Some(a)) => cur = Some((line, s, a, BTreeMap::new())),
                    _ => return Err(err("<annotation> needs sentence and annotator".into())),
                }
            }
            Event::Start(s) if cur.is_some() => {
                field = Some(String::from_utf8_lossy(s.name().as_ref()).into_owned());
            }
            Event::Text(t) => {
                if let (Some((_, _, _, fields)), Some(f)) = (cur.as_mut(), field.as_ref()) {
                    let text = t.unescape().map_err(|e| err(e.to_string()))?;
                    fields.entry(f.clone()).or_default().push_str(&text);
                }
            }
            Event::End(e) if e.name().as_ref() == b"annotation" => {
                let (start, sentence_id, annotator_id, fields) = cur
                    .take()
                    .ok_or_else(|| err("stray </annotation>".into()))?;
                out.push(finish_record(start, sentence_id, annotator_id, &fields)?);
            }
            Event::End(_) => field = None,
            Event::Eof => break,
            _ => {}
        }
    }
    if let Some((line, ..)) = cur {
        return Err(EvalError::Parse {
            line,
            message: "unterminated <annotation>".into(),
        });
    }
    Ok(out)
}

fn finish_record(
    line: usize,
    sentence_id: String,
    annotator_id: String,
    fields: &BTreeMap<String, String>,
) -> Result<AnnotationRecord, EvalError> {
    let err = |message: String| EvalError::Parse { line, message };
    let get = |k: &str| fields.get(k).map(|s| s.trim()).filter(|s| !s.is_empty());
    let error_type = get("error")
        .and_then(ErrorType::parse)
        .ok_or_else(|| err("<error> must be one of a..f".into()))?;
    let rating = get("rating")
        .and_then(|r| r.parse::<u8>().ok())
        .filter(|r| *r <= 5)
        .ok_or_else(|| err("<rating> must be an integer 0..5".into()))?;
    let best_generation = match get("best") {
        Some(b) => Some(b.parse().map_err(|_| err(format!("bad <best> `{b}`")))?),
        None => None,
    };
    Ok(AnnotationRecord {
        sentence_id,
        annotator_id,
        error_type,
        rating,
        best_generation,
        suggestion: get("suggestion").map(String::from),
    })
}

/// Error-type reliability matrix: observers and units in order of first appearance.
pub fn error_type_matrix(records: &[AnnotationRecord]) -> ReliabilityMatrix {
    let mut observers: Vec<&str> = Vec::new();
    let mut units: Vec<&str> = Vec::new();
    for r in records {
        if !observers.contains(&r.annotator_id.as_str()) {
            observers.push(&r.annotator_id);
        }
        if !units.contains(&r.sentence_id.as_str()) {
            units.push(&r.sentence_id);
        }
    }
    let mut values = vec![vec![None; units.len()]; observers.len()];
    for r in records {
        let o = observers.iter().position(|a| *a == r.annotator_id).unwrap();
        let u = units.iter().position(|s| *s == r.sentence_id).unwrap();
        values[o][u] = Some(r.error_type.code().to_string());
    }
    ReliabilityMatrix { values }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Consensus {
    pub sentence_id: String,
    /// `None` when no error type has a strict majority.
    pub error_type: Option<ErrorType>,
    pub best_generation: Option<usize>,
    pub mean_rating: f64,
}

fn strict_majority<T: Ord + Copy>(votes: &[T]) -> Option<T> {
    let mut counts: BTreeMap<T, usize> = BTreeMap::new();
    for v in votes {
        *counts.entry(*v).or_default() += 1;
    }
    counts
        .into_iter()
        .find(|(_, c)| 2 * c > votes.len())
        .map(|(v, _)| v)
}

/// Per-sentence aggregation, in order of first appearance.
pub fn consensus(records: &[AnnotationRecord]) -> Vec<Consensus> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_sentence: BTreeMap<&str, Vec<&AnnotationRecord>> = BTreeMap::new();
    for r in records {
        if !by_sentence.contains_key(r.sentence_id.as_str()) {
            order.push(&r.sentence_id);
        }
        by_sentence.entry(&r.sentence_id).or_default().push(r);
    }
    order
        .into_iter()
        .map(|s| {
            let rs = &by_sentence[s];
            let errors: Vec<ErrorType> = rs.iter().map(|r| r.error_type).collect();
            let best: Vec<usize> = rs.iter().filter_map(|r| r.best_generation).collect();
            Consensus {
                sentence_id: s.to_string(),
                error_type: strict_majority(&errors),
                // majority over all annotators, not only those who picked one
                best_generation: strict_majority(&best)
                    .filter(|b| 2 * best.iter().filter(|x| *x == b).count() > rs.len()),
                mean_rating: rs.iter().map(|r| r.rating as f64).sum::<f64>() / rs.len() as f64,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgreementReport {
    pub alpha: f64,
    pub degenerate: bool,
    pub accuracy: f64,
    pub pairwise_alpha: Vec<Vec<Option<f64>>>,
    pub pairwise_accuracy: Vec<Vec<Option<f64>>>,
}

pub fn agreement_report(r: &ReliabilityMatrix) -> Result<AgreementReport, EvalError> {
    let cm = coincidence_matrix(r)?;
    let alpha = krippendorff_alpha(&cm)?;
    Ok(AgreementReport {
        alpha: alpha.value,
        degenerate: alpha.degenerate,
        accuracy: accuracy(&cm)?,
        pairwise_alpha: pairwise_agreement(r, Measure::Alpha)?,
        pairwise_accuracy: pairwise_agreement(r, Measure::Accuracy)?,
    })
}
