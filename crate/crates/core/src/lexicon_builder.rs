//! Builds one lexicon from a primary source and an expansion source.
//!
//! Stages: extraction with iterative expansion through `related` links,
//! verification against an allowlist oracle, and a unification merge that
//! drops contested forms unless a strict majority of sources backs them.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::lexicon::{
    parse_raw_entries, LexicalCategory, LexicalEntry, Lexicon, LexiconError, WordForm,
};

pub const PRIMARY: &str = "primary";
pub const EXPANSION: &str = "expansion";
/// Extra key whose value names another lemma the expansion should follow.
pub const RELATED_KEY: &str = "related";
pub const DEFAULT_EXPANSION_CAP: usize = 10;

/// One entry as found in a source lexicon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceRecord {
    pub source_id: String,
    /// Category name as written; may lie outside [`LexicalCategory`].
    pub category_name: String,
    /// Lemma, forms, extras and attributes. `entry.category` is only meaningful when
    /// [`SourceRecord::category`] is `Some`.
    pub entry: LexicalEntry,
}

impl SourceRecord {
    pub fn new(source_id: &str, entry: LexicalEntry) -> Self {
        SourceRecord {
            source_id: source_id.to_string(),
            category_name: entry.category.to_string(),
            entry,
        }
    }

    pub fn lemma(&self) -> &str {
        &self.entry.lemma
    }

    pub fn category(&self) -> Option<LexicalCategory> {
        self.category_name.parse().ok()
    }

    pub fn related(&self) -> impl Iterator<Item = &str> {
        self.entry
            .extra
            .iter()
            .filter(|(k, _)| k == RELATED_KEY)
            .map(|(_, v)| v.as_str())
    }

    /// Categories the merged lexicon can hold; interjections, numerals and proper names are not among them.
    fn is_mappable(&self) -> bool {
        self.category()
            .is_some_and(|c| c != LexicalCategory::ProperName)
    }
}

/// Parses the interchange format: lexicon XML plus an optional `source` attribute per entry.
pub fn read_records(src: &str, default_source: &str) -> Result<Vec<SourceRecord>, LexiconError> {
    Ok(parse_raw_entries(src, true)?
        .into_iter()
        .map(|r| SourceRecord {
            source_id: r.source.unwrap_or_else(|| default_source.to_string()),
            category_name: r
                .unmapped_category
                .unwrap_or_else(|| r.entry.category.to_string()),
            entry: r.entry,
        })
        .collect())
}

pub trait VerificationOracle {
    fn contains(&self, lemma: &str) -> bool;
    fn categories(&self, lemma: &str) -> BTreeSet<LexicalCategory>;
}

/// `lemma<TAB>cat1,cat2` per line; `#` starts a comment line.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AllowlistOracle {
    entries: BTreeMap<String, BTreeSet<LexicalCategory>>,
}

#[derive(Debug, Error)]
#[error("allowlist line {line}: {message}")]
pub struct AllowlistError {
    pub line: usize,
    pub message: String,
}

impl AllowlistOracle {
    pub fn parse(src: &str) -> Result<Self, AllowlistError> {
        let mut entries: BTreeMap<String, BTreeSet<LexicalCategory>> = BTreeMap::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let err = |message: String| AllowlistError {
                line: i + 1,
                message,
            };
            let (lemma, cats) = line
                .split_once('\t')
                .ok_or_else(|| err("expected lemma<TAB>categories".into()))?;
            let set = entries.entry(lemma.trim().to_string()).or_default();
            for c in cats.split(',').map(str::trim).filter(|c| !c.is_empty()) {
                set.insert(c.parse().map_err(err)?);
            }
        }
        Ok(AllowlistOracle { entries })
    }
}

impl VerificationOracle for AllowlistOracle {
    fn contains(&self, lemma: &str) -> bool {
        self.entries.contains_key(lemma)
    }

    fn categories(&self, lemma: &str) -> BTreeSet<LexicalCategory> {
        self.entries.get(lemma).cloned().unwrap_or_default()
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Extraction {
    pub primary: Vec<SourceRecord>,
    pub expansion: Vec<SourceRecord>,
    pub dropped_by_category: usize,
    /// Lemmas looked up in the expansion source without success.
    pub expansion_misses: usize,
    pub iterations: usize,
    /// True when the iteration cap stopped the expansion before a fixed point.
    pub truncated: bool,
}

/// Maps primary records to the common format and follows each lemma through the
/// expansion source, chasing `related` links breadth-first for at most `cap` rounds.
pub fn extract_and_map(
    primary: &[SourceRecord],
    expansion: &[SourceRecord],
    cap: usize,
) -> Extraction {
    let mut index: BTreeMap<&str, Vec<&SourceRecord>> = BTreeMap::new();
    for r in expansion {
        index.entry(r.lemma()).or_default().push(r);
    }
    let mut out = Extraction::default();
    let mut frontier: VecDeque<String> = VecDeque::new();
    for r in primary {
        if !r.is_mappable() {
            out.dropped_by_category += 1;
            continue;
        }
        let mut r = r.clone();
        r.source_id = PRIMARY.to_string();
        if !frontier.contains(&r.entry.lemma) {
            frontier.push_back(r.entry.lemma.clone());
        }
        out.primary.push(r);
    }
    let mut visited: BTreeSet<String> = BTreeSet::new();
    let mut seen_records: BTreeSet<(String, String)> = BTreeSet::new();
    while !frontier.is_empty() {
        if out.iterations == cap {
            out.truncated = true;
            break;
        }
        out.iterations += 1;
        let mut next = VecDeque::new();
        for lemma in frontier.drain(..) {
            if !visited.insert(lemma.clone()) {
                continue;
            }
            let Some(records) = index.get(lemma.as_str()) else {
                out.expansion_misses += 1;
                continue;
            };
            for r in records {
                for rel in r.related() {
                    if !visited.contains(rel) && !next.iter().any(|n: &String| n == rel) {
                        next.push_back(rel.to_string());
                    }
                }
                if !r.is_mappable() {
                    out.dropped_by_category += 1;
                    continue;
                }
                if seen_records.insert((r.entry.lemma.clone(), r.category_name.clone())) {
                    let mut r = (*r).clone();
                    r.source_id = EXPANSION.to_string();
                    out.expansion.push(r);
                }
            }
        }
        frontier = next;
    }
    out
}

/// Keeps records whose lemma is known to the oracle under the record's category.
pub fn verify(records: &[SourceRecord], oracle: &dyn VerificationOracle) -> Vec<SourceRecord> {
    records
        .iter()
        .filter(|r| {
            oracle.contains(r.lemma())
                && r.category()
                    .is_some_and(|c| oracle.categories(r.lemma()).contains(&c))
        })
        .cloned()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UnifyError {
    #[error("cannot unify ({0}) with ({1})")]
    KeyMismatch(String, String),
    #[error("forms {0:?} conflict across the two entries")]
    Incompatible(Vec<String>),
}

/// Form-level union. A form whose surface exists on the other side but with no
/// compatible bundle there is returned in the second vector instead.
fn unify_forms(a: &[WordForm], b: &[WordForm]) -> (Vec<WordForm>, Vec<WordForm>) {
    let mut out: Vec<WordForm> = Vec::new();
    let mut excluded = Vec::new();
    let push = |f: WordForm, out: &mut Vec<WordForm>| {
        if !out.contains(&f) {
            out.push(f);
        }
    };
    for (mine, other) in [(a, b), (b, a)] {
        for x in mine {
            let same: Vec<&WordForm> = other.iter().filter(|y| y.surface == x.surface).collect();
            if same.is_empty() || same.contains(&x) {
                push(x.clone(), &mut out);
                continue;
            }
            let mut any = false;
            for y in same {
                if let Some(u) = x.features.unify(&y.features) {
                    push(WordForm::new(x.surface.clone(), u), &mut out);
                    any = true;
                }
            }
            if !any {
                excluded.push(x.clone());
            }
        }
    }
    (out, excluded)
}

/// Keeps the first form for each bundle; returns the dropped duplicates.
fn dedupe_bundles(forms: Vec<WordForm>) -> (Vec<WordForm>, Vec<WordForm>) {
    let mut seen = BTreeSet::new();
    let mut kept = Vec::new();
    let mut dropped = Vec::new();
    for f in forms {
        if seen.insert(f.features) {
            kept.push(f);
        } else {
            dropped.push(f);
        }
    }
    (kept, dropped)
}

fn pick<T: Ord + Clone>(a: &Option<T>, b: &Option<T>) -> (Option<T>, bool) {
    match (a, b) {
        (Some(x), Some(y)) => (Some(x.min(y).clone()), x != y),
        (x, None) => (x.clone(), false),
        (None, y) => (y.clone(), false),
    }
}

/// Unifies entry-level attributes; the smaller value wins a disagreement. Returns the attribute names that disagreed.
fn merge_attributes(acc: &mut LexicalEntry, other: &LexicalEntry) -> Vec<&'static str> {
    let mut clashes = Vec::new();
    let (v, c) = pick(&acc.adverb_class, &other.adverb_class);
    acc.adverb_class = v;
    if c {
        clashes.push("adverb-class");
    }
    let (v, c) = pick(&acc.reflexive, &other.reflexive);
    acc.reflexive = v;
    if c {
        clashes.push("reflexive");
    }
    let (v, c) = pick(&acc.preposition_profile, &other.preposition_profile);
    acc.preposition_profile = v;
    if c {
        clashes.push("preposition-profile");
    }
    acc.no_article |= other.no_article;
    acc.extra.extend(other.extra.iter().cloned());
    clashes
}

/// Unifies two entries for the same `(lemma, category)`.
pub fn unify_entries(a: &LexicalEntry, b: &LexicalEntry) -> Result<LexicalEntry, UnifyError> {
    if a.key() != b.key() {
        return Err(UnifyError::KeyMismatch(
            format!("{} {}", a.lemma, a.category),
            format!("{} {}", b.lemma, b.category),
        ));
    }
    let (forms, excluded) = unify_forms(&a.forms, &b.forms);
    if !excluded.is_empty() {
        return Err(UnifyError::Incompatible(
            excluded
                .iter()
                .map(|f| format!("{} {}", f.surface, f.features))
                .collect(),
        ));
    }
    let mut out = a.clone();
    merge_attributes(&mut out, b);
    out.forms = forms;
    Ok(out)
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SourceCounts {
    pub extracted_lemmas: usize,
    pub extracted_forms: usize,
    pub verified_lemmas: usize,
    pub verified_forms: usize,
    pub rejected_lemmas: usize,
    pub rejected_forms: usize,
    pub merged_common: usize,
    pub merged_unique: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeReport {
    pub sources: BTreeMap<String, SourceCounts>,
    pub dropped_by_category: usize,
    pub expansion_misses: usize,
    pub expansion_iterations: usize,
    pub expansion_truncated: bool,
    pub entries: usize,
    pub forms: usize,
    /// One line per excluded form or disagreeing attribute.
    pub conflicts: Vec<String>,
    /// Merged entries that failed validation and were left out.
    pub invalid: Vec<String>,
}

impl MergeReport {
    /// Single-level JSON object; per-source counts become `<source>_<field>` keys.
    pub fn to_flat_json(&self) -> Map<String, Value> {
        let mut m = Map::new();
        for (src, c) in &self.sources {
            if let Value::Object(fields) = serde_json::to_value(c).expect("plain struct") {
                for (k, v) in fields {
                    m.insert(format!("{src}_{k}"), v);
                }
            }
        }
        m.insert(
            "dropped_by_category".into(),
            self.dropped_by_category.into(),
        );
        m.insert("expansion_misses".into(), self.expansion_misses.into());
        m.insert(
            "expansion_iterations".into(),
            self.expansion_iterations.into(),
        );
        m.insert(
            "expansion_truncated".into(),
            self.expansion_truncated.into(),
        );
        m.insert("entries".into(), self.entries.into());
        m.insert("forms".into(), self.forms.into());
        m.insert("conflicts".into(), self.conflicts.clone().into());
        m.insert("invalid".into(), self.invalid.clone().into());
        m
    }
}

fn count_forms(records: &[SourceRecord]) -> usize {
    records.iter().map(|r| r.entry.forms.len()).sum()
}

/// Collapses several records of one source for the same key into one entry.
fn combine_within_source(records: &[&SourceRecord]) -> LexicalEntry {
    let mut acc = records[0].entry.clone();
    for r in &records[1..] {
        merge_attributes(&mut acc, &r.entry);
        for f in &r.entry.forms {
            if !acc.forms.contains(f) {
                acc.forms.push(f.clone());
            }
        }
    }
    acc
}

/// Drops forms contested by other sources unless a strict majority of the
/// sources carrying that surface has a compatible bundle.
fn majority_filter(entries: &mut [(String, LexicalEntry)], log: &mut Vec<String>) {
    let snapshot: Vec<Vec<WordForm>> = entries.iter().map(|(_, e)| e.forms.clone()).collect();
    for (i, (src, e)) in entries.iter_mut().enumerate() {
        e.forms.retain(|x| {
            let mut with_surface = 0;
            let mut agreeing = 0;
            for (j, forms) in snapshot.iter().enumerate() {
                if i == j {
                    continue;
                }
                let same: Vec<&WordForm> =
                    forms.iter().filter(|y| y.surface == x.surface).collect();
                if same.is_empty() {
                    continue;
                }
                with_surface += 1;
                if same.iter().any(|y| y.features.compatible(&x.features)) {
                    agreeing += 1;
                }
            }
            let keep = agreeing == with_surface || 2 * (agreeing + 1) > with_surface + 1;
            if !keep {
                log.push(format!(
                    "{} ({}): {} form `{}` {} excluded",
                    e.lemma, e.category, src, x.surface, x.features
                ));
            }
            keep
        });
    }
}

/// Merges verified record sets into one lexicon. Output entries are sorted by
/// `(lemma, category)` and multi-source entries are folded in source-id order,
/// so the result does not depend on the order of `lexica`.
pub fn merge(lexica: &[Vec<SourceRecord>]) -> (Lexicon, MergeReport) {
    let mut report = MergeReport::default();
    type Key = (String, LexicalCategory);
    let mut groups: BTreeMap<Key, BTreeMap<&str, Vec<&SourceRecord>>> = BTreeMap::new();
    for set in lexica {
        for r in set {
            let Some(cat) = r.category() else { continue };
            report.sources.entry(r.source_id.clone()).or_default();
            groups
                .entry((r.entry.lemma.clone(), cat))
                .or_default()
                .entry(r.source_id.as_str())
                .or_default()
                .push(r);
        }
    }
    let mut entries = Vec::new();
    for ((lemma, cat), by_source) in groups {
        let mut parts: Vec<(String, LexicalEntry)> = by_source
            .iter()
            .map(|(src, recs)| {
                let mut e = combine_within_source(recs);
                e.category = cat;
                (src.to_string(), e)
            })
            .collect();
        let common = parts.len() > 1;
        for (src, _) in &parts {
            let c = report.sources.get_mut(src).expect("registered above");
            if common {
                c.merged_common += 1;
            } else {
                c.merged_unique += 1;
            }
        }
        if common {
            majority_filter(&mut parts, &mut report.conflicts);
        }
        let mut iter = parts.into_iter();
        let (_, mut acc) = iter.next().expect("non-empty group");
        for (src, e) in iter {
            let (forms, excluded) = unify_forms(&acc.forms, &e.forms);
            for f in excluded {
                report.conflicts.push(format!(
                    "{lemma} ({cat}): {src} form `{}` {} excluded",
                    f.surface, f.features
                ));
            }
            for a in merge_attributes(&mut acc, &e) {
                report
                    .conflicts
                    .push(format!("{lemma} ({cat}): {src} disagrees on {a}"));
            }
            acc.forms = forms;
        }
        let (forms, dupes) = dedupe_bundles(std::mem::take(&mut acc.forms));
        for f in dupes {
            report.conflicts.push(format!(
                "{lemma} ({cat}): form `{}` repeats bundle {}, excluded",
                f.surface, f.features
            ));
        }
        acc.forms = forms;
        if acc.forms.is_empty() && cat.is_invariable() {
            acc.forms
                .push(WordForm::new(lemma.clone(), Default::default()));
        }
        match acc.validate() {
            Ok(()) => entries.push(acc),
            Err(why) => report.invalid.push(format!("{lemma} ({cat}): {why}")),
        }
    }
    report.entries = entries.len();
    report.forms = entries.iter().map(|e| e.forms.len()).sum();
    let lex = Lexicon::from_entries(entries).expect("keys are unique and entries validated");
    (lex, report)
}

/// Whole pipeline: extract, verify each set, merge.
pub fn build(
    primary: &[SourceRecord],
    expansion: &[SourceRecord],
    oracle: &dyn VerificationOracle,
    cap: usize,
) -> (Lexicon, MergeReport) {
    let ex = extract_and_map(primary, expansion, cap);
    let mut counts = BTreeMap::new();
    let mut verified_sets = Vec::new();
    for (name, set) in [(PRIMARY, &ex.primary), (EXPANSION, &ex.expansion)] {
        let kept = verify(set, oracle);
        let c = SourceCounts {
            extracted_lemmas: set.len(),
            extracted_forms: count_forms(set),
            verified_lemmas: kept.len(),
            verified_forms: count_forms(&kept),
            rejected_lemmas: set.len() - kept.len(),
            rejected_forms: count_forms(set) - count_forms(&kept),
            ..Default::default()
        };
        counts.insert(name.to_string(), c);
        verified_sets.push(kept);
    }
    let (lex, mut report) = merge(&verified_sets);
    for (name, c) in counts {
        let merged = report.sources.remove(&name).unwrap_or_default();
        report.sources.insert(
            name,
            SourceCounts {
                merged_common: merged.merged_common,
                merged_unique: merged.merged_unique,
                ..c
            },
        );
    }
    report.dropped_by_category = ex.dropped_by_category;
    report.expansion_misses = ex.expansion_misses;
    report.expansion_iterations = ex.iterations;
    report.expansion_truncated = ex.truncated;
    (lex, report)
}
