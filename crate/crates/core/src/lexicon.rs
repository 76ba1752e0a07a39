//! Indexed morphological lexicon.
//!
//! Entries are loaded from a small XML format (see `README.md`), indexed by
//! `(lemma, category)` and by surface form, and never mutated afterwards.
//!
//! ```
//! use alexis::lexicon::{Lexicon, FeatureBundle, Number, LexicalCategory};
//! let lex = Lexicon::from_xml_str(r#"<lexicon>
//!   <entry lemma="aposento" cat="noun">
//!     <form surface="aposento" gender="m" number="s"/>
//!     <form surface="aposentos" gender="m" number="p"/>
//!   </entry>
//! </lexicon>"#).unwrap();
//! let e = lex.lookup_lemma("aposento", Some(LexicalCategory::Noun))[0];
//! let b = FeatureBundle { number: Number::Plural, ..Default::default() };
//! assert_eq!(e.inflect(&b).unwrap(), "aposentos");
//! ```

use std::collections::{BTreeSet, HashMap};
use std::fmt;
use std::str::FromStr;

use quick_xml::events::{BytesStart, Event};
use quick_xml::Reader;
use serde::{Deserialize, Serialize};
use thiserror::Error;

macro_rules! axis {
    ($name:ident { $($variant:ident => $code:literal),* $(,)? }) => {
        #[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant,)*
            #[default]
            Unspecified,
        }

        impl $name {
            pub const SPECIFIED: &'static [$name] = &[$($name::$variant),*];

            /// Short code used in the XML format; `None` for unspecified.
            pub fn code(self) -> Option<&'static str> {
                match self {
                    $($name::$variant => Some($code),)*
                    $name::Unspecified => None,
                }
            }

            pub fn from_code(s: &str) -> Option<Self> {
                match s {
                    $($code => Some($name::$variant),)*
                    _ => None,
                }
            }

            pub fn is_specified(self) -> bool {
                self != $name::Unspecified
            }

            /// Unspecified on either side matches anything.
            pub fn matches(self, other: Self) -> bool {
                self == $name::Unspecified || other == $name::Unspecified || self == other
            }

            fn unify(self, other: Self) -> Option<Self> {
                match (self, other) {
                    (a, $name::Unspecified) => Some(a),
                    ($name::Unspecified, b) => Some(b),
                    (a, b) if a == b => Some(a),
                    _ => None,
                }
            }
        }
    };
}

axis!(Gender { Masculine => "m", Feminine => "f" });
axis!(Number { Singular => "s", Plural => "p" });
axis!(Person { First => "1", Second => "2", Third => "3" });
axis!(Tense { Present => "pres", Past => "past", Future => "fut", Conditional => "cond" });
axis!(Mood {
    Indicative => "ind",
    Subjunctive => "subj",
    Imperative => "imp",
    Infinitive => "inf",
    Gerund => "ger",
    Participle => "part",
});

impl Mood {
    pub fn is_non_finite(self) -> bool {
        matches!(self, Mood::Infinitive | Mood::Gerund | Mood::Participle)
    }
}

#[derive(
    Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize,
)]
pub struct FeatureBundle {
    pub gender: Gender,
    pub number: Number,
    pub person: Person,
    pub tense: Tense,
    pub mood: Mood,
}

impl FeatureBundle {
    pub fn is_valid(&self) -> bool {
        if self.tense.is_specified() && !matches!(self.mood, Mood::Indicative | Mood::Subjunctive) {
            return false;
        }
        if self.mood.is_non_finite() && (self.tense.is_specified() || self.person.is_specified()) {
            return false;
        }
        true
    }

    /// True when every axis specified in `target` has the same value here.
    pub fn satisfies(&self, target: &FeatureBundle) -> bool {
        (!target.gender.is_specified() || self.gender == target.gender)
            && (!target.number.is_specified() || self.number == target.number)
            && (!target.person.is_specified() || self.person == target.person)
            && (!target.tense.is_specified() || self.tense == target.tense)
            && (!target.mood.is_specified() || self.mood == target.mood)
    }

    /// Agreement on every axis specified on both sides.
    pub fn compatible(&self, other: &FeatureBundle) -> bool {
        self.unify(other).is_some()
    }

    /// Union of specified axes, or `None` on a conflict.
    pub fn unify(&self, other: &FeatureBundle) -> Option<FeatureBundle> {
        Some(FeatureBundle {
            gender: self.gender.unify(other.gender)?,
            number: self.number.unify(other.number)?,
            person: self.person.unify(other.person)?,
            tense: self.tense.unify(other.tense)?,
            mood: self.mood.unify(other.mood)?,
        })
    }

    pub fn specified_axes(&self) -> usize {
        [
            self.gender.is_specified(),
            self.number.is_specified(),
            self.person.is_specified(),
            self.tense.is_specified(),
            self.mood.is_specified(),
        ]
        .iter()
        .filter(|b| **b)
        .count()
    }

    pub fn finite(person: Person, number: Number, tense: Tense) -> Self {
        FeatureBundle {
            person,
            number,
            tense,
            mood: Mood::Indicative,
            ..Default::default()
        }
    }

    pub fn nominal(gender: Gender, number: Number) -> Self {
        FeatureBundle {
            gender,
            number,
            ..Default::default()
        }
    }
}

impl fmt::Display for FeatureBundle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = [
            ("gender", self.gender.code()),
            ("number", self.number.code()),
            ("person", self.person.code()),
            ("tense", self.tense.code()),
            ("mood", self.mood.code()),
        ]
        .iter()
        .filter_map(|(k, v)| v.map(|v| format!("{k}={v}")))
        .collect();
        write!(f, "{{{}}}", parts.join(","))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LexicalCategory {
    Noun,
    Verb,
    Adjective,
    Adverb,
    Determiner,
    Pronoun,
    Conjunction,
    Preposition,
    ProperName,
}

impl LexicalCategory {
    pub const ALL: [LexicalCategory; 9] = [
        LexicalCategory::Noun,
        LexicalCategory::Verb,
        LexicalCategory::Adjective,
        LexicalCategory::Adverb,
        LexicalCategory::Determiner,
        LexicalCategory::Pronoun,
        LexicalCategory::Conjunction,
        LexicalCategory::Preposition,
        LexicalCategory::ProperName,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            LexicalCategory::Noun => "noun",
            LexicalCategory::Verb => "verb",
            LexicalCategory::Adjective => "adjective",
            LexicalCategory::Adverb => "adverb",
            LexicalCategory::Determiner => "determiner",
            LexicalCategory::Pronoun => "pronoun",
            LexicalCategory::Conjunction => "conjunction",
            LexicalCategory::Preposition => "preposition",
            LexicalCategory::ProperName => "proper_name",
        }
    }

    /// Adverbs, conjunctions and prepositions carry a single form equal to the lemma.
    pub fn is_invariable(self) -> bool {
        matches!(
            self,
            LexicalCategory::Adverb | LexicalCategory::Conjunction | LexicalCategory::Preposition
        )
    }

    pub fn is_nominal(self) -> bool {
        matches!(
            self,
            LexicalCategory::Noun | LexicalCategory::Pronoun | LexicalCategory::ProperName
        )
    }
}

impl fmt::Display for LexicalCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LexicalCategory {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        LexicalCategory::ALL
            .iter()
            .copied()
            .find(|c| c.as_str() == s)
            .ok_or_else(|| format!("unknown lexical category `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdverbClass {
    TimePast,
    TimeFuture,
    NegationPolarity,
    Other,
}

impl AdverbClass {
    pub fn as_str(self) -> &'static str {
        match self {
            AdverbClass::TimePast => "time_past",
            AdverbClass::TimeFuture => "time_future",
            AdverbClass::NegationPolarity => "negation_polarity",
            AdverbClass::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "time_past" => Some(AdverbClass::TimePast),
            "time_future" => Some(AdverbClass::TimeFuture),
            "negation_polarity" => Some(AdverbClass::NegationPolarity),
            "other" => Some(AdverbClass::Other),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct WordForm {
    pub surface: String,
    pub features: FeatureBundle,
}

impl WordForm {
    pub fn new(surface: impl Into<String>, features: FeatureBundle) -> Self {
        WordForm {
            surface: surface.into(),
            features,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LexicalEntry {
    pub lemma: String,
    pub category: LexicalCategory,
    pub forms: Vec<WordForm>,
    pub adverb_class: Option<AdverbClass>,
    pub reflexive: Option<bool>,
    /// Key of the verb's distribution in the n-gram model; the lemma when absent.
    pub preposition_profile: Option<String>,
    /// Nouns used like names ("mamá") take no article.
    pub no_article: bool,
    /// Opaque key/value annotations carried through from source lexica.
    pub extra: BTreeSet<(String, String)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("no form of `{lemma}` ({category}) matches {target}")]
pub struct InflectionMiss {
    pub lemma: String,
    pub category: LexicalCategory,
    pub target: FeatureBundle,
}

impl LexicalEntry {
    pub fn new(lemma: impl Into<String>, category: LexicalCategory) -> Self {
        LexicalEntry {
            lemma: lemma.into(),
            category,
            forms: Vec::new(),
            adverb_class: None,
            reflexive: None,
            preposition_profile: None,
            no_article: false,
            extra: BTreeSet::new(),
        }
    }

    pub fn with_form(mut self, surface: &str, features: FeatureBundle) -> Self {
        self.forms.push(WordForm::new(surface, features));
        self
    }

    /// Surface of the first form whose bundle satisfies every specified axis of `target`.
    pub fn inflect(&self, target: &FeatureBundle) -> Result<&str, InflectionMiss> {
        self.forms
            .iter()
            .find(|f| f.features.satisfies(target))
            .map(|f| f.surface.as_str())
            .ok_or_else(|| InflectionMiss {
                lemma: self.lemma.clone(),
                category: self.category,
                target: *target,
            })
    }

    pub fn key(&self) -> (String, LexicalCategory) {
        (self.lemma.clone(), self.category)
    }

    pub fn lm_key(&self) -> &str {
        self.preposition_profile.as_deref().unwrap_or(&self.lemma)
    }

    /// Checks the entry-level invariants; returns a description of the first violation.
    pub fn validate(&self) -> Result<(), String> {
        if self.lemma.is_empty() {
            return Err("empty lemma".into());
        }
        if self.category == LexicalCategory::ProperName {
            return Err("proper_name entries cannot be stored in a lexicon".into());
        }
        if self.forms.is_empty() {
            return Err(format!("entry `{}` has no forms", self.lemma));
        }
        if self.category.is_invariable()
            && (self.forms.len() != 1 || self.forms[0].surface != self.lemma)
        {
            return Err(format!(
                "invariable entry `{}` must have exactly one form equal to its lemma",
                self.lemma
            ));
        }
        let mut seen = BTreeSet::new();
        for f in &self.forms {
            if f.surface.is_empty() {
                return Err(format!("entry `{}` has an empty surface form", self.lemma));
            }
            if !f.features.is_valid() {
                return Err(format!(
                    "form `{}` has an inconsistent bundle {}",
                    f.surface, f.features
                ));
            }
            if !seen.insert(f.features) {
                return Err(format!(
                    "entry `{}` has two forms with bundle {}",
                    self.lemma, f.features
                ));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum LexiconError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("line {line}: duplicate entry for ({lemma}, {category})")]
    Conflict {
        line: usize,
        lemma: String,
        category: LexicalCategory,
    },
}

/// Immutable lexicon with lemma and surface indexes.
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: Vec<LexicalEntry>,
    lemma_index: HashMap<(String, LexicalCategory), usize>,
    lemma_only: HashMap<String, Vec<usize>>,
    form_index: HashMap<String, Vec<(usize, usize)>>,
}

impl Lexicon {
    /// Builds the indexes. Entries must already satisfy the entry invariants.
    pub fn from_entries(entries: Vec<LexicalEntry>) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (i, e) in entries.into_iter().enumerate() {
            e.validate()
                .map_err(|message| LexiconError::Parse { line: 0, message })?;
            lex.push(e, i + 1)?;
        }
        Ok(lex)
    }

    fn push(&mut self, e: LexicalEntry, line: usize) -> Result<(), LexiconError> {
        let idx = self.entries.len();
        if self.lemma_index.contains_key(&e.key()) {
            return Err(LexiconError::Conflict {
                line,
                lemma: e.lemma,
                category: e.category,
            });
        }
        self.lemma_index.insert(e.key(), idx);
        self.lemma_only
            .entry(e.lemma.clone())
            .or_default()
            .push(idx);
        for (fi, f) in e.forms.iter().enumerate() {
            self.form_index
                .entry(f.surface.clone())
                .or_default()
                .push((idx, fi));
        }
        self.entries.push(e);
        Ok(())
    }

    pub fn from_xml_str(src: &str) -> Result<Self, LexiconError> {
        let mut lex = Lexicon::default();
        for (e, line) in parse_entries(src)? {
            lex.push(e, line)?;
        }
        Ok(lex)
    }

    pub fn load(bytes: &[u8]) -> Result<Self, LexiconError> {
        let src = std::str::from_utf8(bytes).map_err(|e| LexiconError::Parse {
            line: 0,
            message: format!("invalid UTF-8: {e}"),
        })?;
        Self::from_xml_str(src)
    }

    pub fn entries(&self) -> &[LexicalEntry] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries with this lemma, optionally filtered by category, in file order.
    pub fn lookup_lemma(
        &self,
        lemma: &str,
        category: Option<LexicalCategory>,
    ) -> Vec<&LexicalEntry> {
        match category {
            Some(c) => self
                .lemma_index
                .get(&(lemma.to_string(), c))
                .map(|&i| vec![&self.entries[i]])
                .unwrap_or_default(),
            None => self
                .lemma_only
                .get(lemma)
                .map(|v| v.iter().map(|&i| &self.entries[i]).collect())
                .unwrap_or_default(),
        }
    }

    /// All `(entry, form)` pairs with exactly this surface, in file order.
    pub fn lookup_form(&self, surface: &str) -> Vec<(&LexicalEntry, &WordForm)> {
        self.form_index
            .get(surface)
            .map(|v| {
                v.iter()
                    .map(|&(e, f)| (&self.entries[e], &self.entries[e].forms[f]))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Iterates the surface index; used to check index completeness.
    pub fn form_index_pairs(&self) -> impl Iterator<Item = (&str, &LexicalEntry, &WordForm)> {
        self.form_index.iter().flat_map(move |(s, v)| {
            v.iter()
                .map(move |&(e, f)| (s.as_str(), &self.entries[e], &self.entries[e].forms[f]))
        })
    }

    pub fn to_xml(&self) -> String {
        write_entries(&self.entries, None)
    }
}

/// 1-based line numbers for byte offsets that mostly move forward.
pub(crate) struct LineCounter<'a> {
    src: &'a [u8],
    pos: usize,
    line: usize,
}

impl<'a> LineCounter<'a> {
    pub(crate) fn new(src: &'a str) -> Self {
        LineCounter {
            src: src.as_bytes(),
            pos: 0,
            line: 1,
        }
    }

    pub(crate) fn at(&mut self, pos: usize) -> usize {
        let pos = pos.min(self.src.len());
        if pos < self.pos {
            self.pos = 0;
            self.line = 1;
        }
        self.line += self.src[self.pos..pos]
            .iter()
            .filter(|b| **b == b'\n')
            .count();
        self.pos = pos;
        self.line
    }

    /// Line of the first `<` at or after `pos`.
    pub(crate) fn tag_at(&mut self, src: &str, pos: usize) -> usize {
        let pos = pos.min(src.len());
        self.at(pos + src[pos..].find('<').unwrap_or(0))
    }
}

fn attrs(start: &BytesStart, line: usize) -> Result<Vec<(String, String)>, LexiconError> {
    let mut out = Vec::new();
    for a in start.attributes() {
        let a = a.map_err(|e| LexiconError::Parse {
            line,
            message: e.to_string(),
        })?;
        let key = String::from_utf8_lossy(a.key.as_ref()).into_owned();
        let value = a
            .unescape_value()
            .map_err(|e| LexiconError::Parse {
                line,
                message: e.to_string(),
            })?
            .into_owned();
        out.push((key, value));
    }
    Ok(out)
}

fn parse_form(attrs: &[(String, String)], line: usize) -> Result<WordForm, LexiconError> {
    let err = |message: String| LexiconError::Parse { line, message };
    let mut surface = None;
    let mut b = FeatureBundle::default();
    for (k, v) in attrs {
        let bad = || err(format!("invalid value `{v}` for `{k}`"));
        match k.as_str() {
            "surface" => surface = Some(v.clone()),
            "gender" => b.gender = Gender::from_code(v).ok_or_else(bad)?,
            "number" => b.number = Number::from_code(v).ok_or_else(bad)?,
            "person" => b.person = Person::from_code(v).ok_or_else(bad)?,
            "tense" => b.tense = Tense::from_code(v).ok_or_else(bad)?,
            "mood" => b.mood = Mood::from_code(v).ok_or_else(bad)?,
            other => return Err(err(format!("unknown form attribute `{other}`"))),
        }
    }
    let surface = surface
        .filter(|s| !s.is_empty())
        .ok_or_else(|| err("form without surface".into()))?;
    Ok(WordForm {
        surface,
        features: b,
    })
}

/// Parsed entry plus the line it started on and its optional `source` tag.
pub(crate) struct RawEntry {
    pub entry: LexicalEntry,
    pub line: usize,
    pub source: Option<String>,
    /// Category name outside [`LexicalCategory`] (lenient reads only); `entry.category` is then meaningless.
    pub unmapped_category: Option<String>,
}

type EntryStart = (LexicalEntry, Option<String>, Option<String>);

fn parse_entry_start(
    attrs: &[(String, String)],
    line: usize,
    lenient: bool,
) -> Result<EntryStart, LexiconError> {
    let err = |message: String| LexiconError::Parse { line, message };
    let mut lemma = None;
    let mut cat = None;
    let mut e = LexicalEntry::new("", LexicalCategory::Noun);
    let mut source = None;
    let mut unmapped = None;
    for (k, v) in attrs {
        match k.as_str() {
            "lemma" => lemma = Some(v.clone()),
            "cat" => match v.parse::<LexicalCategory>() {
                Ok(c) => cat = Some(c),
                Err(_) if lenient && !v.is_empty() => {
                    cat = Some(LexicalCategory::Noun);
                    unmapped = Some(v.clone());
                }
                Err(e) => return Err(err(e)),
            },
            "adverb-class" => {
                e.adverb_class = Some(
                    AdverbClass::parse(v)
                        .ok_or_else(|| err(format!("invalid adverb-class `{v}`")))?,
                )
            }
            "reflexive" => {
                e.reflexive = Some(match v.as_str() {
                    "true" => true,
                    "false" => false,
                    _ => return Err(err(format!("invalid reflexive `{v}`"))),
                })
            }
            "preposition-profile" => e.preposition_profile = Some(v.clone()),
            "article" => match v.as_str() {
                "none" => e.no_article = true,
                "default" => e.no_article = false,
                _ => return Err(err(format!("invalid article `{v}`"))),
            },
            "source" => source = Some(v.clone()),
            other => return Err(err(format!("unknown entry attribute `{other}`"))),
        }
    }
    e.lemma = lemma
        .filter(|l| !l.is_empty())
        .ok_or_else(|| err("entry without lemma".into()))?;
    e.category = cat.ok_or_else(|| err("entry without cat".into()))?;
    Ok((e, source, unmapped))
}

/// Reads entries; `lenient` admits unknown categories and skips entry validation for them.
pub(crate) fn parse_raw_entries(src: &str, lenient: bool) -> Result<Vec<RawEntry>, LexiconError> {
    let mut reader = Reader::from_str(src);
    reader.config_mut().trim_text(true);
    let mut out = Vec::new();
    let mut current: Option<RawEntry> = None;
    let mut saw_root = false;
    let mut lines = LineCounter::new(src);
    loop {
        let pos = reader.buffer_position() as usize;
        let ev = reader.read_event().map_err(|e| LexiconError::Parse {
            line: lines.at(reader.buffer_position() as usize),
            message: e.to_string(),
        })?;
        let line = lines.tag_at(src, pos);
        let err = |message: String| LexiconError::Parse { line, message };
        match ev {
            Event::Start(s) | Event::Empty(s) if s.name().as_ref() == b"lexicon" => {
                if saw_root {
                    return Err(err("nested <lexicon>".into()));
                }
                saw_root = true;
            }
            ref ev @ (Event::Start(ref s) | Event::Empty(ref s)) => {
                let empty = matches!(ev, Event::Empty(_));
                if !saw_root {
                    return Err(err("missing <lexicon> root".into()));
                }
                let a = attrs(s, line)?;
                match s.name().as_ref() {
                    b"entry" => {
                        if current.is_some() {
                            return Err(err("nested <entry>".into()));
                        }
                        let (entry, source, unmapped_category) =
                            parse_entry_start(&a, line, lenient)?;
                        let raw = RawEntry {
                            entry,
                            line,
                            source,
                            unmapped_category,
                        };
                        if empty {
                            out.push(finish_entry(raw, lenient)?);
                        } else {
                            current = Some(raw);
                        }
                    }
                    b"form" => {
                        let cur = current
                            .as_mut()
                            .ok_or_else(|| err("<form> outside <entry>".into()))?;
                        cur.entry.forms.push(parse_form(&a, line)?);
                    }
                    b"extra" => {
                        let cur = current
                            .as_mut()
                            .ok_or_else(|| err("<extra> outside <entry>".into()))?;
                        let get = |k: &str| a.iter().find(|(n, _)| n == k).map(|(_, v)| v.clone());
                        match (get("key"), get("value")) {
                            (Some(k), Some(v)) => {
                                cur.entry.extra.insert((k, v));
                            }
                            _ => return Err(err("<extra> needs key and value".into())),
                        }
                    }
                    other => {
                        return Err(err(format!(
                            "unexpected element <{}>",
                            String::from_utf8_lossy(other)
                        )))
                    }
                }
            }
            Event::End(e) => match e.name().as_ref() {
                b"entry" => {
                    let raw = current.take().ok_or_else(|| err("stray </entry>".into()))?;
                    out.push(finish_entry(raw, lenient)?);
                }
                b"lexicon" => {}
                _ => {}
            },
            Event::Text(t) => {
                let text = t.unescape().map_err(|e| err(e.to_string()))?;
                if !text.trim().is_empty() {
                    return Err(err(format!("unexpected text `{}`", text.trim())));
                }
            }
            Event::Eof => break,
            _ => {}
        }
    }
    if let Some(raw) = current {
        return Err(LexiconError::Parse {
            line: raw.line,
            message: "unterminated <entry>".into(),
        });
    }
    Ok(out)
}

fn finish_entry(mut raw: RawEntry, lenient: bool) -> Result<RawEntry, LexiconError> {
    if raw.unmapped_category.is_some() {
        return Ok(raw);
    }
    let e = &mut raw.entry;
    if e.forms.is_empty() && e.category.is_invariable() {
        e.forms
            .push(WordForm::new(e.lemma.clone(), FeatureBundle::default()));
    }
    if lenient {
        return Ok(raw);
    }
    e.validate().map_err(|message| LexiconError::Parse {
        line: raw.line,
        message,
    })?;
    Ok(raw)
}

fn parse_entries(src: &str) -> Result<Vec<(LexicalEntry, usize)>, LexiconError> {
    Ok(parse_raw_entries(src, false)?
        .into_iter()
        .map(|r| (r.entry, r.line))
        .collect())
}

fn esc(s: &str) -> String {
    quick_xml::escape::escape(s).into_owned()
}

/// Serializes entries in the lexicon XML format; `sources[i]` tags entry `i` when given.
pub fn write_entries(entries: &[LexicalEntry], sources: Option<&[String]>) -> String {
    let mut out = String::from("<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<lexicon>\n");
    for (i, e) in entries.iter().enumerate() {
        out.push_str(&format!(
            "  <entry lemma=\"{}\" cat=\"{}\"",
            esc(&e.lemma),
            e.category
        ));
        if let Some(c) = e.adverb_class {
            out.push_str(&format!(" adverb-class=\"{}\"", c.as_str()));
        }
        if let Some(r) = e.reflexive {
            out.push_str(&format!(" reflexive=\"{r}\""));
        }
        if let Some(p) = &e.preposition_profile {
            out.push_str(&format!(" preposition-profile=\"{}\"", esc(p)));
        }
        if e.no_article {
            out.push_str(" article=\"none\"");
        }
        if let Some(src) = sources.and_then(|s| s.get(i)) {
            out.push_str(&format!(" source=\"{}\"", esc(src)));
        }
        out.push_str(">\n");
        for f in &e.forms {
            out.push_str(&format!("    <form surface=\"{}\"", esc(&f.surface)));
            let b = &f.features;
            for (k, v) in [
                ("gender", b.gender.code()),
                ("number", b.number.code()),
                ("person", b.person.code()),
                ("tense", b.tense.code()),
                ("mood", b.mood.code()),
            ] {
                if let Some(v) = v {
                    out.push_str(&format!(" {k}=\"{v}\""));
                }
            }
            out.push_str("/>\n");
        }
        for (k, v) in &e.extra {
            out.push_str(&format!(
                "    <extra key=\"{}\" value=\"{}\"/>\n",
                esc(k),
                esc(v)
            ));
        }
        out.push_str("  </entry>\n");
    }
    out.push_str("</lexicon>\n");
    out
}
