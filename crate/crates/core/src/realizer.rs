//! Turns a sentence plan into an inflected, punctuated sentence.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::grammar::SyntaxTree;
use crate::lexicon::{
    AdverbClass, FeatureBundle, Gender, LexicalCategory, LexicalEntry, Lexicon, Mood, Number,
    Person, Tense,
};
use crate::lm::NGramModel;
use crate::planner::{InputToken, SentenceMode, SentencePlan, SlotSource};

use LexicalCategory as Cat;

pub const CONTRACTIONS: [(&str, &str, &str); 5] = [
    ("a", "el", "al"),
    ("de", "el", "del"),
    ("con", "yo", "conmigo"),
    ("con", "ti", "contigo"),
    ("con", "sí", "consigo"),
];

pub const REFLEXIVE_THRESHOLD: f64 = 0.5;
const REFLEXIVE_LEMMA: &str = "se";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Default,
    Subject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgreementResult {
    pub person: Person,
    pub number: Number,
    pub gender: Gender,
    /// Person, number, gender.
    pub provenance: [Provenance; 3],
}

impl AgreementResult {
    pub fn bundle(&self) -> FeatureBundle {
        FeatureBundle {
            person: self.person,
            number: self.number,
            gender: self.gender,
            ..Default::default()
        }
    }
}

/// Sentence-level person, number and gender from the subject's head constituents.
///
/// Person: first if any constituent is first person, else second if any is
/// second, else third (an unspecified person counts as third). Number: plural
/// when coordinated or any constituent is plural. Gender: feminine only when
/// every constituent that has a gender is feminine.
pub fn infer_agreement(constituents: &[FeatureBundle], coordinated: bool) -> AgreementResult {
    if constituents.is_empty() {
        return AgreementResult {
            person: Person::First,
            number: Number::Singular,
            gender: Gender::Masculine,
            provenance: [Provenance::Default; 3],
        };
    }
    let person = if constituents.iter().any(|c| c.person == Person::First) {
        Person::First
    } else if constituents.iter().any(|c| c.person == Person::Second) {
        Person::Second
    } else {
        Person::Third
    };
    let number = if coordinated || constituents.iter().any(|c| c.number == Number::Plural) {
        Number::Plural
    } else {
        Number::Singular
    };
    let gendered: Vec<Gender> = constituents
        .iter()
        .map(|c| c.gender)
        .filter(|g| g.is_specified())
        .collect();
    let (gender, gp) = if gendered.is_empty() {
        (Gender::Masculine, Provenance::Default)
    } else if gendered.iter().all(|g| *g == Gender::Feminine) {
        (Gender::Feminine, Provenance::Subject)
    } else {
        (Gender::Masculine, Provenance::Subject)
    };
    AgreementResult {
        person,
        number,
        gender,
        provenance: [Provenance::Subject, Provenance::Subject, gp],
    }
}

/// Present unless a time adverb says otherwise; the first one wins.
pub fn select_tense(tokens: &[InputToken]) -> Tense {
    tokens
        .iter()
        .filter_map(|t| t.resolved.as_ref())
        .find_map(|r| match r.entry.adverb_class {
            Some(AdverbClass::TimePast) => Some(Tense::Past),
            Some(AdverbClass::TimeFuture) => Some(Tense::Future),
            _ => None,
        })
        .unwrap_or(Tense::Present)
}

/// Single left-to-right pass over adjacent pairs.
pub fn apply_contractions<S: AsRef<str>>(words: &[S]) -> Vec<String> {
    let mut out = Vec::with_capacity(words.len());
    let mut i = 0;
    while i < words.len() {
        let w = words[i].as_ref();
        if let Some(next) = words.get(i + 1) {
            if let Some((_, _, c)) = CONTRACTIONS
                .iter()
                .find(|(a, b, _)| *a == w && *b == next.as_ref())
            {
                out.push(c.to_string());
                i += 2;
                continue;
            }
        }
        out.push(w.to_string());
        i += 1;
    }
    out
}

/// Word swaps applied under negation (siempre becomes nunca, and so on).
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct PolarityTable {
    pub swaps: BTreeMap<String, String>,
}

impl PolarityTable {
    /// `word<TAB>negative counterpart` per line; `#` comments.
    pub fn parse(src: &str) -> Result<Self, String> {
        let mut swaps = BTreeMap::new();
        for (i, line) in src.lines().enumerate() {
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let (a, b) = line
                .split_once('\t')
                .ok_or_else(|| format!("line {}: expected word<TAB>word", i + 1))?;
            swaps.insert(a.trim().to_string(), b.trim().to_string());
        }
        Ok(PolarityTable { swaps })
    }

    pub fn bundled() -> Self {
        Self::parse(include_str!("../data/polarity.tsv")).expect("bundled polarity table parses")
    }
}

const CLITICS: [&str; 5] = ["me", "te", "se", "nos", "os"];

fn negate_at(words: &mut Vec<String>, finite: usize, polarity: &PolarityTable) {
    for w in words.iter_mut() {
        if let Some(s) = polarity.swaps.get(w.as_str()) {
            *w = s.clone();
        }
    }
    let mut at = finite;
    if at > 0 && CLITICS.contains(&words[at - 1].as_str()) {
        at -= 1;
    }
    words.insert(at, "no".to_string());
}

fn is_finite_verb(word: &str, lex: &Lexicon) -> bool {
    lex.lookup_form(word).iter().any(|(e, f)| {
        e.category == Cat::Verb
            && matches!(
                f.features.mood,
                Mood::Indicative | Mood::Subjunctive | Mood::Imperative
            )
    })
}

/// Puts `no` before the first finite verb (and before a clitic attached to
/// it) and swaps polarity words. Other modes pass through unchanged.
pub fn apply_negation<S: AsRef<str>>(
    words: &[S],
    mode: SentenceMode,
    lex: &Lexicon,
    polarity: &PolarityTable,
) -> Vec<String> {
    let mut out: Vec<String> = words.iter().map(|w| w.as_ref().to_string()).collect();
    if !mode.is_negative() {
        return out;
    }
    if let Some(i) = out
        .iter()
        .position(|w| is_finite_verb(&w.to_lowercase(), lex))
    {
        negate_at(&mut out, i, polarity);
    }
    out
}

fn capitalize(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut done = false;
    for c in s.chars() {
        if !done && c.is_alphabetic() {
            out.extend(c.to_uppercase());
            done = true;
        } else {
            out.push(c);
        }
    }
    out
}

/// Capitalizes and punctuates; questions are wrapped in `¿...?`.
pub fn orthography<S: AsRef<str>>(words: &[S], mode: SentenceMode) -> String {
    let body = capitalize(
        &words
            .iter()
            .map(|w| w.as_ref())
            .collect::<Vec<_>>()
            .join(" "),
    );
    if mode.is_question() {
        format!("¿{body}?")
    } else {
        format!("{body}.")
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RealizedSentence {
    pub text: String,
    pub plan: SentencePlan,
    pub agreement: AgreementResult,
    pub tense: Tense,
    pub trace: Vec<String>,
}

/// Flat view of the tree: parents, children and the leaf each node carries.
struct Arena<'a> {
    symbol: Vec<&'a str>,
    parent: Vec<Option<usize>>,
    children: Vec<Vec<usize>>,
    leaf: Vec<Option<usize>>,
    leaf_node: Vec<usize>,
}

impl<'a> Arena<'a> {
    fn new(tree: &'a SyntaxTree) -> Self {
        let mut a = Arena {
            symbol: vec![],
            parent: vec![],
            children: vec![],
            leaf: vec![],
            leaf_node: vec![],
        };
        a.add(tree, None);
        a
    }

    fn add(&mut self, t: &'a SyntaxTree, parent: Option<usize>) -> usize {
        let id = self.symbol.len();
        self.symbol.push(&t.symbol);
        self.parent.push(parent);
        self.children.push(Vec::new());
        self.leaf.push(None);
        if t.category.is_some() {
            self.leaf[id] = Some(self.leaf_node.len());
            self.leaf_node.push(id);
        }
        for c in &t.children {
            let cid = self.add(c, Some(id));
            self.children[id].push(cid);
        }
        id
    }

    fn is_group(&self, node: usize) -> bool {
        matches!(self.symbol[node], "SN" | "SNB")
    }

    /// Leaf index of the nominal head directly under a nominal syntagm.
    fn head_leaf(&self, node: usize, cats: &[Cat]) -> Option<usize> {
        self.children[node]
            .iter()
            .filter_map(|&c| self.leaf[c])
            .find(|&l| matches!(cats[l], Cat::Noun | Cat::Pronoun | Cat::ProperName))
    }

    /// Nominal heads of the coordinated syntagm `node` (its SNB children).
    fn coordinated_heads(&self, node: usize, cats: &[Cat]) -> Vec<usize> {
        self.children[node]
            .iter()
            .filter(|&&c| self.is_group(c))
            .filter_map(|&c| self.head_leaf(c, cats))
            .collect()
    }

    fn subject_node(&self) -> Option<usize> {
        self.children[0]
            .iter()
            .copied()
            .find(|&c| matches!(self.symbol[c], "SN" | "SNC"))
    }
}

fn relaxed_inflect<'e>(entry: &'e LexicalEntry, target: &FeatureBundle) -> Option<&'e str> {
    entry.inflect(target).ok().or_else(|| {
        entry
            .forms
            .iter()
            .find(|f| f.features.compatible(target))
            .map(|f| f.surface.as_str())
    })
}

fn proper_name(raw: &str) -> String {
    capitalize(raw)
}

/// What an adjective or determiner should agree with.
enum AgreeWith {
    Leaf(usize),
    Heads(Vec<usize>, bool),
    Subject,
}

pub fn realize(
    plan: &SentencePlan,
    lex: &Lexicon,
    lm: &NGramModel,
    polarity: &PolarityTable,
) -> RealizedSentence {
    let mut trace = vec![format!("mode: {}", plan.mode.as_str())];
    for ins in &plan.inserted {
        trace.push(
            format!(
                "insert {:?}: `{}` at slot {}",
                ins.rationale, ins.word, ins.position
            )
            .to_lowercase(),
        );
    }
    if plan.default_subject {
        trace.push(format!(
            "default subject `yo` {}",
            if plan.slot_words().first() == Some(&"yo") {
                "realized"
            } else {
                "elided"
            }
        ));
    }
    let cats: Vec<Cat> = plan.slots.iter().map(|s| s.category).collect();
    let arena = Arena::new(&plan.tree);
    let entry_of = |i: usize| -> Option<LexicalEntry> {
        match &plan.slots[i].source {
            SlotSource::Token(t) => plan.tokens[*t].resolved.as_ref().map(|r| r.entry.clone()),
            SlotSource::Inserted { lemma, .. } => lex
                .lookup_lemma(lemma, Some(plan.slots[i].category))
                .first()
                .map(|e| (*e).clone()),
        }
    };
    let entries: Vec<Option<LexicalEntry>> = (0..plan.slots.len()).map(entry_of).collect();
    // Features of each nominal leaf as given: the user's form, or the lemma form when inserted.
    let given: Vec<FeatureBundle> = (0..plan.slots.len())
        .map(|i| match &plan.slots[i].source {
            SlotSource::Token(t) => plan.tokens[*t]
                .resolved
                .as_ref()
                .map(|r| r.form.features)
                .unwrap_or_default(),
            SlotSource::Inserted { lemma, .. } => entries[i]
                .as_ref()
                .and_then(|e| e.forms.iter().find(|f| &f.surface == lemma))
                .map(|f| f.features)
                .unwrap_or_default(),
        })
        .collect();
    let third = |mut b: FeatureBundle| {
        if !b.person.is_specified() {
            b.person = Person::Third;
        }
        b
    };

    let (heads, coordinated) = match arena.subject_node() {
        Some(n) if arena.symbol[n] == "SNC" => (arena.coordinated_heads(n, &cats), true),
        Some(n) => (arena.head_leaf(n, &cats).into_iter().collect(), false),
        None => (Vec::new(), false),
    };
    let agreement = infer_agreement(
        &heads.iter().map(|&h| third(given[h])).collect::<Vec<_>>(),
        coordinated,
    );
    trace.push(format!("agreement: {}", agreement.bundle()));
    let tense = select_tense(&plan.tokens);
    trace.push(format!("tense: {}", tense.code().unwrap_or("pres")));

    let agree_target = |with: &AgreeWith| -> FeatureBundle {
        match with {
            AgreeWith::Leaf(l) => FeatureBundle::nominal(given[*l].gender, given[*l].number),
            AgreeWith::Heads(hs, coord) => {
                let a = infer_agreement(
                    &hs.iter().map(|&h| third(given[h])).collect::<Vec<_>>(),
                    *coord,
                );
                FeatureBundle::nominal(a.gender, a.number)
            }
            AgreeWith::Subject => FeatureBundle::nominal(agreement.gender, agreement.number),
        }
    };
    // Adjectives agree with their syntagm's head; predicative ones with the subject.
    let agreement_source = |leaf: usize| -> AgreeWith {
        let mut node = arena.parent[arena.leaf_node[leaf]];
        if let Some(n) = node.filter(|&n| arena.symbol[n] == "SADJ") {
            node = arena.parent[n];
            if let Some(p) = node.filter(|&p| arena.symbol[p] == "COMP") {
                let first = arena.children[p][0];
                return match arena.symbol[first] {
                    "SN" => arena
                        .head_leaf(first, &cats)
                        .map_or(AgreeWith::Subject, AgreeWith::Leaf),
                    "SNC" => AgreeWith::Heads(arena.coordinated_heads(first, &cats), true),
                    _ => AgreeWith::Subject,
                };
            }
        }
        match node
            .filter(|&n| arena.is_group(n))
            .and_then(|n| arena.head_leaf(n, &cats))
        {
            Some(h) => AgreeWith::Leaf(h),
            None => AgreeWith::Subject,
        }
    };

    let mut words = Vec::with_capacity(plan.slots.len() + 2);
    let mut finite: Option<usize> = None;
    let mut main_entry: Option<&LexicalEntry> = None;
    for (i, slot) in plan.slots.iter().enumerate() {
        let raw = match &slot.source {
            SlotSource::Token(t) => plan.tokens[*t].raw.to_lowercase(),
            SlotSource::Inserted { lemma, .. } => lemma.clone(),
        };
        let Some(entry) = entries[i].as_ref() else {
            words.push(if slot.category == Cat::ProperName {
                proper_name(&raw)
            } else {
                raw
            });
            continue;
        };
        let target = match slot.category {
            Cat::Verb if finite.is_none() => Some(FeatureBundle::finite(
                agreement.person,
                agreement.number,
                tense,
            )),
            Cat::Verb => Some(FeatureBundle {
                mood: Mood::Infinitive,
                ..Default::default()
            }),
            Cat::Determiner | Cat::Adjective => Some(agree_target(&agreement_source(i))),
            _ => None,
        };
        let surface = match target {
            Some(t) => match relaxed_inflect(entry, &t) {
                Some(s) => s.to_string(),
                None => {
                    trace.push(format!(
                        "inflection miss: {} for {t}, kept `{raw}`",
                        entry.lemma
                    ));
                    raw.clone()
                }
            },
            None => match &slot.source {
                SlotSource::Token(t) => plan.tokens[*t]
                    .resolved
                    .as_ref()
                    .map_or(raw.clone(), |r| r.form.surface.clone()),
                SlotSource::Inserted { lemma, .. } => lemma.clone(),
            },
        };
        if slot.category == Cat::Verb && finite.is_none() {
            finite = Some(words.len());
            main_entry = Some(entry);
        }
        if target.is_some() && surface != raw {
            trace.push(format!("inflect: {raw} -> {surface}"));
        }
        words.push(surface);
    }

    if let (Some(at), Some(verb)) = (finite, main_entry) {
        let p = lm.reflexive_probability(verb.lm_key()).unwrap_or(0.0);
        let lm_says = p > REFLEXIVE_THRESHOLD && verb.reflexive != Some(false);
        if plan.reflexive || lm_says {
            let clitic = lex
                .lookup_lemma(REFLEXIVE_LEMMA, Some(Cat::Pronoun))
                .first()
                .and_then(|e| {
                    relaxed_inflect(
                        e,
                        &FeatureBundle {
                            person: agreement.person,
                            number: agreement.number,
                            ..Default::default()
                        },
                    )
                })
                .unwrap_or(REFLEXIVE_LEMMA)
                .to_string();
            trace.push(format!(
                "reflexive: `{clitic}` ({})",
                if plan.reflexive {
                    "explicit".to_string()
                } else {
                    format!("p={p:.3}")
                }
            ));
            words.insert(at, clitic);
            finite = Some(at + 1);
        }
    }
    if plan.mode.is_negative() {
        match finite {
            Some(at) => {
                negate_at(&mut words, at, polarity);
                trace.push("negation: `no` before the finite verb".into());
            }
            None => trace.push("negation skipped: no finite verb".into()),
        }
    }
    let contracted = apply_contractions(&words);
    if contracted.len() != words.len() {
        trace.push(format!(
            "contractions: {} applied",
            words.len() - contracted.len()
        ));
    }
    let text = orthography(&contracted, plan.mode);
    RealizedSentence {
        text,
        plan: plan.clone(),
        agreement,
        tense,
        trace,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn b(p: Person, n: Number, g: Gender) -> FeatureBundle {
        FeatureBundle {
            person: p,
            number: n,
            gender: g,
            ..Default::default()
        }
    }

    #[test]
    fn compound_subject_is_first_plural() {
        let a = infer_agreement(
            &[
                b(Person::Third, Number::Singular, Gender::Feminine),
                b(Person::First, Number::Plural, Gender::Masculine),
            ],
            true,
        );
        assert_eq!(
            (a.person, a.number, a.gender),
            (Person::First, Number::Plural, Gender::Masculine)
        );
        let a = infer_agreement(&[], false);
        assert_eq!(
            (a.person, a.number, a.gender),
            (Person::First, Number::Singular, Gender::Masculine)
        );
        assert_eq!(a.provenance, [Provenance::Default; 3]);
        let f = b(Person::Third, Number::Singular, Gender::Feminine);
        let a = infer_agreement(&[f, f], true);
        assert_eq!(
            (a.person, a.number, a.gender),
            (Person::Third, Number::Plural, Gender::Feminine)
        );
    }

    #[test]
    fn contractions_from_examples() {
        assert_eq!(
            apply_contractions(&["va", "a", "el", "colegio"]),
            ["va", "al", "colegio"]
        );
        assert_eq!(
            apply_contractions(&["batido", "de", "el", "chocolate"]),
            ["batido", "del", "chocolate"]
        );
        assert_eq!(
            apply_contractions(&["come", "con", "yo"]),
            ["come", "conmigo"]
        );
        assert_eq!(apply_contractions(&["a", "él"]), ["a", "él"]);
    }

    #[test]
    fn orthography_marks() {
        assert_eq!(
            orthography(
                &["los", "pájaros", "pueden", "volar"],
                SentenceMode::Interrogative
            ),
            "¿Los pájaros pueden volar?"
        );
        assert_eq!(
            orthography(&["él", "come"], SentenceMode::Affirmative),
            "Él come."
        );
    }
}
