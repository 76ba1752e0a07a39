//! Keywords in, ranked sentences out.

use serde::{Deserialize, Serialize};

use crate::grammar::Grammar;
use crate::lexicon::Lexicon;
use crate::lm::NGramModel;
use crate::planner::{
    plan_structures, tokenize_and_resolve, PlanError, PlannerConfig, SentenceMode,
};
use crate::realizer::{realize, PolarityTable, RealizedSentence};

pub const SAMPLE_LEXICON: &str = include_str!("../data/sample_lexicon.xml");
pub const SAMPLE_GRAMMAR: &str = include_str!("../data/spanish.grammar");
pub const TOY_CORPUS: &str = include_str!("../data/toy_corpus.txt");
/// The model trained from `TOY_CORPUS` with the default configuration.
pub const TOY_LM: &str = include_str!("../data/toy.lm");
pub const DEFAULT_MAX_CANDIDATES: usize = 3;

#[derive(Debug, Clone)]
pub struct Generator {
    pub lexicon: Lexicon,
    pub grammar: Grammar,
    pub lm: NGramModel,
    pub polarity: PolarityTable,
    pub planner: PlannerConfig,
    pub max_candidates: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Generation {
    pub input: Vec<String>,
    pub mode: SentenceMode,
    pub candidates: Vec<RealizedSentence>,
}

impl Generation {
    pub fn texts(&self) -> Vec<&str> {
        self.candidates.iter().map(|c| c.text.as_str()).collect()
    }
}

impl Generator {
    pub fn new(lexicon: Lexicon, grammar: Grammar, lm: NGramModel) -> Self {
        Generator {
            lexicon,
            grammar,
            lm,
            polarity: PolarityTable::bundled(),
            planner: PlannerConfig::default(),
            max_candidates: DEFAULT_MAX_CANDIDATES,
        }
    }

    /// Sample lexicon, bundled grammar and the toy model.
    pub fn bundled() -> Self {
        let lexicon = Lexicon::from_xml_str(SAMPLE_LEXICON).expect("sample lexicon parses");
        let grammar = Grammar::parse(SAMPLE_GRAMMAR).expect("bundled grammar parses");
        let lm = NGramModel::from_text(TOY_LM).expect("toy model parses");
        Generator::new(lexicon, grammar, lm)
    }

    /// Up to `max_candidates` distinct sentences, best first.
    pub fn generate<S: AsRef<str>>(&self, words: &[S]) -> Result<Generation, PlanError> {
        let tokens = tokenize_and_resolve(words, &self.lexicon)?;
        let plans = plan_structures(tokens, &self.grammar, &self.lexicon, &self.lm, self.planner)?;
        let mode = plans[0].mode;
        let mut candidates: Vec<RealizedSentence> = Vec::new();
        for plan in &plans {
            if candidates.len() == self.max_candidates {
                break;
            }
            let r = realize(plan, &self.lexicon, &self.lm, &self.polarity);
            if !candidates.iter().any(|c| c.text == r.text) {
                candidates.push(r);
            }
        }
        Ok(Generation {
            input: words.iter().map(|w| w.as_ref().to_string()).collect(),
            mode,
            candidates,
        })
    }
}
