//! Spanish surface realization from ordered content words.
//!
//! The pipeline resolves keywords against a morphological [`lexicon`], searches a
//! feature-annotated [`grammar`] for structures that fit them ([`planner`]),
//! and inflects, contracts and punctuates the result ([`realizer`]). A verb-centred
//! n-gram model ([`lm`]) supplies preposition and reflexivity preferences.
//! [`lexicon_builder`] merges source lexica and [`evaluation`] scores output.

pub mod evaluation;
pub mod grammar;
pub mod lexicon;
pub mod lexicon_builder;
pub mod lm;
pub mod pipeline;
pub mod planner;
pub mod realizer;
