//! Per-token attribute extraction for the f1 to f19 feature families.
//!
//! Families are addressed by stable ids (`f1` … `f19`, plus `pos` for the
//! POS-tag column). [`assemble_attributes`] turns a [`SentenceRecord`] into an
//! [`AttributeMatrix`] with one row per token; sentence-level values such as
//! voice (`f8`) and sub-categorization (`f9`) are copied onto every row.
//!
//! [`SentenceRecord`]: crate::lingdata::SentenceRecord

mod assemble;
pub mod heads;
mod lexicon;
mod ortho;
mod predicate;
pub mod syntax;
pub mod tree;

pub use assemble::{
    assemble_attributes, feature_set, AttributeMatrix, Family, FeatureConfig, FeatureResources,
    FeatureSetDef, ABSENT, FEATURE_SET_NAMES,
};
pub use heads::{head_word, HeadRules, HeadWord, PhraseHead};
pub use lexicon::{lexicon_class, LexClass, LookupTable, Polarity, Strength, SubjectivityLexicon};
pub use ortho::{orthographic_flags, OrthoFlags};
pub use predicate::{
    dependency_flags, main_predicate, predicate_features, FrameFeatures, Position,
};
pub use syntax::{
    clause_patterns, detect_voice, main_verb, phrase_type_levels, subcategorization,
    syntactic_path, ClauseFlags, SyntacticPath,
};
pub use tree::ConstituencyTree;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("token {0} has no governing VP")]
    NoGoverningVp(usize),
    #[error("record has no SRL layer and fallback is disabled")]
    MissingSrlLayer,
    #[error("record has no dependency layer")]
    MissingDepsLayer,
    #[error("record has no parse layer")]
    MissingParseLayer,
    #[error("record has no '{0}' layer")]
    MissingLayer(&'static str),
    #[error("unknown feature family '{0}'")]
    UnknownFamily(String),
    #[error("unknown feature set '{0}'")]
    UnknownFeatureSet(String),
    #[error("bad table: {0}")]
    BadTable(String),
    #[error(transparent)]
    Ling(#[from] crate::lingdata::LingError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
