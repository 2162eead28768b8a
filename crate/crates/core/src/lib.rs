//! Prediction suffix trees with approximate suffix matching.
//!
//! The crate provides a scored, suffix-closed trie that is searched with a
//! Hamming-distance budget, the Poisson-shaped suffix weighting together with
//! its closed-form weight-mass bounds, three online learners (the classical
//! exact-matching PST, the unbounded and self-bounded approximate PST, and a
//! one-tree-per-class multiclass variant), a synthetic motif stream generator,
//! and an experiment harness that runs the train/validate/test protocols and
//! checks the mistake bounds on recorded traces.

pub mod error;
pub mod harness;
pub mod learner_apst;
pub mod learner_pst;
pub mod multiclass;
pub mod sequences;
pub mod suffix_tree;
pub mod synthgen;
pub mod weighting;

pub use error::{Error, Result};
pub use learner_apst::{ApstConfig, ApstState, InsertPolicy, Mode, RoundRecord, SuffixWeights};
pub use learner_pst::PstHypothesis;
pub use multiclass::MulticlassState;
pub use sequences::{Alphabet, Dataset, InputStream, Segment, Symbol};
pub use suffix_tree::{ApproxSuffixTree, Match, NodeId};
pub use weighting::WeightParams;

/// Deserializes JSON without serde_json's nesting limit; unbounded trees can
/// be deeper than 128 levels.
pub fn from_json_deep<T: serde::de::DeserializeOwned>(text: &str) -> Result<T> {
    let mut de = serde_json::Deserializer::from_str(text);
    de.disable_recursion_limit();
    let value = T::deserialize(&mut de)?;
    de.end()?;
    Ok(value)
}
