//! Unsupervised dependency grammar induction with a featurized DMV.
//!
//! Training runs EM where the E-step sums over the trees admitted by
//! structural constraints (a stack depth bound through [`crate::lc_chart`],
//! or a dependency length bias) and parameter constraints (function words,
//! ADP heads, root candidates). Decoding is unconstrained by default.

pub mod constraints;
pub mod features;
pub mod sample;
pub mod train;

pub use constraints::{apply_constraints, ConstraintSet, Masks, RootConstraint};
pub use features::{featurize, FeatureKey, FeatureSpace, LogLinearDmv};
pub use sample::{sample_corpus, sample_tree};
pub use train::{
    constrained_estep, decode, harmonic_init, prepare, train, viterbi_heads, Init, Instance, IterStats, Model,
    TrainConfig, Training,
};

use crate::error::{Error, Result};
use crate::treebank::{remove_root, DepTree};

/// Correct and total head attachments, skipping tokens tagged with `punct`.
///
/// Both corpora may carry the artificial root; the root arc counts as an
/// ordinary attachment.
pub fn uas_counts(pred: &[DepTree], gold: &[DepTree], punct: &[&str]) -> Result<(usize, usize)> {
    if pred.len() != gold.len() {
        return Err(Error::LengthMismatch(pred.len(), gold.len()));
    }
    let (mut correct, mut total) = (0, 0);
    for (p, g) in pred.iter().zip(gold) {
        let (p, g) = (remove_root(p), remove_root(g));
        if p.len() != g.len() {
            return Err(Error::LengthMismatch(p.len(), g.len()));
        }
        for (tp, tg) in p.tokens.iter().zip(&g.tokens) {
            if punct.contains(&tg.pos.as_str()) {
                continue;
            }
            total += 1;
            correct += usize::from(tp.head == tg.head);
        }
    }
    Ok((correct, total))
}

/// Micro-averaged unlabeled attachment score in percent.
pub fn evaluate_uas(pred: &[DepTree], gold: &[DepTree], punct: &[&str]) -> Result<f64> {
    let (c, t) = uas_counts(pred, gold, punct)?;
    Ok(if t == 0 { 0.0 } else { 100.0 * c as f64 / t as f64 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::{append_root, UD_PUNCT_TAGS};

    #[test]
    fn identical_trees_score_100() {
        let t = DepTree::from_heads(&["NOUN", "VERB", "PUNCT"], &[2, 0, 2]);
        assert_eq!(evaluate_uas(std::slice::from_ref(&t), &[append_root(&t).unwrap()], &UD_PUNCT_TAGS).unwrap(), 100.0);
    }

    #[test]
    fn half_correct_scores_50() {
        let g = DepTree::from_heads(&["NOUN", "VERB"], &[2, 0]);
        let p = DepTree::from_heads(&["NOUN", "VERB"], &[0, 0]);
        assert_eq!(evaluate_uas(&[p], &[g], &UD_PUNCT_TAGS).unwrap(), 50.0);
    }

    #[test]
    fn punctuation_is_excluded_and_lengths_checked() {
        let g = DepTree::from_heads(&["NOUN", "PUNCT"], &[0, 1]);
        let p = DepTree::from_heads(&["NOUN", "PUNCT"], &[0, 0]);
        assert_eq!(uas_counts(std::slice::from_ref(&p), std::slice::from_ref(&g), &UD_PUNCT_TAGS).unwrap(), (1, 1));
        assert!(evaluate_uas(&[p], &[], &UD_PUNCT_TAGS).is_err());
    }
}
