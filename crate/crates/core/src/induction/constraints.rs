//! Parameter and structural constraints compiled onto sentence grammars.

use std::fmt;
use std::str::FromStr;

use crate::error::Error;
use crate::sbg::{EventKey, SentenceGrammar};
use crate::treebank::FUNCTION_WORD_TAGS;

/// Tags counted as nouns by the root constraints.
pub const NOUN_TAGS: [&str; 3] = ["NOUN", "PRON", "PROPN"];

/// Which tokens may attach to the root.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RootConstraint {
    #[default]
    None,
    /// A verb or a noun.
    VerbOrNoun,
    /// A verb if there is one, otherwise a noun.
    VerbOtherwiseNoun,
}

impl FromStr for RootConstraint {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "none" => Ok(RootConstraint::None),
            "verb-or-noun" => Ok(RootConstraint::VerbOrNoun),
            "verb-otherwise-noun" => Ok(RootConstraint::VerbOtherwiseNoun),
            _ => Err(Error::Config(format!("unknown root constraint `{s}`"))),
        }
    }
}

impl fmt::Display for RootConstraint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RootConstraint::None => "none",
            RootConstraint::VerbOrNoun => "verb-or-noun",
            RootConstraint::VerbOtherwiseNoun => "verb-otherwise-noun",
        })
    }
}

/// Parameter-based constraints.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ConstraintSet {
    /// Function words take no dependents.
    pub function_words: bool,
    /// ADP must take a dependent (and is then exempt from `function_words`).
    pub adp_head: bool,
    pub root: RootConstraint,
}

/// Per-sentence masks, positions 1-based with slot 0 unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Masks {
    pub unheadable: Vec<bool>,
    pub must_head: Vec<bool>,
    pub root_ok: Vec<bool>,
}

impl ConstraintSet {
    pub fn is_empty(&self) -> bool {
        !self.function_words && !self.adp_head && self.root == RootConstraint::None
    }

    /// Compiles the masks of a sentence given its tags (no `$`).
    pub fn compile<S: AsRef<str>>(&self, tags: &[S]) -> Masks {
        let n = tags.len();
        let tag = |i: usize| tags[i - 1].as_ref();
        let mut m = Masks { unheadable: vec![false; n + 1], must_head: vec![false; n + 1], root_ok: vec![true; n + 1] };
        m.root_ok[0] = false;
        m.unheadable[0] = false;
        for i in 1..=n {
            let t = tag(i);
            let adp = self.adp_head && t == "ADP";
            m.must_head[i] = adp;
            m.unheadable[i] = self.function_words && !adp && FUNCTION_WORD_TAGS.contains(&t);
        }
        let verbs: Vec<bool> = (0..=n).map(|i| i > 0 && tag(i) == "VERB").collect();
        let nouns: Vec<bool> = (0..=n).map(|i| i > 0 && NOUN_TAGS.contains(&tag(i))).collect();
        let allowed: Option<Vec<bool>> = match self.root {
            RootConstraint::None => None,
            RootConstraint::VerbOrNoun => Some((0..=n).map(|i| verbs[i] || nouns[i]).collect()),
            RootConstraint::VerbOtherwiseNoun if verbs.contains(&true) => Some(verbs),
            RootConstraint::VerbOtherwiseNoun => Some(nouns),
        };
        // Without any candidate every word may be the root.
        if let Some(a) = allowed.filter(|a| a.contains(&true)) {
            m.root_ok = a;
        }
        m
    }
}

/// Applies masks and an optional length bias to a sentence grammar.
///
/// Function-word heads get stop probability one; their automaton events
/// then carry no DMV counts since they no longer depend on the parameters.
/// The length bias multiplies every arc, the root arc included, by
/// `exp(-β (|h - d| - 1))` with `$` at position `n + 1`.
pub fn apply_constraints(g: &mut SentenceGrammar, masks: &Masks, length_bias: Option<f64>) {
    let m = g.m;
    for ev in 0..g.n_events() {
        match g.keys[ev] {
            EventKey::Trans { h, dep, .. } => {
                let (h, dep) = (h as usize, dep as usize);
                if (h == m && !masks.root_ok[dep]) || (h < m && masks.unheadable[h]) {
                    g.logw[ev] = f64::NEG_INFINITY;
                    g.dmv[ev].clear();
                } else if let Some(beta) = length_bias {
                    g.logw[ev] -= beta * (h.abs_diff(dep) as f64 - 1.0);
                }
            }
            EventKey::Final { h, .. } if (h as usize) < m && masks.unheadable[h as usize] => {
                g.logw[ev] = 0.0;
                g.dmv[ev].clear();
            }
            _ => {}
        }
    }
    for i in 1..m {
        g.must_head[i] = masks.must_head[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sbg::enumerate::all_trees;
    use crate::sbg::{dmv_to_sbg, DmvParams};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn grammar(tags: &[&str], cs: ConstraintSet, bias: Option<f64>) -> (SentenceGrammar, SentenceGrammar) {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = DmvParams::random(3, &mut rng);
        let ids: Vec<usize> =
            tags.iter().map(|t| ["VERB", "NOUN", "DET"].iter().position(|x| x == t).unwrap()).collect();
        let a = dmv_to_sbg(&p);
        let g = SentenceGrammar::new(&a, &ids);
        let mut q = g.clone();
        apply_constraints(&mut q, &cs.compile(tags), bias);
        (g, q)
    }

    #[test]
    fn function_words_head_nothing() {
        let cs = ConstraintSet { function_words: true, ..Default::default() };
        let (_, q) = grammar(&["DET", "NOUN", "VERB"], cs, None);
        for t in all_trees(&q) {
            let w = q.score_tree(&t);
            if t[2] == 1 || t[3] == 1 {
                assert_eq!(w, f64::NEG_INFINITY);
            }
        }
        assert!(all_trees(&q).iter().any(|t| q.score_tree(t).is_finite()));
    }

    #[test]
    fn root_candidates_follow_the_tags() {
        let cs = ConstraintSet { root: RootConstraint::VerbOtherwiseNoun, ..Default::default() };
        assert_eq!(cs.compile(&["DET", "NOUN", "VERB"]).root_ok, vec![false, false, false, true]);
        assert_eq!(cs.compile(&["DET", "PRON", "ADJ"]).root_ok, vec![false, false, true, false]);
        assert_eq!(cs.compile(&["DET", "ADJ"]).root_ok, vec![false, true, true]);
        let cs = ConstraintSet { root: RootConstraint::VerbOrNoun, ..Default::default() };
        assert_eq!(cs.compile(&["DET", "NOUN", "VERB"]).root_ok, vec![false, false, true, true]);
        assert_eq!(cs.compile(&["DET", "ADV"]).root_ok, vec![false, true, true]);
    }

    #[test]
    fn adp_is_exempt_when_it_must_head() {
        let cs = ConstraintSet { function_words: true, adp_head: true, ..Default::default() };
        let m = cs.compile(&["ADP", "DET", "NOUN"]);
        assert_eq!(m.must_head, vec![false, true, false, false]);
        assert_eq!(m.unheadable, vec![false, false, true, false]);
    }

    #[test]
    fn length_bias_scales_trees_exactly() {
        for beta in [0.1, 1.0] {
            let (g, q) = grammar(&["DET", "NOUN", "VERB", "NOUN"], ConstraintSet::default(), Some(beta));
            for t in all_trees(&g) {
                let n = 4.0;
                let total: usize = (1..=4).map(|d| t[d].abs_diff(d)).sum();
                let expect = g.score_tree(&t) - beta * (total as f64 - n);
                assert!((q.score_tree(&t) - expect).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn adjacent_trees_are_unbiased() {
        let (g, q) = grammar(&["NOUN", "VERB"], ConstraintSet::default(), Some(0.1));
        // "NOUN <- VERB $": both arcs have length one.
        let t = vec![0, 2, 3, 0];
        assert_eq!(g.score_tree(&t), q.score_tree(&t));
    }
}
