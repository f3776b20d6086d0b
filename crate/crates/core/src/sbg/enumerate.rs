//! Reference computations by enumerating every projective tree.

use crate::brute::{enumerate_projective_trees, with_root};
use crate::sbg::SentenceGrammar;
use crate::semiring::{log_sum, Scored};

/// All projective trees over the words of `g`, with `$` at position `m`.
pub fn all_trees(g: &SentenceGrammar) -> Vec<Vec<usize>> {
    enumerate_projective_trees(g.n()).iter().map(|h| with_root(h)).collect()
}

/// Log marginal by enumeration.
pub fn brute_marginal(g: &SentenceGrammar) -> f64 {
    brute_filtered_marginal(g, |_| true)
}

/// Log marginal over trees accepted by `keep`.
pub fn brute_filtered_marginal(g: &SentenceGrammar, keep: impl Fn(&[usize]) -> bool) -> f64 {
    let scores: Vec<f64> = all_trees(g).iter().filter(|t| keep(t)).map(|t| g.score_tree(t)).collect();
    log_sum(&scores)
}

/// Expected event counts over trees accepted by `keep`; `None` if they have no mass.
pub fn brute_expected_counts(g: &SentenceGrammar, keep: impl Fn(&[usize]) -> bool) -> Option<Vec<f64>> {
    let mut paths = Vec::new();
    for t in all_trees(g).iter().filter(|t| keep(t)) {
        paths.extend(g.tree_paths(t));
    }
    let z = log_sum(&paths.iter().map(|(w, _)| *w).collect::<Vec<_>>());
    if !z.is_finite() {
        return None;
    }
    let mut counts = vec![0.0; g.n_events()];
    for (w, evs) in paths {
        let p = (w - z).exp();
        for e in evs {
            counts[e as usize] += p;
        }
    }
    Some(counts)
}

/// Tie-break key of a tree: arcs contribute head position and length.
pub fn tree_key(heads: &[usize], score: f64) -> Scored {
    let mut s = Scored::new(score);
    for (d, &h) in heads.iter().enumerate().skip(1) {
        if h != 0 {
            s.head_sum += h as i64;
            s.len_sum += h.abs_diff(d) as i64;
        }
    }
    s
}

/// Best tree accepted by `keep`, ties broken as in the charts.
pub fn brute_viterbi(g: &SentenceGrammar, keep: impl Fn(&[usize]) -> bool) -> Option<(f64, Vec<usize>)> {
    let mut best: Option<(Scored, Vec<usize>)> = None;
    for t in all_trees(g).into_iter().filter(|t| keep(t)) {
        let max_path = g.tree_paths(&t).iter().map(|(w, _)| *w).fold(f64::NEG_INFINITY, f64::max);
        let key = tree_key(&t, max_path);
        if best.as_ref().is_none_or(|(b, _)| key.beats(b)) {
            best = Some((key, t));
        }
    }
    best.filter(|(s, _)| s.score > f64::NEG_INFINITY).map(|(s, t)| (s.score, t))
}
