//! The cubic head-split chart for split bilexical grammars.
//!
//! Half constituents grow outward from their head; trapezoids hold a head and
//! a freshly attached dependent whose inner half is already complete. Tokens
//! that must take a dependent are checked when they are attached, since both
//! of their halves are known at that point.

use crate::hypergraph::{Derivation, Hypergraph};
use crate::sbg::{Dir, SentenceGrammar};
use crate::semiring::{Count, LogSum, Scored};

/// State marker of a finished half constituent.
pub const FIN: u8 = u8::MAX;

/// Items of the head-split chart.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EisnerItem {
    /// Left half of `h` spanning `i..=h` in state `q`.
    LTri { i: u16, h: u16, q: u8 },
    /// Right half of `h` spanning `h..=j` in state `q`.
    RTri { h: u16, j: u16, q: u8 },
    /// `h` has just taken left dependent `d`; `d`'s right half is done.
    /// `flag` records that this right half is empty for a must-head `d`.
    LTrap { d: u16, h: u16, q: u8, flag: bool },
    /// Mirror image of [`EisnerItem::LTrap`].
    RTrap { h: u16, d: u16, q: u8, flag: bool },
}

fn expand(g: &SentenceGrammar, item: &EisnerItem) -> Vec<Derivation<EisnerItem>> {
    use EisnerItem::*;
    let l = Dir::Left as usize;
    let r = Dir::Right as usize;
    let mut out = Vec::new();
    match *item {
        LTri { i, h, q } if q == FIN => {
            for &(fq, ev) in &g.fin[l][h as usize] {
                out.push(Derivation::new(vec![LTri { i, h, q: fq }], vec![ev]));
            }
        }
        LTri { i, h, q } if i == h => {
            for &(iq, ev) in &g.init[l][h as usize] {
                if iq == q {
                    out.push(Derivation::new(vec![], vec![ev]));
                }
            }
        }
        LTri { i, h, q } => {
            for d in i..h {
                let flags: &[bool] = if g.must_head[d as usize] { &[false, true] } else { &[false] };
                for &flag in flags {
                    if flag && i == d {
                        continue;
                    }
                    out.push(Derivation::new(vec![LTri { i, h: d, q: FIN }, LTrap { d, h, q, flag }], vec![]));
                }
            }
        }
        LTrap { d, h, q, flag } => {
            for k in (d + 1)..=h {
                if flag != (g.must_head[d as usize] && k - 1 == d) {
                    continue;
                }
                for &(from, to, ev) in &g.trans[l][h as usize][d as usize] {
                    if to == q {
                        out.push(Derivation::new(
                            vec![RTri { h: d, j: k - 1, q: FIN }, LTri { i: k, h, q: from }],
                            vec![ev],
                        ));
                    }
                }
            }
        }
        RTri { h, j, q } if q == FIN => {
            for &(fq, ev) in &g.fin[r][h as usize] {
                out.push(Derivation::new(vec![RTri { h, j, q: fq }], vec![ev]));
            }
        }
        RTri { h, j, q } if h == j => {
            for &(iq, ev) in &g.init[r][h as usize] {
                if iq == q {
                    out.push(Derivation::new(vec![], vec![ev]));
                }
            }
        }
        RTri { h, j, q } => {
            for d in (h + 1)..=j {
                let flags: &[bool] = if g.must_head[d as usize] { &[false, true] } else { &[false] };
                for &flag in flags {
                    if flag && j == d {
                        continue;
                    }
                    out.push(Derivation::new(vec![RTrap { h, d, q, flag }, RTri { h: d, j, q: FIN }], vec![]));
                }
            }
        }
        RTrap { h, d, q, flag } => {
            for k in h..d {
                if flag != (g.must_head[d as usize] && k + 1 == d) {
                    continue;
                }
                for &(from, to, ev) in &g.trans[r][h as usize][d as usize] {
                    if to == q {
                        out.push(Derivation::new(
                            vec![RTri { h, j: k, q: from }, LTri { i: k + 1, h: d, q: FIN }],
                            vec![ev],
                        ));
                    }
                }
            }
        }
    }
    out
}

/// The derivation forest of a sentence.
pub fn eisner_hypergraph(g: &SentenceGrammar) -> Hypergraph<EisnerItem> {
    let goal = EisnerItem::LTri { i: 1, h: g.m as u16, q: FIN };
    Hypergraph::build(goal, |it| expand(g, it), |ev| g.is_dead(ev))
}

/// Log marginal over all trees, `-inf` if none is licensed.
pub fn eisner_inside(g: &SentenceGrammar) -> (Hypergraph<EisnerItem>, f64) {
    let hg = eisner_hypergraph(g);
    let z = hg.total::<LogSum>(|e| g.logw[e as usize]);
    (hg, z)
}

/// Number of derivations with nonzero weight.
pub fn eisner_count(g: &SentenceGrammar) -> u128 {
    eisner_hypergraph(g).total::<Count>(|_| 1)
}

/// Log marginal and expected count per grammar event.
pub fn eisner_expected_counts(g: &SentenceGrammar) -> Option<(f64, Vec<f64>)> {
    eisner_hypergraph(g).expected_counts(&g.logw)
}

/// Best tree as (log score, heads with `$` at `m`).
pub fn eisner_viterbi(g: &SentenceGrammar) -> Option<(f64, Vec<usize>)> {
    let (best, events) = eisner_hypergraph(g).viterbi(|e| g.scored(e))?;
    Some((best.score, g.heads_from_events(&events)))
}

/// Viterbi score with tie keys, for comparisons across charts.
pub fn eisner_best(g: &SentenceGrammar) -> Option<Scored> {
    eisner_hypergraph(g).viterbi(|e| g.scored(e)).map(|(s, _)| s)
}
