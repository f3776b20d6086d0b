//! Exhaustive enumeration used as a reference by tests and experiments.

use crate::cfg_leftcorner::CfgParse;
use crate::treebank::children;

/// All projective single-rooted trees over `n` words.
///
/// Each tree is a head vector of length `n + 1` (slot 0 unused, root head 0).
/// No arc covers the root, so the trees stay projective after the root is
/// moved to position `n + 1`.
pub fn enumerate_projective_trees(n: usize) -> Vec<Vec<usize>> {
    if n == 0 {
        return vec![vec![0]];
    }
    span_trees(1, n)
        .into_iter()
        .map(|(root, arcs)| {
            let mut heads = vec![0; n + 1];
            for (d, h) in arcs {
                heads[d] = h;
            }
            heads[root] = 0;
            heads
        })
        .collect()
}

/// Trees over `[lo, hi]` as (root, arcs).
fn span_trees(lo: usize, hi: usize) -> Vec<(usize, Vec<(usize, usize)>)> {
    let mut out = Vec::new();
    for r in lo..=hi {
        let lefts = forests(lo, r - 1, r);
        let rights = forests(r + 1, hi, r);
        for l in &lefts {
            for rt in &rights {
                let mut arcs = l.clone();
                arcs.extend(rt.iter().copied());
                out.push((r, arcs));
            }
        }
    }
    out
}

/// Sequences of subtrees covering `[lo, hi]`, each attached to `parent`.
fn forests(lo: usize, hi: usize, parent: usize) -> Vec<Vec<(usize, usize)>> {
    if lo > hi {
        return vec![Vec::new()];
    }
    let mut out = Vec::new();
    for k in lo..=hi {
        for (root, arcs) in span_trees(lo, k) {
            for rest in forests(k + 1, hi, parent) {
                let mut all = arcs.clone();
                all.push((root, parent));
                all.extend(rest);
                out.push(all);
            }
        }
    }
    out
}

/// Moves the root attachment of `heads` to an explicit `$` at position `n + 1`.
pub fn with_root(heads: &[usize]) -> Vec<usize> {
    let n = heads.len() - 1;
    let mut out: Vec<usize> = heads.iter().map(|&h| if h == 0 { n + 1 } else { h }).collect();
    out[0] = 0;
    out.push(0);
    out
}

/// All CNF parses with `n` terminals; nodes get distinct labels.
pub fn enumerate_cnf_parses(n: usize) -> Vec<CfgParse> {
    fn shapes(lo: usize, hi: usize) -> Vec<CfgParse> {
        if lo == hi {
            return vec![CfgParse::leaf(format!("P{lo}"), format!("w{lo}"))];
        }
        let mut out = Vec::new();
        for k in lo..hi {
            for l in shapes(lo, k) {
                for r in shapes(k + 1, hi) {
                    out.push(CfgParse::node("N", l.clone(), r));
                }
            }
        }
        out
    }
    let mut counter = 0;
    fn relabel(p: CfgParse, counter: &mut usize) -> CfgParse {
        match p {
            CfgParse::Node { left, right, .. } => {
                *counter += 1;
                let label = format!("N{counter}");
                let l = relabel(*left, counter);
                let r = relabel(*right, counter);
                CfgParse::node(label, l, r)
            }
            leaf => leaf,
        }
    }
    shapes(1, n)
        .into_iter()
        .map(|p| {
            counter = 0;
            relabel(p, &mut counter)
        })
        .collect()
}

/// Every CNF binarization of the dependency tree `heads` (one head vector, root head 0).
pub fn all_binarizations(heads: &[usize]) -> Vec<CfgParse> {
    let ch = children(heads);
    fn at(h: usize, ch: &[Vec<usize>]) -> Vec<CfgParse> {
        let lefts: Vec<usize> = ch[h].iter().rev().copied().filter(|&c| c < h).collect();
        let rights: Vec<usize> = ch[h].iter().copied().filter(|&c| c > h).collect();
        let mut out = Vec::new();
        #[allow(clippy::too_many_arguments)]
        fn go(
            h: usize,
            cur: CfgParse,
            li: usize,
            ri: usize,
            lefts: &[usize],
            rights: &[usize],
            ch: &[Vec<usize>],
            out: &mut Vec<CfgParse>,
        ) {
            if li == lefts.len() && ri == rights.len() {
                out.push(cur);
                return;
            }
            if li < lefts.len() {
                for sub in at(lefts[li], ch) {
                    go(h, CfgParse::node(format!("X{h}"), sub, cur.clone()), li + 1, ri, lefts, rights, ch, out);
                }
            }
            if ri < rights.len() {
                for sub in at(rights[ri], ch) {
                    go(h, CfgParse::node(format!("X{h}"), cur.clone(), sub), li, ri + 1, lefts, rights, ch, out);
                }
            }
        }
        go(h, CfgParse::leaf(format!("X{h}"), format!("w{h}")), 0, 0, &lefts, &rights, ch, &mut out);
        out
    }
    at(ch[0][0], &ch)
}
