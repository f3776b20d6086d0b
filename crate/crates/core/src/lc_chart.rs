//! Depth-bounded left-corner tabulation of split bilexical grammars.
//!
//! Every item mirrors a stack element of the left-corner transition system
//! and carries the stack position `d` of that element. Complete halves and
//! full constituents are the top element; rectangles are incomplete elements
//! whose spine ends in a predicted token `p`. A composition places the top
//! element one level above the element it joins, unless it covers at most
//! `C` tokens. Bounding `d` by `D` then keeps exactly the trees whose oracle
//! derivation never exceeds relaxed depth `D` after a reduce step.
//!
//! Left automata run head-inward: they start in a final state, consume
//! left dependents from the farthest one, and stop in an initial state.

use crate::hypergraph::{Derivation, Hypergraph};
use crate::sbg::{Dir, SentenceGrammar};
use crate::semiring::{Count, LogSum, Scored};

/// Finished state marker (`I` for left halves, `F` for right halves).
pub const DONE: u8 = u8::MAX;

/// Depth bound `D` (None for unbounded) and relaxation size `C`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthPolicy {
    pub max_depth: Option<usize>,
    pub relax: usize,
}

impl DepthPolicy {
    pub const UNBOUNDED: DepthPolicy = DepthPolicy { max_depth: None, relax: 1 };

    pub fn new(max_depth: usize, relax: usize) -> Self {
        assert!(max_depth >= 1 && relax >= 1, "depth bound and relaxation must be positive");
        DepthPolicy { max_depth: Some(max_depth), relax }
    }
}

impl Default for DepthPolicy {
    fn default() -> Self {
        DepthPolicy::UNBOUNDED
    }
}

/// Items of the left-corner chart. Positions are 1-based; `d` and `e` are depths.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum LcItem {
    /// Left half of `h` over `i..=h`; `q` is a left state or [`DONE`].
    LeftTri { i: u16, h: u16, q: u8, d: u8 },
    /// Right half of `h` over `h..=j`; `q` is a right state or [`DONE`].
    RightTri { h: u16, j: u16, q: u8, d: u8 },
    /// Complete constituent of `h` over `i..=j`.
    FullTri { i: u16, h: u16, j: u16, d: u8 },
    /// Predicted head `p` whose left dependents cover `i..=j`.
    PredRect { i: u16, j: u16, p: u16, q: u8, d: u8 },
    /// A `PredRect` joined with the left half of its next dependent `h`.
    HalfRect { i: u16, h: u16, p: u16, q: u8, d: u8, b: u8, e: u8 },
    /// Right half of `h` over `h..=i` whose spine ends in predicted `p`.
    /// `bare` marks a must-head `p` that has no left dependent yet.
    PredRight { h: u16, i: u16, p: u16, r: u8, s: u8, d: u8, bare: bool },
    /// A `PredRight` joined with the left half of `p`'s next dependent `m`.
    HalfRight { h: u16, m: u16, p: u16, r: u8, s: u8, d: u8, b: u8, e: u8 },
}

struct Chart<'a> {
    g: &'a SentenceGrammar,
    n: u16,
    max_d: u8,
    c: u16,
}

const L: usize = Dir::Left as usize;
const R: usize = Dir::Right as usize;

impl Chart<'_> {
    fn must(&self, t: u16) -> bool {
        self.g.must_head[t as usize]
    }

    fn bare_values(&self, t: u16) -> &'static [bool] {
        if self.must(t) {
            &[false, true]
        } else {
            &[false]
        }
    }

    /// Depth of a composed top element given its left-part size bound `b` and right length.
    fn raises(&self, b: u16, right_len: u16) -> bool {
        b + right_len >= self.c
    }

    fn expand(&self, item: &LcItem) -> Vec<Derivation<LcItem>> {
        use LcItem::*;
        let g = self.g;
        let mut out = Vec::new();
        match *item {
            LeftTri { i, h, q, .. } if q != DONE => {
                // Shift-Left.
                if i == h && h <= self.n {
                    for &(fq, ev) in &g.fin[L][h as usize] {
                        if fq == q {
                            out.push(Derivation::new(vec![], vec![ev]));
                        }
                    }
                }
            }
            LeftTri { i, h, d, .. } => {
                for &(iq, ev) in &g.init[L][h as usize] {
                    if i == h {
                        // Finish-Left.
                        out.push(Derivation::new(vec![LeftTri { i, h, q: iq, d }], vec![ev]));
                    } else {
                        // Insert-Left.
                        out.push(Derivation::new(vec![PredRect { i, j: h - 1, p: h, q: iq, d }], vec![ev]));
                    }
                }
            }
            RightTri { h, j, q, d } if q != DONE => {
                if h > self.n {
                    return out;
                }
                if j == h {
                    // Shift-Right.
                    for &(iq, ev) in &g.init[R][h as usize] {
                        if iq == q {
                            out.push(Derivation::new(vec![], vec![ev]));
                        }
                    }
                } else if j <= self.n {
                    // Insert-Right: `j` gets no right dependent.
                    for &(lq, ev_l) in &g.init[L][j as usize] {
                        for &(rq, ev_ri) in &g.init[R][j as usize] {
                            for &(fq, ev_rf) in &g.fin[R][j as usize] {
                                if fq != rq {
                                    continue;
                                }
                                let tail = PredRight { h, i: j - 1, p: j, r: q, s: lq, d, bare: false };
                                out.push(Derivation::new(vec![tail], vec![ev_l, ev_ri, ev_rf]));
                            }
                        }
                    }
                }
            }
            RightTri { h, j, d, .. } => {
                // Finish-Right.
                for &(fq, ev) in &g.fin[R][h as usize] {
                    out.push(Derivation::new(vec![RightTri { h, j, q: fq, d }], vec![ev]));
                }
            }
            FullTri { i, h, j, d } => {
                // Combine.
                if !(self.must(h) && i == h && h == j) {
                    out.push(Derivation::new(
                        vec![LeftTri { i, h, q: DONE, d }, RightTri { h, j, q: DONE, d }],
                        vec![],
                    ));
                }
            }
            PredRect { i, j, p, q, d } => {
                // LeftPred: the complete constituent becomes p's farthest left dependent.
                for h in i..=j.min(self.n) {
                    for &(from, to, ev_t) in &g.trans[L][p as usize][h as usize] {
                        if from != q {
                            continue;
                        }
                        for &(fq, ev_f) in &g.fin[L][p as usize] {
                            if fq == to {
                                out.push(Derivation::new(vec![FullTri { i, h, j, d }], vec![ev_f, ev_t]));
                            }
                        }
                    }
                }
                // LeftComp-L-2.
                for h in (i + 1)..=j {
                    for &(from, to, ev_t) in &g.trans[L][p as usize][h as usize] {
                        if from != q {
                            continue;
                        }
                        self.push_comp2(&mut out, d, h - i - 1, j - h, self.must(h), |b, e| {
                            Derivation::new(
                                vec![HalfRect { i, h, p, q: to, d, b, e }, RightTri { h, j, q: DONE, d: e }],
                                vec![ev_t],
                            )
                        });
                    }
                }
            }
            HalfRect { i, h, p, q, d, b, e } => {
                // LeftComp-L-1.
                for j0 in i..h {
                    if (h - j0 - 1).min(self.c) == b as u16 {
                        out.push(Derivation::new(
                            vec![PredRect { i, j: j0, p, q, d }, LeftTri { i: j0 + 1, h, q: DONE, d: e }],
                            vec![],
                        ));
                    }
                }
            }
            PredRight { h, i, p, r, s, d, bare } => {
                if bare == self.must(p) {
                    // RightPred.
                    for &(from, to, ev_t) in &g.trans[R][h as usize][p as usize] {
                        if to != r {
                            continue;
                        }
                        for &(fq, ev_f) in &g.fin[L][p as usize] {
                            if fq == s {
                                out.push(Derivation::new(vec![RightTri { h, j: i, q: from, d }], vec![ev_t, ev_f]));
                            }
                        }
                    }
                    // RightComp: predicted m takes p as its last right dependent.
                    for m in (h + 1)..=i {
                        let e = if i - m >= self.c { d + 1 } else { d };
                        if e > self.max_d {
                            continue;
                        }
                        for &(iq, ev_i) in &g.init[L][m as usize] {
                            for &(from, to, ev_t) in &g.trans[R][m as usize][p as usize] {
                                for &(fq, ev_fr) in &g.fin[R][m as usize] {
                                    if fq != to {
                                        continue;
                                    }
                                    for &(lq, ev_fl) in &g.fin[L][p as usize] {
                                        if lq != s {
                                            continue;
                                        }
                                        for &bare_m in self.bare_values(m) {
                                            out.push(Derivation::new(
                                                vec![
                                                    PredRight { h, i: m - 1, p: m, r, s: iq, d, bare: bare_m },
                                                    RightTri { h: m, j: i, q: from, d: e },
                                                ],
                                                vec![ev_i, ev_t, ev_fr, ev_fl],
                                            ));
                                        }
                                    }
                                }
                            }
                        }
                    }
                }
                if !bare {
                    // LeftComp-R-2.
                    for m in (h + 1)..=i {
                        for &(from, to, ev_t) in &g.trans[L][p as usize][m as usize] {
                            if from != s {
                                continue;
                            }
                            self.push_comp2(&mut out, d, m - h - 1, i - m, self.must(m), |b, e| {
                                Derivation::new(
                                    vec![
                                        HalfRight { h, m, p, r, s: to, d, b, e },
                                        RightTri { h: m, j: i, q: DONE, d: e },
                                    ],
                                    vec![ev_t],
                                )
                            });
                        }
                    }
                }
            }
            HalfRight { h, m, p, r, s, d, b, e } => {
                // LeftComp-R-1.
                for j0 in h..m {
                    if (m - j0 - 1).min(self.c) != b as u16 {
                        continue;
                    }
                    for &bare in self.bare_values(p) {
                        out.push(Derivation::new(
                            vec![PredRight { h, i: j0, p, r, s, d, bare }, LeftTri { i: j0 + 1, h: m, q: DONE, d: e }],
                            vec![],
                        ));
                    }
                }
            }
        }
        out
    }

    /// Second phase of a left composition: enumerates the left-part size
    /// bound `b` and the depth `e` of the composed element.
    fn push_comp2(
        &self,
        out: &mut Vec<Derivation<LcItem>>,
        d: u8,
        max_left: u16,
        right_len: u16,
        must: bool,
        mut make: impl FnMut(u8, u8) -> Derivation<LcItem>,
    ) {
        for b in 0..=max_left.min(self.c) {
            if must && b == 0 && right_len == 0 {
                continue;
            }
            let e = if self.raises(b, right_len) { d + 1 } else { d };
            if e <= self.max_d {
                out.push(make(b as u8, e));
            }
        }
    }
}

/// The derivation forest of a sentence under a depth policy.
pub fn lc_hypergraph(g: &SentenceGrammar, policy: DepthPolicy) -> Hypergraph<LcItem> {
    let m = g.m;
    let cap = policy.max_depth.unwrap_or(m).min(m).min(u8::MAX as usize - 1);
    let chart = Chart { g, n: (m - 1) as u16, max_d: cap as u8, c: policy.relax.min(m) as u16 };
    let goal = LcItem::LeftTri { i: 1, h: m as u16, q: DONE, d: 1 };
    Hypergraph::build(goal, |it| chart.expand(it), |ev| g.is_dead(ev))
}

/// Log total weight of the trees licensed by `policy`.
pub fn lc_inside(g: &SentenceGrammar, policy: DepthPolicy) -> (Hypergraph<LcItem>, f64) {
    let hg = lc_hypergraph(g, policy);
    let z = hg.total::<LogSum>(|e| g.logw[e as usize]);
    (hg, z)
}

/// Log marginal and expected event counts under the depth filter; `None` on zero mass.
pub fn lc_expected_counts(g: &SentenceGrammar, policy: DepthPolicy) -> Option<(f64, Vec<f64>)> {
    lc_hypergraph(g, policy).expected_counts(&g.logw)
}

/// Number of derivations with nonzero weight.
pub fn lc_derivation_count(g: &SentenceGrammar, policy: DepthPolicy) -> u128 {
    lc_hypergraph(g, policy).total::<Count>(|_| 1)
}

/// Best licensed tree as (log score, heads with `$` at `m`).
pub fn lc_viterbi(g: &SentenceGrammar, policy: DepthPolicy) -> Option<(f64, Vec<usize>)> {
    let (best, events) = lc_hypergraph(g, policy).viterbi(|e| g.scored(e))?;
    Some((best.score, g.heads_from_events(&events)))
}

/// Viterbi score with tie keys.
pub fn lc_best(g: &SentenceGrammar, policy: DepthPolicy) -> Option<Scored> {
    lc_hypergraph(g, policy).viterbi(|e| g.scored(e)).map(|(s, _)| s)
}

/// One line per chart item, for inspecting derivations.
pub fn lc_dump(g: &SentenceGrammar, policy: DepthPolicy) -> String {
    lc_hypergraph(g, policy).dump()
}
