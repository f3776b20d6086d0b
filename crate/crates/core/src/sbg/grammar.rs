//! Head automata instantiated on one sentence.

use rustc_hash::FxHashMap;

use crate::hypergraph::EventId;
use crate::sbg::{Automata, Dir, DmvEvent, HeadAutomaton};

/// A head-automaton transition: (from state, to state, event).
pub type Transition = (u8, u8, EventId);

/// An automaton step at a sentence position.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum EventKey {
    Init { h: u32, dir: Dir, q: u8 },
    Final { h: u32, dir: Dir, q: u8 },
    Trans { h: u32, dir: Dir, q: u8, dep: u32, next: u8 },
}

/// Per-sentence weighted grammar.
///
/// Positions run from 1 to `m`, where `m` is the artificial root `$`. Only
/// the left automaton of `$` exists; it admits exactly one dependent.
#[derive(Clone, Debug)]
pub struct SentenceGrammar {
    pub m: usize,
    pub keys: Vec<EventKey>,
    pub logw: Vec<f64>,
    /// DMV events whose counts an event contributes to.
    pub dmv: Vec<Vec<DmvEvent>>,
    /// `init[dir][h]`: (state, event).
    pub init: [Vec<Vec<(u8, EventId)>>; 2],
    /// `fin[dir][h]`: (state, event).
    pub fin: [Vec<Vec<(u8, EventId)>>; 2],
    /// `trans[dir][h][dep]`: (from, to, event).
    pub trans: [Vec<Vec<Vec<Transition>>>; 2],
    /// Tokens that must take at least one dependent.
    pub must_head: Vec<bool>,
    index: FxHashMap<EventKey, EventId>,
}

impl SentenceGrammar {
    /// Instantiates `automata` on a sentence of tag ids (words only; `$` is added).
    pub fn new(automata: &Automata, tags: &[usize]) -> Self {
        let n = tags.len();
        let m = n + 1;
        let mut g = SentenceGrammar {
            m,
            keys: Vec::new(),
            logw: Vec::new(),
            dmv: Vec::new(),
            init: [vec![Vec::new(); m + 1], vec![Vec::new(); m + 1]],
            fin: [vec![Vec::new(); m + 1], vec![Vec::new(); m + 1]],
            trans: [vec![vec![Vec::new(); m + 1]; m + 1], vec![vec![Vec::new(); m + 1]; m + 1]],
            must_head: vec![false; m + 1],
            index: FxHashMap::default(),
        };
        for h in 1..=m {
            let dirs: &[Dir] = if h == m { &[Dir::Left] } else { &Dir::BOTH };
            for &dir in dirs {
                let a: &HeadAutomaton =
                    if h == m { &automata.root } else { &automata.heads[tags[h - 1]][dir as usize] };
                let h32 = h as u32;
                for &(q, w) in &a.init {
                    let ev = g.add(EventKey::Init { h: h32, dir, q }, w, Vec::new());
                    g.init[dir as usize][h].push((q, ev));
                }
                for (q, w, dmv) in &a.fin {
                    let ev = g.add(EventKey::Final { h: h32, dir, q: *q }, *w, dmv.clone());
                    g.fin[dir as usize][h].push((*q, ev));
                }
                let deps: Vec<usize> = match dir {
                    Dir::Left => (1..h).collect(),
                    Dir::Right => ((h + 1)..m).collect(),
                };
                for d in deps {
                    for t in a.trans.iter().filter(|t| t.dep_tag == tags[d - 1]) {
                        let key = EventKey::Trans { h: h32, dir, q: t.from, dep: d as u32, next: t.to };
                        let ev = g.add(key, t.logw, t.dmv.clone());
                        g.trans[dir as usize][h][d].push((t.from, t.to, ev));
                    }
                }
            }
        }
        g
    }

    fn add(&mut self, key: EventKey, logw: f64, dmv: Vec<DmvEvent>) -> EventId {
        let id = self.keys.len() as EventId;
        self.keys.push(key);
        self.logw.push(logw);
        self.dmv.push(dmv);
        self.index.insert(key, id);
        id
    }

    /// Number of words (excluding `$`).
    pub fn n(&self) -> usize {
        self.m - 1
    }

    pub fn n_events(&self) -> usize {
        self.keys.len()
    }

    pub fn event(&self, key: &EventKey) -> Option<EventId> {
        self.index.get(key).copied()
    }

    pub fn is_dead(&self, ev: EventId) -> bool {
        self.logw[ev as usize] == f64::NEG_INFINITY
    }

    /// The arc (head, dependent) produced by a transition event.
    pub fn arc(&self, ev: EventId) -> Option<(usize, usize)> {
        match self.keys[ev as usize] {
            EventKey::Trans { h, dep, .. } => Some((h as usize, dep as usize)),
            _ => None,
        }
    }

    /// Tie-break-aware score of an event for Viterbi search.
    pub fn scored(&self, ev: EventId) -> crate::semiring::Scored {
        let w = self.logw[ev as usize];
        match self.arc(ev) {
            Some((h, d)) => crate::semiring::Scored::arc(w, h, d),
            None => crate::semiring::Scored::new(w),
        }
    }

    /// Turns the events of a derivation into heads (slot 0 unused, `$` at `m`).
    pub fn heads_from_events(&self, events: &[EventId]) -> Vec<usize> {
        let mut heads = vec![0; self.m + 1];
        for &ev in events {
            if let Some((h, d)) = self.arc(ev) {
                heads[d] = h;
            }
        }
        heads
    }

    /// Log score of a tree under the grammar, summing over automaton paths.
    ///
    /// `heads` has slot 0 unused and `$` at position `m`.
    pub fn score_tree(&self, heads: &[usize]) -> f64 {
        self.tree_paths(heads).iter().map(|(w, _)| *w).fold(f64::NEG_INFINITY, crate::semiring::log_add)
    }

    /// Every automaton path combination of a tree with its log weight and events.
    pub fn tree_paths(&self, heads: &[usize]) -> Vec<(f64, Vec<EventId>)> {
        let mut combos: Vec<(f64, Vec<EventId>)> = vec![(0.0, Vec::new())];
        for h in 1..=self.m {
            let has_dep = (1..self.m).any(|d| heads[d] == h);
            if self.must_head[h] && !has_dep {
                return Vec::new();
            }
            let dirs: &[Dir] = if h == self.m { &[Dir::Left] } else { &Dir::BOTH };
            for &dir in dirs {
                // Dependents ordered from the head outward.
                let deps: Vec<usize> = match dir {
                    Dir::Left => (1..h).rev().filter(|&d| heads[d] == h).collect(),
                    Dir::Right => ((h + 1)..self.m).filter(|&d| heads[d] == h).collect(),
                };
                let paths = self.side_paths(h, dir, &deps);
                let mut next = Vec::new();
                for (w, evs) in &combos {
                    for (pw, pevs) in &paths {
                        let mut e = evs.clone();
                        e.extend_from_slice(pevs);
                        next.push((w + pw, e));
                    }
                }
                combos = next;
            }
        }
        combos.retain(|(w, _)| *w > f64::NEG_INFINITY);
        combos
    }

    fn side_paths(&self, h: usize, dir: Dir, deps: &[usize]) -> Vec<(f64, Vec<EventId>)> {
        let di = dir as usize;
        let mut cur: Vec<(u8, f64, Vec<EventId>)> =
            self.init[di][h].iter().map(|&(q, ev)| (q, self.logw[ev as usize], vec![ev])).collect();
        for &d in deps {
            let mut next = Vec::new();
            for (q, w, evs) in &cur {
                for &(from, to, ev) in &self.trans[di][h][d] {
                    if from == *q {
                        let mut e = evs.clone();
                        e.push(ev);
                        next.push((to, w + self.logw[ev as usize], e));
                    }
                }
            }
            cur = next;
        }
        let mut out = Vec::new();
        for (q, w, evs) in cur {
            for &(fq, ev) in &self.fin[di][h] {
                if fq == q {
                    let mut e = evs.clone();
                    e.push(ev);
                    out.push((w + self.logw[ev as usize], e));
                }
            }
        }
        out
    }
}
