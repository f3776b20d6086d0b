//! Split bilexical grammars and the dependency model with valence.
//!
//! Every head tag owns a left and a right weighted automaton that generate
//! its dependents outward from the head. [`dmv_to_sbg`] builds the two-state
//! automata of the DMV. A [`SentenceGrammar`] instantiates the automata on
//! one sentence and is the common input of the Eisner chart here and the
//! left-corner chart in [`crate::lc_chart`].

pub mod dmv;
pub mod eisner;
pub mod enumerate;
pub mod grammar;

pub use dmv::{em_step, DmvCounts, DmvEvent, DmvParams};
pub use eisner::{eisner_expected_counts, eisner_hypergraph, eisner_inside, eisner_viterbi, EisnerItem};
pub use grammar::{EventKey, SentenceGrammar};

use std::fmt;

use rustc_hash::FxHashMap;

/// Side of the head on which a dependent lies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Dir {
    Left = 0,
    Right = 1,
}

impl Dir {
    pub const BOTH: [Dir; 2] = [Dir::Left, Dir::Right];

    pub fn of(head: usize, dep: usize) -> Dir {
        if dep < head {
            Dir::Left
        } else {
            Dir::Right
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::Left => "left",
            Dir::Right => "right",
        })
    }
}

/// An interned tag vocabulary.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct TagSet {
    pub tags: Vec<String>,
    index: FxHashMap<String, usize>,
}

impl TagSet {
    pub fn new<S: AsRef<str>>(tags: impl IntoIterator<Item = S>) -> Self {
        let mut ts = TagSet::default();
        for t in tags {
            ts.intern(t.as_ref());
        }
        ts
    }

    /// Returns the id of `tag`, adding it if needed.
    pub fn intern(&mut self, tag: &str) -> usize {
        if let Some(&i) = self.index.get(tag) {
            return i;
        }
        self.tags.push(tag.to_string());
        self.index.insert(tag.to_string(), self.tags.len() - 1);
        self.tags.len() - 1
    }

    pub fn get(&self, tag: &str) -> Option<usize> {
        self.index.get(tag).copied()
    }

    pub fn len(&self) -> usize {
        self.tags.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tags.is_empty()
    }

    pub fn name(&self, i: usize) -> &str {
        &self.tags[i]
    }
}

/// A weighted transition of a head automaton.
#[derive(Clone, Debug, PartialEq)]
pub struct Transition {
    pub from: u8,
    pub dep_tag: usize,
    pub to: u8,
    pub logw: f64,
    /// DMV events whose probabilities make up this weight.
    pub dmv: Vec<DmvEvent>,
}

/// A weighted automaton generating one side's dependents, head outward.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct HeadAutomaton {
    pub init: Vec<(u8, f64)>,
    pub fin: Vec<(u8, f64, Vec<DmvEvent>)>,
    pub trans: Vec<Transition>,
}

/// The automata of a split bilexical grammar over a tag set.
#[derive(Clone, Debug, PartialEq)]
pub struct Automata {
    /// Indexed by head tag and direction.
    pub heads: Vec<[HeadAutomaton; 2]>,
    /// Left automaton of the artificial root; it takes exactly one dependent.
    pub root: HeadAutomaton,
}

impl Automata {
    pub fn n_tags(&self) -> usize {
        self.heads.len()
    }
}

/// Builds the DMV automata: states q0 (no dependent yet) and q1.
pub fn dmv_to_sbg(params: &DmvParams) -> Automata {
    let nt = params.n_tags();
    let heads = (0..nt)
        .map(|h| {
            Dir::BOTH.map(|dir| {
                let st = &params.stop[dir as usize][h];
                let fin = vec![
                    (0, st[0][0], vec![DmvEvent::Stop { h, dir, adj: true, stop: true }]),
                    (1, st[1][0], vec![DmvEvent::Stop { h, dir, adj: false, stop: true }]),
                ];
                let mut trans = Vec::with_capacity(2 * nt);
                for d in 0..nt {
                    let a = params.attach[dir as usize][h][d];
                    for (from, adj) in [(0u8, true), (1u8, false)] {
                        trans.push(Transition {
                            from,
                            dep_tag: d,
                            to: 1,
                            logw: a + st[usize::from(!adj)][1],
                            dmv: vec![DmvEvent::Attach { h, dir, d }, DmvEvent::Stop { h, dir, adj, stop: false }],
                        });
                    }
                }
                HeadAutomaton { init: vec![(0, 0.0)], fin, trans }
            })
        })
        .collect();
    let root = HeadAutomaton {
        init: vec![(0, 0.0)],
        fin: vec![(1, 0.0, Vec::new())],
        trans: (0..nt)
            .map(|d| Transition { from: 0, dep_tag: d, to: 1, logw: params.root[d], dmv: vec![DmvEvent::Root { d }] })
            .collect(),
    };
    Automata { heads, root }
}
