//! Derivation forests built by memoized search from the goal item.
//!
//! A chart is described by a deduction function listing, for an item, the
//! ways of deriving it from smaller items. [`Hypergraph::build`] explores the
//! items reachable backwards from the goal, drops items with no complete
//! derivation and numbers the rest in topological order. Inside, outside,
//! expected counts and Viterbi are then plain passes over the edge list; the
//! outside pass is the reverse-mode derivative of the inside pass.

use std::hash::Hash;

use rustc_hash::FxHashMap;

use crate::semiring::{log_add, LogSum, MaxTie, Scored, Semiring};

/// Event ids attached to a hyperedge.
pub type EventId = u32;

/// One derivation step: `head` from up to two tails, weighted by events.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Edge {
    pub head: u32,
    pub tails: Vec<u32>,
    pub events: Vec<EventId>,
}

/// A derivation returned by a deduction function.
pub struct Derivation<I> {
    pub tails: Vec<I>,
    pub events: Vec<EventId>,
}

impl<I> Derivation<I> {
    pub fn new(tails: Vec<I>, events: Vec<EventId>) -> Self {
        Derivation { tails, events }
    }
}

/// A pruned, topologically ordered derivation forest.
#[derive(Clone, Debug, Default)]
pub struct Hypergraph<I> {
    /// Items by node id.
    pub items: Vec<I>,
    /// Edges grouped by head, heads in increasing order.
    pub edges: Vec<Edge>,
    /// Edge range of each node.
    pub ranges: Vec<(u32, u32)>,
    /// The goal node, absent if the goal has no derivation.
    pub goal: Option<u32>,
}

enum Slot {
    Busy,
    Dead,
    Node(u32),
}

impl<I: Clone + Eq + Hash + std::fmt::Debug> Hypergraph<I> {
    /// Builds the forest below `goal`.
    ///
    /// `expand` lists the derivations of an item; `dead` marks events of
    /// weight zero, whose edges are dropped.
    pub fn build<F, D>(goal: I, mut expand: F, dead: D) -> Self
    where
        F: FnMut(&I) -> Vec<Derivation<I>>,
        D: Fn(EventId) -> bool,
    {
        let mut hg = Hypergraph { items: Vec::new(), edges: Vec::new(), ranges: Vec::new(), goal: None };
        let mut memo: FxHashMap<I, Slot> = FxHashMap::default();
        // Explicit stack of (item, derivations, next derivation, next tail, resolved tails).
        struct Frame<I> {
            item: I,
            derivs: Vec<Derivation<I>>,
            di: usize,
            ti: usize,
            resolved: Vec<u32>,
            edges: Vec<Edge>,
        }
        let start = |item: I, expand: &mut F| {
            let derivs = expand(&item).into_iter().filter(|d| !d.events.iter().any(|&e| dead(e))).collect();
            Frame { item, derivs, di: 0, ti: 0, resolved: Vec::new(), edges: Vec::new() }
        };
        memo.insert(goal.clone(), Slot::Busy);
        let mut stack = vec![start(goal.clone(), &mut expand)];
        let mut result: Option<Option<u32>> = None;
        while let Some(top) = stack.last_mut() {
            // Feed the result of a finished child into the current derivation.
            if let Some(child) = result.take() {
                match child {
                    Some(id) => {
                        top.resolved.push(id);
                        top.ti += 1;
                    }
                    None => {
                        top.di += 1;
                        top.ti = 0;
                        top.resolved.clear();
                    }
                }
            }
            if top.di == top.derivs.len() {
                let frame = stack.pop().expect("non-empty");
                let slot = if frame.edges.is_empty() {
                    Slot::Dead
                } else {
                    let id = hg.items.len() as u32;
                    let start = hg.edges.len() as u32;
                    for mut e in frame.edges {
                        e.head = id;
                        hg.edges.push(e);
                    }
                    hg.ranges.push((start, hg.edges.len() as u32));
                    hg.items.push(frame.item.clone());
                    Slot::Node(id)
                };
                result = Some(match slot {
                    Slot::Node(id) => Some(id),
                    _ => None,
                });
                memo.insert(frame.item, slot);
                continue;
            }
            let d = &top.derivs[top.di];
            if top.ti == d.tails.len() {
                top.edges.push(Edge { head: 0, tails: std::mem::take(&mut top.resolved), events: d.events.clone() });
                top.di += 1;
                top.ti = 0;
                continue;
            }
            let tail = &d.tails[top.ti];
            match memo.get(tail) {
                Some(Slot::Node(id)) => {
                    top.resolved.push(*id);
                    top.ti += 1;
                }
                Some(Slot::Dead) => {
                    top.di += 1;
                    top.ti = 0;
                    top.resolved.clear();
                }
                Some(Slot::Busy) => panic!("cyclic deduction through {tail:?}"),
                None => {
                    let tail = tail.clone();
                    memo.insert(tail.clone(), Slot::Busy);
                    let frame = start(tail, &mut expand);
                    stack.push(frame);
                }
            }
        }
        if let Some(Slot::Node(id)) = memo.get(&goal) {
            hg.goal = Some(*id);
        }
        hg
    }

    pub fn n_nodes(&self) -> usize {
        self.items.len()
    }

    fn node_edges(&self, v: usize) -> &[Edge] {
        let (s, e) = self.ranges[v];
        &self.edges[s as usize..e as usize]
    }

    /// Inside values under semiring `S`, with `event` giving each event's value.
    pub fn inside<S: Semiring>(&self, event: impl Fn(EventId) -> S::V) -> Vec<S::V> {
        let mut ins = vec![S::zero(); self.n_nodes()];
        for v in 0..self.n_nodes() {
            let mut acc = S::zero();
            for e in self.node_edges(v) {
                acc = S::plus(acc, self.edge_value::<S>(e, &ins, &event));
            }
            ins[v] = acc;
        }
        ins
    }

    fn edge_value<S: Semiring>(&self, e: &Edge, ins: &[S::V], event: &impl Fn(EventId) -> S::V) -> S::V {
        let mut w = S::one();
        for &ev in &e.events {
            w = S::times(w, event(ev));
        }
        for &t in &e.tails {
            w = S::times(w, ins[t as usize]);
        }
        w
    }

    /// Value of the goal under semiring `S`, or zero if it is underivable.
    pub fn total<S: Semiring>(&self, event: impl Fn(EventId) -> S::V) -> S::V {
        match self.goal {
            Some(g) => self.inside::<S>(event)[g as usize],
            None => S::zero(),
        }
    }

    /// Log inside values.
    pub fn inside_log(&self, logw: &[f64]) -> Vec<f64> {
        self.inside::<LogSum>(|e| logw[e as usize])
    }

    /// Log outside values given log inside values.
    pub fn outside_log(&self, logw: &[f64], ins: &[f64]) -> Vec<f64> {
        let mut out = vec![f64::NEG_INFINITY; self.n_nodes()];
        let Some(g) = self.goal else { return out };
        out[g as usize] = 0.0;
        for v in (0..self.n_nodes()).rev() {
            if out[v] == f64::NEG_INFINITY {
                continue;
            }
            for e in self.node_edges(v) {
                let base = out[v] + e.events.iter().map(|&ev| logw[ev as usize]).sum::<f64>();
                for (k, &t) in e.tails.iter().enumerate() {
                    let others: f64 =
                        e.tails.iter().enumerate().filter(|&(j, _)| j != k).map(|(_, &u)| ins[u as usize]).sum();
                    out[t as usize] = log_add(out[t as usize], base + others);
                }
            }
        }
        out
    }

    /// Log marginal and expected count of each event (indexed by event id).
    ///
    /// Returns `None` if the goal has zero mass.
    pub fn expected_counts(&self, logw: &[f64]) -> Option<(f64, Vec<f64>)> {
        let g = self.goal? as usize;
        let ins = self.inside_log(logw);
        let z = ins[g];
        if !z.is_finite() {
            return None;
        }
        let out = self.outside_log(logw, &ins);
        let mut counts = vec![0.0; logw.len()];
        for e in &self.edges {
            let o = out[e.head as usize];
            if o == f64::NEG_INFINITY {
                continue;
            }
            let lw: f64 = e.events.iter().map(|&ev| logw[ev as usize]).sum::<f64>()
                + e.tails.iter().map(|&t| ins[t as usize]).sum::<f64>();
            let p = (o + lw - z).exp();
            for &ev in &e.events {
                counts[ev as usize] += p;
            }
        }
        Some((z, counts))
    }

    /// Best derivation: its score and the events used, or `None` if underivable.
    pub fn viterbi(&self, event: impl Fn(EventId) -> Scored) -> Option<(Scored, Vec<EventId>)> {
        let g = self.goal? as usize;
        let mut best = vec![Scored::NONE; self.n_nodes()];
        let mut back = vec![u32::MAX; self.n_nodes()];
        for v in 0..self.n_nodes() {
            let (s, _) = self.ranges[v];
            for (k, e) in self.node_edges(v).iter().enumerate() {
                let val = self.edge_value::<MaxTie>(e, &best, &event);
                if val.beats(&best[v]) {
                    best[v] = val;
                    back[v] = s + k as u32;
                }
            }
        }
        if best[g].score == f64::NEG_INFINITY {
            return None;
        }
        let mut events = Vec::new();
        let mut todo = vec![g];
        while let Some(v) = todo.pop() {
            let e = &self.edges[back[v] as usize];
            events.extend_from_slice(&e.events);
            todo.extend(e.tails.iter().map(|&t| t as usize));
        }
        Some((best[g], events))
    }

    /// One line per item with its edges, for debugging.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for v in 0..self.n_nodes() {
            out.push_str(&format!("{v}\t{:?}\n", self.items[v]));
            for e in self.node_edges(v) {
                out.push_str(&format!("\t<- {:?} events {:?}\n", e.tails, e.events));
            }
        }
        out
    }
}
