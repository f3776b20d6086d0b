//! The left-corner transition system.
//!
//! Stack elements are right spines. A spine may end in a dummy node that
//! stands for a predicted head not read yet; the dummy records the left
//! dependents collected for it so far.

use std::fmt;

use crate::error::{Error, Result};
use crate::transition::{Phase, TransitionSystem};

/// A node on a right spine.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Node {
    Tok(usize),
    /// Predicted node with its left dependents in order.
    Dummy(Vec<usize>),
}

/// Left-corner actions in tie-breaking order.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum LcAction {
    Shift,
    Insert,
    LeftPred,
    RightPred,
    LeftComp,
    RightComp,
}

impl LcAction {
    pub const ALL: [LcAction; 6] = [
        LcAction::Shift,
        LcAction::Insert,
        LcAction::LeftPred,
        LcAction::RightPred,
        LcAction::LeftComp,
        LcAction::RightComp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LcAction::Shift => "Shift",
            LcAction::Insert => "Insert",
            LcAction::LeftPred => "LeftPred",
            LcAction::RightPred => "RightPred",
            LcAction::LeftComp => "LeftComp",
            LcAction::RightComp => "RightComp",
        }
    }

    pub fn is_shift_type(self) -> bool {
        matches!(self, LcAction::Shift | LcAction::Insert)
    }

    /// Parses an action name.
    pub fn from_name(s: &str) -> Result<Self> {
        LcAction::ALL.into_iter().find(|a| a.name() == s).ok_or_else(|| Error::Parse(format!("unknown action {s:?}")))
    }
}

impl fmt::Display for LcAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A stack element: a right spine plus bookkeeping for relaxed depth.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub spine: Vec<Node>,
    /// Number of tokens covered, counting the dummy as one.
    pub size: usize,
    /// Creation order, unique within a run.
    pub id: usize,
}

impl Element {
    pub fn is_complete(&self) -> bool {
        !matches!(self.spine.last(), Some(Node::Dummy(_)))
    }

    /// The token at the top of the spine, if it is not a dummy.
    pub fn head(&self) -> Option<usize> {
        match self.spine.first() {
            Some(Node::Tok(t)) => Some(*t),
            _ => None,
        }
    }

    /// Left dependents of the trailing dummy, if any.
    pub fn dummy(&self) -> Option<&[usize]> {
        match self.spine.last() {
            Some(Node::Dummy(l)) => Some(l),
            _ => None,
        }
    }

    /// The token just above the trailing dummy.
    pub fn dummy_parent(&self) -> Option<usize> {
        if self.dummy().is_none() || self.spine.len() < 2 {
            return None;
        }
        match self.spine[self.spine.len() - 2] {
            Node::Tok(t) => Some(t),
            Node::Dummy(_) => None,
        }
    }
}

impl fmt::Display for Element {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("<")?;
        for (i, n) in self.spine.iter().enumerate() {
            if i > 0 {
                f.write_str(",")?;
            }
            match n {
                Node::Tok(t) => write!(f, "{t}")?,
                Node::Dummy(l) => {
                    let l: Vec<String> = l.iter().map(|k| k.to_string()).collect();
                    write!(f, "x({})", l.join(" "))?
                }
            }
        }
        f.write_str(">")
    }
}

/// A left-corner configuration (σ, β, A).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LcConfig {
    pub stack: Vec<Element>,
    /// Next buffer position (1-based); the buffer is empty when `next > n`.
    pub next: usize,
    pub n: usize,
    /// Assigned heads indexed by position, 0 when unassigned.
    pub heads: Vec<usize>,
    /// Whether the last token is the artificial root.
    pub rooted: bool,
    shift_turn: bool,
    next_id: usize,
}

impl LcConfig {
    pub fn new(n: usize, rooted: bool) -> Self {
        LcConfig { stack: Vec::new(), next: 1, n, heads: vec![0; n + 1], rooted, shift_turn: true, next_id: 0 }
    }

    /// Arcs (head, dependent) in dependent order.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        (1..=self.n).filter(|&d| self.heads[d] != 0).map(|d| (self.heads[d], d)).collect()
    }

    pub fn buffer_empty(&self) -> bool {
        self.next > self.n
    }

    /// True when the next action must be Shift or Insert.
    pub fn expects_shift(&self) -> bool {
        self.shift_turn
    }

    /// Buffer empty with a single complete spine.
    pub fn is_success(&self) -> bool {
        self.buffer_empty() && self.stack.len() == 1 && self.stack[0].is_complete()
    }

    fn fail(action: LcAction, reason: &str) -> Error {
        Error::InvalidAction { action: action.name(), reason: reason.to_string() }
    }

    fn add_arc(&mut self, h: usize, d: usize) {
        self.heads[d] = h;
    }

    /// Checks the preconditions of `action` without applying it.
    pub fn check(&self, action: LcAction) -> Result<()> {
        let top = self.stack.last();
        if action.is_shift_type() {
            if !self.shift_turn {
                return Err(Self::fail(action, "a reduce action must come next"));
            }
            if self.buffer_empty() {
                return Err(Self::fail(action, "buffer is empty"));
            }
            if action == LcAction::Insert {
                let Some(top) = top else {
                    return Err(Self::fail(action, "stack is empty"));
                };
                if top.is_complete() {
                    return Err(Self::fail(action, "top spine has no dummy"));
                }
            }
            return Ok(());
        }
        if self.shift_turn {
            return Err(Self::fail(action, "a shift action must come next"));
        }
        let Some(top) = top else {
            return Err(Self::fail(action, "stack is empty"));
        };
        if !top.is_complete() {
            return Err(Self::fail(action, "top spine is incomplete"));
        }
        if matches!(action, LcAction::LeftComp | LcAction::RightComp) {
            match self.stack.len().checked_sub(2).map(|i| &self.stack[i]) {
                Some(second) if !second.is_complete() => {}
                Some(_) => return Err(Self::fail(action, "second spine is complete")),
                None => return Err(Self::fail(action, "stack has one element")),
            }
        }
        Ok(())
    }

    /// Applies `action`, returning the successor configuration.
    pub fn apply(&self, action: LcAction) -> Result<LcConfig> {
        self.check(action)?;
        let mut c = self.clone();
        c.shift_turn = !action.is_shift_type();
        match action {
            LcAction::Shift => {
                let j = c.next;
                c.next += 1;
                let id = c.next_id;
                c.next_id += 1;
                c.stack.push(Element { spine: vec![Node::Tok(j)], size: 1, id });
            }
            LcAction::Insert => {
                let j = c.next;
                c.next += 1;
                let top = c.stack.last_mut().expect("checked");
                let parent = top.dummy_parent();
                let Some(Node::Dummy(lambda)) = top.spine.pop() else { unreachable!() };
                top.spine.push(Node::Tok(j));
                if let Some(i) = parent {
                    c.add_arc(i, j);
                }
                for k in lambda {
                    c.add_arc(j, k);
                }
            }
            LcAction::LeftPred => {
                let top = c.stack.last_mut().expect("checked");
                let h = top.head().expect("complete spines start with a token");
                top.spine = vec![Node::Dummy(vec![h])];
                top.size += 1;
            }
            LcAction::RightPred => {
                let top = c.stack.last_mut().expect("checked");
                let h = top.head().expect("complete spines start with a token");
                top.spine = vec![Node::Tok(h), Node::Dummy(Vec::new())];
                top.size += 1;
            }
            LcAction::LeftComp => {
                let top = c.stack.pop().expect("checked");
                let h = top.head().expect("complete spines start with a token");
                let second = c.stack.last_mut().expect("checked");
                if let Some(Node::Dummy(lambda)) = second.spine.last_mut() {
                    lambda.push(h);
                }
                second.size += top.size;
            }
            LcAction::RightComp => {
                let top = c.stack.pop().expect("checked");
                let h = top.head().expect("complete spines start with a token");
                let second = c.stack.last_mut().expect("checked");
                let parent = second.dummy_parent();
                let Some(Node::Dummy(lambda)) = second.spine.pop() else { unreachable!() };
                second.spine.push(Node::Tok(h));
                second.spine.push(Node::Dummy(Vec::new()));
                second.size += top.size;
                if let Some(p) = parent {
                    c.add_arc(p, h);
                }
                for k in lambda {
                    c.add_arc(h, k);
                }
            }
        }
        Ok(c)
    }

    /// Tokens `d >= next` whose gold head is `t`.
    fn pending(&self, gold: &[usize], t: usize) -> usize {
        (self.next..=self.n).filter(|&d| gold[d] == t).count()
    }

    /// The token a dummy stands for under the gold tree.
    fn dummy_target(&self, gold: &[usize], e: &Element) -> Option<usize> {
        match e.dummy_parent() {
            Some(i) => ((i + 1)..=self.n).find(|&d| gold[d] == i && self.heads[d] == 0),
            None => e.dummy().and_then(|l| l.first()).map(|&k| gold[k]),
        }
    }

    /// The gold action for this configuration, preferring Insert and composition.
    pub fn oracle(&self, gold: &[usize]) -> Result<LcAction> {
        if gold.len() != self.n + 1 {
            return Err(Error::LengthMismatch(gold.len() - 1, self.n));
        }
        if self.shift_turn {
            if self.buffer_empty() {
                return Err(Error::Oracle("buffer is empty".into()));
            }
            let j = self.next;
            if let Some(top) = self.stack.last() {
                if !top.is_complete() {
                    let target = self.dummy_target(gold, top);
                    let bare = top.dummy_parent().is_none();
                    if target == Some(j) && (bare || self.pending(gold, j) == 0) {
                        return Ok(LcAction::Insert);
                    }
                }
            }
            return Ok(LcAction::Shift);
        }
        let top = self.stack.last().ok_or_else(|| Error::Oracle("empty stack in reduce phase".into()))?;
        let s = top.head().ok_or_else(|| Error::Oracle("top spine has no head".into()))?;
        let pend = self.pending(gold, s);
        if self.stack.len() >= 2 {
            let second = &self.stack[self.stack.len() - 2];
            let target = self.dummy_target(gold, second);
            if pend == 0 && target.is_some() && target == Some(gold[s]) {
                return Ok(LcAction::LeftComp);
            }
            if target == Some(s) && pend == 1 {
                return Ok(LcAction::RightComp);
            }
        }
        if pend > 0 {
            Ok(LcAction::RightPred)
        } else {
            Ok(LcAction::LeftPred)
        }
    }

    /// Collapses a terminal configuration into a head vector (slot 0 unused).
    ///
    /// Dummies heading a spine hand their dependents to the sentence root, inner
    /// dummies to their parent, and every spine head attaches to the root.
    pub fn postprocess(&self) -> Vec<usize> {
        let mut heads = self.heads.clone();
        let root = if self.rooted { self.n } else { 0 };
        let attach_root = |heads: &mut Vec<usize>, t: usize| {
            if t != root && heads[t] == 0 {
                heads[t] = root;
            }
        };
        for e in &self.stack {
            for (idx, node) in e.spine.iter().enumerate() {
                if let Node::Dummy(lambda) = node {
                    let parent = if idx == 0 {
                        None
                    } else {
                        match e.spine[idx - 1] {
                            Node::Tok(p) => Some(p),
                            Node::Dummy(_) => None,
                        }
                    };
                    for &k in lambda {
                        match parent {
                            Some(p) => heads[k] = p,
                            None => attach_root(&mut heads, k),
                        }
                    }
                }
            }
            if let Some(h) = e.head() {
                attach_root(&mut heads, h);
            }
        }
        // Tokens left in the buffer (only when called early) hang from the root.
        for t in self.next..=self.n {
            attach_root(&mut heads, t);
        }
        heads[0] = 0;
        heads
    }
}

impl fmt::Display for LcConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s: Vec<String> = self.stack.iter().map(|e| e.to_string()).collect();
        write!(f, "[{}] next={}", s.join(""), self.next)
    }
}

impl TransitionSystem for LcConfig {
    type Action = LcAction;
    const NAME: &'static str = "left-corner";
    const N_ACTIONS: usize = 6;

    fn initial(n: usize, rooted: bool) -> Self {
        LcConfig::new(n, rooted)
    }

    fn actions() -> &'static [LcAction] {
        &LcAction::ALL
    }

    fn is_valid(&self, a: LcAction) -> bool {
        if self.check(a).is_err() {
            return false;
        }
        // The artificial root may only fill a dummy that heads its spine.
        if self.rooted && self.next == self.n && a == LcAction::Insert {
            return self.stack.last().is_some_and(|t| t.dummy_parent().is_none());
        }
        true
    }

    fn apply(&self, a: LcAction) -> Result<Self> {
        LcConfig::apply(self, a)
    }

    fn is_terminal(&self) -> bool {
        self.buffer_empty()
    }

    fn oracle(&self, gold: &[usize]) -> Result<LcAction> {
        LcConfig::oracle(self, gold)
    }

    fn depth(&self) -> usize {
        self.stack.len()
    }

    fn phase(a: LcAction) -> Phase {
        if a.is_shift_type() {
            Phase::AfterShift
        } else {
            Phase::AfterReduce
        }
    }

    fn action_name(a: LcAction) -> &'static str {
        a.name()
    }

    fn action_index(a: LcAction) -> usize {
        a as usize
    }

    fn output_heads(&self) -> Vec<usize> {
        self.postprocess()
    }

    fn n(&self) -> usize {
        self.n
    }

    fn next(&self) -> usize {
        self.next
    }

    fn element_ids(&self) -> Vec<usize> {
        self.stack.iter().map(|e| e.id).collect()
    }

    fn composed_by(&self, a: LcAction) -> Option<(usize, usize)> {
        matches!(a, LcAction::LeftComp | LcAction::RightComp)
            .then(|| self.stack.last().map(|e| (e.id, e.size)))
            .flatten()
    }
}
