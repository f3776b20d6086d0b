//! The arc-eager system: Shift, LeftArc, RightArc and Reduce between stack and buffer.

use crate::error::{Error, Result};
use crate::transition::{Phase, TransitionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcEagerAction {
    LeftArc,
    RightArc,
    Reduce,
    Shift,
}

impl ArcEagerAction {
    pub const ALL: [ArcEagerAction; 4] =
        [ArcEagerAction::LeftArc, ArcEagerAction::RightArc, ArcEagerAction::Reduce, ArcEagerAction::Shift];

    pub fn name(self) -> &'static str {
        match self {
            ArcEagerAction::LeftArc => "LeftArc",
            ArcEagerAction::RightArc => "RightArc",
            ArcEagerAction::Reduce => "Reduce",
            ArcEagerAction::Shift => "Shift",
        }
    }
}

/// Arc-eager configuration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcEagerConfig {
    pub stack: Vec<usize>,
    pub next: usize,
    pub n: usize,
    pub heads: Vec<usize>,
    pub rooted: bool,
    /// Whether the buffer front already has a left dependent.
    front_has_left: bool,
}

impl ArcEagerConfig {
    pub fn new(n: usize, rooted: bool) -> Self {
        ArcEagerConfig { stack: Vec::new(), next: 1, n, heads: vec![0; n + 1], rooted, front_has_left: false }
    }

    fn is_root_token(&self, t: usize) -> bool {
        self.rooted && t == self.n
    }

    /// Number of connected components left of the buffer front, plus one
    /// when the front already heads a subtree.
    pub fn component_depth(&self) -> usize {
        self.stack.iter().filter(|&&t| self.heads[t] == 0).count() + usize::from(self.front_has_left)
    }

    pub fn check(&self, a: ArcEagerAction) -> Result<()> {
        let fail = |reason: &str| Err(Error::InvalidAction { action: a.name(), reason: reason.into() });
        let s0 = self.stack.last().copied();
        let has_front = self.next <= self.n;
        match a {
            ArcEagerAction::Shift => {
                if !has_front {
                    return fail("buffer is empty");
                }
                if self.is_root_token(self.next) && !self.stack.is_empty() {
                    return fail("the artificial root is shifted onto an empty stack");
                }
                Ok(())
            }
            ArcEagerAction::LeftArc => match s0 {
                None => fail("stack is empty"),
                Some(_) if !has_front => fail("buffer is empty"),
                Some(s) if self.heads[s] != 0 => fail("stack top already has a head"),
                Some(_) => Ok(()),
            },
            ArcEagerAction::RightArc => match s0 {
                None => fail("stack is empty"),
                Some(_) if !has_front => fail("buffer is empty"),
                Some(_) if self.is_root_token(self.next) => fail("the artificial root cannot be a dependent"),
                Some(_) => Ok(()),
            },
            ArcEagerAction::Reduce => match s0 {
                None => fail("stack is empty"),
                Some(s) if self.heads[s] == 0 => fail("stack top has no head"),
                Some(_) => Ok(()),
            },
        }
    }

    pub fn apply(&self, a: ArcEagerAction) -> Result<Self> {
        self.check(a)?;
        let mut c = self.clone();
        match a {
            ArcEagerAction::Shift => {
                c.stack.push(c.next);
                c.next += 1;
                c.front_has_left = false;
            }
            ArcEagerAction::LeftArc => {
                let s = c.stack.pop().expect("checked");
                c.heads[s] = c.next;
                c.front_has_left = true;
            }
            ArcEagerAction::RightArc => {
                let s = *c.stack.last().expect("checked");
                c.heads[c.next] = s;
                c.stack.push(c.next);
                c.next += 1;
                c.front_has_left = false;
            }
            ArcEagerAction::Reduce => {
                c.stack.pop();
            }
        }
        Ok(c)
    }

    /// Static reduce-greedy oracle.
    pub fn oracle(&self, gold: &[usize]) -> Result<ArcEagerAction> {
        if let Some(&s) = self.stack.last() {
            if self.next <= self.n {
                let b = self.next;
                if gold[s] == b && self.heads[s] == 0 {
                    return Ok(ArcEagerAction::LeftArc);
                }
                if gold[b] == s {
                    return Ok(ArcEagerAction::RightArc);
                }
            }
            let pending = (self.next..=self.n).any(|d| gold[d] == s || gold[s] == d);
            if self.heads[s] != 0 && !pending {
                return Ok(ArcEagerAction::Reduce);
            }
        }
        if self.check(ArcEagerAction::Shift).is_err() {
            return Err(Error::Oracle("no gold-consistent arc-eager action".into()));
        }
        Ok(ArcEagerAction::Shift)
    }
}

impl TransitionSystem for ArcEagerConfig {
    type Action = ArcEagerAction;
    const NAME: &'static str = "arc-eager";
    const N_ACTIONS: usize = 4;

    fn initial(n: usize, rooted: bool) -> Self {
        ArcEagerConfig::new(n, rooted)
    }

    fn actions() -> &'static [ArcEagerAction] {
        &ArcEagerAction::ALL
    }

    fn is_valid(&self, a: ArcEagerAction) -> bool {
        self.check(a).is_ok()
    }

    fn apply(&self, a: ArcEagerAction) -> Result<Self> {
        ArcEagerConfig::apply(self, a)
    }

    fn is_terminal(&self) -> bool {
        self.next > self.n && self.stack.len() <= 1
    }

    fn oracle(&self, gold: &[usize]) -> Result<ArcEagerAction> {
        ArcEagerConfig::oracle(self, gold)
    }

    fn depth(&self) -> usize {
        self.component_depth()
    }

    fn phase(a: ArcEagerAction) -> Phase {
        match a {
            ArcEagerAction::Shift | ArcEagerAction::RightArc => Phase::AfterShift,
            _ => Phase::AfterReduce,
        }
    }

    fn action_name(a: ArcEagerAction) -> &'static str {
        a.name()
    }

    fn action_index(a: ArcEagerAction) -> usize {
        a as usize
    }

    fn output_heads(&self) -> Vec<usize> {
        let root = if self.rooted { self.n } else { 0 };
        let mut heads = self.heads.clone();
        for (t, h) in heads.iter_mut().enumerate().skip(1) {
            if t != root && *h == 0 {
                *h = root;
            }
        }
        heads
    }

    fn n(&self) -> usize {
        self.n
    }

    fn next(&self) -> usize {
        self.next
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::run_oracle;

    #[test]
    fn left_to_right_chain_keeps_one_component() {
        let gold = vec![0, 5, 1, 2, 3, 0];
        let tr = run_oracle::<ArcEagerConfig>(&gold, true).unwrap();
        assert_eq!(tr.heads, gold);
        assert!(tr.steps.iter().all(|s| s.depth == 1), "{:?}", tr.steps);
        assert_eq!(tr.steps.len(), 9);
    }

    #[test]
    fn left_arc_counts_front_subtree() {
        // 1 <- 2, root 2.
        let gold = vec![0, 2, 3, 0];
        let tr = run_oracle::<ArcEagerConfig>(&gold, true).unwrap();
        let names: Vec<&str> = tr.steps.iter().map(|s| s.action).collect();
        assert_eq!(names, ["Shift", "LeftArc", "Shift", "LeftArc", "Shift"]);
        let depths: Vec<usize> = tr.steps.iter().map(|s| s.depth).collect();
        assert_eq!(depths, [1, 1, 1, 1, 1]);
    }

    #[test]
    fn reduce_requires_head() {
        let c = ArcEagerConfig::new(2, false).apply(ArcEagerAction::Shift).unwrap();
        assert!(c.apply(ArcEagerAction::Reduce).is_err());
        let c = c.apply(ArcEagerAction::LeftArc).unwrap();
        assert!(c.apply(ArcEagerAction::LeftArc).is_err());
    }
}
