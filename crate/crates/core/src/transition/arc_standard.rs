//! The arc-standard system: Shift, LeftArc and RightArc over the two top stack tokens.

use crate::error::{Error, Result};
use crate::transition::{Phase, TransitionSystem};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArcStandardAction {
    LeftArc,
    RightArc,
    Shift,
}

impl ArcStandardAction {
    pub const ALL: [ArcStandardAction; 3] =
        [ArcStandardAction::LeftArc, ArcStandardAction::RightArc, ArcStandardAction::Shift];

    pub fn name(self) -> &'static str {
        match self {
            ArcStandardAction::LeftArc => "LeftArc",
            ArcStandardAction::RightArc => "RightArc",
            ArcStandardAction::Shift => "Shift",
        }
    }
}

/// Arc-standard configuration; the stack holds token positions.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ArcStandardConfig {
    pub stack: Vec<usize>,
    pub next: usize,
    pub n: usize,
    pub heads: Vec<usize>,
    pub rooted: bool,
}

impl ArcStandardConfig {
    pub fn new(n: usize, rooted: bool) -> Self {
        ArcStandardConfig { stack: Vec::new(), next: 1, n, heads: vec![0; n + 1], rooted }
    }

    fn top2(&self) -> Option<(usize, usize)> {
        let k = self.stack.len();
        (k >= 2).then(|| (self.stack[k - 1], self.stack[k - 2]))
    }

    fn is_root_token(&self, t: usize) -> bool {
        self.rooted && t == self.n
    }

    pub fn check(&self, a: ArcStandardAction) -> Result<()> {
        let fail = |reason: &str| Err(Error::InvalidAction { action: a.name(), reason: reason.into() });
        match a {
            ArcStandardAction::Shift if self.next > self.n => fail("buffer is empty"),
            ArcStandardAction::Shift => Ok(()),
            ArcStandardAction::LeftArc | ArcStandardAction::RightArc => match self.top2() {
                None => fail("fewer than two stack tokens"),
                Some((s1, _)) if a == ArcStandardAction::RightArc && self.is_root_token(s1) => {
                    fail("the artificial root cannot be a dependent")
                }
                Some(_) => Ok(()),
            },
        }
    }

    pub fn apply(&self, a: ArcStandardAction) -> Result<Self> {
        self.check(a)?;
        let mut c = self.clone();
        match a {
            ArcStandardAction::Shift => {
                c.stack.push(c.next);
                c.next += 1;
            }
            ArcStandardAction::LeftArc => {
                let s1 = c.stack.pop().expect("checked");
                let s2 = c.stack.pop().expect("checked");
                c.heads[s2] = s1;
                c.stack.push(s1);
            }
            ArcStandardAction::RightArc => {
                let s1 = c.stack.pop().expect("checked");
                let s2 = *c.stack.last().expect("checked");
                c.heads[s1] = s2;
            }
        }
        Ok(c)
    }

    /// Static reduce-greedy oracle.
    pub fn oracle(&self, gold: &[usize]) -> Result<ArcStandardAction> {
        if let Some((s1, s2)) = self.top2() {
            if gold[s2] == s1 {
                return Ok(ArcStandardAction::LeftArc);
            }
            let done = (1..=self.n).all(|d| gold[d] != s1 || self.heads[d] == s1);
            if gold[s1] == s2 && done {
                return Ok(ArcStandardAction::RightArc);
            }
        }
        if self.next > self.n {
            return Err(Error::Oracle("no gold-consistent arc-standard action".into()));
        }
        Ok(ArcStandardAction::Shift)
    }
}

impl TransitionSystem for ArcStandardConfig {
    type Action = ArcStandardAction;
    const NAME: &'static str = "arc-standard";
    const N_ACTIONS: usize = 3;

    fn initial(n: usize, rooted: bool) -> Self {
        ArcStandardConfig::new(n, rooted)
    }

    fn actions() -> &'static [ArcStandardAction] {
        &ArcStandardAction::ALL
    }

    fn is_valid(&self, a: ArcStandardAction) -> bool {
        self.check(a).is_ok()
    }

    fn apply(&self, a: ArcStandardAction) -> Result<Self> {
        ArcStandardConfig::apply(self, a)
    }

    fn is_terminal(&self) -> bool {
        self.next > self.n && self.stack.len() <= 1
    }

    fn oracle(&self, gold: &[usize]) -> Result<ArcStandardAction> {
        ArcStandardConfig::oracle(self, gold)
    }

    fn depth(&self) -> usize {
        self.stack.len()
    }

    fn phase(a: ArcStandardAction) -> Phase {
        match a {
            ArcStandardAction::Shift => Phase::AfterShift,
            _ => Phase::AfterReduce,
        }
    }

    fn action_name(a: ArcStandardAction) -> &'static str {
        a.name()
    }

    fn action_index(a: ArcStandardAction) -> usize {
        a as usize
    }

    fn output_heads(&self) -> Vec<usize> {
        let root = if self.rooted { self.n } else { 0 };
        let mut heads = self.heads.clone();
        for t in self.stack.iter().copied().chain(self.next..=self.n) {
            if t != root && heads[t] == 0 {
                heads[t] = root;
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
    fn right_branching_chain_grows_the_stack() {
        // 1 -> 2 -> 3 -> 4, root 1, then $ at 5.
        let gold = vec![0, 5, 1, 2, 3, 0];
        let tr = run_oracle::<ArcStandardConfig>(&gold, true).unwrap();
        assert_eq!(tr.steps.len(), 9);
        assert_eq!(tr.max_depth(), 4);
        assert_eq!(tr.heads, gold);
    }

    #[test]
    fn left_arc_precedes_right_arc() {
        let gold = vec![0, 2, 3, 0];
        let tr = run_oracle::<ArcStandardConfig>(&gold, true).unwrap();
        let names: Vec<&str> = tr.steps.iter().map(|s| s.action).collect();
        assert_eq!(names, ["Shift", "Shift", "LeftArc", "Shift", "LeftArc"]);
    }
}
