//! Transition systems instrumented for stack depth.
//!
//! The left-corner system is the main subject; arc-standard and arc-eager are
//! kept for comparison. All three share [`TransitionSystem`], which the oracle
//! runner, the corpus analysis and the beam decoder are written against.

pub mod arc_eager;
pub mod arc_standard;
pub mod lc;

use std::fmt;
use std::str::FromStr;

use rustc_hash::FxHashMap;

pub use crate::cfg_leftcorner::Phase;
use crate::error::{Error, Result};
use crate::treebank::{is_projective, DepTree};
pub use arc_eager::{ArcEagerAction, ArcEagerConfig};
pub use arc_standard::{ArcStandardAction, ArcStandardConfig};
pub use lc::{Element, LcAction, LcConfig, Node};

/// Common interface of the transition systems.
pub trait TransitionSystem: Clone + Send + Sync + Sized {
    type Action: Copy + Eq + fmt::Debug + Send + Sync + 'static;
    const NAME: &'static str;
    const N_ACTIONS: usize;

    /// Initial configuration for `n` tokens; `rooted` marks token `n` as `$`.
    fn initial(n: usize, rooted: bool) -> Self;
    /// All actions in tie-breaking order.
    fn actions() -> &'static [Self::Action];
    fn is_valid(&self, a: Self::Action) -> bool;
    fn apply(&self, a: Self::Action) -> Result<Self>;
    fn is_terminal(&self) -> bool;
    fn oracle(&self, gold: &[usize]) -> Result<Self::Action>;
    /// Stack depth of this configuration under the system's own measure.
    fn depth(&self) -> usize;
    fn phase(a: Self::Action) -> Phase;
    fn action_name(a: Self::Action) -> &'static str;
    fn action_index(a: Self::Action) -> usize;
    /// Heads of the (repaired) output tree, slot 0 unused.
    fn output_heads(&self) -> Vec<usize>;
    fn n(&self) -> usize;
    fn next(&self) -> usize;

    /// Ids of the stack elements, bottom first (left-corner only).
    fn element_ids(&self) -> Vec<usize> {
        Vec::new()
    }
    /// Id and size of the element absorbed by `a`, if `a` composes.
    fn composed_by(&self, _a: Self::Action) -> Option<(usize, usize)> {
        None
    }
}

/// Which transition system to run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SystemKind {
    LeftCorner,
    ArcStandard,
    ArcEager,
}

impl SystemKind {
    pub fn name(self) -> &'static str {
        match self {
            SystemKind::LeftCorner => LcConfig::NAME,
            SystemKind::ArcStandard => ArcStandardConfig::NAME,
            SystemKind::ArcEager => ArcEagerConfig::NAME,
        }
    }
}

impl fmt::Display for SystemKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SystemKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "left-corner" | "lc" => Ok(SystemKind::LeftCorner),
            "arc-standard" | "as" => Ok(SystemKind::ArcStandard),
            "arc-eager" | "ae" => Ok(SystemKind::ArcEager),
            _ => Err(Error::Config(format!("unknown system {s:?}"))),
        }
    }
}

/// One recorded transition.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TraceStep {
    pub action: &'static str,
    /// Depth of the configuration reached by this action.
    pub depth: usize,
    pub phase: Phase,
    /// Stack element ids after the action (left-corner only).
    pub element_ids: Vec<usize>,
}

/// The action sequence of an oracle run with per-step depths.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct OracleTrace {
    pub system: &'static str,
    pub steps: Vec<TraceStep>,
    /// Heads produced by the run, slot 0 unused.
    pub heads: Vec<usize>,
    /// Size of each composed element at the time it was absorbed.
    pub composed_size: FxHashMap<usize, usize>,
}

impl OracleTrace {
    /// Maximum depth over all steps.
    pub fn max_depth(&self) -> usize {
        self.steps.iter().map(|s| s.depth).max().unwrap_or(0)
    }

    fn max_in_phase(&self, phase: Phase) -> usize {
        self.steps.iter().filter(|s| s.phase == phase).map(|s| s.depth).max().unwrap_or(1).max(1)
    }

    /// Maximum depth after reduce actions (at least 1).
    pub fn depth_re_max(&self) -> usize {
        self.max_in_phase(Phase::AfterReduce)
    }

    /// Maximum depth after shift actions.
    pub fn depth_sh_max(&self) -> usize {
        self.max_in_phase(Phase::AfterShift)
    }

    /// Depth after a reduce step where elements above the bottom only count
    /// if they are eventually composed with more than `c` tokens.
    pub fn relaxed_depth(&self, step: &TraceStep, c: usize) -> usize {
        if step.element_ids.is_empty() {
            return step.depth;
        }
        1 + step.element_ids[1..].iter().filter(|id| self.composed_size.get(id).is_none_or(|&s| s > c)).count()
    }

    /// Maximum relaxed depth after reduce actions; `c = 1` gives [`Self::depth_re_max`].
    pub fn relaxed_depth_re_max(&self, c: usize) -> usize {
        self.steps
            .iter()
            .filter(|s| s.phase == Phase::AfterReduce)
            .map(|s| self.relaxed_depth(s, c))
            .max()
            .unwrap_or(1)
            .max(1)
    }

    /// Relaxed depth seen by each token when it is read, indexed by position.
    ///
    /// The first token sees depth 1; later tokens see the depth after the
    /// reduce step that precedes their shift.
    pub fn token_depths(&self, c: usize) -> Vec<usize> {
        let mut out = vec![0];
        let mut last = 1;
        for s in &self.steps {
            match s.phase {
                Phase::AfterShift => out.push(last),
                Phase::AfterReduce => last = self.relaxed_depth(s, c),
            }
        }
        out
    }

    /// Tab-separated dump: step, action, depth, phase.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for (i, s) in self.steps.iter().enumerate() {
            let phase = match s.phase {
                Phase::AfterShift => "shift",
                Phase::AfterReduce => "reduce",
            };
            out.push_str(&format!("{}\t{}\t{}\t{}\n", i + 1, s.action, s.depth, phase));
        }
        out
    }
}

/// Runs the static oracle of `S` on gold heads (slot 0 unused).
///
/// Fails if the run does not reproduce the gold heads exactly.
pub fn run_oracle<S: TransitionSystem>(gold: &[usize], rooted: bool) -> Result<OracleTrace> {
    let n = gold.len() - 1;
    let mut c = S::initial(n, rooted);
    let mut steps = Vec::with_capacity(2 * n);
    let mut composed_size = FxHashMap::default();
    while !c.is_terminal() {
        let a = c.oracle(gold)?;
        if steps.len() > 2 * n {
            return Err(Error::Oracle("oracle does not terminate".into()));
        }
        if let Some((id, size)) = c.composed_by(a) {
            composed_size.insert(id, size);
        }
        c = c.apply(a)?;
        steps.push(TraceStep {
            action: S::action_name(a),
            depth: c.depth(),
            phase: S::phase(a),
            element_ids: c.element_ids(),
        });
    }
    let heads = c.output_heads();
    if heads[1..] != gold[1..] {
        return Err(Error::Oracle(format!("{} oracle produced {:?} for gold {:?}", S::NAME, heads, gold)));
    }
    Ok(OracleTrace { system: S::NAME, steps, heads, composed_size })
}

/// Runs the oracle of `system` on a projective tree.
pub fn run_oracle_tree(tree: &DepTree, system: SystemKind) -> Result<OracleTrace> {
    if !is_projective(tree) {
        return Err(Error::NonProjective);
    }
    let gold = tree.heads();
    match system {
        SystemKind::LeftCorner => run_oracle::<LcConfig>(&gold, tree.rooted),
        SystemKind::ArcStandard => run_oracle::<ArcStandardConfig>(&gold, tree.rooted),
        SystemKind::ArcEager => run_oracle::<ArcEagerConfig>(&gold, tree.rooted),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::brute::{enumerate_projective_trees, with_root};
    use crate::cfg_leftcorner::{binarize_dependency, embedding_degree};

    fn lc(gold: &[usize], rooted: bool) -> OracleTrace {
        run_oracle::<LcConfig>(gold, rooted).unwrap()
    }

    #[test]
    fn oracle_reconstructs_every_projective_tree() {
        for n in 1..=7 {
            for heads in enumerate_projective_trees(n) {
                let gold = with_root(&heads);
                for sys in [SystemKind::LeftCorner, SystemKind::ArcStandard, SystemKind::ArcEager] {
                    let tree = DepTree { rooted: true, ..DepTree::from_heads(&vec!["X"; n + 1], &gold[1..]) };
                    let tr = run_oracle_tree(&tree, sys).unwrap();
                    assert_eq!(tr.steps.len(), 2 * (n + 1) - 1, "{sys} {gold:?}");
                }
            }
        }
    }

    #[test]
    fn oracle_never_right_composes_onto_bare_dummy() {
        for n in 1..=6 {
            for heads in enumerate_projective_trees(n) {
                let gold = with_root(&heads);
                let mut c = LcConfig::new(n + 1, true);
                while !c.buffer_empty() {
                    let a = c.oracle(&gold).unwrap();
                    if a == LcAction::RightComp {
                        let second = &c.stack[c.stack.len() - 2];
                        assert!(second.dummy_parent().is_some(), "{gold:?}");
                        let top = c.stack.last().unwrap();
                        let h = top.head().unwrap();
                        assert!((1..h).all(|k| c.heads[k] != h), "{gold:?}");
                    }
                    c = c.apply(a).unwrap();
                }
            }
        }
    }

    #[test]
    fn depth_re_tracks_binarized_degree() {
        for n in 1..=6 {
            for heads in enumerate_projective_trees(n) {
                let gold = with_root(&heads);
                let tr = lc(&gold, true);
                let tree = DepTree { rooted: true, ..DepTree::from_heads(&vec!["X"; n + 1], &gold[1..]) };
                let parse = binarize_dependency(&tree).unwrap();
                assert_eq!(tr.depth_re_max() - 1, embedding_degree(&parse), "{gold:?}");
            }
        }
    }

    /// Smallest max depth_re over all action sequences that build `gold`.
    fn best_depth(c: &LcConfig, gold: &[usize], cur: usize) -> Option<usize> {
        if c.buffer_empty() {
            return (c.is_success() && c.heads[1..] == gold[1..]).then_some(cur);
        }
        let mut best: Option<usize> = None;
        for a in LcAction::ALL {
            let Ok(next) = c.apply(a) else { continue };
            if (1..=c.n).any(|d| next.heads[d] != 0 && next.heads[d] != gold[d]) {
                continue;
            }
            let depth = if a.is_shift_type() { cur } else { cur.max(next.stack.len()) };
            if best.is_some_and(|b| depth >= b) {
                continue;
            }
            if let Some(d) = best_depth(&next, gold, depth) {
                best = Some(best.map_or(d, |b| b.min(d)));
            }
        }
        best
    }

    #[test]
    fn oracle_depth_is_minimal() {
        for n in 1..=5 {
            for heads in enumerate_projective_trees(n) {
                let gold = with_root(&heads);
                let tr = lc(&gold, true);
                let best = best_depth(&LcConfig::new(n + 1, true), &gold, 1).unwrap();
                assert_eq!(tr.depth_re_max(), best, "{gold:?}");
            }
        }
    }

    #[test]
    fn right_branching_depths() {
        // 1 -> 2 -> 3 -> 4 with $ at 5.
        let tr = lc(&[0, 5, 1, 2, 3, 0], true);
        assert_eq!(tr.depth_re_max(), 1);
        assert_eq!(tr.depth_sh_max(), 2);
    }

    #[test]
    fn degree_one_example_has_depth_two() {
        // a -> b -> c, b -> d: a b c d as in the worked example, rooted at a.
        let tr = lc(&[0, 5, 1, 2, 2, 0], true);
        assert_eq!(tr.depth_re_max(), 2);
        assert_eq!(tr.steps[3].depth, 2);
    }

    #[test]
    fn relaxation_exempts_small_constituents() {
        // The reporter who the senator met ignored the story $.
        //   1 2 3 4 5 6 7 8 9 10
        // reporter(2)<-ignored(7); The(1)<-2; met(6) modifies 2; who(3)<-6; senator(5)<-6; the(4)<-5;
        // story(9)<-7; the(8)<-9; 7 <- $(10).
        let gold = vec![0, 2, 7, 6, 5, 6, 2, 10, 9, 7, 0];
        let tr = lc(&gold, true);
        assert_eq!(tr.relaxed_depth_re_max(1), tr.depth_re_max());
        assert_eq!(tr.relaxed_depth_re_max(1), 2);
        assert_eq!(tr.relaxed_depth_re_max(3), 1);
        let n = gold.len() - 1;
        assert_eq!(tr.relaxed_depth_re_max(n), 1);
    }

    #[test]
    fn token_depths_start_at_one() {
        let tr = lc(&[0, 5, 1, 2, 2, 0], true);
        let d = tr.token_depths(1);
        assert_eq!(d.len(), 6);
        assert_eq!(d[1], 1);
        assert_eq!(d[3], 2);
        assert_eq!(d[4], 1);
    }

    #[test]
    fn dump_has_one_line_per_action() {
        let tr = lc(&[0, 2, 0], false);
        assert_eq!(tr.dump(), "1\tShift\t1\tshift\n2\tLeftPred\t1\treduce\n3\tInsert\t1\tshift\n");
    }

    #[test]
    fn non_projective_gold_is_rejected() {
        let tree = DepTree::from_heads(&["X"; 4], &[3, 0, 2, 1]);
        assert!(matches!(run_oracle_tree(&tree, SystemKind::LeftCorner), Err(Error::NonProjective)));
    }
}
