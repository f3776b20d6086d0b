//! CNF parses, center-embedding degree and the left-corner PDAs.
//!
//! Both PDA variants are run as recognizers of one given parse: at each
//! point the action is the unique one consistent with that parse.

use std::fmt;

use crate::error::{Error, Result};
use crate::treebank::{children, DepTree};

/// A binary constituent tree in Chomsky normal form.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum CfgParse {
    /// A preterminal over one terminal.
    Leaf {
        label: String,
        word: String,
        head: Option<usize>,
    },
    Node {
        label: String,
        left: Box<CfgParse>,
        right: Box<CfgParse>,
        head: Option<usize>,
    },
}

impl CfgParse {
    pub fn leaf(label: impl Into<String>, word: impl Into<String>) -> Self {
        CfgParse::Leaf { label: label.into(), word: word.into(), head: None }
    }

    pub fn node(label: impl Into<String>, left: CfgParse, right: CfgParse) -> Self {
        CfgParse::Node { label: label.into(), left: Box::new(left), right: Box::new(right), head: None }
    }

    pub fn label(&self) -> &str {
        match self {
            CfgParse::Leaf { label, .. } | CfgParse::Node { label, .. } => label,
        }
    }

    /// Head token annotation, when derived from a dependency tree.
    pub fn head(&self) -> Option<usize> {
        match self {
            CfgParse::Leaf { head, .. } | CfgParse::Node { head, .. } => *head,
        }
    }

    /// Terminal symbols in order.
    pub fn words(&self) -> Vec<&str> {
        let mut out = Vec::new();
        fn go<'a>(p: &'a CfgParse, out: &mut Vec<&'a str>) {
            match p {
                CfgParse::Leaf { word, .. } => out.push(word),
                CfgParse::Node { left, right, .. } => {
                    go(left, out);
                    go(right, out);
                }
            }
        }
        go(self, &mut out);
        out
    }

    pub fn n_terminals(&self) -> usize {
        match self {
            CfgParse::Leaf { .. } => 1,
            CfgParse::Node { left, right, .. } => left.n_terminals() + right.n_terminals(),
        }
    }

    /// Reads the bracketed format `(S (A a) (B b))`.
    pub fn parse(text: &str) -> Result<Self> {
        let tokens = tokenize(text);
        let mut pos = 0;
        let tree = parse_bracket(&tokens, &mut pos)?;
        if pos != tokens.len() {
            return Err(Error::Parse(format!("trailing input after position {pos}")));
        }
        Ok(tree)
    }
}

impl fmt::Display for CfgParse {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CfgParse::Leaf { label, word, .. } => write!(f, "({label} {word})"),
            CfgParse::Node { label, left, right, .. } => write!(f, "({label} {left} {right})"),
        }
    }
}

fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut cur = String::new();
    for c in text.chars() {
        match c {
            '(' | ')' => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
                out.push(c.to_string());
            }
            c if c.is_whitespace() => {
                if !cur.is_empty() {
                    out.push(std::mem::take(&mut cur));
                }
            }
            c => cur.push(c),
        }
    }
    if !cur.is_empty() {
        out.push(cur);
    }
    out
}

fn parse_bracket(tokens: &[String], pos: &mut usize) -> Result<CfgParse> {
    let expect = |pos: &mut usize, what: &str| -> Result<String> {
        let t = tokens.get(*pos).ok_or_else(|| Error::Parse(format!("unexpected end, wanted {what}")))?;
        *pos += 1;
        Ok(t.clone())
    };
    if expect(pos, "(")? != "(" {
        return Err(Error::Parse(format!("expected `(` at token {}", *pos - 1)));
    }
    let label = expect(pos, "label")?;
    if label == "(" || label == ")" {
        return Err(Error::Parse("missing label".into()));
    }
    let mut kids = Vec::new();
    let mut word = None;
    while tokens.get(*pos).map(String::as_str) != Some(")") {
        if tokens.get(*pos).map(String::as_str) == Some("(") {
            kids.push(parse_bracket(tokens, pos)?);
        } else {
            word = Some(expect(pos, "terminal")?);
        }
    }
    *pos += 1;
    match (word, kids.len()) {
        (Some(w), 0) => Ok(CfgParse::leaf(label, w)),
        (None, 2) => {
            let right = kids.pop().unwrap();
            let left = kids.pop().unwrap();
            Ok(CfgParse::node(label, left, right))
        }
        _ => Err(Error::Parse(format!("node `{label}` is not in CNF"))),
    }
}

/// Flattened parse with parent links; node 0 is the root.
struct Flat {
    labels: Vec<String>,
    parent: Vec<Option<usize>>,
    kids: Vec<Option<(usize, usize)>>,
    /// Preterminal node of each token.
    pre: Vec<usize>,
}

impl Flat {
    fn new(p: &CfgParse) -> Self {
        let mut f = Flat { labels: Vec::new(), parent: Vec::new(), kids: Vec::new(), pre: Vec::new() };
        f.add(p, None);
        f
    }

    fn add(&mut self, p: &CfgParse, parent: Option<usize>) -> usize {
        let id = self.labels.len();
        self.labels.push(p.label().to_string());
        self.parent.push(parent);
        self.kids.push(None);
        match p {
            CfgParse::Leaf { .. } => self.pre.push(id),
            CfgParse::Node { left, right, .. } => {
                let l = self.add(left, Some(id));
                let r = self.add(right, Some(id));
                self.kids[id] = Some((l, r));
            }
        }
        id
    }

    fn right_of(&self, n: usize) -> usize {
        self.kids[n].expect("internal node").1
    }

    fn is_left_child(&self, n: usize) -> bool {
        self.parent[n].is_some_and(|p| self.kids[p].unwrap().0 == n)
    }
}

/// Root-to-preterminal directions of every token (`false` = left, `true` = right).
fn paths(p: &CfgParse) -> Vec<Vec<bool>> {
    let mut out = Vec::new();
    fn go(p: &CfgParse, path: &mut Vec<bool>, out: &mut Vec<Vec<bool>>) {
        match p {
            CfgParse::Leaf { .. } => out.push(path.clone()),
            CfgParse::Node { left, right, .. } => {
                path.push(false);
                go(left, path, out);
                path.pop();
                path.push(true);
                go(right, path, out);
                path.pop();
            }
        }
    }
    go(p, &mut Vec::new(), &mut out);
    out
}

/// Number of zig-zags in a path: runs of left edges preceded by a right edge
/// and followed by one.
fn zigzags(path: &[bool]) -> usize {
    let mut count = 0;
    let mut seen_right = false;
    let mut i = 0;
    while i < path.len() {
        if path[i] {
            seen_right = true;
            i += 1;
            continue;
        }
        let start = i;
        while i < path.len() && !path[i] {
            i += 1;
        }
        if seen_right && start > 0 && i < path.len() {
            count += 1;
        }
    }
    count
}

/// Degree of center-embedding of a parse.
pub fn embedding_degree(parse: &CfgParse) -> usize {
    paths(parse).iter().map(|p| zigzags(p)).max().unwrap_or(0)
}

/// Degree of center-embedding for the token at 1-based `position`.
pub fn token_embedding_degree(parse: &CfgParse, position: usize) -> usize {
    let all = paths(parse);
    assert!(position >= 1 && position <= all.len(), "position out of range");
    zigzags(&all[position - 1])
}

/// PDA variant.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdaVariant {
    /// Starts with an empty stack and accepts with the start symbol.
    Main,
    /// Starts with the goal start symbol and accepts with an empty stack.
    Alt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PdaAction {
    Shift,
    Scan,
    Prediction,
    Composition,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    AfterShift,
    AfterReduce,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdaStep {
    pub action: PdaAction,
    /// Stack symbols from bottom to top.
    pub stack: Vec<String>,
    pub depth: usize,
    /// Number of tokens consumed so far.
    pub position: usize,
    pub phase: Phase,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PdaTrace {
    pub variant: PdaVariant,
    pub steps: Vec<PdaStep>,
}

impl PdaTrace {
    /// Stack depth just before each token is shifted or scanned (index 0 is the first token).
    pub fn depth_before_tokens(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut prev = 0;
        for s in &self.steps {
            if s.phase == Phase::AfterShift {
                out.push(prev);
            }
            prev = s.depth;
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sym {
    Complete(usize),
    /// `X/P`: top node and predicted node.
    Slash(usize, usize),
    /// `A−B` of the alternative variant.
    Dash(usize, usize),
    Goal(usize),
}

fn render(f: &Flat, s: Sym) -> String {
    match s {
        Sym::Complete(n) => f.labels[n].clone(),
        Sym::Slash(a, b) => format!("{}/{}", f.labels[a], f.labels[b]),
        Sym::Dash(a, b) => format!("{}-{}", f.labels[a], f.labels[b]),
        Sym::Goal(a) => f.labels[a].clone(),
    }
}

/// Replays the left-corner PDA on `parse`.
pub fn simulate_pda(parse: &CfgParse, variant: PdaVariant) -> Result<PdaTrace> {
    let f = Flat::new(parse);
    let steps = match variant {
        PdaVariant::Main => run_main(&f)?,
        PdaVariant::Alt => run_alt(&f)?,
    };
    Ok(PdaTrace { variant, steps })
}

fn snapshot(f: &Flat, stack: &[Sym], action: PdaAction, position: usize, phase: Phase) -> PdaStep {
    PdaStep { action, stack: stack.iter().map(|&s| render(f, s)).collect(), depth: stack.len(), position, phase }
}

fn run_main(f: &Flat) -> Result<Vec<PdaStep>> {
    let n = f.pre.len();
    let mut stack: Vec<Sym> = Vec::new();
    let mut steps = Vec::new();
    for t in 0..n {
        let pre = f.pre[t];
        let action = match stack.last() {
            Some(&Sym::Slash(x, p)) if p == pre => {
                *stack.last_mut().unwrap() = Sym::Complete(x);
                PdaAction::Scan
            }
            _ => {
                stack.push(Sym::Complete(pre));
                PdaAction::Shift
            }
        };
        steps.push(snapshot(f, &stack, action, t + 1, Phase::AfterShift));
        if t + 1 == n {
            break;
        }
        let Some(Sym::Complete(node)) = stack.pop() else {
            return Err(Error::Parse("reduce without a complete symbol on top".into()));
        };
        if !f.is_left_child(node) {
            return Err(Error::Parse(format!("`{}` cannot be reduced", f.labels[node])));
        }
        let parent = f.parent[node].unwrap();
        let action = match stack.last() {
            Some(&Sym::Slash(x, p)) if p == parent => {
                *stack.last_mut().unwrap() = Sym::Slash(x, f.right_of(parent));
                PdaAction::Composition
            }
            _ => {
                stack.push(Sym::Slash(parent, f.right_of(parent)));
                PdaAction::Prediction
            }
        };
        steps.push(snapshot(f, &stack, action, t + 1, Phase::AfterReduce));
    }
    if stack != [Sym::Complete(0)] {
        return Err(Error::Parse("main PDA did not accept".into()));
    }
    Ok(steps)
}

fn run_alt(f: &Flat) -> Result<Vec<PdaStep>> {
    let n = f.pre.len();
    let mut stack = vec![Sym::Goal(0)];
    let mut steps = Vec::new();
    for t in 0..n {
        let pre = f.pre[t];
        let Some(Sym::Goal(a)) = stack.pop() else {
            return Err(Error::Parse("shift without a goal on top".into()));
        };
        let action = if a == pre {
            PdaAction::Scan
        } else {
            stack.push(Sym::Dash(a, pre));
            PdaAction::Shift
        };
        steps.push(snapshot(f, &stack, action, t + 1, Phase::AfterShift));
        if stack.is_empty() {
            if t + 1 != n {
                return Err(Error::Parse("alternative PDA emptied its stack early".into()));
            }
            break;
        }
        let Some(Sym::Dash(a, b)) = stack.pop() else {
            return Err(Error::Parse("reduce without an A-B symbol on top".into()));
        };
        let parent = f.parent[b].ok_or_else(|| Error::Parse("reduce of the root".into()))?;
        let action = if parent == a {
            stack.push(Sym::Goal(f.right_of(a)));
            PdaAction::Composition
        } else {
            stack.push(Sym::Dash(a, parent));
            stack.push(Sym::Goal(f.right_of(parent)));
            PdaAction::Prediction
        };
        steps.push(snapshot(f, &stack, action, t + 1, Phase::AfterReduce));
    }
    if !stack.is_empty() {
        return Err(Error::Parse("alternative PDA did not accept".into()));
    }
    Ok(steps)
}

/// Maximum stack depth after a reduce transition (1 when there is none).
pub fn max_depth_after_reduce(trace: &PdaTrace) -> usize {
    trace.steps.iter().filter(|s| s.phase == Phase::AfterReduce).map(|s| s.depth).max().unwrap_or(1).max(1)
}

/// Maximum stack depth after a shift-phase transition.
pub fn max_depth_after_shift(trace: &PdaTrace) -> usize {
    trace.steps.iter().filter(|s| s.phase == Phase::AfterShift).map(|s| s.depth).max().unwrap_or(0)
}

/// Head-labeled CNF parse that the left-corner oracle builds implicitly.
///
/// A head whose parent lies to its right (or that has no parent) takes its
/// left children first; a head whose parent lies to its left takes its
/// right children first. Children attach nearest first.
pub fn binarize_dependency(tree: &DepTree) -> Result<CfgParse> {
    if !crate::treebank::is_projective(tree) {
        return Err(Error::NonProjective);
    }
    tree.validate().map_err(|msg| Error::InvalidTree { sentence: 0, msg })?;
    let heads = tree.heads();
    let ch = children(&heads);
    let words: Vec<String> =
        tree.tokens.iter().map(|t| if t.form.is_empty() { t.pos.clone() } else { t.form.clone() }).collect();
    let root = ch[0][0];
    Ok(binarize_at(root, &heads, &ch, &words))
}

fn binarize_at(h: usize, heads: &[usize], ch: &[Vec<usize>], words: &[String]) -> CfgParse {
    let label = format!("X[{}]", words[h - 1]);
    let mut cur = CfgParse::Leaf { label: label.clone(), word: words[h - 1].clone(), head: Some(h) };
    let lefts: Vec<usize> = ch[h].iter().rev().copied().filter(|&c| c < h).collect();
    let rights: Vec<usize> = ch[h].iter().copied().filter(|&c| c > h).collect();
    let attach_left = |cur: CfgParse, l: usize| CfgParse::Node {
        label: label.clone(),
        left: Box::new(binarize_at(l, heads, ch, words)),
        right: Box::new(cur),
        head: Some(h),
    };
    let attach_right = |cur: CfgParse, r: usize| CfgParse::Node {
        label: label.clone(),
        left: Box::new(cur),
        right: Box::new(binarize_at(r, heads, ch, words)),
        head: Some(h),
    };
    let parent = heads[h];
    if parent == 0 || parent > h {
        cur = lefts.iter().fold(cur, |c, &l| attach_left(c, l));
        cur = rights.iter().fold(cur, |c, &r| attach_right(c, r));
    } else {
        cur = rights.iter().fold(cur, |c, &r| attach_right(c, r));
        cur = lefts.iter().fold(cur, |c, &l| attach_left(c, l));
    }
    cur
}
