//! Feature templates over transition configurations.
//!
//! A template is a conjunction of atoms such as `s0.p.t`: an address
//! (`s0`, `s1`, `s2` on the stack, `q0`, `q1`, `q2` on the buffer), an
//! optional relative (`p`, `gp`, `gg`, `l`, `l2`, `r`) and an attribute
//! (`w` for the form, `t` for the tag). Atoms that point nowhere take the
//! NULL value.

use std::fmt;
use std::str::FromStr;
use std::sync::LazyLock;

use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::transition::{ArcEagerConfig, ArcStandardConfig, LcConfig, Node, SystemKind, TransitionSystem};
use crate::treebank::{DepTree, ROOT_SYMBOL};

/// Left-corner templates shared by the full and limited sets.
///
/// A `.p` on a token address (as in `q0.p`) reads as its tag.
pub const LC_BASE: [&str; 46] = [
    "s0.p.w",
    "s0.p.t",
    "s0.l.w",
    "s0.l.t",
    "s1.p.w",
    "s1.p.t",
    "s1.l.w",
    "s1.l.t",
    "s0.p.w+s0.p.t",
    "s0.l.w+s0.l.t",
    "s1.p.w+s1.p.t",
    "s1.l.w+s1.l.t",
    "q0.w",
    "q0.t",
    "q0.w+q0.t",
    "s0.p.w+s0.l.w",
    "s0.p.t+s0.l.t",
    "s0.p.w+s1.p.w",
    "s0.l.w+s1.l.w",
    "s0.p.t+s1.p.t",
    "s0.l.t+s1.l.t",
    "s0.p.w+q0.w",
    "s0.l.w+q0.w",
    "s0.p.t+q0.t",
    "s0.l.t+q0.t",
    "s0.p.w+q0.w+q0.t",
    "s0.p.w+q0.w+s0.p.t",
    "s0.l.w+q0.w+s0.l.t",
    "s0.p.w+s0.p.t+q0.t",
    "s0.l.w+s0.l.t+q0.t",
    "q0.t+q0.l.t+q0.r.t",
    "q0.w+q0.l.t+q0.r.t",
    "s0.p.t+s0.gp.t+s0.gg.t",
    "s0.p.t+s0.gp.t+s0.l.t",
    "s0.p.t+s0.l.t+s0.l2.t",
    "s0.p.t+s0.gp.t+q0.t",
    "s0.p.t+s0.l.t+q0.t",
    "s0.p.w+s0.l.t+q0.t",
    "s0.p.t+s0.l.w+q0.t",
    "s0.l.t+s0.l2.t+q0.t",
    "s0.p.t+q0.t+q0.l.t",
    "s0.p.t+q0.t+q0.r.t",
    "s1.p.t+s0.p.t+s0.l.t",
    "s1.p.t+s0.l.t+q0.t",
    "s1.l.t+s0.l.t+q0.t",
    "s1.l.t+s0.p.t+q0.t",
];

/// Left-corner templates that look at `q1` or `q2`; only in the full set.
pub const LC_EXTRA: [&str; 8] = [
    "q0.t+q1.t",
    "q0.t+q1.t+q2.t",
    "s0.p.t+q0.t+q1.t+q2.t",
    "s0.l.t+q0.t+q1.t+q2.t",
    "s0.p.w+q0.t+q1.t",
    "s0.p.t+q0.t+q1.t",
    "s0.l.w+q0.t+q1.t",
    "s0.l.t+q0.t+q1.t",
];

/// Unlabeled word/tag templates for the arc-standard and arc-eager systems.
pub const ARC_TEMPLATES: [&str; 31] = [
    "s0.w",
    "s0.t",
    "s0.w+s0.t",
    "s1.w",
    "s1.t",
    "s1.w+s1.t",
    "q0.w",
    "q0.t",
    "q0.w+q0.t",
    "s0.w+s1.w",
    "s0.t+s1.t",
    "s0.t+q0.t",
    "s0.w+s0.t+s1.t",
    "s0.t+s1.w+s1.t",
    "s0.w+s1.w+s1.t",
    "s0.w+s0.t+s1.w",
    "s0.w+s0.t+s1.w+s1.t",
    "s0.t+q0.t+q1.t",
    "s1.t+s0.t+q0.t",
    "s0.w+q0.t+q1.t",
    "s1.t+s0.w+q0.t",
    "s2.t+s1.t+s0.t",
    "s1.t+s0.t+s0.l.t",
    "s1.t+s0.t+s0.r.t",
    "s1.t+s1.l.t+s0.t",
    "s1.t+s1.r.t+s0.t",
    "s1.t+s0.w+s0.r.t",
    "s1.t+s0.w+s0.l.t",
    "s0.w+q0.w",
    "q0.t+q0.l.t",
    "s0.t+q0.t+q0.l.t",
];

/// Which left-corner templates to use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum FeatureSet {
    #[default]
    Full,
    /// Drops every template that looks past `q0`.
    Limited,
}

impl FromStr for FeatureSet {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(FeatureSet::Full),
            "limited" => Ok(FeatureSet::Limited),
            _ => Err(Error::Config(format!("unknown feature set `{s}`"))),
        }
    }
}

impl fmt::Display for FeatureSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            FeatureSet::Full => "full",
            FeatureSet::Limited => "limited",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Addr {
    S0,
    S1,
    S2,
    Q0,
    Q1,
    Q2,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Rel {
    Node,
    P,
    Gp,
    Gg,
    L,
    L2,
    R,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
struct Atom {
    addr: Addr,
    rel: Rel,
    word: bool,
}

fn parse_atom(s: &str) -> Result<Atom> {
    let bad = || Error::Config(format!("bad feature atom `{s}`"));
    let parts: Vec<&str> = s.split('.').collect();
    let addr = match parts[0] {
        "s0" => Addr::S0,
        "s1" => Addr::S1,
        "s2" => Addr::S2,
        "q0" => Addr::Q0,
        "q1" => Addr::Q1,
        "q2" => Addr::Q2,
        _ => return Err(bad()),
    };
    let (rel, attr) = match parts[..] {
        [_, attr] => (Rel::Node, attr),
        [_, rel, attr] => {
            let rel = match rel {
                "p" => Rel::P,
                "gp" => Rel::Gp,
                "gg" => Rel::Gg,
                "l" => Rel::L,
                "l2" => Rel::L2,
                "r" => Rel::R,
                _ => return Err(bad()),
            };
            (rel, attr)
        }
        _ => return Err(bad()),
    };
    let word = match attr {
        "w" => true,
        "t" => false,
        _ => return Err(bad()),
    };
    Ok(Atom { addr, rel, word })
}

/// A parsed template.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Template {
    pub name: &'static str,
    atoms: Vec<Atom>,
}

fn compile(names: &[&'static str]) -> Vec<Template> {
    names
        .iter()
        .map(|&name| {
            let atoms: Vec<Atom> = name.split('+').map(|a| parse_atom(a).expect("static template")).collect();
            assert!(atoms.len() <= MAX_ATOMS);
            Template { name, atoms }
        })
        .collect()
}

const MAX_ATOMS: usize = 4;

static LC_FULL: LazyLock<Vec<Template>> = LazyLock::new(|| compile(&[&LC_BASE[..], &LC_EXTRA[..]].concat()));
static LC_LIMITED: LazyLock<Vec<Template>> = LazyLock::new(|| compile(&LC_BASE));
static ARC: LazyLock<Vec<Template>> = LazyLock::new(|| compile(&ARC_TEMPLATES));

/// The templates used by a system; the feature set only affects the left-corner system.
pub fn templates(system: SystemKind, set: FeatureSet) -> &'static [Template] {
    match (system, set) {
        (SystemKind::LeftCorner, FeatureSet::Full) => &LC_FULL,
        (SystemKind::LeftCorner, FeatureSet::Limited) => &LC_LIMITED,
        _ => &ARC,
    }
}

/// Token positions around one address; `None` is NULL.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Slot {
    pub node: Option<usize>,
    pub p: Option<usize>,
    pub gp: Option<usize>,
    pub gg: Option<usize>,
    pub l: Option<usize>,
    pub l2: Option<usize>,
    pub r: Option<usize>,
}

impl Slot {
    /// A token with its leftmost, second leftmost and rightmost dependents so far.
    fn token(t: usize, heads: &[usize]) -> Slot {
        let mut deps = (1..heads.len()).filter(|&d| heads[d] == t);
        let l = deps.next();
        let l2 = deps.next();
        let r = deps.next_back().or(l2).or(l);
        Slot { node: Some(t), l, l2, r, ..Slot::default() }
    }

    fn buffer(t: usize, n: usize) -> Slot {
        Slot { node: (t <= n).then_some(t), ..Slot::default() }
    }
}

/// Elementary addresses of a configuration, in the order s0 s1 s2 q0 q1 q2.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct FeatureContext {
    pub slots: [Slot; 6],
}

impl FeatureContext {
    fn get(&self, a: Atom) -> Option<usize> {
        let s = &self.slots[a.addr as usize];
        match a.rel {
            Rel::Node => s.node,
            // On a plain token the parent slot is read as the token itself.
            Rel::P => s.p.or(s.node),
            Rel::Gp => s.gp,
            Rel::Gg => s.gg,
            Rel::L => s.l,
            Rel::L2 => s.l2,
            Rel::R => s.r,
        }
    }
}

/// Configurations that expose a feature context.
pub trait Featurized: TransitionSystem {
    fn context(&self) -> FeatureContext;
}

fn lc_slot(c: &LcConfig, i: usize) -> Slot {
    let e = &c.stack[i];
    if e.is_complete() {
        return Slot::token(e.head().expect("complete spines start with a token"), &c.heads);
    }
    let toks: Vec<usize> = e
        .spine
        .iter()
        .filter_map(|n| match n {
            Node::Tok(t) => Some(*t),
            Node::Dummy(_) => None,
        })
        .collect();
    let up = |k: usize| toks.len().checked_sub(k + 1).map(|i| toks[i]);
    let lambda = e.dummy().unwrap_or(&[]);
    Slot {
        node: None,
        p: up(0),
        gp: up(1),
        gg: up(2),
        l: lambda.first().copied(),
        l2: lambda.get(1).copied(),
        r: lambda.last().copied(),
    }
}

impl Featurized for LcConfig {
    /// In reduce mode the complete top element takes the place of `q0`.
    fn context(&self) -> FeatureContext {
        let mut ctx = FeatureContext::default();
        let k = self.stack.len();
        let (below, queue) = if self.expects_shift() { (k, 0) } else { (k.saturating_sub(1), 1) };
        if queue == 1 && k > 0 {
            ctx.slots[Addr::Q0 as usize] = lc_slot(self, k - 1);
        }
        for (j, slot) in [Addr::S0, Addr::S1, Addr::S2].into_iter().enumerate() {
            if below > j {
                ctx.slots[slot as usize] = lc_slot(self, below - 1 - j);
            }
        }
        for (j, slot) in [Addr::Q0, Addr::Q1, Addr::Q2].into_iter().skip(queue).enumerate() {
            ctx.slots[slot as usize] = Slot::buffer(self.next + j, self.n);
        }
        ctx
    }
}

fn stack_context(stack: &[usize], next: usize, n: usize, heads: &[usize]) -> FeatureContext {
    let mut ctx = FeatureContext::default();
    for j in 0..3 {
        if let Some(&t) = stack.len().checked_sub(j + 1).map(|i| &stack[i]) {
            ctx.slots[j] = Slot::token(t, heads);
        }
        if next + j <= n {
            ctx.slots[3 + j] = if j == 0 { Slot::token(next, heads) } else { Slot::buffer(next + j, n) };
        }
    }
    ctx
}

impl Featurized for ArcStandardConfig {
    fn context(&self) -> FeatureContext {
        stack_context(&self.stack, self.next, self.n, &self.heads)
    }
}

impl Featurized for ArcEagerConfig {
    fn context(&self) -> FeatureContext {
        stack_context(&self.stack, self.next, self.n, &self.heads)
    }
}

/// String interner for forms and tags; id 0 is NULL and id 1 an unknown string.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocab {
    ids: FxHashMap<String, u32>,
    strings: Vec<String>,
}

pub const NULL: u32 = 0;
pub const UNK: u32 = 1;
const NULL_STR: &str = "<null>";
const UNK_STR: &str = "<unk>";

impl Default for Vocab {
    fn default() -> Self {
        let mut v = Vocab { ids: FxHashMap::default(), strings: Vec::new() };
        v.intern(NULL_STR);
        v.intern(UNK_STR);
        v
    }
}

impl Vocab {
    pub fn intern(&mut self, s: &str) -> u32 {
        if let Some(&i) = self.ids.get(s) {
            return i;
        }
        let i = self.strings.len() as u32;
        self.ids.insert(s.to_string(), i);
        self.strings.push(s.to_string());
        i
    }

    /// Looks a string up, mapping unseen strings to [`UNK`].
    pub fn lookup(&self, s: &str) -> u32 {
        self.ids.get(s).copied().unwrap_or(UNK)
    }

    pub fn name(&self, i: u32) -> &str {
        &self.strings[i as usize]
    }

    pub fn len(&self) -> usize {
        self.strings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strings.is_empty()
    }
}

/// Interned forms and tags of a sentence with `$` appended, slot 0 unused.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub forms: Vec<u32>,
    pub tags: Vec<u32>,
}

impl Sentence {
    fn build(tree: &DepTree, mut id: impl FnMut(&str) -> u32) -> Sentence {
        let mut forms = vec![NULL];
        let mut tags = vec![NULL];
        for t in &tree.tokens {
            forms.push(id(&t.form));
            tags.push(id(&t.pos));
        }
        if !tree.rooted {
            forms.push(id(ROOT_SYMBOL));
            tags.push(id(ROOT_SYMBOL));
        }
        Sentence { forms, tags }
    }

    /// Interns every string of the tree.
    pub fn interned(tree: &DepTree, vocab: &mut Vocab) -> Sentence {
        Sentence::build(tree, |s| vocab.intern(s))
    }

    /// Reads the tree with a fixed vocabulary.
    pub fn lookup(tree: &DepTree, vocab: &Vocab) -> Sentence {
        Sentence::build(tree, |s| vocab.lookup(s))
    }

    /// Number of positions including `$`.
    pub fn len(&self) -> usize {
        self.forms.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// A template instance: template index and up to four interned values.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Feature {
    pub template: u16,
    pub values: [u32; MAX_ATOMS],
}

/// Instantiates every template on a context.
pub fn extract(ctx: &FeatureContext, sent: &Sentence, templates: &[Template], out: &mut Vec<Feature>) {
    out.clear();
    for (k, t) in templates.iter().enumerate() {
        let mut values = [NULL; MAX_ATOMS];
        for (v, a) in values.iter_mut().zip(&t.atoms) {
            if let Some(p) = ctx.get(*a) {
                *v = if a.word { sent.forms[p] } else { sent.tags[p] };
            }
        }
        out.push(Feature { template: k as u16, values });
    }
}

/// Renders a feature as space-separated template name and values.
pub fn render(f: &Feature, templates: &[Template], vocab: &Vocab) -> String {
    let t = &templates[f.template as usize];
    let mut s = t.name.to_string();
    for v in &f.values[..t.atoms.len()] {
        s.push(' ');
        s.push_str(vocab.name(*v));
    }
    s
}

/// Parses the output of [`render`], interning the values.
pub fn parse_feature(parts: &[&str], templates: &[Template], vocab: &mut Vocab) -> Result<Feature> {
    let bad = || Error::Parse(format!("bad feature `{}`", parts.join(" ")));
    let (name, vals) = parts.split_first().ok_or_else(bad)?;
    let k = templates.iter().position(|t| t.name == *name).ok_or_else(bad)?;
    if vals.len() != templates[k].atoms.len() {
        return Err(bad());
    }
    let mut values = [NULL; MAX_ATOMS];
    for (v, s) in values.iter_mut().zip(vals) {
        *v = vocab.intern(s);
    }
    Ok(Feature { template: k as u16, values })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transition::LcAction;

    fn tree() -> DepTree {
        let mut t = DepTree::from_heads(&["DET", "NOUN", "VERB"], &[2, 3, 0]);
        for (tok, w) in t.tokens.iter_mut().zip(["the", "dog", "barks"]) {
            tok.form = w.to_string();
        }
        t
    }

    fn values(c: &impl Featurized, set: FeatureSet, system: SystemKind) -> (Vocab, Vec<(String, Feature)>) {
        let mut vocab = Vocab::default();
        let sent = Sentence::interned(&tree(), &mut vocab);
        let ts = templates(system, set);
        let mut out = Vec::new();
        extract(&c.context(), &sent, ts, &mut out);
        let named = out.iter().map(|f| (render(f, ts, &vocab), *f)).collect();
        (vocab, named)
    }

    #[test]
    fn template_counts() {
        assert_eq!(templates(SystemKind::LeftCorner, FeatureSet::Full).len(), 54);
        assert_eq!(
            templates(SystemKind::LeftCorner, FeatureSet::Full).len(),
            templates(SystemKind::LeftCorner, FeatureSet::Limited).len() + 8
        );
        let mut all: Vec<&str> = LC_BASE.iter().chain(&LC_EXTRA).copied().collect();
        all.sort();
        all.dedup();
        assert_eq!(all.len(), 54);
    }

    #[test]
    fn limited_templates_never_read_past_q0() {
        for t in templates(SystemKind::LeftCorner, FeatureSet::Limited) {
            assert!(t.atoms.iter().all(|a| !matches!(a.addr, Addr::Q1 | Addr::Q2)), "{}", t.name);
        }
        for t in &LC_EXTRA {
            assert!(t.contains("q1") || t.contains("q2"));
        }
    }

    #[test]
    fn empty_stack_only_fires_q0() {
        let c = LcConfig::new(4, true);
        let (vocab, feats) = values(&c, FeatureSet::Limited, SystemKind::LeftCorner);
        for (s, f) in feats {
            let uses_q0 = s.split(' ').next().unwrap().contains("q0");
            let non_null = f.values.iter().any(|&v| v != NULL);
            assert_eq!(non_null, uses_q0, "{s}");
        }
        assert_eq!(vocab.lookup("the"), 2);
    }

    #[test]
    fn limited_is_a_subset_of_full() {
        let c = LcConfig::new(4, true).apply(LcAction::Shift).unwrap();
        let (_, full) = values(&c, FeatureSet::Full, SystemKind::LeftCorner);
        let (_, limited) = values(&c, FeatureSet::Limited, SystemKind::LeftCorner);
        let full: Vec<String> = full.into_iter().map(|x| x.0).collect();
        assert!(limited.iter().all(|(s, _)| full.contains(s)));
    }

    #[test]
    fn reduce_mode_puts_the_top_in_q0() {
        // the dog: Shift the, LeftPred, Shift dog -> reduce mode with dog complete on top.
        let c = LcConfig::new(4, true);
        let c = c.apply(LcAction::Shift).unwrap().apply(LcAction::LeftPred).unwrap();
        let c = c.apply(LcAction::Shift).unwrap();
        let (_, feats) = values(&c, FeatureSet::Full, SystemKind::LeftCorner);
        let get = |name: &str| feats.iter().find(|(s, _)| s.starts_with(&format!("{name} "))).unwrap().0.clone();
        assert_eq!(get("q0.w"), "q0.w dog");
        assert_eq!(get("s0.l.w"), "s0.l.w the");
        assert_eq!(get("s0.p.w"), "s0.p.w <null>");
        assert_eq!(get("q0.t+q1.t"), "q0.t+q1.t NOUN VERB");
    }

    #[test]
    fn spine_relatives() {
        // Build barks -> x after reading "dog barks" as a right prediction.
        let c = LcConfig::new(4, true).apply(LcAction::Shift).unwrap();
        let c = c.apply(LcAction::RightPred).unwrap();
        let ctx = c.context();
        assert_eq!(ctx.slots[0].p, Some(1));
        assert_eq!(ctx.slots[0].gp, None);
        assert_eq!(ctx.slots[3].node, Some(2));
    }

    #[test]
    fn arc_standard_context_reads_children() {
        let c = ArcStandardConfig::new(4, true);
        let c = c.apply(crate::transition::ArcStandardAction::Shift).unwrap();
        let c = c.apply(crate::transition::ArcStandardAction::Shift).unwrap();
        let c = c.apply(crate::transition::ArcStandardAction::LeftArc).unwrap();
        let ctx = c.context();
        assert_eq!(ctx.slots[0].node, Some(2));
        assert_eq!(ctx.slots[0].l, Some(1));
        assert_eq!(ctx.slots[1].node, None);
        assert_eq!(ctx.slots[3].node, Some(3));
    }

    #[test]
    fn rendering_round_trips() {
        let c = LcConfig::new(4, true).apply(LcAction::Shift).unwrap();
        let (vocab, feats) = values(&c, FeatureSet::Full, SystemKind::LeftCorner);
        let ts = templates(SystemKind::LeftCorner, FeatureSet::Full);
        let mut v2 = vocab.clone();
        for (s, f) in feats {
            let parts: Vec<&str> = s.split(' ').collect();
            assert_eq!(parse_feature(&parts, ts, &mut v2).unwrap(), f);
        }
        assert_eq!(v2, vocab);
    }
}
