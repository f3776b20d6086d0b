//! Dependency corpora: CoNLL I/O, projectivity and tree transformations.
//!
//! Heads use the CoNLL convention: token positions are 1-based and head 0
//! marks attachment to the (virtual) root. After [`append_root`] the
//! artificial root `$` is an explicit final token and the old root points
//! at it.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// The 17 universal POS tags.
pub const UD_TAGS: [&str; 17] = [
    "ADJ", "ADP", "ADV", "AUX", "CONJ", "DET", "INTJ", "NOUN", "NUM", "PART", "PRON", "PROPN", "PUNCT", "SCONJ", "SYM",
    "VERB", "X",
];

/// Tags treated as function words by the parameter constraints.
pub const FUNCTION_WORD_TAGS: [&str; 6] = ["ADP", "AUX", "CONJ", "DET", "PART", "SCONJ"];

/// Punctuation tags of the universal tagset.
pub const UD_PUNCT_TAGS: [&str; 1] = ["PUNCT"];

/// Form and tag of the artificial root token.
pub const ROOT_SYMBOL: &str = "$";

/// One token of a dependency tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    pub form: String,
    pub pos: String,
    /// Head position, 0 for the root attachment.
    pub head: usize,
}

impl Token {
    pub fn new(form: impl Into<String>, pos: impl Into<String>, head: usize) -> Self {
        Token { form: form.into(), pos: pos.into(), head }
    }
}

/// A dependency tree over a tagged sentence.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DepTree {
    pub tokens: Vec<Token>,
    /// Whether the last token is the artificial root `$`.
    pub rooted: bool,
}

/// Which CoNLL column supplies the POS tag.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PosColumn {
    /// Column 4 (CPOSTAG / UPOS).
    #[default]
    Coarse,
    /// Column 5 (POSTAG / XPOS).
    Fine,
}

/// A list of trees read from one file.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Corpus {
    pub sentences: Vec<DepTree>,
    pub pos_column: PosColumn,
    pub max_len: Option<usize>,
}

impl Corpus {
    /// Keeps sentences with at most `max_len` tokens (the artificial root not counted).
    pub fn filter_max_len(mut self, max_len: usize) -> Self {
        self.sentences.retain(|t| t.n_words() <= max_len);
        self.max_len = Some(max_len);
        self
    }
}

impl DepTree {
    /// Builds a tree from tags and heads (`heads[i]` is the head of token `i + 1`).
    pub fn from_heads<S: AsRef<str>>(tags: &[S], heads: &[usize]) -> Self {
        assert_eq!(tags.len(), heads.len());
        let tokens = tags.iter().zip(heads).map(|(t, &h)| Token::new("", t.as_ref(), h)).collect();
        DepTree { tokens, rooted: false }
    }

    /// Number of tokens, including `$` when present.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Number of real words (excluding `$`).
    pub fn n_words(&self) -> usize {
        self.tokens.len() - usize::from(self.rooted)
    }

    /// Heads indexed by position; slot 0 is unused and set to 0.
    pub fn heads(&self) -> Vec<usize> {
        std::iter::once(0).chain(self.tokens.iter().map(|t| t.head)).collect()
    }

    /// Tags indexed by position; slot 0 is empty.
    pub fn tags(&self) -> Vec<&str> {
        std::iter::once("").chain(self.tokens.iter().map(|t| t.pos.as_str())).collect()
    }

    /// Forms indexed by position; slot 0 is empty.
    pub fn forms(&self) -> Vec<&str> {
        std::iter::once("").chain(self.tokens.iter().map(|t| t.form.as_str())).collect()
    }

    /// The token attached to the root (to `$` when rooted).
    pub fn root(&self) -> usize {
        let target = if self.rooted { self.len() } else { 0 };
        self.tokens.iter().position(|t| t.head == target).map_or(0, |i| i + 1)
    }

    /// Arcs (head, dependent), including the arc from `$` when rooted.
    pub fn arcs(&self) -> Vec<(usize, usize)> {
        self.tokens.iter().enumerate().filter(|(_, t)| t.head != 0).map(|(i, t)| (t.head, i + 1)).collect()
    }

    /// Checks the single-rooted tree invariants.
    pub fn validate(&self) -> std::result::Result<(), String> {
        validate_heads(&self.heads(), self.rooted)
    }
}

fn validate_heads(heads: &[usize], rooted: bool) -> std::result::Result<(), String> {
    let n = heads.len() - 1;
    let mut roots = 0;
    for (d, &h) in heads.iter().enumerate().skip(1) {
        if h > n {
            return Err(format!("token {d} has head {h} out of range"));
        }
        if h == d {
            return Err(format!("token {d} heads itself"));
        }
        if h == 0 {
            roots += 1;
        }
    }
    if rooted {
        if n == 0 || heads[n] != 0 {
            return Err("artificial root must be the last token with head 0".into());
        }
        if heads[1..n].iter().filter(|&&h| h == n).count() != 1 {
            return Err("artificial root must have exactly one dependent".into());
        }
    } else if n > 0 && roots != 1 {
        return Err(format!("expected one root, found {roots}"));
    }
    for d in 1..=n {
        let mut cur = d;
        let mut steps = 0;
        while heads[cur] != 0 {
            cur = heads[cur];
            steps += 1;
            if steps > n {
                return Err(format!("cycle through token {d}"));
            }
        }
    }
    Ok(())
}

/// Children lists indexed by position; slot 0 holds the root children.
pub fn children(heads: &[usize]) -> Vec<Vec<usize>> {
    let mut ch = vec![Vec::new(); heads.len()];
    for (d, &h) in heads.iter().enumerate().skip(1) {
        ch[h].push(d);
    }
    ch
}

/// Reads a CoNLL-X / CoNLL-U document.
pub fn parse_conll(text: &str, pos_column: PosColumn) -> Result<Corpus> {
    let mut sentences = Vec::new();
    let mut block: Vec<(usize, Vec<&str>)> = Vec::new();
    let col = match pos_column {
        PosColumn::Coarse => 3,
        PosColumn::Fine => 4,
    };
    let flush = |block: &mut Vec<(usize, Vec<&str>)>, sentences: &mut Vec<DepTree>| -> Result<()> {
        if block.is_empty() {
            return Ok(());
        }
        let mut tokens = Vec::with_capacity(block.len());
        for (k, (line, cols)) in block.iter().enumerate() {
            let id: usize =
                cols[0].parse().map_err(|_| Error::Format { line: *line, msg: format!("bad ID `{}`", cols[0]) })?;
            if id != k + 1 {
                return Err(Error::Format { line: *line, msg: format!("expected ID {}, found {id}", k + 1) });
            }
            let head: usize =
                cols[6].parse().map_err(|_| Error::Format { line: *line, msg: format!("bad HEAD `{}`", cols[6]) })?;
            tokens.push(Token::new(cols[1], cols[col], head));
        }
        let tree = DepTree { tokens, rooted: false };
        tree.validate().map_err(|msg| Error::InvalidTree { sentence: sentences.len(), msg })?;
        sentences.push(tree);
        block.clear();
        Ok(())
    };
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            flush(&mut block, &mut sentences)?;
            continue;
        }
        if line.starts_with('#') {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() < 10 {
            return Err(Error::Format { line: i + 1, msg: format!("expected 10 columns, found {}", cols.len()) });
        }
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        block.push((i + 1, cols));
    }
    flush(&mut block, &mut sentences)?;
    Ok(Corpus { sentences, pos_column, max_len: None })
}

/// Writes trees in 10-column CoNLL format. The artificial root is not written.
pub fn write_conll(trees: &[DepTree]) -> String {
    let mut out = String::new();
    for tree in trees {
        let n = tree.n_words();
        for (i, t) in tree.tokens.iter().take(n).enumerate() {
            let head = if tree.rooted && t.head == n + 1 { 0 } else { t.head };
            let form = if t.form.is_empty() { "_" } else { &t.form };
            out.push_str(&format!("{}\t{form}\t_\t{}\t{}\t_\t{head}\t_\t_\t_\n", i + 1, t.pos, t.pos));
        }
        out.push('\n');
    }
    out
}

/// Removes tokens tagged with `punct_tags`, reattaching their children to
/// the closest non-punctuation ancestor.
pub fn strip_punctuation(tree: &DepTree, punct_tags: &[&str]) -> DepTree {
    let heads = tree.heads();
    let n = tree.len();
    let is_punct = |i: usize| i >= 1 && i <= n && punct_tags.contains(&tree.tokens[i - 1].pos.as_str());
    let mut new_index = vec![0usize; n + 1];
    let mut next = 0;
    for (i, slot) in new_index.iter_mut().enumerate().skip(1) {
        if !is_punct(i) {
            next += 1;
            *slot = next;
        }
    }
    let mut tokens = Vec::with_capacity(next);
    for i in 1..=n {
        if is_punct(i) {
            continue;
        }
        let mut h = heads[i];
        while h != 0 && is_punct(h) {
            h = heads[h];
        }
        let mut t = tree.tokens[i - 1].clone();
        t.head = new_index[h];
        tokens.push(t);
    }
    // A removed punctuation root can leave several roots; keep the first as root.
    let target = if tree.rooted { tokens.len() } else { 0 };
    let root_positions: Vec<usize> = tokens
        .iter()
        .enumerate()
        .filter(|(i, t)| t.head == target && !(tree.rooted && *i + 1 == tokens.len()))
        .map(|(i, _)| i + 1)
        .collect();
    if root_positions.len() > 1 {
        let first = root_positions[0];
        for &r in &root_positions[1..] {
            tokens[r - 1].head = first;
        }
    }
    DepTree { tokens, rooted: tree.rooted }
}

/// True iff `d` is dominated by `h` (reflexively) in `heads`.
fn dominates(heads: &[usize], h: usize, mut d: usize) -> bool {
    loop {
        if d == h {
            return true;
        }
        if d == 0 {
            return false;
        }
        d = heads[d];
    }
}

/// Heads with the root arc made explicit from position n+1.
fn closed_heads(tree: &DepTree) -> Vec<usize> {
    let mut heads = tree.heads();
    if !tree.rooted {
        let virt = heads.len();
        for h in heads.iter_mut().skip(1) {
            if *h == 0 {
                *h = virt;
            }
        }
        heads.push(0);
    }
    heads
}

/// Arcs (head, dependent) of `heads` that cover a token not dominated by the head.
fn nonprojective_arcs(heads: &[usize]) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for d in 1..heads.len() {
        let h = heads[d];
        if h == 0 {
            continue;
        }
        let (lo, hi) = if h < d { (h, d) } else { (d, h) };
        if (lo + 1..hi).any(|k| !dominates(heads, h, k)) {
            out.push((h, d));
        }
    }
    out
}

/// True iff no two arcs cross, counting the root arc from the end of the sentence.
pub fn is_projective(tree: &DepTree) -> bool {
    nonprojective_arcs(&closed_heads(tree)).is_empty()
}

/// Lifts non-projective arcs (shortest first) until the tree is projective.
pub fn projectivize(tree: &DepTree) -> DepTree {
    let mut heads = closed_heads(tree);
    loop {
        let bad = nonprojective_arcs(&heads);
        let Some(&(h, d)) = bad.iter().min_by_key(|&&(h, d)| (h.abs_diff(d), d.min(h), d)) else {
            break;
        };
        heads[d] = heads[h];
    }
    let mut out = tree.clone();
    let virt = tree.len() + 1;
    for (i, t) in out.tokens.iter_mut().enumerate() {
        let h = heads[i + 1];
        t.head = if !tree.rooted && h == virt { 0 } else { h };
    }
    out
}

/// Appends the artificial root `$` after the last token.
pub fn append_root(tree: &DepTree) -> Result<DepTree> {
    if tree.rooted {
        return Err(Error::RootAlreadyAppended);
    }
    let n = tree.len();
    let mut out = tree.clone();
    for t in &mut out.tokens {
        if t.head == 0 {
            t.head = n + 1;
        }
    }
    out.tokens.push(Token::new(ROOT_SYMBOL, ROOT_SYMBOL, 0));
    out.rooted = true;
    Ok(out)
}

/// Removes the artificial root, restoring head 0 for its dependent.
pub fn remove_root(tree: &DepTree) -> DepTree {
    if !tree.rooted {
        return tree.clone();
    }
    let n = tree.len();
    let mut out = tree.clone();
    out.tokens.pop();
    for t in &mut out.tokens {
        if t.head == n {
            t.head = 0;
        }
    }
    out.rooted = false;
    out
}

/// Randomly permutes each head among its children and linearizes depth-first.
pub fn random_reorder(tree: &DepTree, seed: u64) -> DepTree {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_reorder_with(tree, &mut rng)
}

pub(crate) fn random_reorder_with<R: rand::Rng>(tree: &DepTree, rng: &mut R) -> DepTree {
    let base = remove_root(tree);
    let heads = base.heads();
    let ch = children(&heads);
    let mut order = Vec::with_capacity(base.len());
    fn visit<R: rand::Rng>(h: usize, ch: &[Vec<usize>], rng: &mut R, order: &mut Vec<usize>) {
        let mut items: Vec<usize> = std::iter::once(h).chain(ch[h].iter().copied()).collect();
        items.shuffle(rng);
        for it in items {
            if it == h {
                order.push(h);
            } else {
                visit(it, ch, rng, order);
            }
        }
    }
    for &r in &ch[0] {
        visit(r, &ch, rng, &mut order);
    }
    let mut new_pos = vec![0usize; heads.len()];
    for (k, &old) in order.iter().enumerate() {
        new_pos[old] = k + 1;
    }
    let tokens = order
        .iter()
        .map(|&old| {
            let mut t = base.tokens[old - 1].clone();
            t.head = new_pos[heads[old]];
            t
        })
        .collect();
    let out = DepTree { tokens, rooted: false };
    if tree.rooted {
        append_root(&out).expect("unrooted by construction")
    } else {
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn conll(lines: &[&str]) -> String {
        lines.iter().map(|l| l.replace(' ', "\t") + "\n").collect()
    }

    fn fig_nonproj() -> DepTree {
        // Mary met the senator yesterday who attacked the reporter
        DepTree::from_heads(&["N"; 9], &[2, 0, 4, 2, 2, 4, 6, 9, 7])
    }

    #[test]
    fn parses_minimal_block() {
        let text = conll(&["1 dogs _ NOUN NNS _ 2 nsubj _ _", "2 run _ VERB VBP _ 0 root _ _"]);
        let c = parse_conll(&text, PosColumn::Coarse).unwrap();
        assert_eq!(c.sentences.len(), 1);
        let t = &c.sentences[0];
        assert_eq!(t.arcs(), vec![(2, 1)]);
        assert_eq!(t.root(), 2);
        assert_eq!(t.tokens[0].pos, "NOUN");
        let fine = parse_conll(&text, PosColumn::Fine).unwrap();
        assert_eq!(fine.sentences[0].tokens[0].pos, "NNS");
    }

    #[test]
    fn skips_multiword_and_comments() {
        let text = conll(&[
            "# sent_id = 1",
            "1 a _ DET _ _ 2 _ _ _",
            "2-3 bc _ _ _ _ _ _ _ _",
            "2 b _ NOUN _ _ 0 _ _ _",
            "2.1 e _ X _ _ _ _ _ _",
            "3 c _ VERB _ _ 2 _ _ _",
        ]);
        let c = parse_conll(&text, PosColumn::Coarse).unwrap();
        assert_eq!(c.sentences[0].len(), 3);
    }

    #[test]
    fn rejects_cycles_and_bad_lines() {
        let text = conll(&["1 a _ X _ _ 2 _ _ _", "2 b _ X _ _ 1 _ _ _"]);
        assert!(matches!(parse_conll(&text, PosColumn::Coarse), Err(Error::InvalidTree { sentence: 0, .. })));
        let bad = "1\ta\t_\n";
        assert!(matches!(parse_conll(bad, PosColumn::Coarse), Err(Error::Format { line: 1, .. })));
    }

    #[test]
    fn conll_roundtrip() {
        let t = DepTree { tokens: vec![Token::new("dogs", "NOUN", 2), Token::new("run", "VERB", 0)], rooted: false };
        let back = parse_conll(&write_conll(std::slice::from_ref(&t)), PosColumn::Coarse).unwrap();
        assert_eq!(back.sentences, vec![t]);
    }

    #[test]
    fn strips_punctuation() {
        // N <- V -> P (leaf)
        let t = DepTree::from_heads(&["NOUN", "VERB", "PUNCT"], &[2, 0, 2]);
        let s = strip_punctuation(&t, &UD_PUNCT_TAGS);
        assert_eq!(s.heads(), vec![0, 2, 0]);
        // V -> P -> N
        let t = DepTree::from_heads(&["VERB", "PUNCT", "NOUN"], &[0, 1, 2]);
        let s = strip_punctuation(&t, &UD_PUNCT_TAGS);
        assert_eq!(s.heads(), vec![0, 0, 1]);
        let t = DepTree::from_heads(&["PUNCT", "PUNCT"], &[0, 1]);
        assert!(strip_punctuation(&t, &UD_PUNCT_TAGS).is_empty());
    }

    #[test]
    fn projectivity() {
        assert!(is_projective(&DepTree::from_heads(&["X"; 4], &[2, 0, 4, 2])));
        assert!(!is_projective(&fig_nonproj()));
        assert!(is_projective(&DepTree::from_heads(&["X"], &[0])));
        // an arc crossing the root attachment
        assert!(!is_projective(&DepTree::from_heads(&["X"; 3], &[3, 0, 2])));
        assert!(is_projective(&DepTree::from_heads(&["X"; 3], &[0, 3, 1])));
    }

    #[test]
    fn projectivize_paper_example() {
        let p = projectivize(&fig_nonproj());
        let mut expect = fig_nonproj().heads();
        expect[6] = 2;
        assert_eq!(p.heads(), expect);
        assert!(is_projective(&p));
        let proj = DepTree::from_heads(&["X"; 4], &[2, 0, 4, 2]);
        assert_eq!(projectivize(&proj), proj);
    }

    #[test]
    fn append_root_once() {
        let t = DepTree::from_heads(&["X", "Y"], &[2, 0]);
        let r = append_root(&t).unwrap();
        assert_eq!(r.arcs(), vec![(2, 1), (3, 2)]);
        assert!(r.validate().is_ok());
        assert!(matches!(append_root(&r), Err(Error::RootAlreadyAppended)));
        assert_eq!(remove_root(&r), t);
    }

    #[test]
    fn reorder_keeps_structure() {
        let t = DepTree::from_heads(&["A", "B", "C", "D", "E"], &[2, 0, 4, 2, 4]);
        for seed in 0..50 {
            let r = random_reorder(&t, seed);
            assert!(is_projective(&r));
            assert!(r.validate().is_ok());
            let mut tags: Vec<_> = r.tokens.iter().map(|x| x.pos.clone()).collect();
            tags.sort();
            assert_eq!(tags, vec!["A", "B", "C", "D", "E"]);
            // head tag of every tag is preserved
            let tag_of =
                |tree: &DepTree, i: usize| if i == 0 { "ROOT".to_string() } else { tree.tokens[i - 1].pos.clone() };
            for tok in &r.tokens {
                let orig = t.tokens.iter().find(|x| x.pos == tok.pos).unwrap();
                assert_eq!(tag_of(&r, tok.head), tag_of(&t, orig.head));
            }
        }
        assert_eq!(random_reorder(&t, 7), random_reorder(&t, 7));
        let single = DepTree::from_heads(&["A"], &[0]);
        assert_eq!(random_reorder(&single, 3), single);
    }
}
