//! Supervised transition-based parsing with beam search.
//!
//! Every system is scored by a linear model over feature templates conjoined
//! with the action. Training uses the max-violation perceptron with weight
//! averaging; decoding can discard configurations whose stack depth exceeds
//! a bound.

pub mod features;

use std::fmt;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rustc_hash::FxHashMap;

use crate::analysis::{prepare_tree, DepthMeasure};
use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::transition::{ArcEagerConfig, ArcStandardConfig, LcConfig, Phase, SystemKind, TransitionSystem};
use crate::treebank::DepTree;
pub use features::{extract, templates, Feature, FeatureContext, FeatureSet, Featurized, Sentence, Template, Vocab};

/// Upper bound on the number of actions of any system.
pub const MAX_ACTIONS: usize = 6;

/// Per-feature weights, one per action index.
pub type Weights = FxHashMap<Feature, [f64; MAX_ACTIONS]>;

/// A stack depth bound applied while decoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DepthBound {
    pub max: usize,
    /// `Raw` checks every configuration, `DepthRe` only those after a reduce
    /// action and `DepthSh` only those after a shift.
    pub measure: DepthMeasure,
}

impl DepthBound {
    fn allows<S: TransitionSystem>(&self, a: S::Action, next: &S) -> bool {
        let checked = match self.measure {
            DepthMeasure::Raw => true,
            DepthMeasure::DepthRe => S::phase(a) == Phase::AfterReduce,
            DepthMeasure::DepthSh => S::phase(a) == Phase::AfterShift,
        };
        !checked || next.depth() <= self.max
    }
}

/// Beam width and optional depth bound for decoding.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct DecodeOptions {
    pub beam: usize,
    pub bound: Option<DepthBound>,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions { beam: 8, bound: None }
    }
}

/// A beam entry.
#[derive(Clone, Debug)]
struct BeamState<S> {
    config: S,
    score: f64,
    /// Action indices in [`TransitionSystem::actions`] order.
    history: Vec<u8>,
}

fn action_scores(w: &Weights, feats: &[Feature]) -> [f64; MAX_ACTIONS] {
    let mut s = [0.0; MAX_ACTIONS];
    for f in feats {
        if let Some(v) = w.get(f) {
            for (a, x) in s.iter_mut().zip(v) {
                *a += x;
            }
        }
    }
    s
}

/// One beam step. Terminal states are carried over unchanged.
///
/// Candidates are ranked by score; ties keep generation order, that is the
/// order of the parent in the beam and then the action order.
fn expand<S: Featurized>(
    beam: &[BeamState<S>],
    sent: &Sentence,
    w: &Weights,
    ts: &[Template],
    width: usize,
    bound: Option<DepthBound>,
) -> Vec<BeamState<S>> {
    let mut feats = Vec::new();
    let mut next = Vec::new();
    for st in beam {
        if st.config.is_terminal() {
            next.push(st.clone());
            continue;
        }
        extract(&st.config.context(), sent, ts, &mut feats);
        let scores = action_scores(w, &feats);
        for (k, &a) in S::actions().iter().enumerate() {
            if !st.config.is_valid(a) {
                continue;
            }
            let Ok(c) = st.config.apply(a) else { continue };
            if bound.is_some_and(|b| !b.allows(a, &c)) {
                continue;
            }
            let mut history = st.history.clone();
            history.push(k as u8);
            next.push(BeamState { config: c, score: st.score + scores[S::action_index(a)], history });
        }
    }
    next.sort_by(|a, b| b.score.total_cmp(&a.score));
    next.truncate(width);
    next
}

/// Beam search over `S`; returns heads with `$` at the last position.
pub fn beam_search<S: Featurized>(sent: &Sentence, w: &Weights, ts: &[Template], opts: &DecodeOptions) -> Vec<usize> {
    let init = BeamState { config: S::initial(sent.len(), true), score: 0.0, history: Vec::new() };
    let mut beam = vec![init];
    while !beam.iter().all(|s| s.config.is_terminal()) {
        let next = expand(&beam, sent, w, ts, opts.beam.max(1), opts.bound);
        if next.is_empty() {
            // Every continuation breaks the bound: repair the best partial state.
            log::debug!("beam exhausted after {} steps", beam[0].history.len());
            break;
        }
        beam = next;
    }
    let best = beam.iter().find(|s| s.config.is_terminal()).unwrap_or(&beam[0]);
    best.config.output_heads()
}

/// Features of every step along an action sequence, with the action index.
fn trajectory<S: Featurized>(sent: &Sentence, ts: &[Template], history: &[u8]) -> Vec<(Vec<Feature>, usize)> {
    let mut c = S::initial(sent.len(), true);
    let mut out = Vec::with_capacity(history.len());
    for &k in history {
        let a = S::actions()[k as usize];
        let mut feats = Vec::new();
        extract(&c.context(), sent, ts, &mut feats);
        out.push((feats, S::action_index(a)));
        c = c.apply(a).expect("replayed actions are valid");
    }
    out
}

/// Perceptron weights with the running sums needed for averaging.
#[derive(Clone, Debug, Default)]
struct Averaged {
    w: Weights,
    /// Sum of each update scaled by the number of instances seen before it.
    u: Weights,
    /// Instances seen so far.
    seen: u64,
}

impl Averaged {
    fn add(&mut self, f: Feature, a: usize, d: f64) {
        self.w.entry(f).or_insert([0.0; MAX_ACTIONS])[a] += d;
        self.u.entry(f).or_insert([0.0; MAX_ACTIONS])[a] += d * self.seen as f64;
    }

    /// Mean of the weights after each instance.
    fn average(&self) -> Weights {
        let t = self.seen.max(1) as f64;
        let mut out = Weights::default();
        for (f, w) in &self.w {
            let u = &self.u[f];
            let mut v = [0.0; MAX_ACTIONS];
            for a in 0..MAX_ACTIONS {
                v[a] = w[a] - u[a] / t;
            }
            if v.iter().any(|&x| x != 0.0) {
                out.insert(*f, v);
            }
        }
        out
    }
}

/// Runs the beam against the gold sequence and updates at the prefix of
/// maximum violation. Returns whether an update happened.
fn train_sentence<S: Featurized>(
    sent: &Sentence,
    gold: &[u8],
    model: &mut Averaged,
    ts: &[Template],
    width: usize,
) -> bool {
    let mut beam = vec![BeamState { config: S::initial(sent.len(), true), score: 0.0, history: Vec::new() }];
    let mut gold_cfg = S::initial(sent.len(), true);
    let mut gold_score = 0.0;
    let mut feats = Vec::new();
    // (violation, best history) at the worst prefix so far.
    let mut worst: Option<(f64, Vec<u8>)> = None;
    for (t, &k) in gold.iter().enumerate() {
        extract(&gold_cfg.context(), sent, ts, &mut feats);
        let a = S::actions()[k as usize];
        gold_score += action_scores(&model.w, &feats)[S::action_index(a)];
        gold_cfg = gold_cfg.apply(a).expect("oracle actions are valid");
        beam = expand(&beam, sent, &model.w, ts, width, None);
        let Some(best) = beam.first() else { break };
        let violation = best.score - gold_score;
        if best.history[..] != gold[..=t] && violation >= 0.0 && worst.as_ref().is_none_or(|w| violation > w.0) {
            worst = Some((violation, best.history.clone()));
        }
    }
    model.seen += 1;
    let Some((_, pred)) = worst else { return false };
    let mut delta: FxHashMap<(Feature, usize), f64> = FxHashMap::default();
    for (fs, a) in trajectory::<S>(sent, ts, &gold[..pred.len()]) {
        for f in fs {
            *delta.entry((f, a)).or_default() += 1.0;
        }
    }
    for (fs, a) in trajectory::<S>(sent, ts, &pred) {
        for f in fs {
            *delta.entry((f, a)).or_default() -= 1.0;
        }
    }
    // Apply in a fixed order so that floating point sums are reproducible.
    let mut delta: Vec<_> = delta.into_iter().filter(|(_, d)| *d != 0.0).collect();
    delta.sort_by_key(|x| x.0);
    // The update happens before this instance is counted as seen.
    model.seen -= 1;
    for ((f, a), d) in delta {
        model.add(f, a, d);
    }
    model.seen += 1;
    true
}

/// Gold action indices from the oracle of `S`.
fn gold_actions<S: TransitionSystem>(gold: &[usize]) -> Result<Vec<u8>> {
    let mut c = S::initial(gold.len() - 1, true);
    let mut out = Vec::new();
    while !c.is_terminal() {
        let a = c.oracle(gold)?;
        out.push(S::actions().iter().position(|&b| b == a).expect("listed action") as u8);
        c = c.apply(a)?;
    }
    Ok(out)
}

/// Settings of perceptron training.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PerceptronConfig {
    pub system: SystemKind,
    pub features: FeatureSet,
    pub beam: usize,
    pub epochs: usize,
    /// Seeds the per-epoch shuffling of the corpus.
    pub seed: u64,
}

impl Default for PerceptronConfig {
    fn default() -> Self {
        PerceptronConfig { system: SystemKind::LeftCorner, features: FeatureSet::Full, beam: 8, epochs: 10, seed: 1 }
    }
}

impl fmt::Display for PerceptronConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "system={}\tfeatures={}\tbeam={}\tepochs={}\tseed={}",
            self.system, self.features, self.beam, self.epochs, self.seed
        )
    }
}

/// A trained parser.
#[derive(Clone, Debug, PartialEq)]
pub struct Parser {
    pub system: SystemKind,
    pub features: FeatureSet,
    pub vocab: Vocab,
    pub weights: Weights,
}

fn action_names(system: SystemKind) -> Vec<&'static str> {
    fn names<S: TransitionSystem>() -> Vec<&'static str> {
        S::actions().iter().map(|&a| S::action_name(a)).collect()
    }
    match system {
        SystemKind::LeftCorner => names::<LcConfig>(),
        SystemKind::ArcStandard => names::<ArcStandardConfig>(),
        SystemKind::ArcEager => names::<ArcEagerConfig>(),
    }
}

fn action_slot(system: SystemKind, k: usize) -> usize {
    fn slot<S: TransitionSystem>(k: usize) -> usize {
        S::action_index(S::actions()[k])
    }
    match system {
        SystemKind::LeftCorner => slot::<LcConfig>(k),
        SystemKind::ArcStandard => slot::<ArcStandardConfig>(k),
        SystemKind::ArcEager => slot::<ArcEagerConfig>(k),
    }
}

impl Parser {
    /// A parser with all weights zero.
    pub fn zero(system: SystemKind, features: FeatureSet) -> Self {
        Parser { system, features, vocab: Vocab::default(), weights: Weights::default() }
    }

    fn templates(&self) -> &'static [Template] {
        templates(self.system, self.features)
    }

    /// Parses one sentence; input heads are ignored.
    ///
    /// Returns an unrooted tree with the input tokens and predicted heads.
    pub fn beam_decode(&self, tree: &DepTree, opts: &DecodeOptions) -> DepTree {
        let sent = Sentence::lookup(tree, &self.vocab);
        let ts = self.templates();
        let heads = match self.system {
            SystemKind::LeftCorner => beam_search::<LcConfig>(&sent, &self.weights, ts, opts),
            SystemKind::ArcStandard => beam_search::<ArcStandardConfig>(&sent, &self.weights, ts, opts),
            SystemKind::ArcEager => beam_search::<ArcEagerConfig>(&sent, &self.weights, ts, opts),
        };
        let root = sent.len();
        let mut out = tree.clone();
        out.tokens.truncate(root - 1);
        out.rooted = false;
        for (d, t) in out.tokens.iter_mut().enumerate() {
            let h = heads[d + 1];
            t.head = if h == root { 0 } else { h };
        }
        out
    }

    /// Parses a corpus, sentences in parallel under `exec`.
    pub fn parse_corpus(&self, corpus: &[DepTree], opts: &DecodeOptions, exec: Exec) -> Vec<DepTree> {
        exec.map(corpus, |t| self.beam_decode(t, opts))
    }

    /// Header lines followed by `key<TAB>weight` lines, keys sorted.
    ///
    /// A key is the action name, the template and its values, separated by spaces.
    pub fn to_text(&self, config: &PerceptronConfig) -> String {
        let ts = self.templates();
        let names = action_names(self.system);
        let mut s = String::new();
        let mut tags: Vec<&str> = Vec::new();
        for f in self.weights.keys() {
            let t = &ts[f.template as usize];
            for (i, atom) in t.name.split('+').enumerate() {
                if atom.ends_with(".t") {
                    tags.push(self.vocab.name(f.values[i]));
                }
            }
        }
        tags.sort_unstable();
        tags.dedup();
        s.push_str(&format!("#tagset\t{}\n", tags.join("\t")));
        let tnames: Vec<&str> = ts.iter().map(|t| t.name).collect();
        s.push_str(&format!("#templates\t{}\n", tnames.join("\t")));
        s.push_str(&format!("#config\t{config}\n"));
        let mut lines = Vec::new();
        for (f, w) in &self.weights {
            let key = features::render(f, ts, &self.vocab);
            for (k, name) in names.iter().enumerate() {
                let x = w[action_slot(self.system, k)];
                if x != 0.0 {
                    lines.push(format!("{name} {key}\t{x}"));
                }
            }
        }
        lines.sort();
        for l in lines {
            s.push_str(&l);
            s.push('\n');
        }
        s
    }

    /// Reads a weights file written by [`Parser::to_text`].
    pub fn from_text(text: &str) -> Result<(Parser, PerceptronConfig)> {
        let mut config = PerceptronConfig::default();
        let mut entries = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Format { line: no + 1, msg };
            if let Some(rest) = line.strip_prefix("#config\t") {
                for kv in rest.split('\t') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| err(format!("bad config entry `{kv}`")))?;
                    let num = |v: &str| v.parse::<u64>().map_err(|_| err(format!("bad number `{v}`")));
                    match k {
                        "system" => config.system = v.parse().map_err(|e: Error| err(e.to_string()))?,
                        "features" => config.features = v.parse().map_err(|e: Error| err(e.to_string()))?,
                        "beam" => config.beam = num(v)? as usize,
                        "epochs" => config.epochs = num(v)? as usize,
                        "seed" => config.seed = num(v)?,
                        _ => return Err(err(format!("unknown config key `{k}`"))),
                    }
                }
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                let (k, w) = line.rsplit_once('\t').ok_or_else(|| err("expected key<TAB>weight".into()))?;
                let w: f64 = w.parse().map_err(|_| err(format!("bad weight `{w}`")))?;
                entries.push((no + 1, k.to_string(), w));
            }
        }
        let mut p = Parser::zero(config.system, config.features);
        let names = action_names(p.system);
        let ts = p.templates();
        for (line, k, w) in entries {
            let err = |msg: String| Error::Format { line, msg };
            let parts: Vec<&str> = k.split(' ').collect();
            let (action, rest) = parts.split_first().ok_or_else(|| err("empty key".into()))?;
            let a = names.iter().position(|n| n == action).ok_or_else(|| err(format!("unknown action `{action}`")))?;
            let f = features::parse_feature(rest, ts, &mut p.vocab).map_err(|e| err(e.to_string()))?;
            p.weights.entry(f).or_insert([0.0; MAX_ACTIONS])[action_slot(p.system, a)] = w;
        }
        Ok((p, config))
    }
}

fn train_generic<S: Featurized>(corpus: &[DepTree], cfg: &PerceptronConfig) -> Result<Parser> {
    let ts = templates(cfg.system, cfg.features);
    let mut vocab = Vocab::default();
    let mut data = Vec::with_capacity(corpus.len());
    for (i, t) in corpus.iter().enumerate() {
        let t = prepare_tree(t)?;
        let gold =
            gold_actions::<S>(&t.heads()).map_err(|e| Error::InvalidTree { sentence: i + 1, msg: e.to_string() })?;
        data.push((Sentence::interned(&t, &mut vocab), gold));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..data.len()).collect();
    let mut model = Averaged::default();
    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut updates = 0;
        for &i in &order {
            let (sent, gold) = &data[i];
            updates += train_sentence::<S>(sent, gold, &mut model, ts, cfg.beam.max(1)) as usize;
        }
        log::info!("epoch {epoch}: {updates} updates over {} sentences", data.len());
    }
    Ok(Parser { system: cfg.system, features: cfg.features, vocab, weights: model.average() })
}

/// Trains a parser with the averaged max-violation perceptron.
///
/// Trees are projectivized and rooted first. Training is sequential and
/// fully determined by the configuration.
pub fn train_perceptron(corpus: &[DepTree], cfg: &PerceptronConfig) -> Result<Parser> {
    match cfg.system {
        SystemKind::LeftCorner => train_generic::<LcConfig>(corpus, cfg),
        SystemKind::ArcStandard => train_generic::<ArcStandardConfig>(corpus, cfg),
        SystemKind::ArcEager => train_generic::<ArcEagerConfig>(corpus, cfg),
    }
}
