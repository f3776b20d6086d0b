//! EM for the featurized DMV under constraints.
//!
//! The E-step collects expected counts under the constrained distribution
//! `q`: the DMV with masked events and optional length bias, summed over
//! the trees that the depth policy admits. The M-step fits the feature
//! weights to those counts by penalized L-BFGS. Normalizing `q` is never
//! needed since the constant cancels in the posterior.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::induction::constraints::{apply_constraints, ConstraintSet, Masks};
use crate::induction::features::{FeatureKey, LogLinearDmv, TEMPLATES};
use crate::lc_chart::{lc_expected_counts, lc_viterbi, DepthPolicy};
use crate::sbg::dmv::EStep;
use crate::sbg::{
    dmv_to_sbg, eisner_expected_counts, eisner_viterbi, DmvCounts, DmvParams, EventKey, SentenceGrammar, TagSet,
};
use crate::treebank::{remove_root, DepTree};

/// Starting point of training.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Init {
    #[default]
    Uniform,
    /// One E-step with attachment weights proportional to inverse distance.
    Harmonic,
}

impl FromStr for Init {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Init::Uniform),
            "harmonic" => Ok(Init::Harmonic),
            _ => Err(Error::Config(format!("unknown init `{s}`"))),
        }
    }
}

impl fmt::Display for Init {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Init::Uniform => "uniform",
            Init::Harmonic => "harmonic",
        })
    }
}

/// Training settings.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    pub init: Init,
    /// Stack depth bound `D`; `None` trains on all trees.
    pub depth: Option<usize>,
    /// Relaxation size `C` used with the depth bound.
    pub relax: usize,
    pub length_bias: Option<f64>,
    pub constraints: ConstraintSet,
    pub em_iterations: usize,
    pub lbfgs_iterations: u64,
    /// Gaussian prior variance of the weights.
    pub sigma2: f64,
    /// Stop when the objective changes by less than this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            init: Init::Uniform,
            depth: None,
            relax: 1,
            length_bias: None,
            constraints: ConstraintSet::default(),
            em_iterations: 50,
            lbfgs_iterations: 100,
            sigma2: 10.0,
            tolerance: 1e-6,
        }
    }
}

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| Error::Config(format!("bad value `{value}` for `{key}`")))
}

fn positive(key: &str, value: &str) -> Result<usize> {
    match parse_value(key, value)? {
        0 => Err(Error::Config(format!("`{key}` must be positive"))),
        x => Ok(x),
    }
}

impl TrainConfig {
    /// Keys accepted by [`TrainConfig::set`].
    pub const KEYS: [&'static str; 11] = [
        "init",
        "depth",
        "relax",
        "length_bias",
        "root",
        "function_words",
        "adp_head",
        "em_iterations",
        "lbfgs_iterations",
        "sigma2",
        "tolerance",
    ];

    /// Sets one option from its textual form; `none` clears optional values.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        match key {
            "init" => self.init = value.parse()?,
            "depth" if value == "none" => self.depth = None,
            "depth" => self.depth = Some(positive(key, value)?),
            "relax" => self.relax = positive(key, value)?,
            "length_bias" if value == "none" => self.length_bias = None,
            "length_bias" => self.length_bias = Some(parse_value(key, value)?),
            "root" => self.constraints.root = value.parse()?,
            "function_words" => self.constraints.function_words = parse_value(key, value)?,
            "adp_head" => self.constraints.adp_head = parse_value(key, value)?,
            "em_iterations" => self.em_iterations = parse_value(key, value)?,
            "lbfgs_iterations" => self.lbfgs_iterations = parse_value(key, value)?,
            "sigma2" => self.sigma2 = parse_value(key, value)?,
            "tolerance" => self.tolerance = parse_value(key, value)?,
            _ => return Err(Error::Config(format!("unknown key `{key}`"))),
        }
        Ok(())
    }

    /// The resolved settings as `key=value` pairs in [`TrainConfig::KEYS`] order.
    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let opt = |x: Option<String>| x.unwrap_or_else(|| "none".to_string());
        vec![
            ("init", self.init.to_string()),
            ("depth", opt(self.depth.map(|d| d.to_string()))),
            ("relax", self.relax.to_string()),
            ("length_bias", opt(self.length_bias.map(|b| b.to_string()))),
            ("root", self.constraints.root.to_string()),
            ("function_words", self.constraints.function_words.to_string()),
            ("adp_head", self.constraints.adp_head.to_string()),
            ("em_iterations", self.em_iterations.to_string()),
            ("lbfgs_iterations", self.lbfgs_iterations.to_string()),
            ("sigma2", self.sigma2.to_string()),
            ("tolerance", self.tolerance.to_string()),
        ]
    }

    /// The depth policy of the E-step; `None` uses the cubic chart.
    pub fn depth_policy(&self) -> Option<DepthPolicy> {
        self.depth.map(|d| DepthPolicy::new(d, self.relax))
    }
}

/// A training sentence: tag ids and compiled constraint masks.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub ids: Vec<usize>,
    pub masks: Masks,
}

/// Interns the tags of `trees` (ignoring `$`) and compiles their masks.
pub fn prepare(trees: &[DepTree], tags: &mut TagSet, cs: &ConstraintSet) -> Vec<Instance> {
    trees
        .iter()
        .map(|t| {
            let t = remove_root(t);
            let names: Vec<&str> = t.tokens.iter().map(|x| x.pos.as_str()).collect();
            Instance { ids: names.iter().map(|n| tags.intern(n)).collect(), masks: cs.compile(&names) }
        })
        .collect()
}

fn constrained_grammar(automata: &crate::sbg::Automata, inst: &Instance, length_bias: Option<f64>) -> SentenceGrammar {
    let mut g = SentenceGrammar::new(automata, &inst.ids);
    apply_constraints(&mut g, &inst.masks, length_bias);
    g
}

fn sentence_counts(g: &SentenceGrammar, depth: Option<DepthPolicy>) -> Option<(f64, Vec<f64>)> {
    match depth {
        Some(p) => lc_expected_counts(g, p),
        None => eisner_expected_counts(g),
    }
}

fn estep_with(
    insts: &[Instance],
    params: &DmvParams,
    cfg: &TrainConfig,
    exec: Exec,
    adjust: impl Fn(&mut SentenceGrammar) + Sync + Send,
) -> EStep {
    let automata = dmv_to_sbg(params);
    let nt = params.n_tags();
    let depth = cfg.depth_policy();
    exec.map_reduce(
        insts,
        || EStep { counts: DmvCounts::zeros(nt), loglik: 0.0, skipped: 0 },
        |inst| {
            let mut g = constrained_grammar(&automata, inst, cfg.length_bias);
            adjust(&mut g);
            let mut out = EStep { counts: DmvCounts::zeros(nt), loglik: 0.0, skipped: 0 };
            match sentence_counts(&g, depth) {
                Some((z, c)) => {
                    out.counts.add_sentence(&g, &c);
                    out.loglik = z;
                }
                None => out.skipped = 1,
            }
            out
        },
        |a, b| EStep { counts: a.counts.merge(b.counts), loglik: a.loglik + b.loglik, skipped: a.skipped + b.skipped },
    )
}

/// Expected counts and log marginal of the corpus under the constrained model.
pub fn constrained_estep(insts: &[Instance], params: &DmvParams, cfg: &TrainConfig, exec: Exec) -> EStep {
    estep_with(insts, params, cfg, exec, |_| {})
}

/// Counts of the harmonic E-step: uniform parameters with every
/// attachment between `i` and `j` weighted by `1 / |i - j|`.
pub fn harmonic_counts(insts: &[Instance], n_tags: usize, cfg: &TrainConfig, exec: Exec) -> EStep {
    estep_with(insts, &DmvParams::uniform(n_tags), cfg, exec, |g| {
        for ev in 0..g.n_events() {
            if let EventKey::Trans { h, dep, .. } = g.keys[ev] {
                if (h as usize) < g.m {
                    g.logw[ev] -= (h.abs_diff(dep) as f64).ln();
                }
            }
        }
    })
}

/// Harmonic initial parameters.
pub fn harmonic_init(insts: &[Instance], n_tags: usize, cfg: &TrainConfig, exec: Exec) -> DmvParams {
    let uniform = DmvParams::uniform(n_tags);
    DmvParams::from_counts(&harmonic_counts(insts, n_tags, cfg, exec).counts, &uniform)
}

/// Objective value of one EM iteration.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IterStats {
    pub iter: usize,
    /// Log marginal under `q` minus the weight penalty.
    pub objective: f64,
    pub skipped: usize,
}

/// A trained featurized DMV.
#[derive(Clone, Debug, PartialEq)]
pub struct Model {
    pub tags: TagSet,
    pub dmv: LogLinearDmv,
    pub weights: Vec<f64>,
    pub config: TrainConfig,
}

impl Model {
    pub fn params(&self) -> DmvParams {
        self.dmv.params(&self.weights)
    }

    /// Header lines (tagset, templates, config) followed by `key<TAB>weight` lines.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        s.push_str(&format!("#tagset\t{}\n", self.tags.tags.join("\t")));
        s.push_str(&format!("#templates\t{}\n", TEMPLATES.join("\t")));
        let cfg: Vec<String> = self.config.entries().into_iter().map(|(k, v)| format!("{k}={v}")).collect();
        s.push_str(&format!("#config\t{}\n", cfg.join("\t")));
        for (i, w) in self.weights.iter().enumerate() {
            s.push_str(&format!("{}\t{w}\n", self.dmv.space.key(i).render(&self.tags)));
        }
        s
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut tags = TagSet::default();
        let mut config = TrainConfig::default();
        let mut lines = Vec::new();
        for (no, line) in text.lines().enumerate() {
            let err = |msg: String| Error::Format { line: no + 1, msg };
            if let Some(rest) = line.strip_prefix("#tagset\t") {
                tags = TagSet::new(rest.split('\t'));
            } else if let Some(rest) = line.strip_prefix("#config\t") {
                for kv in rest.split('\t') {
                    let (k, v) = kv.split_once('=').ok_or_else(|| err(format!("bad config entry `{kv}`")))?;
                    config.set(k, v).map_err(|e| err(e.to_string()))?;
                }
            } else if line.starts_with('#') || line.trim().is_empty() {
                continue;
            } else {
                let (k, w) = line.split_once('\t').ok_or_else(|| err("expected key<TAB>weight".into()))?;
                let w: f64 = w.parse().map_err(|_| err(format!("bad weight `{w}`")))?;
                lines.push((no + 1, k.to_string(), w));
            }
        }
        let n_tags = tags.len();
        let dmv = LogLinearDmv::new(n_tags);
        let mut weights = vec![0.0; dmv.n_features()];
        for (line, k, w) in lines {
            let key = FeatureKey::parse(&k, &mut tags).map_err(|e| Error::Format { line, msg: e.to_string() })?;
            let i = dmv.space.get(&key).filter(|_| tags.len() == n_tags);
            let i = i.ok_or_else(|| Error::Format { line, msg: format!("unknown feature `{k}`") })?;
            weights[i] = w;
        }
        Ok(Model { tags, dmv, weights, config })
    }
}

/// A model with its per-iteration objective trace.
#[derive(Clone, Debug, PartialEq)]
pub struct Training {
    pub model: Model,
    pub history: Vec<IterStats>,
}

impl Training {
    /// Metrics log with lines `iter<TAB>objective<TAB>skipped`.
    pub fn metrics_tsv(&self) -> String {
        let mut s = String::from("iter\tobjective\tskipped\n");
        for h in &self.history {
            s.push_str(&format!("{}\t{:.6}\t{}\n", h.iter, h.objective, h.skipped));
        }
        s
    }
}

/// Runs EM with L-BFGS M-steps from the configured initialization.
pub fn train(insts: &[Instance], tags: TagSet, cfg: &TrainConfig, exec: Exec) -> Result<Training> {
    if insts.is_empty() {
        return Err(Error::AllSkipped);
    }
    let dmv = LogLinearDmv::new(tags.len());
    let mut w = vec![0.0; dmv.n_features()];
    if cfg.init == Init::Harmonic {
        let h = harmonic_counts(insts, tags.len(), cfg, exec);
        w = dmv.fit(&h.counts, &w, cfg.sigma2, cfg.lbfgs_iterations)?;
    }
    let penalty = |w: &[f64]| w.iter().map(|x| x * x).sum::<f64>() / (2.0 * cfg.sigma2);
    let mut history: Vec<IterStats> = Vec::new();
    for iter in 1..=cfg.em_iterations {
        let e = constrained_estep(insts, &dmv.params(&w), cfg, exec);
        if e.skipped == insts.len() {
            return Err(Error::AllSkipped);
        }
        let objective = e.loglik - penalty(&w);
        log::info!("iter {iter}: objective {objective:.6}, skipped {}", e.skipped);
        let converged = history.last().is_some_and(|p| (objective - p.objective).abs() < cfg.tolerance);
        history.push(IterStats { iter, objective, skipped: e.skipped });
        if converged {
            break;
        }
        w = dmv.fit(&e.counts, &w, cfg.sigma2, cfg.lbfgs_iterations)?;
    }
    Ok(Training { model: Model { tags, dmv, weights: w, config: cfg.clone() }, history })
}

/// Viterbi heads (CoNLL convention, 0 for the root) of a tag-id sentence.
///
/// `masks` and `depth` restrict decoding; both are off by default.
pub fn viterbi_heads(
    params: &DmvParams,
    ids: &[usize],
    masks: Option<&Masks>,
    depth: Option<DepthPolicy>,
) -> Option<Vec<usize>> {
    let automata = dmv_to_sbg(params);
    let mut g = SentenceGrammar::new(&automata, ids);
    if let Some(m) = masks {
        apply_constraints(&mut g, m, None);
    }
    let (_, heads) = match depth.filter(|p| p.max_depth.is_some()) {
        Some(p) => lc_viterbi(&g, p)?,
        None => eisner_viterbi(&g)?,
    };
    Some((1..g.m).map(|d| if heads[d] == g.m { 0 } else { heads[d] }).collect())
}

/// Decodes every instance; sentences without a parse fall back to a right-branching chain.
pub fn decode(params: &DmvParams, insts: &[Instance], exec: Exec) -> Vec<Vec<usize>> {
    exec.map(insts, |inst| {
        viterbi_heads(params, &inst.ids, None, None).unwrap_or_else(|| {
            let n = inst.ids.len();
            (1..=n).map(|i| if i == n { 0 } else { i + 1 }).collect()
        })
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::induction::constraints::RootConstraint;
    use crate::treebank::DepTree;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_corpus(rng: &mut ChaCha8Rng, n: usize, max_len: usize) -> Vec<DepTree> {
        let names = ["NOUN", "VERB", "DET", "ADJ"];
        (0..n)
            .map(|_| {
                let len = rng.random_range(1..=max_len);
                let tags: Vec<&str> = (0..len).map(|_| names[rng.random_range(0..names.len())]).collect();
                let heads: Vec<usize> = (1..=len).map(|i| if i == len { 0 } else { i + 1 }).collect();
                DepTree::from_heads(&tags, &heads)
            })
            .collect()
    }

    #[test]
    fn harmonic_on_two_token_sentences_is_one_em_step() {
        let trees = vec![DepTree::from_heads(&["A", "B"], &[2, 0]), DepTree::from_heads(&["B", "B"], &[0, 1])];
        let mut tags = TagSet::default();
        let cfg = TrainConfig::default();
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        let h = harmonic_init(&insts, tags.len(), &cfg, Exec::Sequential);
        let ids: Vec<Vec<usize>> = insts.iter().map(|i| i.ids.clone()).collect();
        let (p, _) = crate::sbg::em_step(&ids, &DmvParams::uniform(tags.len()), Exec::Sequential);
        assert!(h
            .attach
            .iter()
            .flatten()
            .flatten()
            .zip(p.attach.iter().flatten().flatten())
            .all(|(a, b)| a == b || (a - b).abs() < 1e-12));
    }

    #[test]
    fn harmonic_favors_adjacent_attachment() {
        let trees = vec![DepTree::from_heads(&["A", "B", "C"], &[2, 0, 2])];
        let mut tags = TagSet::default();
        let cfg = TrainConfig::default();
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        let p = harmonic_init(&insts, 3, &cfg, Exec::Sequential);
        let (a, b, c) = (0, 1, 2);
        let (l, r) = (0, 1);
        // B takes A at distance one, C takes A at distance two; same on the right.
        let e = harmonic_counts(&insts, 3, &cfg, Exec::Sequential).counts;
        assert!(e.attach[l][b][a] > e.attach[l][c][a]);
        assert!(e.attach[r][a][b] > e.attach[r][a][c]);
        assert_eq!(p, harmonic_init(&insts, 3, &cfg, Exec::Sequential));
    }

    #[test]
    fn one_token_corpus_converges_at_once() {
        let trees = vec![DepTree::from_heads(&["A"], &[0])];
        let mut tags = TagSet::default();
        let cfg = TrainConfig { em_iterations: 5, ..Default::default() };
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        let t = train(&insts, tags, &cfg, Exec::Sequential).unwrap();
        let p = t.model.params();
        assert!(p.stop[0][0][0][0] > 0.5f64.ln());
        assert!(t.history.len() <= 5);
    }

    #[test]
    fn objective_is_monotone_under_depth_bound() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let trees = random_corpus(&mut rng, 20, 6);
        let mut tags = TagSet::default();
        let cfg = TrainConfig { em_iterations: 6, tolerance: 0.0, depth: Some(1), relax: 3, ..Default::default() };
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        let t = train(&insts, tags, &cfg, Exec::Sequential).unwrap();
        for w in t.history.windows(2) {
            assert!(w[1].objective >= w[0].objective - 1e-6, "{:?}", t.history);
        }
    }

    #[test]
    fn all_skipped_is_an_error() {
        let trees = vec![DepTree::from_heads(&["DET", "DET"], &[0, 1])];
        let mut tags = TagSet::default();
        let mut cfg = TrainConfig::default();
        cfg.constraints.function_words = true;
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        assert!(matches!(train(&insts, tags, &cfg, Exec::Sequential), Err(Error::AllSkipped)));
    }

    #[test]
    fn constrained_decoding_obeys_masks() {
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let p = DmvParams::random(4, &mut rng);
        let cs = ConstraintSet { function_words: true, adp_head: false, root: RootConstraint::VerbOtherwiseNoun };
        let names = ["NOUN", "VERB", "DET", "ADJ"];
        for _ in 0..20 {
            let ids: Vec<usize> = (0..5).map(|_| rng.random_range(0..4)).collect();
            let tags: Vec<&str> = ids.iter().map(|&i| names[i]).collect();
            let m = cs.compile(&tags);
            let Some(h) = viterbi_heads(&p, &ids, Some(&m), None) else { continue };
            for (d, &hd) in h.iter().enumerate() {
                if hd == 0 {
                    assert!(m.root_ok[d + 1]);
                } else {
                    assert!(!m.unheadable[hd]);
                }
            }
        }
    }

    #[test]
    fn config_round_trips_and_rejects_unknown_keys() {
        let mut cfg = TrainConfig::default();
        cfg.set("depth", "2").unwrap();
        cfg.set("relax", "3").unwrap();
        cfg.set("root", "verb-or-noun").unwrap();
        cfg.set("length_bias", "0.1").unwrap();
        let mut back = TrainConfig::default();
        for (k, v) in cfg.entries() {
            back.set(k, &v).unwrap();
        }
        assert_eq!(back, cfg);
        assert!(cfg.set("depht", "2").is_err());
        assert!(cfg.set("depth", "zero").is_err());
    }

    #[test]
    fn model_text_round_trips() {
        let trees = vec![DepTree::from_heads(&["NOUN", "VERB"], &[2, 0])];
        let mut tags = TagSet::default();
        let cfg = TrainConfig { em_iterations: 2, ..Default::default() };
        let insts = prepare(&trees, &mut tags, &cfg.constraints);
        let t = train(&insts, tags, &cfg, Exec::Sequential).unwrap();
        let back = Model::from_text(&t.model.to_text()).unwrap();
        assert_eq!(back.tags, t.model.tags);
        assert_eq!(back.config, t.model.config);
        for (a, b) in back.weights.iter().zip(&t.model.weights) {
            assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
        assert!(t.metrics_tsv().starts_with("iter\tobjective\tskipped\n1\t"));
    }
}
