//! Corpus-level stack depth statistics.
//!
//! Every tree is run through a static oracle and the depths of the visited
//! configurations are collected into histograms or coverage tables. Trees
//! are projectivized and get the artificial root appended first.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::transition::{run_oracle_tree, OracleTrace, Phase, SystemKind};
use crate::treebank::{append_root, is_projective, projectivize, random_reorder, strip_punctuation, DepTree};

/// Which configurations a depth statistic looks at.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum DepthMeasure {
    /// Every configuration.
    Raw,
    /// Configurations after reduce actions, with relaxation.
    #[default]
    DepthRe,
    /// Configurations after shift actions.
    DepthSh,
}

impl FromStr for DepthMeasure {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(DepthMeasure::Raw),
            "depth-re" => Ok(DepthMeasure::DepthRe),
            "depth-sh" => Ok(DepthMeasure::DepthSh),
            _ => Err(Error::Config(format!("unknown depth measure `{s}`"))),
        }
    }
}

impl fmt::Display for DepthMeasure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DepthMeasure::Raw => "raw",
            DepthMeasure::DepthRe => "depth-re",
            DepthMeasure::DepthSh => "depth-sh",
        })
    }
}

/// Projectivizes a tree and appends the artificial root if missing.
pub fn prepare_tree(t: &DepTree) -> Result<DepTree> {
    let t = if is_projective(t) { t.clone() } else { projectivize(t) };
    if t.rooted {
        Ok(t)
    } else {
        append_root(&t)
    }
}

fn trace(t: &DepTree, i: usize, system: SystemKind) -> Result<OracleTrace> {
    let t = prepare_tree(t)?;
    run_oracle_tree(&t, system).map_err(|e| Error::InvalidTree { sentence: i + 1, msg: e.to_string() })
}

/// Depths of the configurations a measure looks at.
fn measured_depths(tr: &OracleTrace, measure: DepthMeasure, relax: usize) -> Vec<usize> {
    tr.steps
        .iter()
        .filter_map(|s| match (measure, s.phase) {
            (DepthMeasure::Raw, _) => Some(s.depth),
            (DepthMeasure::DepthRe, Phase::AfterReduce) => Some(tr.relaxed_depth(s, relax)),
            (DepthMeasure::DepthSh, Phase::AfterShift) => Some(s.depth),
            _ => None,
        })
        .collect()
}

/// Counts of configurations per stack depth.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DepthHistogram {
    pub counts: BTreeMap<usize, u64>,
}

impl DepthHistogram {
    pub fn add(&mut self, depth: usize) {
        *self.counts.entry(depth).or_default() += 1;
    }

    /// Pointwise sum.
    pub fn merge(mut self, other: DepthHistogram) -> DepthHistogram {
        for (d, c) in other.counts {
            *self.counts.entry(d).or_default() += c;
        }
        self
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }

    /// (depth, cumulative fraction) for every observed depth.
    pub fn cumulative(&self) -> Vec<(usize, f64)> {
        let total = self.total() as f64;
        let mut acc = 0;
        self.counts
            .iter()
            .map(|(&d, &c)| {
                acc += c;
                (d, acc as f64 / total)
            })
            .collect()
    }

    /// TSV with columns lang, system, measure, depth, count, cumPct.
    pub fn to_tsv(&self, lang: &str, system: SystemKind, measure: DepthMeasure) -> String {
        let mut s = String::from("lang\tsystem\tmeasure\tdepth\tcount\tcumPct\n");
        for ((d, frac), c) in self.cumulative().into_iter().zip(self.counts.values()) {
            s.push_str(&format!("{lang}\t{system}\t{measure}\t{d}\t{c}\t{:.1}\n", 100.0 * frac));
        }
        s
    }
}

/// Histogram of configuration depths over the oracle runs of a corpus.
pub fn depth_histogram(
    corpus: &[DepTree],
    system: SystemKind,
    measure: DepthMeasure,
    relax: usize,
    exec: Exec,
) -> Result<DepthHistogram> {
    let indexed: Vec<(usize, &DepTree)> = corpus.iter().enumerate().collect();
    let parts = exec.map(&indexed, |&(i, t)| {
        let tr = trace(t, i, system)?;
        let mut h = DepthHistogram::default();
        for d in measured_depths(&tr, measure, relax) {
            h.add(d);
        }
        Ok(h)
    });
    parts.into_iter().try_fold(DepthHistogram::default(), |acc, h: Result<DepthHistogram>| Ok(acc.merge(h?)))
}

/// Per-sentence depths used by coverage: the depth seen by each word and
/// the sentence maximum under the measure.
fn coverage_depths(tr: &OracleTrace, n_words: usize, measure: DepthMeasure, relax: usize) -> (Vec<usize>, usize) {
    let tokens: Vec<usize> = match measure {
        DepthMeasure::DepthRe => tr.token_depths(relax)[1..].to_vec(),
        _ => tr.steps.iter().filter(|s| s.phase == Phase::AfterShift).map(|s| s.depth).collect(),
    };
    let max = measured_depths(tr, measure, relax).into_iter().max().unwrap_or(1).max(1);
    (tokens.into_iter().take(n_words).collect(), max)
}

/// One row of a coverage table.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageRow {
    pub bound: usize,
    pub relax: usize,
    /// Percentage of words read at a depth within the bound.
    pub token_pct: f64,
    /// Percentage of sentences whose maximum depth is within the bound.
    pub sent_pct: f64,
}

/// Coverage of a corpus at several depth bounds.
#[derive(Clone, Debug, PartialEq)]
pub struct CoverageReport {
    pub system: SystemKind,
    pub measure: DepthMeasure,
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    /// TSV with columns lang, system, measure, bound, relaxC, tokenPct, sentPct.
    pub fn to_tsv(&self, lang: &str) -> String {
        let mut s = String::from("lang\tsystem\tmeasure\tbound\trelaxC\ttokenPct\tsentPct\n");
        for r in &self.rows {
            s.push_str(&format!(
                "{lang}\t{}\t{}\t{}\t{}\t{:.1}\t{:.1}\n",
                self.system, self.measure, r.bound, r.relax, r.token_pct, r.sent_pct
            ));
        }
        s
    }
}

/// Token- and sentence-level coverage at each bound, over sentences of at
/// most `max_len` words.
pub fn coverage_report(
    corpus: &[DepTree],
    system: SystemKind,
    measure: DepthMeasure,
    bounds: &[usize],
    relax: usize,
    max_len: Option<usize>,
    exec: Exec,
) -> Result<CoverageReport> {
    let indexed: Vec<(usize, &DepTree)> =
        corpus.iter().enumerate().filter(|(_, t)| max_len.is_none_or(|m| t.n_words() <= m)).collect();
    let per_sentence = exec.map(&indexed, |&(i, t)| {
        let tr = trace(t, i, system)?;
        Ok(coverage_depths(&tr, t.n_words(), measure, relax))
    });
    let per_sentence: Vec<(Vec<usize>, usize)> = per_sentence.into_iter().collect::<Result<_>>()?;
    let n_tokens: usize = per_sentence.iter().map(|(t, _)| t.len()).sum();
    let pct = |num: usize, den: usize| if den == 0 { 100.0 } else { 100.0 * num as f64 / den as f64 };
    let rows = bounds
        .iter()
        .map(|&bound| {
            let tok = per_sentence.iter().map(|(t, _)| t.iter().filter(|&&d| d <= bound).count()).sum();
            let sent = per_sentence.iter().filter(|(_, m)| *m <= bound).count();
            CoverageRow { bound, relax, token_pct: pct(tok, n_tokens), sent_pct: pct(sent, per_sentence.len()) }
        })
        .collect();
    Ok(CoverageReport { system, measure, rows })
}

/// `trials` projectivity-preserving random reorderings of the corpus after
/// removing punctuation; deterministic given `seed`.
pub fn randomized_corpus(corpus: &[DepTree], seed: u64, trials: usize, punct: &[&str]) -> Vec<DepTree> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(corpus.len() * trials);
    for _ in 0..trials {
        for t in corpus {
            let t = strip_punctuation(t, punct);
            if !t.is_empty() {
                out.push(random_reorder(&t, rng.random()));
            }
        }
    }
    out
}

/// Depth histogram of randomly reordered versions of the corpus.
#[allow(clippy::too_many_arguments)]
pub fn random_baseline(
    corpus: &[DepTree],
    seed: u64,
    trials: usize,
    punct: &[&str],
    system: SystemKind,
    measure: DepthMeasure,
    relax: usize,
    exec: Exec,
) -> Result<DepthHistogram> {
    depth_histogram(&randomized_corpus(corpus, seed, trials, punct), system, measure, relax, exec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::treebank::UD_PUNCT_TAGS;

    fn chain(n: usize) -> DepTree {
        // Right-branching: every word heads the next one.
        let tags = vec!["X"; n];
        let heads: Vec<usize> = (1..=n).map(|i| i - 1).collect();
        DepTree::from_heads(&tags, &heads)
    }

    fn center_embedded() -> DepTree {
        // "The reporter who the senator met ignored the story".
        let tags = ["DET", "NOUN", "PRON", "DET", "NOUN", "VERB", "VERB", "DET", "NOUN"];
        DepTree::from_heads(&tags, &[2, 7, 6, 5, 6, 2, 0, 9, 7])
    }

    #[test]
    fn single_tokens_sit_at_depth_one() {
        let corpus = vec![DepTree::from_heads(&["X"], &[0]); 3];
        let h = depth_histogram(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthSh, 1, Exec::Sequential).unwrap();
        assert_eq!(h.counts.keys().copied().collect::<Vec<_>>(), vec![1]);
        assert_eq!(h.total(), 6);
    }

    #[test]
    fn right_branching_is_flat_for_left_corner_only() {
        let corpus: Vec<DepTree> = (2..=6).map(chain).collect();
        let h = depth_histogram(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthRe, 1, Exec::Sequential).unwrap();
        assert_eq!(h.counts.keys().copied().collect::<Vec<_>>(), vec![1]);
        let h = depth_histogram(&[chain(6)], SystemKind::ArcStandard, DepthMeasure::Raw, 1, Exec::Sequential).unwrap();
        assert!(h.counts.keys().max().unwrap() >= &6);
        let cum = h.cumulative();
        assert!(cum.windows(2).all(|w| w[0].1 <= w[1].1));
        assert!((cum.last().unwrap().1 - 1.0).abs() < 1e-12);
    }

    #[test]
    fn coverage_of_a_center_embedded_sentence() {
        let corpus = vec![center_embedded()];
        let r = coverage_report(
            &corpus,
            SystemKind::LeftCorner,
            DepthMeasure::DepthRe,
            &[1, 2, 3],
            1,
            None,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(r.rows[0].sent_pct, 0.0);
        assert_eq!(r.rows[1].sent_pct, 100.0);
        assert!(r.rows[0].token_pct < 100.0);
        assert!(r
            .to_tsv("en")
            .starts_with("lang\tsystem\tmeasure\tbound\trelaxC\ttokenPct\tsentPct\nen\tleft-corner\tdepth-re\t1\t1\t"));
        let relaxed =
            coverage_report(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthRe, &[1], 3, None, Exec::Sequential)
                .unwrap();
        assert_eq!(relaxed.rows[0].sent_pct, 100.0);
    }

    #[test]
    fn doubly_embedded_needs_three() {
        // a [b [c d] e] f with both inner spans center-embedded.
        let t = DepTree::from_heads(&["X"; 6], &[6, 5, 4, 5, 1, 0]);
        let tr = trace(&t, 0, SystemKind::LeftCorner).unwrap();
        let d = tr.depth_re_max();
        let r = coverage_report(
            &[t],
            SystemKind::LeftCorner,
            DepthMeasure::DepthRe,
            &[d - 1, d],
            1,
            None,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!((r.rows[0].sent_pct, r.rows[1].sent_pct), (0.0, 100.0));
    }

    #[test]
    fn reduce_depth_covers_at_least_raw_depth() {
        let corpus: Vec<DepTree> = (0..20).map(|s| random_reorder(&center_embedded(), s)).collect();
        let bounds = [1, 2, 3, 4];
        let re =
            coverage_report(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthRe, &bounds, 1, None, Exec::Sequential)
                .unwrap();
        let raw =
            coverage_report(&corpus, SystemKind::LeftCorner, DepthMeasure::Raw, &bounds, 1, None, Exec::Sequential)
                .unwrap();
        for (a, b) in re.rows.iter().zip(&raw.rows) {
            assert!(a.token_pct >= b.token_pct && a.sent_pct >= b.sent_pct);
        }
        assert!(re.rows.windows(2).all(|w| w[0].token_pct <= w[1].token_pct));
    }

    #[test]
    fn unbounded_coverage_is_complete() {
        let corpus: Vec<DepTree> = (0..10).map(|s| random_reorder(&center_embedded(), s)).collect();
        let r =
            coverage_report(&corpus, SystemKind::ArcEager, DepthMeasure::Raw, &[100], 1, None, Exec::Parallel).unwrap();
        assert_eq!((r.rows[0].token_pct, r.rows[0].sent_pct), (100.0, 100.0));
    }

    #[test]
    fn random_baseline_is_deterministic_and_deeper_than_chains() {
        let corpus: Vec<DepTree> = (0..30).map(|_| chain(8)).collect();
        let a = random_baseline(
            &corpus,
            7,
            2,
            &UD_PUNCT_TAGS,
            SystemKind::LeftCorner,
            DepthMeasure::DepthRe,
            1,
            Exec::Parallel,
        )
        .unwrap();
        let b = random_baseline(
            &corpus,
            7,
            2,
            &UD_PUNCT_TAGS,
            SystemKind::LeftCorner,
            DepthMeasure::DepthRe,
            1,
            Exec::Sequential,
        )
        .unwrap();
        assert_eq!(a, b);
        let orig =
            coverage_report(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthRe, &[1], 1, None, Exec::Sequential)
                .unwrap();
        let rand = randomized_corpus(&corpus, 7, 1, &UD_PUNCT_TAGS);
        let shuffled =
            coverage_report(&rand, SystemKind::LeftCorner, DepthMeasure::DepthRe, &[1], 1, None, Exec::Sequential)
                .unwrap();
        assert!(shuffled.rows[0].sent_pct < orig.rows[0].sent_pct);
    }

    #[test]
    fn two_token_baseline_matches_original() {
        let corpus = vec![DepTree::from_heads(&["X", "X"], &[2, 0])];
        let orig =
            depth_histogram(&corpus, SystemKind::LeftCorner, DepthMeasure::DepthRe, 1, Exec::Sequential).unwrap();
        for seed in 0..4 {
            let r = random_baseline(
                &corpus,
                seed,
                1,
                &[],
                SystemKind::LeftCorner,
                DepthMeasure::DepthRe,
                1,
                Exec::Sequential,
            )
            .unwrap();
            assert_eq!(r, orig);
        }
    }
}
