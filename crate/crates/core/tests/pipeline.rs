//! End-to-end checks across treebank reading, depth analysis and the
//! supervised parser.

use lcdep::analysis::{coverage_report, depth_histogram, prepare_tree, DepthMeasure};
use lcdep::induction::uas_counts;
use lcdep::supervised::{train_perceptron, DecodeOptions, Parser, PerceptronConfig};
use lcdep::transition::{run_oracle_tree, SystemKind};
use lcdep::treebank::{
    is_projective, parse_conll, projectivize, random_reorder, write_conll, PosColumn, UD_PUNCT_TAGS,
};
use lcdep::{DepTree, Exec};
use proptest::prelude::*;

const CONLL: &str = "\
1\tthe\t_\tDET\tDT\t_\t2\tdet\t_\t_
2\tdog\t_\tNOUN\tNN\t_\t3\tnsubj\t_\t_
3\tbarks\t_\tVERB\tVBZ\t_\t0\troot\t_\t_
4\t.\t_\tPUNCT\t.\t_\t3\tpunct\t_\t_

1\tshe\t_\tPRON\tPRP\t_\t2\tnsubj\t_\t_
2\tsaw\t_\tVERB\tVBD\t_\t0\troot\t_\t_
3\ta\t_\tDET\tDT\t_\t4\tdet\t_\t_
4\tman\t_\tNOUN\tNN\t_\t2\tdobj\t_\t_
5\twith\t_\tADP\tIN\t_\t4\tprep\t_\t_
6\ta\t_\tDET\tDT\t_\t7\tdet\t_\t_
7\ttelescope\t_\tNOUN\tNN\t_\t5\tpobj\t_\t_

1\tthe\t_\tDET\tDT\t_\t2\tdet\t_\t_
2\treporter\t_\tNOUN\tNN\t_\t7\tnsubj\t_\t_
3\twho\t_\tPRON\tWP\t_\t6\tdobj\t_\t_
4\tthe\t_\tDET\tDT\t_\t5\tdet\t_\t_
5\tsenator\t_\tNOUN\tNN\t_\t6\tnsubj\t_\t_
6\tmet\t_\tVERB\tVBD\t_\t2\trelcl\t_\t_
7\tleft\t_\tVERB\tVBD\t_\t0\troot\t_\t_
";

#[test]
fn conll_round_trip_preserves_trees() {
    let corpus = parse_conll(CONLL, PosColumn::Coarse).unwrap();
    assert_eq!(corpus.sentences.len(), 3);
    let again = parse_conll(&write_conll(&corpus.sentences), PosColumn::Coarse).unwrap();
    for (a, b) in corpus.sentences.iter().zip(&again.sentences) {
        assert_eq!(a.heads(), b.heads());
        assert_eq!(a.tags(), b.tags());
    }
}

#[test]
fn coverage_is_monotone_and_matches_histogram() {
    let corpus = parse_conll(CONLL, PosColumn::Coarse).unwrap().sentences;
    for system in [SystemKind::LeftCorner, SystemKind::ArcStandard, SystemKind::ArcEager] {
        let report =
            coverage_report(&corpus, system, DepthMeasure::Raw, &[1, 2, 3, 4, 5, 6, 7, 8], 1, None, Exec::Sequential)
                .unwrap();
        for w in report.rows.windows(2) {
            assert!(w[0].token_pct <= w[1].token_pct);
            assert!(w[0].sent_pct <= w[1].sent_pct);
        }
        assert_eq!(report.rows.last().unwrap().sent_pct, 100.0);
        let seq = depth_histogram(&corpus, system, DepthMeasure::Raw, 1, Exec::Sequential).unwrap();
        let par = depth_histogram(&corpus, system, DepthMeasure::Raw, 1, Exec::Parallel).unwrap();
        assert_eq!(seq, par);
    }
}

#[test]
fn center_embedding_needs_more_left_corner_depth() {
    let corpus = parse_conll(CONLL, PosColumn::Coarse).unwrap().sentences;
    let report =
        coverage_report(&corpus[..2], SystemKind::LeftCorner, DepthMeasure::DepthRe, &[1], 1, None, Exec::Sequential)
            .unwrap();
    assert_eq!(report.rows[0].sent_pct, 100.0);
    let report =
        coverage_report(&corpus[2..], SystemKind::LeftCorner, DepthMeasure::DepthRe, &[1], 1, None, Exec::Sequential)
            .unwrap();
    assert_eq!(report.rows[0].sent_pct, 0.0);
}

#[test]
fn saved_parser_decodes_like_the_original() {
    let corpus = parse_conll(CONLL, PosColumn::Coarse).unwrap().sentences;
    for system in [SystemKind::LeftCorner, SystemKind::ArcStandard, SystemKind::ArcEager] {
        let cfg = PerceptronConfig { system, epochs: 5, ..PerceptronConfig::default() };
        let parser = train_perceptron(&corpus, &cfg).unwrap();
        let (loaded, loaded_cfg) = Parser::from_text(&parser.to_text(&cfg)).unwrap();
        assert_eq!(loaded_cfg.system, system);
        let opts = DecodeOptions::default();
        let a = parser.parse_corpus(&corpus, &opts, Exec::Sequential);
        let b = loaded.parse_corpus(&corpus, &opts, Exec::Sequential);
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.heads(), y.heads());
        }
        let (correct, total) = uas_counts(&a, &corpus, &UD_PUNCT_TAGS).unwrap();
        assert_eq!(correct, total, "{system:?} should fit its training data");
    }
}

/// A random tree over `choices.len() + 1` words: word `i + 2` attaches to
/// one of the words before it, word 1 is the root.
fn random_tree(choices: &[usize]) -> DepTree {
    let mut heads = vec![0];
    for (i, &c) in choices.iter().enumerate() {
        heads.push(1 + c % (i + 1));
    }
    let tags = vec!["X"; heads.len()];
    DepTree::from_heads(&tags, &heads)
}

proptest! {
    #[test]
    fn oracles_rebuild_projectivized_and_reordered_trees(
        choices in prop::collection::vec(any::<usize>(), 0..12),
        seed in any::<u64>(),
    ) {
        let t = projectivize(&random_tree(&choices));
        prop_assert!(is_projective(&t));
        let r = random_reorder(&t, seed);
        prop_assert!(is_projective(&r));
        prop_assert_eq!(r.n_words(), t.n_words());
        for tree in [&t, &r] {
            let prepared = prepare_tree(tree).unwrap();
            for system in [SystemKind::LeftCorner, SystemKind::ArcStandard, SystemKind::ArcEager] {
                let trace = run_oracle_tree(&prepared, system).unwrap();
                prop_assert_eq!(&trace.heads, &prepared.heads());
            }
        }
    }
}
