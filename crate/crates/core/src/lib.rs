//! Left-corner dependency parsing.
//!
//! The crate bundles the pieces needed to study center-embedding in
//! dependency treebanks and to use left-corner stack depth as a bias for
//! grammar induction:
//!
//! * [`treebank`]: CoNLL reading/writing, projectivity, punctuation removal.
//! * [`cfg_leftcorner`]: CNF parses, center-embedding degree, left-corner PDAs.
//! * [`transition`]: left-corner, arc-standard and arc-eager systems with oracles.
//! * [`analysis`]: corpus-level stack depth statistics.
//! * [`sbg`]: split bilexical grammars, the DMV, Eisner's chart and plain EM.
//! * [`lc_chart`]: depth-bounded left-corner tabulation of split bilexical grammars.
//! * [`induction`]: featurized DMV training with structural and parameter constraints.
//! * [`supervised`]: beam-search transition parsers trained with a structured perceptron.

pub mod analysis;
pub mod brute;
pub mod cfg_leftcorner;
pub mod error;
pub mod exec;
pub mod hypergraph;
pub mod induction;
pub mod lc_chart;
pub mod sbg;
pub mod semiring;
pub mod supervised;
pub mod transition;
pub mod treebank;

pub use error::{Error, Result};
pub use exec::Exec;
pub use treebank::{DepTree, Token};
