//! `lcdep`: command-line entry points for the left-corner toolkit.
//!
//! Every command reads CoNLL input, echoes its resolved settings to stderr
//! as `# key=value` lines and writes its artifact to stdout, or into the
//! `--out` directory together with `config.txt`.

mod settings;

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use lcdep::analysis::{coverage_report, depth_histogram, prepare_tree, random_baseline, DepthMeasure};
use lcdep::induction::{evaluate_uas, prepare, train, viterbi_heads, Model, TrainConfig};
use lcdep::sbg::TagSet;
use lcdep::supervised::{train_perceptron, DecodeOptions, DepthBound, Parser as SupervisedParser, PerceptronConfig};
use lcdep::transition::{run_oracle_tree, SystemKind};
use lcdep::treebank::{parse_conll, strip_punctuation, write_conll, Corpus, PosColumn, UD_PUNCT_TAGS};
use lcdep::{DepTree, Exec};

/// A config key with the value given on the command line, if any.
type Flag = (&'static str, Option<String>);

use settings::Settings;

#[derive(Parser, Debug)]
#[command(name = "lcdep", version, about = "Left-corner dependency parsing experiments")]
struct Cli {
    /// Seed for every stochastic step.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sentence-level parallelism (1 runs sequentially).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Directory for output artifacts; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Optional key=value configuration file; flags take precedence.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct Input {
    /// POS column to read: coarse (column 4) or fine (column 5).
    #[arg(long)]
    pos_column: Option<String>,
    /// Drop sentences longer than this many words.
    #[arg(long)]
    max_len: Option<usize>,
    /// Remove punctuation tokens before processing.
    #[arg(long)]
    strip_punct: bool,
}

#[derive(Args, Debug, Clone)]
struct DepthArgs {
    /// left-corner, arc-standard or arc-eager.
    #[arg(long)]
    system: Option<String>,
    /// raw, depth-re or depth-sh.
    #[arg(long)]
    measure: Option<String>,
    /// Relaxation size C.
    #[arg(long)]
    relax: Option<usize>,
    /// Language label of the TSV rows.
    #[arg(long)]
    lang: Option<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Histogram of oracle stack depths.
    AnalyzeDepth {
        #[command(flatten)]
        depth: DepthArgs,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Token and sentence coverage under depth bounds.
    Coverage {
        #[command(flatten)]
        depth: DepthArgs,
        /// Comma-separated depth bounds.
        #[arg(long)]
        bounds: Option<String>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Depth histogram of randomly reordered trees.
    RandomBaseline {
        #[command(flatten)]
        depth: DepthArgs,
        /// Reorderings per sentence.
        #[arg(long)]
        trials: Option<usize>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Oracle action sequences with per-step depths.
    OracleTrace {
        #[arg(long)]
        system: Option<String>,
        /// Only trace this sentence (1-based).
        #[arg(long)]
        sentence: Option<usize>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Trains a featurized DMV with EM.
    TrainDmv {
        /// uniform or harmonic.
        #[arg(long)]
        init: Option<String>,
        /// Stack depth bound D (none for unbounded).
        #[arg(long)]
        depth: Option<String>,
        /// Relaxation size C of the depth bound.
        #[arg(long)]
        relax_c: Option<usize>,
        /// Length bias β (none to disable).
        #[arg(long)]
        length_bias: Option<String>,
        /// none, verb-or-noun or verb-otherwise-noun.
        #[arg(long)]
        root: Option<String>,
        /// Function words take no dependents.
        #[arg(long)]
        function_words: Option<bool>,
        /// ADP must take a dependent.
        #[arg(long)]
        adp_head: Option<bool>,
        #[arg(long)]
        em_iterations: Option<usize>,
        #[arg(long)]
        lbfgs_iterations: Option<u64>,
        /// Gaussian prior variance.
        #[arg(long)]
        sigma2: Option<f64>,
        #[arg(long)]
        tolerance: Option<f64>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Parses with a DMV model or supervised weights.
    Parse {
        #[arg(long)]
        model: PathBuf,
        /// Beam width of supervised decoding.
        #[arg(long)]
        beam: Option<usize>,
        /// Stack depth bound of decoding.
        #[arg(long)]
        bound: Option<String>,
        /// Depth measure of the bound.
        #[arg(long)]
        measure: Option<String>,
        /// Relaxation size C of a DMV depth bound.
        #[arg(long)]
        relax: Option<usize>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
    /// Unlabeled attachment score of predictions against gold trees.
    EvalUas {
        /// Exclude punctuation tokens from scoring.
        #[arg(long)]
        punct: bool,
        pred: PathBuf,
        gold: PathBuf,
    },
    /// Trains a beam-search parser with the averaged max-violation perceptron.
    TrainSupervised {
        #[arg(long)]
        system: Option<String>,
        /// full or limited (left-corner only).
        #[arg(long)]
        features: Option<String>,
        #[arg(long)]
        beam: Option<usize>,
        #[arg(long)]
        epochs: Option<usize>,
        #[command(flatten)]
        input: Input,
        file: PathBuf,
    },
}

fn read_corpus(path: &Path, s: &Settings) -> Result<Vec<DepTree>> {
    let text = fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let col = match s.get_str("pos_column")? {
        "coarse" => PosColumn::Coarse,
        "fine" => PosColumn::Fine,
        other => bail!("unknown pos column `{other}`"),
    };
    let mut corpus: Corpus = parse_conll(&text, col).with_context(|| format!("in {}", path.display()))?;
    if let Some(m) = s.get_opt::<usize>("max_len")? {
        corpus = corpus.filter_max_len(m);
    }
    let mut trees = corpus.sentences;
    if s.get::<bool>("strip_punct")? {
        trees = trees.iter().map(|t| strip_punctuation(t, &UD_PUNCT_TAGS)).filter(|t| !t.is_empty()).collect();
    }
    Ok(trees)
}

fn input_flags(i: &Input) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("pos_column", i.pos_column.clone()),
        ("max_len", i.max_len.map(|x| x.to_string())),
        ("strip_punct", i.strip_punct.then(|| "true".to_string())),
    ]
}

fn depth_flags(d: &DepthArgs) -> Vec<(&'static str, Option<String>)> {
    vec![
        ("system", d.system.clone()),
        ("measure", d.measure.clone()),
        ("relax", d.relax.map(|x| x.to_string())),
        ("lang", d.lang.clone()),
    ]
}

/// Writes `name` under `--out`, or prints it.
fn emit(out: Option<&Path>, name: &str, content: &str) -> Result<()> {
    match out {
        Some(dir) => {
            let path = dir.join(name);
            fs::write(&path, content).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{content}");
            Ok(())
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let file_cfg = match &cli.config {
        Some(p) => settings::read_file(p)?,
        None => Default::default(),
    };
    let globals = vec![("seed", cli.seed.map(|x| x.to_string())), ("jobs", cli.jobs.map(|x| x.to_string()))];
    let (defaults, mut flags): (Vec<(&str, String)>, Vec<Flag>) = match &cli.command {
        Command::AnalyzeDepth { depth, input, .. } => {
            (settings::defaults("analyze-depth"), [depth_flags(depth), input_flags(input)].concat())
        }
        Command::Coverage { depth, bounds, input, .. } => {
            let mut f = [depth_flags(depth), input_flags(input)].concat();
            f.push(("bounds", bounds.clone()));
            (settings::defaults("coverage"), f)
        }
        Command::RandomBaseline { depth, trials, input, .. } => {
            let mut f = [depth_flags(depth), input_flags(input)].concat();
            f.push(("trials", trials.map(|x| x.to_string())));
            (settings::defaults("random-baseline"), f)
        }
        Command::OracleTrace { system, sentence, input, .. } => {
            let mut f = input_flags(input);
            f.push(("system", system.clone()));
            f.push(("sentence", sentence.map(|x| x.to_string())));
            (settings::defaults("oracle-trace"), f)
        }
        Command::TrainDmv {
            init,
            depth,
            relax_c,
            length_bias,
            root,
            function_words,
            adp_head,
            em_iterations,
            lbfgs_iterations,
            sigma2,
            tolerance,
            input,
            ..
        } => {
            let mut f = input_flags(input);
            f.extend([
                ("init", init.clone()),
                ("depth", depth.clone()),
                ("relax", relax_c.map(|x| x.to_string())),
                ("length_bias", length_bias.clone()),
                ("root", root.clone()),
                ("function_words", function_words.map(|x| x.to_string())),
                ("adp_head", adp_head.map(|x| x.to_string())),
                ("em_iterations", em_iterations.map(|x| x.to_string())),
                ("lbfgs_iterations", lbfgs_iterations.map(|x| x.to_string())),
                ("sigma2", sigma2.map(|x| x.to_string())),
                ("tolerance", tolerance.map(|x| x.to_string())),
            ]);
            (settings::defaults("train-dmv"), f)
        }
        Command::Parse { beam, bound, measure, relax, input, .. } => {
            let mut f = input_flags(input);
            f.extend([
                ("beam", beam.map(|x| x.to_string())),
                ("bound", bound.clone()),
                ("measure", measure.clone()),
                ("relax", relax.map(|x| x.to_string())),
            ]);
            (settings::defaults("parse"), f)
        }
        Command::EvalUas { punct, .. } => {
            (settings::defaults("eval-uas"), vec![("punct", punct.then(|| "true".into()))])
        }
        Command::TrainSupervised { system, features, beam, epochs, input, .. } => {
            let mut f = input_flags(input);
            f.extend([
                ("system", system.clone()),
                ("features", features.clone()),
                ("beam", beam.map(|x| x.to_string())),
                ("epochs", epochs.map(|x| x.to_string())),
            ]);
            (settings::defaults("train-supervised"), f)
        }
    };
    flags.extend(globals);
    let s = Settings::resolve(&defaults, &file_cfg, &flags)?;
    eprint!("{}", s.echo());

    let jobs: usize = s.get("jobs")?;
    let exec = if jobs == 1 { Exec::Sequential } else { Exec::Parallel };
    if jobs > 1 {
        rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global().context("cannot start thread pool")?;
    }
    let seed: u64 = s.get("seed")?;
    let out = cli.out.as_deref();
    if let Some(dir) = out {
        fs::create_dir_all(dir).with_context(|| format!("cannot create {}", dir.display()))?;
        fs::write(dir.join("config.txt"), s.echo())?;
    }

    match &cli.command {
        Command::AnalyzeDepth { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let (system, measure) = (s.get::<SystemKind>("system")?, s.get::<DepthMeasure>("measure")?);
            let h = depth_histogram(&trees, system, measure, s.get("relax")?, exec)?;
            emit(out, "depth.tsv", &h.to_tsv(s.get_str("lang")?, system, measure))
        }
        Command::Coverage { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let bounds = settings::parse_list(s.get_str("bounds")?)?;
            let (system, measure) = (s.get::<SystemKind>("system")?, s.get::<DepthMeasure>("measure")?);
            let r = coverage_report(&trees, system, measure, &bounds, s.get("relax")?, None, exec)?;
            emit(out, "coverage.tsv", &r.to_tsv(s.get_str("lang")?))
        }
        Command::RandomBaseline { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let (system, measure) = (s.get::<SystemKind>("system")?, s.get::<DepthMeasure>("measure")?);
            let trials = s.get("trials")?;
            let h = random_baseline(&trees, seed, trials, &UD_PUNCT_TAGS, system, measure, s.get("relax")?, exec)?;
            emit(out, "random.tsv", &h.to_tsv(s.get_str("lang")?, system, measure))
        }
        Command::OracleTrace { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let system: SystemKind = s.get("system")?;
            let only = s.get_opt::<usize>("sentence")?;
            let mut text = String::new();
            for (i, t) in trees.iter().enumerate() {
                if only.is_some_and(|k| k != i + 1) {
                    continue;
                }
                let tr = run_oracle_tree(&prepare_tree(t)?, system).with_context(|| format!("sentence {}", i + 1))?;
                text.push_str(&format!("# sentence {}\n", i + 1));
                text.push_str(&tr.dump());
            }
            emit(out, "trace.tsv", &text)
        }
        Command::TrainDmv { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let mut cfg = TrainConfig::default();
            for key in TrainConfig::KEYS {
                cfg.set(key, s.get_str(key)?)?;
            }
            let mut tags = TagSet::default();
            let insts = prepare(&trees, &mut tags, &cfg.constraints);
            let tr = train(&insts, tags, &cfg, exec)?;
            match out {
                Some(_) => {
                    emit(out, "model.txt", &tr.model.to_text())?;
                    emit(out, "metrics.tsv", &tr.metrics_tsv())
                }
                None => emit(None, "", &tr.model.to_text()),
            }
        }
        Command::Parse { model, file, .. } => {
            let text = fs::read_to_string(model).with_context(|| format!("cannot read {}", model.display()))?;
            let trees = read_corpus(file, &s)?;
            let measure: DepthMeasure = s.get("measure")?;
            let bound = s.get_opt::<usize>("bound")?;
            let parsed = if text.lines().any(|l| l.starts_with("#config\tsystem=")) {
                let (p, _) = SupervisedParser::from_text(&text)?;
                let opts = DecodeOptions { beam: s.get("beam")?, bound: bound.map(|max| DepthBound { max, measure }) };
                p.parse_corpus(&trees, &opts, exec)
            } else {
                parse_dmv(&Model::from_text(&text)?, &trees, bound, s.get("relax")?, exec)?
            };
            emit(out, "parsed.conll", &write_conll(&parsed))
        }
        Command::EvalUas { pred, gold, .. } => {
            let s2 = Settings::resolve(&settings::defaults("input"), &Default::default(), &[])?;
            let (p, g) = (read_corpus(pred, &s2)?, read_corpus(gold, &s2)?);
            let punct: &[&str] = if s.get("punct")? { &UD_PUNCT_TAGS } else { &[] };
            let uas = evaluate_uas(&p, &g, punct)?;
            emit(out, "uas.txt", &format!("UAS\t{uas:.1}\n"))
        }
        Command::TrainSupervised { file, .. } => {
            let trees = read_corpus(file, &s)?;
            let cfg = PerceptronConfig {
                system: s.get("system")?,
                features: s.get("features")?,
                beam: s.get("beam")?,
                epochs: s.get("epochs")?,
                seed,
            };
            let p = train_perceptron(&trees, &cfg)?;
            emit(out, "weights.txt", &p.to_text(&cfg))
        }
    }
}

fn parse_dmv(model: &Model, trees: &[DepTree], bound: Option<usize>, relax: usize, exec: Exec) -> Result<Vec<DepTree>> {
    let mut tags = model.tags.clone();
    let insts = prepare(trees, &mut tags, &model.config.constraints);
    if tags.len() != model.tags.len() {
        bail!("input has tags unknown to the model");
    }
    let params = model.params();
    let policy = bound.map(|d| lcdep::lc_chart::DepthPolicy::new(d, relax));
    let heads = exec.map(&insts, |inst| viterbi_heads(&params, &inst.ids, None, policy));
    trees
        .iter()
        .zip(heads)
        .enumerate()
        .map(|(i, (t, h))| {
            let h = h.with_context(|| format!("sentence {} has no parse within the bound", i + 1))?;
            let mut out = t.clone();
            for (tok, head) in out.tokens.iter_mut().zip(h) {
                tok.head = head;
            }
            Ok(out)
        })
        .collect()
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("LCDEP_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}
