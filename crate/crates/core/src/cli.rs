//! Batch command-line surface.
//!
//! Subcommands: `convert` (constituent <-> augmented dependency),
//! `oracle` (dump pointer sequences), `train`, `parse` and `eval`.
//! Exit codes: 0 on success, 1 on data errors, 2 on usage errors.

use std::fmt;
use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use rayon::prelude::*;

use crate::encoding::{self, HeadRuleSet};
use crate::eval::{
    attachment_counts, bracketing_counts, EvalConfig, EvalError, PunctuationPolicy,
    PTB_PUNCT_TAGS,
};
use crate::model::{
    parse_external_embeddings, DevSets, Model, ModelConfig, ParallelSentence, PredictOptions,
};
use crate::transition::oracle;
use crate::tree::{AugmentedDepTree, ConstituentTree, DependencyTree, Token};
use crate::treebank::{
    parse_augmented, parse_constituent, parse_dependency, serialize_augmented,
    serialize_constituent_all, serialize_dependency, ConstFormat,
};

/// Default RNG seed for every pipeline (override with --seed).
const DEFAULT_SEED: u64 = 42;

#[derive(Parser)]
#[command(
    name = "mrp",
    about = "Multi-representational parsing: constituent/dependency conversion, \
             transition oracles, multitask training, parsing and evaluation",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug, ValueEnum)]
enum FileFormat {
    Bracketed,
    Discbracket,
    Conll,
}

impl FileFormat {
    fn infer(path: &Path) -> Option<FileFormat> {
        match path.extension()?.to_str()? {
            "mrg" | "ptb" | "brackets" | "bracketed" => Some(FileFormat::Bracketed),
            "discbracket" | "db" => Some(FileFormat::Discbracket),
            "conll" | "conllx" => Some(FileFormat::Conll),
            _ => None,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum EmitFormat {
    Conll,
    Bracketed,
    Discbracket,
    Both,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum InputFormat {
    Text,
    Conll,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Metric {
    Dep,
    Const,
    Disco,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PunctMode {
    Include,
    Exclude,
}

#[derive(Subcommand)]
enum Command {
    /// Convert between constituent treebanks and augmented CoNLL-X.
    Convert(ConvertArgs),
    /// Dump gold SHIFT-ATTACH-p pointer sequences, one sentence per line.
    Oracle(OracleArgs),
    /// Train the multitask model on a parallel treebank.
    Train(TrainArgs),
    /// Parse sentences with a trained model.
    Parse(ParseArgs),
    /// Score predictions against gold trees.
    Eval(EvalArgs),
}

#[derive(Args)]
struct ConvertArgs {
    /// Input format (inferred from the extension when omitted).
    #[arg(long, value_enum)]
    from: Option<FileFormat>,
    /// Output format (inferred from the extension when omitted).
    #[arg(long, value_enum)]
    to: Option<FileFormat>,
    /// Head-rule file (required for constituent -> dependency).
    #[arg(long)]
    head_rules: Option<PathBuf>,
    /// Collapse unary chains before encoding (and record leaf unaries).
    #[arg(long)]
    collapse_unaries: bool,
    input: PathBuf,
    output: PathBuf,
}

#[derive(Args)]
struct OracleArgs {
    /// CoNLL-X input.
    input: PathBuf,
    /// Output file; stdout when omitted.
    output: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    /// Constituent treebank (bracketed/discbracket), or pre-encoded
    /// augmented CoNLL-X.
    #[arg(long = "const")]
    const_file: PathBuf,
    /// Regular dependency treebank (CoNLL-X).
    #[arg(long = "dep")]
    dep_file: PathBuf,
    #[arg(long)]
    dev_const: Option<PathBuf>,
    #[arg(long)]
    dev_dep: Option<PathBuf>,
    /// Head-rule file (needed when --const is a constituent treebank).
    #[arg(long)]
    head_rules: Option<PathBuf>,
    /// key=value config file; flags win over file values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Inline config overrides, e.g. --set epochs=50.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Checkpoint output path.
    #[arg(long, default_value = "model.mrp")]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// External token vectors for the training sentences.
    #[arg(long)]
    external: Option<PathBuf>,
    #[arg(long)]
    dev_const_external: Option<PathBuf>,
    #[arg(long)]
    dev_dep_external: Option<PathBuf>,
    /// Suppress the per-epoch progress line.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct ParseArgs {
    #[arg(long)]
    model: PathBuf,
    /// Sentences to parse: plain text (one sentence per line) or CoNLL-X.
    #[arg(long)]
    input: PathBuf,
    #[arg(long, value_enum)]
    input_format: Option<InputFormat>,
    #[arg(long, value_enum, default_value = "conll")]
    emit: EmitFormat,
    /// Output path for a single --emit format; stdout when omitted.
    #[arg(long)]
    output: Option<PathBuf>,
    /// Dependency output path (required for --emit both).
    #[arg(long)]
    out_dep: Option<PathBuf>,
    /// Constituent output path (required for --emit both).
    #[arg(long)]
    out_const: Option<PathBuf>,
    /// Force the non-crossing constraint on or off (default: as trained).
    #[arg(long, conflicts_with = "no_projective")]
    projective: bool,
    #[arg(long)]
    no_projective: bool,
    /// Allow at most one dependent of the artificial root.
    #[arg(long)]
    single_root: bool,
    /// Worker threads (falls back to MRP_THREADS, then all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// External token vectors aligned with the input sentences.
    #[arg(long)]
    external: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    gold: PathBuf,
    #[arg(long)]
    pred: PathBuf,
    #[arg(long, value_enum)]
    metric: Metric,
    /// Punctuation handling for scoring.
    #[arg(long, value_enum, default_value = "include")]
    punct: PunctMode,
    /// POS tags treated as punctuation under --punct exclude.
    #[arg(long, value_delimiter = ' ', num_args = 1..)]
    punct_tags: Option<Vec<String>>,
    /// Drop the root node of every tree before comparing constituents.
    #[arg(long)]
    ignore_root: bool,
    #[arg(long)]
    threads: Option<usize>,
}

enum CliError {
    Usage(String),
    Data(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Data(msg) => write!(f, "{msg}"),
        }
    }
}

fn usage(msg: impl Into<String>) -> CliError {
    CliError::Usage(msg.into())
}

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult = Result<(), CliError>;

/// Runs the command line; returns the process exit code.
pub fn run(argv: &[String]) -> i32 {
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let result = match cli.command {
        Command::Convert(args) => convert(args),
        Command::Oracle(args) => oracle_cmd(args),
        Command::Train(args) => train_cmd(args),
        Command::Parse(args) => parse_cmd(args),
        Command::Eval(args) => eval_cmd(args),
    };
    match result {
        Ok(()) => 0,
        Err(CliError::Usage(msg)) => {
            eprintln!("usage error: {msg}");
            2
        }
        Err(CliError::Data(msg)) => {
            eprintln!("error: {msg}");
            1
        }
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))
}

fn write_output(path: &Path, text: &str) -> CliResult {
    if path.as_os_str() == "-" {
        print!("{text}");
        std::io::stdout().flush().ok();
        Ok(())
    } else {
        fs::write(path, text)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    }
}

fn resolve_format(
    explicit: Option<FileFormat>,
    path: &Path,
    role: &str,
) -> Result<FileFormat, CliError> {
    explicit.or_else(|| FileFormat::infer(path)).ok_or_else(|| {
        usage(format!(
            "cannot infer the {role} format of {}; pass --from/--to",
            path.display()
        ))
    })
}

fn load_head_rules(path: &Path) -> Result<HeadRuleSet, CliError> {
    read(path)?
        .parse::<HeadRuleSet>()
        .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
}

fn const_format(format: FileFormat) -> ConstFormat {
    match format {
        FileFormat::Bracketed => ConstFormat::Bracketed,
        FileFormat::Discbracket => ConstFormat::Discbracket,
        FileFormat::Conll => unreachable!("checked by caller"),
    }
}

fn convert(args: ConvertArgs) -> CliResult {
    let from = resolve_format(args.from, &args.input, "input")?;
    let to = resolve_format(args.to, &args.output, "output")?;
    let text = read(&args.input)?;
    match (from, to) {
        (FileFormat::Conll, FileFormat::Conll) => {
            let trees = parse_augmented(&text)?;
            write_output(&args.output, &serialize_augmented(&trees))
        }
        (FileFormat::Conll, to) => {
            let trees = parse_augmented(&text)?;
            let decoded: Vec<ConstituentTree> = trees
                .iter()
                .map(|aug| encoding::decode(aug).into_tree())
                .collect();
            write_output(
                &args.output,
                &serialize_constituent_all(&decoded, const_format(to))?,
            )
        }
        (from, FileFormat::Conll) => {
            let rules = match &args.head_rules {
                Some(path) => load_head_rules(path)?,
                None => {
                    return Err(usage(
                        "constituent -> dependency conversion needs --head-rules",
                    ))
                }
            };
            let trees = parse_constituent(&text, const_format(from))?;
            let mut out = Vec::with_capacity(trees.len());
            for tree in &trees {
                let aug = if args.collapse_unaries {
                    encoding::encode_constituent(tree, &rules)?
                } else {
                    let headed = encoding::assign_heads(tree, &rules);
                    encoding::encode(&headed)?
                };
                out.push(aug);
            }
            write_output(&args.output, &serialize_augmented(&out))
        }
        (from, to) => {
            let trees = parse_constituent(&text, const_format(from))?;
            write_output(
                &args.output,
                &serialize_constituent_all(&trees, const_format(to))?,
            )
        }
    }
}

fn oracle_cmd(args: OracleArgs) -> CliResult {
    let trees = parse_dependency(&read(&args.input)?)?;
    let mut out = String::new();
    for tree in &trees {
        let seq = oracle(tree);
        let fields: Vec<String> = seq.pointers().iter().map(|p| p.to_string()).collect();
        out.push_str(&fields.join(" "));
        out.push('\n');
    }
    match &args.output {
        Some(path) => write_output(path, &out),
        None => {
            print!("{out}");
            Ok(())
        }
    }
}

/// Reads a constituent-or-augmented file into augmented trees.
fn load_augmented(
    path: &Path,
    head_rules: Option<&HeadRuleSet>,
) -> Result<Vec<AugmentedDepTree>, CliError> {
    let format = FileFormat::infer(path).unwrap_or(FileFormat::Bracketed);
    let text = read(path)?;
    if format == FileFormat::Conll {
        return Ok(parse_augmented(&text)?);
    }
    let rules = head_rules.ok_or_else(|| {
        usage(format!(
            "{} is a constituent treebank; pass --head-rules to encode it",
            path.display()
        ))
    })?;
    let trees = parse_constituent(&text, const_format(format))?;
    let mut out = Vec::with_capacity(trees.len());
    for tree in &trees {
        out.push(encoding::encode_constituent(tree, rules)?);
    }
    Ok(out)
}

fn load_external_file(path: &Path) -> Result<Vec<Vec<Vec<f64>>>, CliError> {
    Ok(parse_external_embeddings(&read(path)?)?)
}

fn train_cmd(args: TrainArgs) -> CliResult {
    let mut config = ModelConfig::default();
    if let Some(path) = &args.config {
        config.apply(&read(path)?)?;
    }
    for pair in &args.set {
        let (k, v) = pair
            .split_once('=')
            .ok_or_else(|| usage(format!("--set expects KEY=VALUE, got {pair:?}")))?;
        config.set(k.trim(), v.trim())?;
    }
    config.validate()?;

    let rules = args
        .head_rules
        .as_deref()
        .map(load_head_rules)
        .transpose()?;
    let aug = load_augmented(&args.const_file, rules.as_ref())?;
    let dep = parse_dependency(&read(&args.dep_file)?)?;
    if aug.len() != dep.len() {
        return Err(CliError::Data(format!(
            "parallel corpora differ in size: {} constituent vs {} dependency sentences",
            aug.len(),
            dep.len()
        )));
    }
    let external = args
        .external
        .as_deref()
        .map(load_external_file)
        .transpose()?;
    if let Some(e) = &external {
        if e.len() != dep.len() {
            return Err(CliError::Data(format!(
                "{} external blocks for {} sentences",
                e.len(),
                dep.len()
            )));
        }
    }
    let mut corpus = Vec::with_capacity(dep.len());
    for (i, (d, a)) in dep.into_iter().zip(aug).enumerate() {
        let mut sent = ParallelSentence::new(d, a)
            .map_err(|e| CliError::Data(format!("sentence {}: {e}", i + 1)))?;
        if let Some(e) = &external {
            sent = sent.with_external(e[i].clone())?;
        }
        corpus.push(sent);
    }

    let mut dev = DevSets::default();
    if let Some(path) = &args.dev_dep {
        dev.dep = parse_dependency(&read(path)?)?;
    }
    if let Some(path) = &args.dev_const {
        dev.aug = load_augmented(path, rules.as_ref())?;
    }
    dev.dep_external = args
        .dev_dep_external
        .as_deref()
        .map(load_external_file)
        .transpose()?;
    dev.aug_external = args
        .dev_const_external
        .as_deref()
        .map(load_external_file)
        .transpose()?;

    let quiet = args.quiet;
    let (model, stats) = crate::model::train(&corpus, &dev, &config, args.seed, |epoch| {
        if !quiet {
            eprintln!(
                "epoch {:>3}  loss {:>10.4}  dev-LAS dep {:6.2} aug {:6.2}  hmean {:6.2}  lr {:.6}",
                epoch.epoch,
                epoch.train_loss,
                epoch.dev_las_dep,
                epoch.dev_las_aug,
                epoch.harmonic,
                epoch.learning_rate
            );
        }
    })?;
    model.save(&args.out)?;
    if let Some(best) = stats
        .iter()
        .max_by(|a, b| a.harmonic.partial_cmp(&b.harmonic).unwrap())
    {
        eprintln!(
            "saved {} (best dev harmonic mean {:.2} at epoch {})",
            args.out.display(),
            best.harmonic,
            best.epoch
        );
    }
    Ok(())
}

fn thread_pool(threads: Option<usize>) -> Result<rayon::ThreadPool, CliError> {
    let threads = threads.or_else(|| {
        std::env::var("MRP_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = threads {
        builder = builder.num_threads(n);
    }
    builder
        .build()
        .map_err(|e| CliError::Data(format!("cannot build thread pool: {e}")))
}

fn read_input_sentences(args: &ParseArgs) -> Result<Vec<Vec<Token>>, CliError> {
    let format = args.input_format.unwrap_or_else(|| {
        match FileFormat::infer(&args.input) {
            Some(FileFormat::Conll) => InputFormat::Conll,
            _ => InputFormat::Text,
        }
    });
    let text = read(&args.input)?;
    match format {
        InputFormat::Conll => Ok(parse_dependency(&text)?
            .into_iter()
            .map(|t| t.tokens().to_vec())
            .collect()),
        InputFormat::Text => Ok(text
            .lines()
            .filter(|line| !line.trim().is_empty())
            .map(|line| {
                line.split_whitespace()
                    .enumerate()
                    .map(|(i, form)| Token::new(i + 1, form))
                    .collect()
            })
            .collect()),
    }
}

fn parse_cmd(args: ParseArgs) -> CliResult {
    if args.emit == EmitFormat::Both && (args.out_dep.is_none() || args.out_const.is_none()) {
        return Err(usage("--emit both requires --out-dep and --out-const"));
    }
    let model = Model::load(&args.model)?;
    let sentences = read_input_sentences(&args)?;
    let external = args
        .external
        .as_deref()
        .map(load_external_file)
        .transpose()?;
    if let Some(e) = &external {
        if e.len() != sentences.len() {
            return Err(CliError::Data(format!(
                "{} external blocks for {} sentences",
                e.len(),
                sentences.len()
            )));
        }
    }
    let options = PredictOptions {
        projective: if args.projective {
            Some(true)
        } else if args.no_projective {
            Some(false)
        } else {
            None
        },
        single_root: args.single_root,
    };
    let pool = thread_pool(args.threads)?;
    let predictions: Result<Vec<_>, _> = pool.install(|| {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, tokens)| {
                let ext: Option<Vec<Vec<f32>>> = external.as_ref().map(|e| {
                    e[i].iter()
                        .map(|v| v.iter().map(|&x| x as f32).collect())
                        .collect()
                });
                model.predict(tokens, ext.as_deref(), options)
            })
            .collect()
    });
    let predictions = predictions.map_err(|e| CliError::Data(e.to_string()))?;

    let deps: Vec<DependencyTree> = predictions.iter().map(|p| p.dependency.clone()).collect();
    let consts: Vec<ConstituentTree> =
        predictions.iter().map(|p| p.constituent.clone()).collect();
    let stdout = PathBuf::from("-");
    match args.emit {
        EmitFormat::Conll => write_output(
            args.output.as_ref().unwrap_or(&stdout),
            &serialize_dependency(&deps),
        ),
        EmitFormat::Bracketed => write_output(
            args.output.as_ref().unwrap_or(&stdout),
            &serialize_constituent_all(&consts, ConstFormat::Bracketed)?,
        ),
        EmitFormat::Discbracket => write_output(
            args.output.as_ref().unwrap_or(&stdout),
            &serialize_constituent_all(&consts, ConstFormat::Discbracket)?,
        ),
        EmitFormat::Both => {
            write_output(args.out_dep.as_ref().unwrap(), &serialize_dependency(&deps))?;
            let const_path = args.out_const.as_ref().unwrap();
            let format = match FileFormat::infer(const_path) {
                Some(FileFormat::Discbracket) => ConstFormat::Discbracket,
                _ => ConstFormat::Bracketed,
            };
            write_output(const_path, &serialize_constituent_all(&consts, format)?)
        }
    }
}

fn eval_config(args: &EvalArgs) -> Result<EvalConfig, CliError> {
    let punctuation = match args.punct {
        PunctMode::Include => PunctuationPolicy::IncludeAll,
        PunctMode::Exclude => {
            let tags = args.punct_tags.clone().unwrap_or_else(|| {
                PTB_PUNCT_TAGS.iter().map(|s| s.to_string()).collect()
            });
            PunctuationPolicy::ExcludeByPos(tags.into_iter().collect())
        }
    };
    EvalConfig::new(punctuation, args.ignore_root)
        .map_err(|e: EvalError| CliError::Data(e.to_string()))
}

fn eval_cmd(args: EvalArgs) -> CliResult {
    let config = eval_config(&args)?;
    let pool = thread_pool(args.threads)?;
    match args.metric {
        Metric::Dep => {
            let gold = parse_dependency(&read(&args.gold)?)?;
            let pred = parse_dependency(&read(&args.pred)?)?;
            if gold.len() != pred.len() {
                return Err(CliError::Data(format!(
                    "gold has {} sentences, prediction {}",
                    gold.len(),
                    pred.len()
                )));
            }
            let counts: Result<Vec<_>, EvalError> = pool.install(|| {
                gold.par_iter()
                    .zip(pred.par_iter())
                    .map(|(g, p)| attachment_counts(g, p, &config))
                    .collect()
            });
            let counts = counts.map_err(|e| CliError::Data(e.to_string()))?;
            let (scored, heads, labels) = counts
                .iter()
                .fold((0, 0, 0), |(s, h, l), &(s2, h2, l2)| {
                    (s + s2, h + h2, l + l2)
                });
            let pct = |hit: usize| {
                if scored == 0 {
                    100.0
                } else {
                    100.0 * hit as f64 / scored as f64
                }
            };
            println!("scored tokens: {scored}");
            println!("uas={:.2}", pct(heads));
            println!("las={:.2}", pct(labels));
            Ok(())
        }
        Metric::Const | Metric::Disco => {
            let disco = args.metric == Metric::Disco;
            let gold = load_const_trees(&args.gold)?;
            let pred = load_const_trees(&args.pred)?;
            if gold.len() != pred.len() {
                return Err(CliError::Data(format!(
                    "gold has {} trees, prediction {}",
                    gold.len(),
                    pred.len()
                )));
            }
            let counts: Result<Vec<_>, EvalError> = pool.install(|| {
                gold.par_iter()
                    .zip(pred.par_iter())
                    .map(|(g, p)| bracketing_counts(g, p, &config, disco))
                    .collect()
            });
            let counts = counts.map_err(|e| CliError::Data(e.to_string()))?;
            let (matched, gold_total, pred_total) = counts
                .iter()
                .fold((0, 0, 0), |(m, g, p), &(m2, g2, p2)| {
                    (m + m2, g + g2, p + p2)
                });
            let (p, r, f1) = if gold_total == 0 && pred_total == 0 {
                (100.0, 100.0, 100.0)
            } else {
                let p = if pred_total == 0 {
                    0.0
                } else {
                    100.0 * matched as f64 / pred_total as f64
                };
                let r = if gold_total == 0 {
                    0.0
                } else {
                    100.0 * matched as f64 / gold_total as f64
                };
                let f1 = if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
                (p, r, f1)
            };
            println!(
                "matched {matched} of {gold_total} gold / {pred_total} predicted constituents"
            );
            println!("precision={p:.2}");
            println!("recall={r:.2}");
            if disco {
                println!("df1={f1:.2}");
            } else {
                println!("f1={f1:.2}");
            }
            Ok(())
        }
    }
}

fn load_const_trees(path: &Path) -> Result<Vec<ConstituentTree>, CliError> {
    let format = FileFormat::infer(path).unwrap_or(FileFormat::Bracketed);
    let text = read(path)?;
    match format {
        FileFormat::Conll => {
            let aug = parse_augmented(&text)?;
            Ok(aug
                .iter()
                .map(|a| encoding::decode(a).into_tree())
                .collect())
        }
        other => Ok(parse_constituent(&text, const_format(other))?),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_args(args: &[&str]) -> i32 {
        let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
        run(&argv)
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run_args(&["mrp", "oracle", "--bogus"]), 2);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run_args(&["mrp", "--help"]), 0);
        assert_eq!(run_args(&["mrp", "convert", "--help"]), 0);
    }

    #[test]
    fn missing_file_is_data_error() {
        assert_eq!(run_args(&["mrp", "oracle", "/nonexistent/file.conll"]), 1);
    }

    #[test]
    fn format_inference() {
        assert_eq!(
            FileFormat::infer(Path::new("x.mrg")),
            Some(FileFormat::Bracketed)
        );
        assert_eq!(
            FileFormat::infer(Path::new("x.discbracket")),
            Some(FileFormat::Discbracket)
        );
        assert_eq!(
            FileFormat::infer(Path::new("x.conll")),
            Some(FileFormat::Conll)
        );
        assert_eq!(FileFormat::infer(Path::new("x.bin")), None);
    }
}
