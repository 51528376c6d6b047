//! Command-line interface: `train`, `evaluate`, `predict`, and the
//! `dataset` utilities.
//!
//! Every hyperparameter flag shares its spelling with the config-file key
//! (dashes for underscores), and flag values funnel through the same
//! parser, so `--batch-size 8` and a `batch_size=8` line behave
//! identically. Precedence is defaults < config file < flags; see
//! [`crate::config::resolve`].

use std::fs;
use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::checkpoint;
use crate::config::{self, CONFIG_DIR_VAR};
use crate::data::dataset::{Dataset, Format};
use crate::data::vocab::Vocab;
use crate::data::{generate_synthetic, load_embeddings, preprocess_with, split};
use crate::error::{Error, Result};
use crate::eval::{self, argmax_tie_low, ReportMeta};
use crate::layers::EmbeddingTable;
use crate::model::ModelParams;
use crate::rng::Rng;
use crate::training::{train, EmbeddingSource, TrainConfig};

const EXIT_CODE_HELP: &str = "EXIT CODES:
  0  success
  2  config or usage error (E_CONFIG)
  3  data or parse error (E_DATA)
  4  i/o error (E_IO)
  5  checkpoint error (E_CHECKPOINT)
  6  numeric error (E_NUMERIC)
  7  internal invariant violation (E_INTERNAL)";

/// Intent detection with self-attentive recurrent encoders.
#[derive(Debug, Parser)]
#[command(name = "sanintent", version, after_help = EXIT_CODE_HELP)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
#[allow(clippy::large_enum_variant)] // one short-lived value per process
pub enum Command {
    /// Train a model and write checkpoint, history, and resolved config.
    Train(TrainArgs),
    /// Score a trained model on a labeled dataset.
    Evaluate(EvaluateArgs),
    /// Classify utterances from the command line or stdin.
    Predict(PredictArgs),
    /// Dataset utilities: convert, synthesize, inspect.
    Dataset(DatasetArgs),
}

/// Hyperparameter overrides shared by the config file and the flags.
/// All values are parsed by the config layer so errors are uniform.
#[derive(Debug, Clone, Default, Args)]
pub struct Overrides {
    /// Adam step size.
    #[arg(long)]
    pub learning_rate: Option<String>,
    /// Examples per mini-batch.
    #[arg(long)]
    pub batch_size: Option<String>,
    /// Training epochs (the final epoch's parameters are kept).
    #[arg(long)]
    pub epochs: Option<String>,
    /// L2 penalty coefficient on the weight matrices.
    #[arg(long)]
    pub l2_gamma: Option<String>,
    /// LSTM units per direction.
    #[arg(long)]
    pub hidden_units: Option<String>,
    /// Master seed for init, shuffling, and splitting.
    #[arg(long)]
    pub seed: Option<String>,
    /// Encoder architecture: lstm | bilstm.
    #[arg(long)]
    pub arch: Option<String>,
    /// Word-vector file, or 'random' for trainable random init.
    #[arg(long)]
    pub embeddings: Option<String>,
    /// Freeze the embedding table: true | false.
    #[arg(long)]
    pub freeze_embeddings: Option<String>,
    /// Embedding width; a pretrained vector file must match it.
    #[arg(long)]
    pub embedding_dim: Option<String>,
    /// Batch cross-entropy reduction: sum | mean.
    #[arg(long)]
    pub loss_reduction: Option<String>,
    /// Lowercase text during preprocessing: true | false.
    #[arg(long)]
    pub lowercase: Option<String>,
    /// Adam first-moment decay.
    #[arg(long)]
    pub beta1: Option<String>,
    /// Adam second-moment decay.
    #[arg(long)]
    pub beta2: Option<String>,
    /// Adam denominator fuzz.
    #[arg(long)]
    pub epsilon: Option<String>,
    /// Fraction of the corpus held out for testing.
    #[arg(long)]
    pub test_fraction: Option<String>,
    /// Fraction of the non-test remainder held out for validation.
    #[arg(long)]
    pub val_fraction: Option<String>,
}

impl Overrides {
    /// `(key, value)` pairs for the flags that were given, in declaration
    /// order.
    fn pairs(&self) -> Vec<(String, String)> {
        let fields: [(&str, &Option<String>); 17] = [
            ("learning_rate", &self.learning_rate),
            ("batch_size", &self.batch_size),
            ("epochs", &self.epochs),
            ("l2_gamma", &self.l2_gamma),
            ("hidden_units", &self.hidden_units),
            ("seed", &self.seed),
            ("arch", &self.arch),
            ("embeddings", &self.embeddings),
            ("freeze_embeddings", &self.freeze_embeddings),
            ("embedding_dim", &self.embedding_dim),
            ("loss_reduction", &self.loss_reduction),
            ("lowercase", &self.lowercase),
            ("beta1", &self.beta1),
            ("beta2", &self.beta2),
            ("epsilon", &self.epsilon),
            ("test_fraction", &self.test_fraction),
            ("val_fraction", &self.val_fraction),
        ];
        fields
            .into_iter()
            .filter_map(|(k, v)| v.clone().map(|v| (k.to_string(), v)))
            .collect()
    }
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Config file (key=value lines). Without it, $SANINTENT_CONFIG_DIR/
    /// sanintent.cfg is used when present.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Labeled corpus to train on.
    #[arg(long)]
    pub dataset: Option<PathBuf>,
    /// Input format: jsonl | csv | snips.
    #[arg(long)]
    pub format: Option<String>,
    /// Output directory for checkpoint.bin, history.jsonl, resolved.cfg.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Trained checkpoint to score.
    #[arg(long)]
    pub model: PathBuf,
    /// Labeled corpus to score on.
    #[arg(long)]
    pub dataset: PathBuf,
    /// Input format: jsonl | csv | snips.
    #[arg(long, default_value = "jsonl")]
    pub format: String,
    /// If given, write report.txt and report.jsonl here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained checkpoint.
    #[arg(long)]
    pub model: PathBuf,
    /// Also print each token's attention weight.
    #[arg(long)]
    pub attention: bool,
    /// Utterances to classify; stdin lines when omitted.
    pub utterances: Vec<String>,
}

#[derive(Debug, Args)]
pub struct DatasetArgs {
    #[command(subcommand)]
    pub command: DatasetCommand,
}

#[derive(Debug, Subcommand)]
pub enum DatasetCommand {
    /// Re-encode a corpus between formats.
    Convert(ConvertArgs),
    /// Generate a deterministic synthetic smart-home corpus.
    Synth(SynthArgs),
    /// Print corpus statistics.
    Stats(StatsArgs),
}

#[derive(Debug, Args)]
pub struct ConvertArgs {
    /// Input corpus.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format: jsonl | csv | snips.
    #[arg(long, default_value = "jsonl")]
    pub from: String,
    /// Output path.
    #[arg(long)]
    pub output: PathBuf,
    /// Output format: jsonl | csv.
    #[arg(long, default_value = "jsonl")]
    pub to: String,
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of intents (2 to 12).
    #[arg(long, default_value_t = 6)]
    pub intents: usize,
    /// Examples per intent.
    #[arg(long, default_value_t = 100)]
    pub per_intent: usize,
    /// Generator seed.
    #[arg(long, default_value_t = 11)]
    pub seed: u64,
    /// Output path (jsonl).
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct StatsArgs {
    /// Corpus to inspect.
    #[arg(long)]
    pub input: PathBuf,
    /// Input format: jsonl | csv | snips.
    #[arg(long, default_value = "jsonl")]
    pub format: String,
}

/// Dispatches a parsed command line.
pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train(args) => cmd_train(args),
        Command::Evaluate(args) => cmd_evaluate(args),
        Command::Predict(args) => cmd_predict(args),
        Command::Dataset(args) => match args.command {
            DatasetCommand::Convert(a) => cmd_convert(a),
            DatasetCommand::Synth(a) => cmd_synth(a),
            DatasetCommand::Stats(a) => cmd_stats(a),
        },
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut overrides = args.overrides.pairs();
    if let Some(d) = &args.dataset {
        overrides.push(("dataset".into(), d.display().to_string()));
    }
    if let Some(f) = &args.format {
        overrides.push(("format".into(), f.clone()));
    }
    if let Some(o) = &args.out_dir {
        overrides.push(("out_dir".into(), o.display().to_string()));
    }
    let cfg = config::resolve(
        args.config.as_deref(),
        std::env::var_os(CONFIG_DIR_VAR),
        &overrides,
    )?;
    let dataset_path = cfg.dataset.clone().ok_or_else(|| {
        Error::Config("no dataset given (use --dataset or a config file)".into())
    })?;

    let full = Dataset::load(&dataset_path, cfg.format, cfg.train.lowercase)?;
    println!(
        "loaded {} examples, {} intents from {}",
        full.len(),
        full.labels.len(),
        dataset_path.display()
    );

    let (train_ex, val_ex, test_ex, warnings) =
        split(&full.examples, cfg.split_ratios(), cfg.train.seed)?;
    for w in &warnings {
        eprintln!("warning: {w}");
    }
    println!(
        "split: {} train / {} val / {} test",
        train_ex.len(),
        val_ex.len(),
        test_ex.len()
    );

    // The vocabulary comes from the training split only, so held-out
    // words hit <unk> exactly as unseen production words would.
    let vocab = Vocab::build(
        train_ex
            .iter()
            .map(|e| e.tokens.iter().map(|t| t.as_str())),
    );
    let mut train_ds = Dataset { examples: train_ex, labels: full.labels.clone() };
    let mut val_ds = Dataset { examples: val_ex, labels: full.labels.clone() };
    let mut test_ds = Dataset { examples: test_ex, labels: full.labels.clone() };
    train_ds.encode(&vocab);
    val_ds.encode(&vocab);
    test_ds.encode(&vocab);

    // Embedding init draws from seed+1 so its stream never overlaps the
    // model-init stream inside `train` (which uses the seed itself).
    let mut emb_rng = Rng::new(cfg.train.seed.wrapping_add(1));
    let frozen = cfg.train.embeddings_frozen();
    let table = match &cfg.train.embedding_source {
        EmbeddingSource::Random => {
            EmbeddingTable::random(vocab.size(), cfg.train.embedding_dim, frozen, &mut emb_rng)
        }
        EmbeddingSource::Pretrained(path) => {
            let loaded =
                load_embeddings(path, &vocab, cfg.train.embedding_dim, frozen, &mut emb_rng)?;
            println!(
                "embeddings: {} of {} vocabulary tokens covered ({:.1}%), {} random-filled",
                loaded.found,
                loaded.found + loaded.missing,
                100.0 * loaded.coverage,
                loaded.missing
            );
            loaded.table
        }
    };

    let outcome = train(&cfg.train, table, &train_ds, &val_ds)?;
    for row in &outcome.history {
        println!(
            "epoch {:>3}/{}  train_loss {:.6}  val_acc {:.4}",
            row.epoch,
            cfg.train.epochs,
            row.train_loss,
            row.val_accuracy
        );
    }

    fs::create_dir_all(&cfg.out_dir)?;
    let ckpt_path = cfg.out_dir.join("checkpoint.bin");
    checkpoint::save(&ckpt_path, &outcome.model, &cfg.train, &full.labels, &vocab)?;

    let mut history = fs::File::create(cfg.out_dir.join("history.jsonl"))?;
    for row in &outcome.history {
        let line = serde_json::to_string(row)
            .map_err(|e| Error::Data(format!("cannot serialize history row: {e}")))?;
        writeln!(history, "{line}")?;
    }
    fs::write(cfg.out_dir.join("resolved.cfg"), cfg.to_kv())?;

    if !test_ds.is_empty() {
        let meta = report_meta(&dataset_path, &ckpt_path, &cfg.train);
        let report = eval::evaluate(&outcome.model, &test_ds, meta)?;
        println!(
            "test: accuracy {:.4}  micro_f1 {:.4}  macro_f1 {:.4}  overall_f1 {:.4}",
            report.accuracy, report.micro_f1, report.macro_f1, report.overall_f1
        );
    }
    println!("wrote {}", ckpt_path.display());
    Ok(())
}

fn report_meta(dataset: &Path, model: &Path, cfg: &TrainConfig) -> ReportMeta {
    ReportMeta {
        dataset: dataset.display().to_string(),
        model: model.display().to_string(),
        seed: cfg.seed,
        config_hash: format!("{:016x}", config::fnv1a(cfg.to_kv().as_bytes())),
    }
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.model)?;
    let mut ds = Dataset::load(&args.dataset, Format::parse(&args.format)?, ckpt.config.lowercase)?;
    ds.relabel(&ckpt.labels)?;
    ds.encode(&ckpt.vocab);

    let meta = report_meta(&args.dataset, &args.model, &ckpt.config);
    let report = eval::evaluate(&ckpt.model, &ds, meta)?;
    print!("{}", report.render_text());

    if let Some(dir) = &args.out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), report.render_text())?;
        fs::write(dir.join("report.jsonl"), format!("{}\n", report.to_json_line()?))?;
        println!("wrote {}", dir.join("report.txt").display());
    }
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let ckpt = checkpoint::load(&args.model)?;
    let inputs: Vec<String> = if args.utterances.is_empty() {
        std::io::stdin()
            .lock()
            .lines()
            .collect::<std::io::Result<Vec<_>>>()?
            .into_iter()
            .filter(|l| !l.trim().is_empty())
            .collect()
    } else {
        args.utterances
    };

    for text in &inputs {
        let line = predict_line(&ckpt.model, &ckpt.vocab, &ckpt.labels, &ckpt.config, text, args.attention)?;
        println!("{line}");
    }
    Ok(())
}

/// One prediction, rendered as `intent<TAB>probability` plus optional
/// `token=weight` attention columns.
pub fn predict_line(
    model: &ModelParams,
    vocab: &Vocab,
    labels: &[String],
    cfg: &TrainConfig,
    text: &str,
    attention: bool,
) -> Result<String> {
    let tokens = preprocess_with(text, cfg.lowercase);
    let ids = vocab.encode(&tokens);
    let fwd = model.forward(&ids)?;
    let pred = argmax_tie_low(&fwd.probs);
    let mut line = format!("{}\t{:.6}", labels[pred], fwd.probs[pred]);
    if attention {
        for (tok, w) in tokens.iter().zip(&fwd.weights) {
            line.push_str(&format!("\t{tok}={w:.4}"));
        }
    }
    Ok(line)
}

fn cmd_convert(args: ConvertArgs) -> Result<()> {
    let from = Format::parse(&args.from)?;
    let to = Format::parse(&args.to)?;
    let ds = Dataset::load(&args.input, from, true)?;
    ds.write(&args.output, to)?;
    println!(
        "converted {} examples ({} -> {}) to {}",
        ds.len(),
        from.as_str(),
        to.as_str(),
        args.output.display()
    );
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    let ds = generate_synthetic(args.intents, args.per_intent, args.seed)?;
    ds.write_jsonl(&args.output)?;
    println!(
        "wrote {} examples across {} intents to {}",
        ds.len(),
        ds.labels.len(),
        args.output.display()
    );
    Ok(())
}

fn cmd_stats(args: StatsArgs) -> Result<()> {
    let ds = Dataset::load(&args.input, Format::parse(&args.format)?, true)?;
    let vocab = Vocab::build(
        ds.examples
            .iter()
            .map(|e| e.tokens.iter().map(|t| t.as_str())),
    );
    let max_len = ds.examples.iter().map(|e| e.tokens.len()).max().unwrap_or(0);
    let mean_len = if ds.is_empty() {
        0.0
    } else {
        ds.examples.iter().map(|e| e.tokens.len()).sum::<usize>() as f64 / ds.len() as f64
    };
    println!("examples: {}", ds.len());
    println!("intents: {}", ds.labels.len());
    println!("vocabulary: {} tokens (including <pad>, <unk>)", vocab.size());
    println!("tokens per utterance: mean {mean_len:.2}, max {max_len}");
    for (label, count) in ds.stats() {
        println!("  {label}\t{count}");
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn command_line_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn override_pairs_follow_declaration_order() {
        let ov = Overrides {
            batch_size: Some("8".into()),
            seed: Some("3".into()),
            ..Overrides::default()
        };
        assert_eq!(
            ov.pairs(),
            vec![
                ("batch_size".to_string(), "8".to_string()),
                ("seed".to_string(), "3".to_string()),
            ]
        );
    }

    #[test]
    fn flags_mirror_config_keys() {
        // Every training-config key except the file-only alias spelling
        // must exist as a flag, so docs can say "same names, dashes".
        let cmd = Cli::command();
        let train = cmd.find_subcommand("train").unwrap();
        let flags: Vec<String> = train
            .get_arguments()
            .map(|a| a.get_id().to_string())
            .collect();
        for key in TrainConfig::KEYS {
            assert!(
                flags.iter().any(|f| f == key),
                "config key '{key}' has no matching train flag"
            );
        }
    }
}
