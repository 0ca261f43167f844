use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gdparse::commands;
use gdparse::CliError;
use gdparse_core::corpus::PosColumn;
use gdparse_core::eval::PunctPolicy;

/// Dependency parsing as sequence labeling with eye-tracking features as
/// training-only auxiliary tasks.
#[derive(Parser)]
#[command(name = "gdparse", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a model from a run configuration file.
    Train {
        /// Path to the key = value configuration file.
        #[arg(long)]
        config: PathBuf,
        /// Override a config key, e.g. --set seed=7 (repeatable).
        #[arg(long = "set", value_name = "KEY=VALUE")]
        set: Vec<String>,
    },
    /// Parse a CoNLL-U file with a trained model (no gaze input).
    Predict {
        #[arg(long)]
        model: PathBuf,
        /// CoNLL-U input; `-` reads standard input.
        #[arg(long)]
        input: PathBuf,
        /// Output path; standard output when omitted.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Print the label encoding of gold trees, one sentence per line.
    Encode {
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "upos", value_parser = parse_pos_column)]
        pos_column: PosColumn,
    },
    /// Decode label lines back into trees over a CoNLL-U skeleton.
    Decode {
        /// File of label lines as printed by `encode`; `-` reads stdin.
        #[arg(long)]
        labels: PathBuf,
        /// CoNLL-U file supplying forms and PoS tags.
        #[arg(long)]
        input: PathBuf,
        #[arg(long, default_value = "upos", value_parser = parse_pos_column)]
        pos_column: PosColumn,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Derive and discretize gaze features from a gaze TSV.
    Featurize {
        #[arg(long)]
        gaze: PathBuf,
        /// Comma-separated feature or group names; all twelve when omitted.
        #[arg(long)]
        features: Option<String>,
        /// Average the readings of each sentence first.
        #[arg(long)]
        aggregate: bool,
    },
    /// Score predictions against gold (prints UAS, LAS, evaluated, excluded).
    Eval {
        #[arg(long)]
        gold: PathBuf,
        #[arg(long)]
        predicted: PathBuf,
        #[arg(long, default_value = "ud-deprel", value_parser = parse_punct)]
        punct: PunctPolicy,
    },
}

fn parse_pos_column(s: &str) -> Result<PosColumn, String> {
    PosColumn::parse(s).ok_or_else(|| format!("expected upos or xpos, got {s:?}"))
}

fn parse_punct(s: &str) -> Result<PunctPolicy, String> {
    PunctPolicy::parse(s).ok_or_else(|| format!("expected ud-deprel, ptb-pos or none, got {s:?}"))
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Train { config, set } => commands::cmd_train(&config, &set),
        Command::Predict { model, input, output } => {
            commands::cmd_predict(&model, &input, commands::optional_path(&output))
        }
        Command::Encode { input, pos_column } => commands::cmd_encode(&input, pos_column),
        Command::Decode { labels, input, pos_column, output } => {
            commands::cmd_decode(&labels, &input, pos_column, commands::optional_path(&output))
        }
        Command::Featurize { gaze, features, aggregate } => {
            commands::cmd_featurize(&gaze, features.as_deref(), aggregate)
        }
        Command::Eval { gold, predicted, punct } => commands::cmd_eval(&gold, &predicted, punct),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("GDPARSE_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gdparse: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
