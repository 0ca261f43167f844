//! Implementations of the `gdparse` subcommands.

use std::path::{Path, PathBuf};

use gdparse_core::corpus::{PosColumn, parse_conllu, parse_gaze_tsv, write_conllu};
use gdparse_core::encoder::{self, DepLabel};
use gdparse_core::eval::{self, PunctPolicy};
use gdparse_core::gaze::{FeatureGroup, GazeFeature};

use crate::config::RunConfig;
use crate::{CliError, iohelp, model_file, pipeline, trainer};

/// `train`: runs a configured training job and writes the best checkpoint
/// and the per-epoch log into the output directory.
pub fn cmd_train(config_path: &Path, overrides: &[String]) -> Result<(), CliError> {
    let text = iohelp::read_text(config_path)?;
    let config = RunConfig::from_text(&text, overrides)?;
    std::fs::create_dir_all(&config.outdir)
        .map_err(|e| CliError::data(format!("creating {}: {e}", config.outdir.display())))?;

    let outcome = trainer::train_from_config(&config)?;

    let model_path = config.outdir.join("model.gdp");
    model_file::save(&model_path, &outcome.model, &outcome.tasks, outcome.pos_column)?;
    let log_path = config.outdir.join("train_log.tsv");
    iohelp::write_text(Some(&log_path), &trainer::render_log(&outcome))?;

    let best = &outcome.rows[outcome.best_epoch];
    let (uas, las) = match &best.dev {
        Some(score) => (format!("{:.2}", score.uas), format!("{:.2}", score.las)),
        None => ("-".to_string(), "-".to_string()),
    };
    println!(
        "best_epoch={}\tdev_uas={uas}\tdev_las={las}\tmodel={}\tlog={}",
        best.epoch,
        model_path.display(),
        log_path.display()
    );
    Ok(())
}

/// `predict`: parses a CoNLL-U file with a trained model. Only forms and PoS
/// tags are read; the command accepts no gaze input of any kind.
pub fn cmd_predict(
    model_path: &Path,
    input: &Path,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let loaded = model_file::load(model_path)?;
    let text = iohelp::read_text(input)?;
    let mut sentences = parse_conllu(&text, loaded.pos_column)
        .map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
    pipeline::predict_into(&loaded.model, &loaded.tasks, &mut sentences)?;
    iohelp::write_text(output, &write_conllu(&sentences, loaded.pos_column))
}

/// `encode`: prints the label sequence of each gold tree, one sentence per
/// line, labels as `offset@pos@deprel`.
pub fn cmd_encode(input: &Path, pos_column: PosColumn) -> Result<(), CliError> {
    let text = iohelp::read_text(input)?;
    let sentences = parse_conllu(&text, pos_column)
        .map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
    let mut out = String::new();
    for sentence in &sentences {
        let labels = encoder::encode(sentence)?;
        let rendered: Vec<String> = labels.iter().map(DepLabel::render).collect();
        out.push_str(&rendered.join(" "));
        out.push('\n');
    }
    iohelp::write_text(None, &out)
}

/// `decode`: reads label lines (as printed by `encode`) plus the CoNLL-U
/// file supplying forms and PoS tags, and writes the decoded trees.
pub fn cmd_decode(
    labels_path: &Path,
    input: &Path,
    pos_column: PosColumn,
    output: Option<&Path>,
) -> Result<(), CliError> {
    let text = iohelp::read_text(input)?;
    let mut sentences = parse_conllu(&text, pos_column)
        .map_err(|e| CliError::data(format!("{}: {e}", input.display())))?;
    let label_text = iohelp::read_text(labels_path)?;
    let lines: Vec<&str> = label_text.lines().collect();
    if lines.len() != sentences.len() {
        return Err(CliError::data(format!(
            "{} label lines for {} sentences",
            lines.len(),
            sentences.len()
        )));
    }
    for (sentence, line) in sentences.iter_mut().zip(lines) {
        let labels: Vec<DepLabel> = line
            .split_whitespace()
            .map(DepLabel::parse)
            .collect::<Result<_, _>>()?;
        let tree = encoder::decode(&labels, &sentence.pos_tags())?;
        for (token, (head, deprel)) in
            sentence.tokens.iter_mut().zip(tree.heads.iter().zip(tree.deprels))
        {
            token.head = Some(*head);
            token.deprel = deprel;
        }
    }
    iohelp::write_text(output, &write_conllu(&sentences, pos_column))
}

/// `featurize`: derives and discretizes gaze features from a gaze TSV,
/// printing one row per token.
pub fn cmd_featurize(
    gaze_path: &Path,
    feature_list: Option<&str>,
    aggregate: bool,
) -> Result<(), CliError> {
    let text = iohelp::read_text(gaze_path)?;
    let readings = parse_gaze_tsv(&text)
        .map_err(|e| CliError::data(format!("{}: {e}", gaze_path.display())))?;
    let features = match feature_list {
        None => GazeFeature::ALL.to_vec(),
        Some(list) => {
            let mut features = Vec::new();
            for name in list.split(',').map(str::trim).filter(|n| !n.is_empty()) {
                if let Some(group) = FeatureGroup::parse(name) {
                    features.extend_from_slice(group.features());
                } else if let Some(feature) = GazeFeature::parse(name) {
                    features.push(feature);
                } else {
                    return Err(CliError::config(format!("unknown gaze feature or group {name:?}")));
                }
            }
            features.dedup();
            features
        }
    };
    let table = pipeline::featurize_table(&readings, &features, aggregate)?;
    iohelp::write_text(None, &table)
}

/// `eval`: attachment scores of a prediction against gold, printed as one
/// TSV line `UAS LAS evaluated excluded`.
pub fn cmd_eval(gold: &Path, predicted: &Path, punct: PunctPolicy) -> Result<(), CliError> {
    // PoS exclusion policies read gold tags; the column choice only relabels
    // `pos`, so use UPOS for UD-style files and XPOS for PTB-style ones.
    let column = match punct {
        PunctPolicy::PtbPos => PosColumn::Xpos,
        _ => PosColumn::Upos,
    };
    let gold_sentences = parse_conllu(&iohelp::read_text(gold)?, column)
        .map_err(|e| CliError::data(format!("{}: {e}", gold.display())))?;
    let predicted_sentences = parse_conllu(&iohelp::read_text(predicted)?, column)
        .map_err(|e| CliError::data(format!("{}: {e}", predicted.display())))?;
    let score = eval::score(&gold_sentences, &predicted_sentences, punct)?;
    println!(
        "{:.2}\t{:.2}\t{}\t{}",
        score.uas, score.las, score.evaluated_tokens, score.excluded_tokens
    );
    Ok(())
}

/// Shared argument plumbing for optional output paths.
pub fn optional_path(path: &Option<PathBuf>) -> Option<&Path> {
    path.as_deref()
}
