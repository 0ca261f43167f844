//! Training orchestration: corpus loading and splitting, vocabulary and
//! discretizer fitting, the epoch loop, and best-checkpoint selection.

use std::path::Path;

use rand::seq::SliceRandom;

use gdparse_core::corpus::{
    self, AlignedPair, GazeReading, PosColumn, Sentence, parse_conllu, parse_gaze_tsv,
};
use gdparse_core::encoder::{self, DepLabel, LabelVocabs};
use gdparse_core::eval::{self, ParseScore};
use gdparse_core::gaze::{self, Discretizer, GazeFeature, GazeVector};
use gdparse_core::mtl::{self, Batch, BatchSource, Instance, ParseGold, TaskSpec};
use gdparse_core::nn::{Graph, ModelParams, Sgd, TokenInput};
use gdparse_core::rng;
use gdparse_core::vocab::Vocab;

use crate::config::{Mode, RunConfig};
use crate::{CliError, iohelp, pipeline};

/// One line of the per-epoch training log.
#[derive(Clone, Debug)]
pub struct EpochRow {
    /// 1-based epoch number.
    pub epoch: usize,
    /// Mean combined loss over the epoch's batches.
    pub train_loss: f64,
    /// Dev attachment scores; absent when the split has no dev portion.
    pub dev: Option<ParseScore>,
    /// Dev accuracy per auxiliary task, where gaze gold exists.
    pub aux_accuracy: Vec<Option<f64>>,
}

/// A finished training run.
pub struct TrainOutcome {
    /// The selected (highest dev LAS) checkpoint.
    pub model: ModelParams,
    pub tasks: Vec<TaskSpec>,
    pub rows: Vec<EpochRow>,
    /// 0-based index into `rows` of the selected checkpoint.
    pub best_epoch: usize,
    pub pos_column: PosColumn,
}

/// Runs a full training job described by `config`.
pub fn train_from_config(config: &RunConfig) -> Result<TrainOutcome, CliError> {
    let data = prepare(config)?;
    run_epochs(config, data)
}

/// Assembled training data and the freshly initialized model.
struct Prepared {
    model: ModelParams,
    specs: Vec<TaskSpec>,
    parse_pool: Vec<Instance>,
    gaze_pool: Vec<Instance>,
    dev_sentences: Vec<Sentence>,
    dev_gaze: Vec<Instance>,
}

/// A corpus side before id-mapping: tokens plus optional raw gold.
struct RawInstance {
    tokens: Vec<TokenInput>,
    parse_labels: Option<Vec<DepLabel>>,
    gaze_vectors: Option<Vec<GazeVector>>,
}

fn load_treebank(path: &Path, pos_column: PosColumn) -> Result<Vec<Sentence>, CliError> {
    let text = iohelp::read_text(path)?;
    parse_conllu(&text, pos_column)
        .map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

fn load_readings(path: &Path) -> Result<Vec<GazeReading>, CliError> {
    let text = iohelp::read_text(path)?;
    parse_gaze_tsv(&text).map_err(|e| CliError::data(format!("{}: {e}", path.display())))
}

/// The parsing corpus split into train/dev sentence lists, plus the aligned
/// gaze pairs of each side when a gaze TSV accompanies it.
struct ParseSide {
    train: Vec<Sentence>,
    dev: Vec<Sentence>,
    train_pairs: Vec<(usize, GazeReading, Vec<GazeVector>)>,
    dev_pairs: Vec<(usize, GazeReading, Vec<GazeVector>)>,
}

fn split_parse_corpus(config: &RunConfig) -> Result<ParseSide, CliError> {
    let mut side = ParseSide { train: Vec::new(), dev: Vec::new(), train_pairs: Vec::new(), dev_pairs: Vec::new() };

    // Load sentences, either pre-split or as one file to split.
    let (sentences, presplit_train_len) = match (&config.treebank, &config.train) {
        (Some(path), None) => (load_treebank(path, config.pos_column)?, None),
        (None, Some(train_path)) => {
            let mut sentences = load_treebank(train_path, config.pos_column)?;
            let train_len = sentences.len();
            if let Some(dev_path) = &config.dev {
                sentences.append(&mut load_treebank(dev_path, config.pos_column)?);
            }
            (sentences, Some(train_len))
        }
        _ => unreachable!("validated config names exactly one parsing corpus"),
    };

    let readings = match &config.gaze {
        Some(path) if config.mode != Mode::Disjoint => load_readings(path)?,
        _ => Vec::new(),
    };

    if readings.is_empty() {
        // Parsing-only instances, one per sentence.
        match presplit_train_len {
            Some(train_len) => {
                let mut sentences = sentences;
                side.dev = sentences.split_off(train_len);
                side.train = sentences;
            }
            None => {
                let ids: Vec<&str> = sentences.iter().map(|s| s.sent_id.as_str()).collect();
                let split = corpus::split(&ids, config.split, config.seed)?;
                side.train = split.train.iter().map(|&i| sentences[i].clone()).collect();
                side.dev = split.dev.iter().map(|&i| sentences[i].clone()).collect();
            }
        }
        return Ok(side);
    }

    // Parallel data: the instance unit is a (sentence, reading) pair.
    let alignment = corpus::align(&sentences, &readings)?;
    if !alignment.parse_only.is_empty() {
        log::warn!(
            "{} sentences have no gaze reading and are excluded from parallel training",
            alignment.parse_only.len()
        );
    }
    let mut readings = readings;
    let take = |pairs: &[AlignedPair], readings: &mut Vec<GazeReading>, indices: &[usize]| {
        indices
            .iter()
            .map(|&i| {
                let pair = pairs[i];
                let reading = std::mem::replace(
                    &mut readings[pair.reading],
                    GazeReading {
                        sent_id: String::new(),
                        participant_id: String::new(),
                        records: Vec::new(),
                    },
                );
                let vectors = gaze::derive(&reading);
                (pair.sentence, reading, vectors)
            })
            .collect::<Vec<_>>()
    };

    let (train_idx, dev_idx) = match presplit_train_len {
        Some(train_len) => {
            let train: Vec<usize> = (0..alignment.pairs.len())
                .filter(|&i| alignment.pairs[i].sentence < train_len)
                .collect();
            let dev: Vec<usize> = (0..alignment.pairs.len())
                .filter(|&i| alignment.pairs[i].sentence >= train_len)
                .collect();
            (train, dev)
        }
        None => {
            let ids: Vec<&str> = alignment
                .pairs
                .iter()
                .map(|p| sentences[p.sentence].sent_id.as_str())
                .collect();
            let split = corpus::split(&ids, config.split, config.seed)?;
            (split.train, split.dev)
        }
    };
    side.train_pairs = take(&alignment.pairs, &mut readings, &train_idx);
    side.dev_pairs = take(&alignment.pairs, &mut readings, &dev_idx);

    // Unique sentences of each portion, in order of first appearance.
    let uniques = |pair_list: &[(usize, GazeReading, Vec<GazeVector>)]| {
        let mut seen = std::collections::BTreeSet::new();
        pair_list
            .iter()
            .filter(|(s, _, _)| seen.insert(*s))
            .map(|(s, _, _)| sentences[*s].clone())
            .collect::<Vec<Sentence>>()
    };
    side.train = uniques(&side.train_pairs);
    side.dev = uniques(&side.dev_pairs);

    // Remap pair sentence indices onto the unique lists.
    let remap = |pair_list: Vec<(usize, GazeReading, Vec<GazeVector>)>, uniques: &[Sentence]| {
        pair_list
            .into_iter()
            .map(|(s, reading, vectors)| {
                let pos = uniques
                    .iter()
                    .position(|u| u.sent_id == sentences[s].sent_id)
                    .expect("unique list covers every pair");
                (pos, reading, vectors)
            })
            .collect::<Vec<_>>()
    };
    side.train_pairs = remap(side.train_pairs, &side.train);
    side.dev_pairs = remap(side.dev_pairs, &side.dev);
    Ok(side)
}

/// Builds raw gaze-side instances for one split portion, honouring the
/// aggregation switch.
fn gaze_raw_instances(
    sentences: &[Sentence],
    pairs: &[(usize, GazeReading, Vec<GazeVector>)],
    aggregate: bool,
    with_parse: bool,
) -> Result<Vec<RawInstance>, CliError> {
    let tokens_of = |sentence: &Sentence| {
        sentence
            .tokens
            .iter()
            .map(|t| TokenInput::new(&t.form, &t.pos))
            .collect::<Vec<TokenInput>>()
    };
    let labels_of = |sentence: &Sentence| -> Result<Option<Vec<DepLabel>>, CliError> {
        if with_parse { Ok(Some(encoder::encode(sentence)?)) } else { Ok(None) }
    };
    if aggregate {
        let mut order: Vec<usize> = Vec::new();
        let mut grouped: std::collections::BTreeMap<usize, Vec<Vec<GazeVector>>> =
            std::collections::BTreeMap::new();
        for (sidx, _, vectors) in pairs {
            let entry = grouped.entry(*sidx).or_default();
            if entry.is_empty() {
                order.push(*sidx);
            }
            entry.push(vectors.clone());
        }
        order
            .into_iter()
            .map(|sidx| {
                let sentence = &sentences[sidx];
                Ok(RawInstance {
                    tokens: tokens_of(sentence),
                    parse_labels: labels_of(sentence)?,
                    gaze_vectors: Some(gaze::average(&grouped[&sidx])),
                })
            })
            .collect()
    } else {
        pairs
            .iter()
            .map(|(sidx, _, vectors)| {
                let sentence = &sentences[*sidx];
                Ok(RawInstance {
                    tokens: tokens_of(sentence),
                    parse_labels: labels_of(sentence)?,
                    gaze_vectors: Some(vectors.clone()),
                })
            })
            .collect()
    }
}

fn prepare(config: &RunConfig) -> Result<Prepared, CliError> {
    let parse_side = split_parse_corpus(config)?;
    let features: Vec<GazeFeature> = config.tasks.iter().map(|&(f, _)| f).collect();

    // Raw instances per pool.
    let mut parse_raw: Vec<RawInstance> = Vec::new();
    let mut gaze_raw: Vec<RawInstance> = Vec::new();
    let mut dev_gaze_raw: Vec<RawInstance> = Vec::new();

    match config.mode {
        Mode::Parallel | Mode::Baseline => {
            if parse_side.train_pairs.is_empty() {
                // Parsing-only training (no gaze TSV configured).
                for sentence in &parse_side.train {
                    parse_raw.push(RawInstance {
                        tokens: sentence
                            .tokens
                            .iter()
                            .map(|t| TokenInput::new(&t.form, &t.pos))
                            .collect(),
                        parse_labels: Some(encoder::encode(sentence)?),
                        gaze_vectors: None,
                    });
                }
            } else {
                parse_raw = gaze_raw_instances(
                    &parse_side.train,
                    &parse_side.train_pairs,
                    config.gaze_aggregate,
                    true,
                )?;
                dev_gaze_raw = gaze_raw_instances(
                    &parse_side.dev,
                    &parse_side.dev_pairs,
                    config.gaze_aggregate,
                    false,
                )?;
            }
        }
        Mode::Disjoint => {
            for sentence in &parse_side.train {
                parse_raw.push(RawInstance {
                    tokens: sentence
                        .tokens
                        .iter()
                        .map(|t| TokenInput::new(&t.form, &t.pos))
                        .collect(),
                    parse_labels: Some(encoder::encode(sentence)?),
                    gaze_vectors: None,
                });
            }
            let gaze_sentences = load_treebank(
                config.gaze_treebank.as_ref().expect("validated"),
                config.gaze_pos_column.unwrap_or(config.pos_column),
            )?;
            let readings = load_readings(config.gaze.as_ref().expect("validated"))?;
            let alignment = corpus::align(&gaze_sentences, &readings)?;
            let ids: Vec<&str> = alignment
                .pairs
                .iter()
                .map(|p| gaze_sentences[p.sentence].sent_id.as_str())
                .collect();
            let split = corpus::split(&ids, config.gaze_split, config.seed)?;
            let collect = |indices: &[usize]| {
                indices
                    .iter()
                    .map(|&i| {
                        let pair = alignment.pairs[i];
                        let reading = readings[pair.reading].clone();
                        let vectors = gaze::derive(&reading);
                        (pair.sentence, reading, vectors)
                    })
                    .collect::<Vec<_>>()
            };
            gaze_raw = gaze_raw_instances(
                &gaze_sentences,
                &collect(&split.train),
                config.gaze_aggregate,
                false,
            )?;
            dev_gaze_raw = gaze_raw_instances(
                &gaze_sentences,
                &collect(&split.dev),
                config.gaze_aggregate,
                false,
            )?;
        }
    }

    if parse_raw.is_empty() {
        return Err(CliError::config(
            "the training portion of the parsing corpus is empty; check split ratios and data",
        ));
    }

    // Vocabularies over everything the shared encoder will see in training.
    let mut word_vocab = Vocab::new();
    let mut char_vocab = Vocab::new();
    let mut pos_vocab = Vocab::new();
    let mut buf = [0u8; 4];
    for raw in parse_raw.iter().chain(&gaze_raw) {
        for token in &raw.tokens {
            word_vocab.intern(&token.form);
            pos_vocab.intern(&token.pos);
            for c in token.form.chars() {
                char_vocab.intern(c.encode_utf8(&mut buf));
            }
        }
    }

    // Parse label vocabularies over the training trees.
    let label_vocabs: LabelVocabs = encoder::label_vocab(
        parse_raw.iter().filter_map(|r| r.parse_labels.as_deref()),
    )?;

    // Discretizer and auxiliary label vocabularies over the training gaze
    // vectors.
    let gaze_training_vectors: Vec<GazeVector> = parse_raw
        .iter()
        .chain(&gaze_raw)
        .filter_map(|r| r.gaze_vectors.as_ref())
        .flat_map(|v| v.iter().copied())
        .collect();
    let discretizer: Option<Discretizer> = if features.is_empty() {
        None
    } else {
        Some(gaze::fit_discretizer(&gaze_training_vectors).map_err(|e| {
            CliError::config(format!("cannot fit the gaze discretizer: {e}"))
        })?)
    };
    let mut aux_vocabs: Vec<Vocab> = features.iter().map(|_| Vocab::new()).collect();
    if let Some(disc) = &discretizer {
        for raw in parse_raw.iter().chain(&gaze_raw) {
            if let Some(vectors) = &raw.gaze_vectors {
                for vector in vectors {
                    let labels = gaze::discretize(vector, disc, &features);
                    for (slot, (_, label)) in labels.iter().enumerate() {
                        aux_vocabs[slot].intern(label);
                    }
                }
            }
        }
    }

    // Task list and matching head list.
    let mut specs = vec![TaskSpec::parse_pair(), TaskSpec::parse_rel()];
    for &(feature, weight) in &config.tasks {
        specs.push(TaskSpec::gaze(feature, weight));
    }
    let mut head_specs = vec![
        ("parse-pair".to_string(), label_vocabs.pairs.clone()),
        ("parse-rel".to_string(), label_vocabs.rels.clone()),
    ];
    for (&(feature, _), vocab) in config.tasks.iter().zip(&aux_vocabs) {
        head_specs.push((feature.name().to_string(), vocab.clone()));
    }

    let mut model = ModelParams::new(
        config.hyper,
        config.seed,
        word_vocab,
        char_vocab,
        pos_vocab,
        head_specs,
        discretizer.clone(),
    )
    .map_err(CliError::config)?;

    if let Some(path) = &config.word_embeddings {
        let loaded = load_word_embeddings(&mut model, path)?;
        log::info!("loaded {loaded} pretrained word embedding rows from {}", path.display());
    }

    // Materialize instances with vocabulary ids.
    let finish = |raw: Vec<RawInstance>| -> Vec<Instance> {
        raw.into_iter()
            .map(|r| {
                let parse = r.parse_labels.map(|labels| ParseGold {
                    pair_ids: labels
                        .iter()
                        .map(|l| label_vocabs.pairs.lookup(&l.pair_entry()))
                        .collect(),
                    rel_ids: labels.iter().map(|l| label_vocabs.rels.lookup(&l.deprel)).collect(),
                });
                let gaze_ids = match (&discretizer, r.gaze_vectors) {
                    (Some(disc), Some(vectors)) if !features.is_empty() => {
                        let mut per_task: Vec<Vec<usize>> =
                            features.iter().map(|_| Vec::new()).collect();
                        for vector in &vectors {
                            let labels = gaze::discretize(vector, disc, &features);
                            for (slot, (_, label)) in labels.iter().enumerate() {
                                per_task[slot].push(aux_vocabs[slot].lookup(label));
                            }
                        }
                        Some(per_task)
                    }
                    _ => None,
                };
                Instance { tokens: r.tokens, parse, gaze: gaze_ids }
            })
            .collect()
    };

    Ok(Prepared {
        model,
        specs,
        parse_pool: finish(parse_raw),
        gaze_pool: finish(gaze_raw),
        dev_sentences: parse_side.dev,
        dev_gaze: finish(dev_gaze_raw),
    })
}

/// Loads a plain-text embedding table (`word v1 v2 ...` per line) into the
/// model's word embedding matrix. Words outside the vocabulary are skipped.
fn load_word_embeddings(model: &mut ModelParams, path: &Path) -> Result<usize, CliError> {
    let text = iohelp::read_text(path)?;
    let mut loaded = 0usize;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut parts = line.split_whitespace();
        let word = parts.next().expect("non-empty line");
        let values: Vec<f64> = parts
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| {
                CliError::data(format!("{} line {}: {e}", path.display(), lineno + 1))
            })?;
        if model
            .set_word_embedding(word, &values)
            .map_err(|e| CliError::data(format!("{} line {}: {e}", path.display(), lineno + 1)))?
        {
            loaded += 1;
        }
    }
    Ok(loaded)
}

fn run_epochs(config: &RunConfig, data: Prepared) -> Result<TrainOutcome, CliError> {
    let Prepared { mut model, specs, parse_pool, gaze_pool, dev_sentences, dev_gaze } = data;
    let hyper = config.hyper;
    let sgd = Sgd { lr0: hyper.lr0, decay: hyper.decay, momentum: hyper.momentum };
    let mut schedule_rng = rng::stream(config.seed, rng::SCHEDULE);
    let mut dropout_rng = rng::stream(config.seed, rng::DROPOUT);

    let mut rows: Vec<EpochRow> = Vec::with_capacity(hyper.max_epochs);
    let mut best: Option<(usize, f64, ModelParams)> = None;

    for epoch in 0..hyper.max_epochs {
        let mut losses: Vec<f64> = Vec::new();
        let run_batch = |model: &mut ModelParams,
                             batch: Batch<'_>,
                             dropout_rng: &mut rand_chacha::ChaCha8Rng,
                             losses: &mut Vec<f64>|
         -> Result<(), CliError> {
            let grads = {
                let mut graph = Graph::new(model.store());
                let loss = mtl::batch_loss(&mut graph, model, &batch, &specs, true, dropout_rng)?;
                losses.push(graph.scalar(loss));
                graph.backward(loss)
            };
            sgd.step(model.store_mut(), &grads, epoch);
            Ok(())
        };

        match config.mode {
            Mode::Parallel | Mode::Baseline => {
                let mut order: Vec<usize> = (0..parse_pool.len()).collect();
                order.shuffle(&mut schedule_rng);
                for chunk in order.chunks(hyper.batch_size) {
                    let batch = Batch {
                        instances: chunk.iter().map(|&i| &parse_pool[i]).collect(),
                        source: BatchSource::Parallel,
                    };
                    run_batch(&mut model, batch, &mut dropout_rng, &mut losses)?;
                }
            }
            Mode::Disjoint => {
                let planned = mtl::schedule_disjoint_with(
                    parse_pool.len(),
                    gaze_pool.len(),
                    hyper.batch_size,
                    &mut schedule_rng,
                )?;
                for plan in planned {
                    let pool = match plan.source {
                        BatchSource::ParseCorpus => &parse_pool,
                        BatchSource::GazeCorpus => &gaze_pool,
                        BatchSource::Parallel => unreachable!("scheduler emits corpus batches"),
                    };
                    let batch = Batch {
                        instances: plan.indices.iter().map(|&i| &pool[i]).collect(),
                        source: plan.source,
                    };
                    run_batch(&mut model, batch, &mut dropout_rng, &mut losses)?;
                }
            }
        }

        let train_loss = losses.iter().sum::<f64>() / losses.len().max(1) as f64;
        let dev = if dev_sentences.is_empty() {
            None
        } else {
            let predicted = pipeline::predicted_copy(&model, &specs, &dev_sentences)?;
            Some(eval::score(&dev_sentences, &predicted, config.punct)?)
        };
        let aux_accuracy = pipeline::aux_accuracies(&model, &specs, &dev_gaze)?;

        if let Some(score) = &dev {
            let improved = best.as_ref().is_none_or(|(_, las, _)| score.las > *las);
            if improved {
                best = Some((epoch, score.las, model.clone()));
            }
            log::info!(
                "epoch {}: loss {train_loss:.6}, dev UAS {:.2}, dev LAS {:.2}",
                epoch + 1,
                score.uas,
                score.las
            );
        } else {
            log::info!("epoch {}: loss {train_loss:.6} (no dev set)", epoch + 1);
        }
        rows.push(EpochRow { epoch: epoch + 1, train_loss, dev, aux_accuracy });
    }

    let (best_epoch, best_model) = match best {
        Some((epoch, _, model)) => (epoch, model),
        // Without a dev set the final parameters are the checkpoint.
        None => (rows.len().saturating_sub(1), model),
    };
    if dev_sentences.is_empty() {
        log::info!("no dev set; keeping the final epoch's parameters");
    } else {
        let history: Vec<ParseScore> =
            rows.iter().filter_map(|r| r.dev).collect();
        debug_assert_eq!(eval::select_best(&history), Some(best_epoch));
        log::info!("selected epoch {} by dev LAS", best_epoch + 1);
    }

    Ok(TrainOutcome {
        model: best_model,
        tasks: specs,
        rows,
        best_epoch,
        pos_column: config.pos_column,
    })
}

/// Renders the per-epoch log as TSV.
pub fn render_log(outcome: &TrainOutcome) -> String {
    let aux_names: Vec<&str> = outcome
        .tasks
        .iter()
        .filter(|t| matches!(t.kind, mtl::TaskKind::Gaze(_)))
        .map(|t| t.name.as_str())
        .collect();
    let mut out = String::from("epoch\ttrain_loss\tdev_uas\tdev_las");
    for name in &aux_names {
        out.push_str("\taux_");
        out.push_str(name);
        out.push_str("_acc");
    }
    out.push('\n');
    for row in &outcome.rows {
        out.push_str(&format!("{}\t{:.6}", row.epoch, row.train_loss));
        match &row.dev {
            Some(score) => out.push_str(&format!("\t{:.2}\t{:.2}", score.uas, score.las)),
            None => out.push_str("\t-\t-"),
        }
        for acc in &row.aux_accuracy {
            match acc {
                Some(a) => out.push_str(&format!("\t{a:.2}")),
                None => out.push_str("\t-"),
            }
        }
        out.push('\n');
    }
    out
}
