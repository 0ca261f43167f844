//! Shared inference paths: filling trees into sentences and rendering gaze
//! feature tables. Only token forms and PoS tags are consumed here; gaze
//! measurements play no part in parsing.

use gdparse_core::corpus::{GazeReading, Sentence};
use gdparse_core::encoder::{DepLabel, label_from_ids};
use gdparse_core::gaze::{self, Discretizer, GazeFeature};
use gdparse_core::mtl::{Instance, TaskKind, TaskSpec, validate_heads};
use gdparse_core::nn::{Graph, ModelParams, argmax};
use gdparse_core::rng;

use crate::CliError;

/// Positions of the two parsing heads within the model's head list.
pub fn parse_head_indices(tasks: &[TaskSpec]) -> Result<(usize, usize), CliError> {
    let pair = tasks.iter().position(|t| t.kind == TaskKind::ParsePair);
    let rel = tasks.iter().position(|t| t.kind == TaskKind::ParseRel);
    match (pair, rel) {
        (Some(pair), Some(rel)) => Ok((pair, rel)),
        _ => Err(CliError::data("model lacks the two parsing heads")),
    }
}

/// Parses every sentence in place: head and deprel of each token are replaced
/// by the decoded predictions. Empty sentences pass through unchanged.
pub fn predict_into(
    model: &ModelParams,
    tasks: &[TaskSpec],
    sentences: &mut [Sentence],
) -> Result<(), CliError> {
    validate_heads(model, tasks)?;
    let (pair_head, rel_head) = parse_head_indices(tasks)?;
    let vocabs = gdparse_core::encoder::LabelVocabs {
        pairs: model.heads[pair_head].vocab.clone(),
        rels: model.heads[rel_head].vocab.clone(),
    };
    // Eval mode draws nothing from the generator; it is there for signature
    // symmetry with training.
    let mut dropout_rng = rng::stream(model.seed, rng::DROPOUT);
    for sentence in sentences.iter_mut() {
        if sentence.is_empty() {
            continue;
        }
        let tokens: Vec<gdparse_core::nn::TokenInput> = sentence
            .tokens
            .iter()
            .map(|t| gdparse_core::nn::TokenInput::new(&t.form, &t.pos))
            .collect();
        let mut graph = Graph::new(model.store());
        let inputs = model.embed(&mut graph, &tokens, false, &mut dropout_rng);
        let logits = model.forward(&mut graph, &inputs, false, &mut dropout_rng);
        let labels: Vec<DepLabel> = (0..tokens.len())
            .map(|i| {
                let pair_id = argmax(graph.value(logits[pair_head][i]));
                let rel_id = argmax(graph.value(logits[rel_head][i]));
                label_from_ids(pair_id, rel_id, &vocabs)
            })
            .collect();
        let tree = gdparse_core::encoder::decode(&labels, &sentence.pos_tags())?;
        for (token, (head, deprel)) in
            sentence.tokens.iter_mut().zip(tree.heads.iter().zip(tree.deprels))
        {
            token.head = Some(*head);
            token.deprel = deprel;
        }
    }
    Ok(())
}

/// Copies the gold sentences and overwrites their trees with predictions.
pub fn predicted_copy(
    model: &ModelParams,
    tasks: &[TaskSpec],
    gold: &[Sentence],
) -> Result<Vec<Sentence>, CliError> {
    let mut predicted = gold.to_vec();
    predict_into(model, tasks, &mut predicted)?;
    Ok(predicted)
}

/// Token accuracy of each auxiliary head over instances that carry gaze
/// gold. Returns one value per auxiliary task, in task order; `None` when no
/// instance provided gold for it.
pub fn aux_accuracies(
    model: &ModelParams,
    tasks: &[TaskSpec],
    instances: &[Instance],
) -> Result<Vec<Option<f64>>, CliError> {
    validate_heads(model, tasks)?;
    let aux_heads: Vec<usize> = tasks
        .iter()
        .enumerate()
        .filter(|(_, t)| matches!(t.kind, TaskKind::Gaze(_)))
        .map(|(i, _)| i)
        .collect();
    let mut correct = vec![0usize; aux_heads.len()];
    let mut total = vec![0usize; aux_heads.len()];
    let mut dropout_rng = rng::stream(model.seed, rng::DROPOUT);
    for instance in instances {
        let Some(gaze) = &instance.gaze else { continue };
        let mut graph = Graph::new(model.store());
        let inputs = model.embed(&mut graph, &instance.tokens, false, &mut dropout_rng);
        let logits = model.forward(&mut graph, &inputs, false, &mut dropout_rng);
        for (slot, &head) in aux_heads.iter().enumerate() {
            for (i, &gold) in gaze[slot].iter().enumerate() {
                total[slot] += 1;
                if argmax(graph.value(logits[head][i])) == gold {
                    correct[slot] += 1;
                }
            }
        }
    }
    Ok(correct
        .iter()
        .zip(&total)
        .map(|(&c, &t)| if t == 0 { None } else { Some(100.0 * c as f64 / t as f64) })
        .collect())
}

/// Renders readings as a feature table: one row per token, identity columns
/// followed by one column per selected feature. The discretizer is fitted on
/// the given readings themselves.
pub fn featurize_table(
    readings: &[GazeReading],
    features: &[GazeFeature],
    aggregate: bool,
) -> Result<String, CliError> {
    let derived: Vec<(String, String, Vec<gdparse_core::gaze::GazeVector>)> = if aggregate {
        group_means(readings)?
    } else {
        readings
            .iter()
            .map(|r| (r.sent_id.clone(), r.participant_id.clone(), gaze::derive(r)))
            .collect()
    };
    let all_vectors: Vec<gdparse_core::gaze::GazeVector> =
        derived.iter().flat_map(|(_, _, v)| v.iter().copied()).collect();
    let discretizer: Discretizer =
        gaze::fit_discretizer(&all_vectors).map_err(CliError::data)?;

    let mut out = String::from("sent_id\tparticipant_id\ttoken_index");
    for feature in features {
        out.push('\t');
        out.push_str(feature.name());
    }
    out.push('\n');
    for (sent_id, participant, vectors) in &derived {
        for (i, vector) in vectors.iter().enumerate() {
            let labels = gaze::discretize(vector, &discretizer, features);
            out.push_str(&format!("{sent_id}\t{participant}\t{}", i + 1));
            for (_, label) in labels.iter() {
                out.push('\t');
                out.push_str(label);
            }
            out.push('\n');
        }
    }
    Ok(out)
}

/// Averages the readings of each sentence; the participant column becomes
/// `mean`.
fn group_means(
    readings: &[GazeReading],
) -> Result<Vec<(String, String, Vec<gdparse_core::gaze::GazeVector>)>, CliError> {
    let mut order: Vec<&str> = Vec::new();
    let mut by_sentence: std::collections::BTreeMap<&str, Vec<Vec<gdparse_core::gaze::GazeVector>>> =
        std::collections::BTreeMap::new();
    for reading in readings {
        let entry = by_sentence.entry(reading.sent_id.as_str()).or_default();
        if entry.is_empty() {
            order.push(&reading.sent_id);
        }
        if entry.first().is_some_and(|f| f.len() != reading.records.len()) {
            return Err(CliError::data(format!(
                "sentence {}: readings disagree on the token count, cannot average",
                reading.sent_id
            )));
        }
        entry.push(gaze::derive(reading));
    }
    Ok(order
        .into_iter()
        .map(|sent_id| {
            let group = &by_sentence[sent_id];
            (sent_id.to_string(), "mean".to_string(), gaze::average(group))
        })
        .collect())
}
