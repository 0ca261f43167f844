//! Multitask training: task configuration, the combined losses for parallel
//! and disjoint corpora, and the two-corpus batch scheduler.
//!
//! With parallel data the loss is the weighted sum of the per-task
//! mean-per-token cross-entropies. With disjoint data each batch comes from
//! exactly one corpus and a flag selects which side of the loss is active:
//! parsing tasks for parse-corpus batches, gaze tasks otherwise. The inactive
//! side contributes no loss node at all, so its head gradients are exactly
//! zero.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::GazeFeature;
use crate::nn::{Graph, ModelParams, NodeId, TokenInput};
use crate::rng;

/// Default loss weight of an auxiliary task.
pub const DEFAULT_AUX_WEIGHT: f64 = 0.1;

/// What a task predicts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum TaskKind {
    /// The `(offset, pos)` part of the parse label.
    ParsePair,
    /// The dependency relation.
    ParseRel,
    /// One gaze feature, learned only as a training signal.
    Gaze(GazeFeature),
}

impl TaskKind {
    pub fn is_parse(self) -> bool {
        matches!(self, TaskKind::ParsePair | TaskKind::ParseRel)
    }
}

/// A named prediction task with its loss weight.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub name: String,
    pub kind: TaskKind,
    pub weight: f64,
}

impl TaskSpec {
    /// The main head-index task, weight 1.
    pub fn parse_pair() -> Self {
        TaskSpec { name: "parse-pair".to_string(), kind: TaskKind::ParsePair, weight: 1.0 }
    }

    /// The main relation task, weight 1.
    pub fn parse_rel() -> Self {
        TaskSpec { name: "parse-rel".to_string(), kind: TaskKind::ParseRel, weight: 1.0 }
    }

    /// An auxiliary gaze task.
    pub fn gaze(feature: GazeFeature, weight: f64) -> Self {
        TaskSpec { name: feature.name().to_string(), kind: TaskKind::Gaze(feature), weight }
    }
}

/// Where a batch's instances come from, which determines the gold labels
/// they carry.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BatchSource {
    /// Only parsing gold (the disjoint treebank side).
    ParseCorpus,
    /// Only gaze gold (the disjoint gaze side).
    GazeCorpus,
    /// Both (parallel data).
    Parallel,
}

impl BatchSource {
    /// The flag selecting the parsing side of the disjoint loss: 1 when the
    /// batch provides parsing gold.
    pub fn tau(self) -> bool {
        !matches!(self, BatchSource::GazeCorpus)
    }
}

/// Gold parse label ids for one instance, aligned with its tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ParseGold {
    pub pair_ids: Vec<usize>,
    pub rel_ids: Vec<usize>,
}

/// One training instance: a token sequence plus whatever gold its corpus
/// provides. `gaze` holds one id sequence per auxiliary task, in task order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub tokens: Vec<TokenInput>,
    pub parse: Option<ParseGold>,
    pub gaze: Option<Vec<Vec<usize>>>,
}

/// A single-source batch of instances.
#[derive(Clone, Debug)]
pub struct Batch<'a> {
    pub instances: Vec<&'a Instance>,
    pub source: BatchSource,
}

impl Batch<'_> {
    pub fn tau(&self) -> bool {
        self.source.tau()
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum MtlError {
    #[error("task {task} has no gold labels in this batch")]
    MissingGold { task: String },
    #[error("{side} corpus is empty; use parallel (single-corpus) training instead")]
    EmptyCorpus { side: &'static str },
    #[error("batch size must be greater than zero")]
    ZeroBatchSize,
    #[error("model heads do not match the task list at position {position}")]
    HeadMismatch { position: usize },
    #[error("instance provides {got} gold labels for {tokens} tokens in task {task}")]
    GoldLength { task: String, tokens: usize, got: usize },
}

/// Per-task `(logits node, gold id)` pairs collected over a batch.
pub type TaskTokens = Vec<(NodeId, usize)>;

fn weighted_task_loss(
    g: &mut Graph<'_>,
    tokens: &TaskTokens,
    weight: f64,
) -> NodeId {
    let losses: Vec<NodeId> =
        tokens.iter().map(|&(logits, gold)| g.nll_loss(logits, gold)).collect();
    let total = g.sum_scalars(&losses);
    let mean = g.scale(total, 1.0 / losses.len() as f64);
    g.scale(mean, weight)
}

/// The parallel-data loss: the sum over all tasks of the weighted
/// mean-per-token cross-entropy. Every configured task must come with gold.
pub fn parallel_loss(
    g: &mut Graph<'_>,
    per_task: &[TaskTokens],
    specs: &[TaskSpec],
) -> Result<NodeId, MtlError> {
    assert_eq!(per_task.len(), specs.len(), "one token list per task");
    let mut parts = Vec::with_capacity(specs.len());
    for (tokens, spec) in per_task.iter().zip(specs) {
        if tokens.is_empty() {
            return Err(MtlError::MissingGold { task: spec.name.clone() });
        }
        parts.push(weighted_task_loss(g, tokens, spec.weight));
    }
    Ok(g.sum_scalars(&parts))
}

/// The disjoint-data loss: with `tau` set only the parsing tasks contribute,
/// otherwise only the gaze tasks. The ignored side is not connected to the
/// loss, so its gradients are exactly zero.
pub fn disjoint_loss(
    g: &mut Graph<'_>,
    per_task: &[TaskTokens],
    specs: &[TaskSpec],
    tau: bool,
) -> Result<NodeId, MtlError> {
    assert_eq!(per_task.len(), specs.len(), "one token list per task");
    let mut parts = Vec::new();
    for (tokens, spec) in per_task.iter().zip(specs) {
        if spec.kind.is_parse() != tau {
            continue;
        }
        if tokens.is_empty() {
            return Err(MtlError::MissingGold { task: spec.name.clone() });
        }
        parts.push(weighted_task_loss(g, tokens, spec.weight));
    }
    Ok(g.sum_scalars(&parts))
}

/// Runs the model over a batch and assembles the combined loss for the
/// batch's source: the parallel loss for parallel batches, the masked
/// disjoint loss otherwise.
pub fn batch_loss(
    g: &mut Graph<'_>,
    model: &ModelParams,
    batch: &Batch<'_>,
    specs: &[TaskSpec],
    train: bool,
    dropout_rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<NodeId, MtlError> {
    validate_heads(model, specs)?;
    let mut per_task: Vec<TaskTokens> = specs.iter().map(|_| TaskTokens::new()).collect();
    for instance in &batch.instances {
        let inputs = model.embed(g, &instance.tokens, train, dropout_rng);
        let logits = model.forward(g, &inputs, train, dropout_rng);
        collect_gold(&mut per_task, &logits, instance, specs)?;
    }
    match batch.source {
        BatchSource::Parallel => parallel_loss(g, &per_task, specs),
        source => disjoint_loss(g, &per_task, specs, source.tau()),
    }
}

/// Checks that the model's heads line up one-to-one with the task list.
pub fn validate_heads(model: &ModelParams, specs: &[TaskSpec]) -> Result<(), MtlError> {
    if model.heads.len() != specs.len() {
        return Err(MtlError::HeadMismatch { position: model.heads.len().min(specs.len()) });
    }
    for (i, (head, spec)) in model.heads.iter().zip(specs).enumerate() {
        if head.name != spec.name {
            return Err(MtlError::HeadMismatch { position: i });
        }
    }
    Ok(())
}

fn collect_gold(
    per_task: &mut [TaskTokens],
    logits: &[Vec<NodeId>],
    instance: &Instance,
    specs: &[TaskSpec],
) -> Result<(), MtlError> {
    let tokens = instance.tokens.len();
    let mut aux_slot = 0usize;
    for (t, spec) in specs.iter().enumerate() {
        match spec.kind {
            TaskKind::ParsePair | TaskKind::ParseRel => {
                if let Some(parse) = &instance.parse {
                    let ids = if spec.kind == TaskKind::ParsePair {
                        &parse.pair_ids
                    } else {
                        &parse.rel_ids
                    };
                    if ids.len() != tokens {
                        return Err(MtlError::GoldLength {
                            task: spec.name.clone(),
                            tokens,
                            got: ids.len(),
                        });
                    }
                    per_task[t].extend(logits[t].iter().copied().zip(ids.iter().copied()));
                }
            }
            TaskKind::Gaze(_) => {
                if let Some(gaze) = &instance.gaze {
                    let ids = &gaze[aux_slot];
                    if ids.len() != tokens {
                        return Err(MtlError::GoldLength {
                            task: spec.name.clone(),
                            tokens,
                            got: ids.len(),
                        });
                    }
                    per_task[t].extend(logits[t].iter().copied().zip(ids.iter().copied()));
                }
                aux_slot += 1;
            }
        }
    }
    Ok(())
}

/// One scheduled batch: which corpus it draws from and which instances.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlannedBatch {
    pub source: BatchSource,
    /// Indices into the source corpus's instance list.
    pub indices: Vec<usize>,
}

/// Plans one epoch of disjoint training: each corpus is shuffled, then
/// batches are drawn whole from one corpus at a time, choosing the source
/// with probability proportional to its remaining instances. Every instance
/// of both corpora appears exactly once; the final batch of a corpus may be
/// short.
pub fn schedule_disjoint(
    n_parse: usize,
    n_gaze: usize,
    batch_size: usize,
    seed: u64,
) -> Result<Vec<PlannedBatch>, MtlError> {
    let mut rng = rng::stream(seed, rng::SCHEDULE);
    schedule_disjoint_with(n_parse, n_gaze, batch_size, &mut rng)
}

/// [`schedule_disjoint`] driven by an existing generator, for callers that
/// schedule many epochs from one stream.
pub fn schedule_disjoint_with(
    n_parse: usize,
    n_gaze: usize,
    batch_size: usize,
    rng: &mut rand_chacha::ChaCha8Rng,
) -> Result<Vec<PlannedBatch>, MtlError> {
    if n_parse == 0 {
        return Err(MtlError::EmptyCorpus { side: "parsing" });
    }
    if n_gaze == 0 {
        return Err(MtlError::EmptyCorpus { side: "gaze" });
    }
    if batch_size == 0 {
        return Err(MtlError::ZeroBatchSize);
    }
    let mut parse_queue: Vec<usize> = (0..n_parse).collect();
    let mut gaze_queue: Vec<usize> = (0..n_gaze).collect();
    rand::seq::SliceRandom::shuffle(parse_queue.as_mut_slice(), rng);
    rand::seq::SliceRandom::shuffle(gaze_queue.as_mut_slice(), rng);

    let mut batches = Vec::new();
    let (mut next_parse, mut next_gaze) = (0usize, 0usize);
    loop {
        let parse_left = parse_queue.len() - next_parse;
        let gaze_left = gaze_queue.len() - next_gaze;
        if parse_left + gaze_left == 0 {
            break;
        }
        let from_parse = if parse_left == 0 {
            false
        } else if gaze_left == 0 {
            true
        } else {
            rng.random_range(0..parse_left + gaze_left) < parse_left
        };
        let (queue, cursor, source) = if from_parse {
            (&parse_queue, &mut next_parse, BatchSource::ParseCorpus)
        } else {
            (&gaze_queue, &mut next_gaze, BatchSource::GazeCorpus)
        };
        let take = batch_size.min(queue.len() - *cursor);
        let indices = queue[*cursor..*cursor + take].to_vec();
        *cursor += take;
        batches.push(PlannedBatch { source, indices });
    }
    Ok(batches)
}
