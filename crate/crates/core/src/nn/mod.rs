//! The neural tagger: a character-aware embedding layer, two stacked
//! bidirectional LSTM layers shared by every task, and one softmax head per
//! task. Includes the minimal tensor/gradient machinery it runs on.

mod graph;
mod lstm;
mod optim;
mod tensor;

pub use graph::{Graph, NodeId, argmax, softmax};
pub use lstm::{BiLstmParams, LstmParams};
pub use optim::Sgd;
pub use tensor::{GradStore, ParamEntry, ParamId, ParamStore, Tensor};

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::gaze::Discretizer;
use crate::rng;
use crate::vocab::Vocab;

/// Model and training hyperparameters. Hidden sizes are totals across the
/// two directions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub word_emb_dim: usize,
    pub char_emb_dim: usize,
    pub pos_emb_dim: usize,
    pub word_hidden: usize,
    pub char_hidden: usize,
    pub lr0: f64,
    pub decay: f64,
    pub momentum: f64,
    pub dropout: f64,
    pub batch_size: usize,
    pub max_epochs: usize,
}

impl Default for Hyperparams {
    /// The full-scale configuration.
    fn default() -> Self {
        Hyperparams {
            word_emb_dim: 100,
            char_emb_dim: 30,
            pos_emb_dim: 20,
            word_hidden: 800,
            char_hidden: 50,
            lr0: 0.02,
            decay: 0.05,
            momentum: 0.9,
            dropout: 0.5,
            batch_size: 8,
            max_epochs: 100,
        }
    }
}

impl Hyperparams {
    /// A roughly ten-fold smaller configuration for tests and quick runs.
    pub fn desk() -> Self {
        Hyperparams {
            word_emb_dim: 10,
            char_emb_dim: 4,
            pos_emb_dim: 2,
            word_hidden: 80,
            char_hidden: 6,
            ..Hyperparams::default()
        }
    }

    pub fn validate(&self) -> Result<(), NnError> {
        for (name, value) in [
            ("word_emb_dim", self.word_emb_dim),
            ("char_emb_dim", self.char_emb_dim),
            ("pos_emb_dim", self.pos_emb_dim),
            ("word_hidden", self.word_hidden),
            ("char_hidden", self.char_hidden),
            ("batch_size", self.batch_size),
            ("max_epochs", self.max_epochs),
        ] {
            if value == 0 {
                return Err(NnError::ZeroDimension { name });
            }
        }
        for (name, value) in [("word_hidden", self.word_hidden), ("char_hidden", self.char_hidden)]
        {
            if value % 2 != 0 {
                return Err(NnError::OddHidden { name, value });
            }
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(NnError::BadDropout { value: self.dropout });
        }
        Ok(())
    }

    /// Width of the per-token input vector fed to the first LSTM layer.
    pub fn embed_dim(&self) -> usize {
        self.word_emb_dim + self.char_hidden + self.pos_emb_dim
    }
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum NnError {
    #[error("hyperparameter {name} must be greater than zero")]
    ZeroDimension { name: &'static str },
    #[error("hyperparameter {name} must be even to split across directions, got {value}")]
    OddHidden { name: &'static str, value: usize },
    #[error("dropout must lie in [0, 1), got {value}")]
    BadDropout { value: f64 },
    #[error("parameter {name} expects {expected} values, got {found}")]
    ValueCount { name: String, expected: usize, found: usize },
    #[error("unknown parameter {name}")]
    UnknownParam { name: String },
}

/// A per-task softmax head over the shared encoder states.
#[derive(Clone, Debug)]
pub struct TaskHead {
    pub name: String,
    pub vocab: Vocab,
    pub weight: ParamId,
    pub bias: ParamId,
}

/// One token of network input.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TokenInput {
    pub form: String,
    pub pos: String,
}

impl TokenInput {
    pub fn new(form: &str, pos: &str) -> Self {
        TokenInput { form: form.to_string(), pos: pos.to_string() }
    }
}

/// All trainable state plus the lookup tables needed to run the tagger:
/// embedding matrices, the character-level BiLSTM, two stacked word-level
/// BiLSTM layers shared by every task (hard sharing), and one output head
/// per task.
#[derive(Clone, Debug)]
pub struct ModelParams {
    pub hyper: Hyperparams,
    pub seed: u64,
    pub word_vocab: Vocab,
    pub char_vocab: Vocab,
    pub pos_vocab: Vocab,
    pub discretizer: Option<Discretizer>,
    store: ParamStore,
    word_emb: ParamId,
    char_emb: ParamId,
    pos_emb: ParamId,
    char_lstm: BiLstmParams,
    layer1: BiLstmParams,
    layer2: BiLstmParams,
    pub heads: Vec<TaskHead>,
}

impl ModelParams {
    /// Creates a freshly initialized model. Heads are listed as
    /// `(name, label vocabulary)` and are initialized after the shared stack,
    /// so a model extended with additional heads shares the same shared-stack
    /// initialization for the same seed.
    pub fn new(
        hyper: Hyperparams,
        seed: u64,
        word_vocab: Vocab,
        char_vocab: Vocab,
        pos_vocab: Vocab,
        head_specs: Vec<(String, Vocab)>,
        discretizer: Option<Discretizer>,
    ) -> Result<Self, NnError> {
        hyper.validate()?;
        let mut init = rng::stream(seed, rng::INIT);
        let mut store = ParamStore::new();
        let word_emb = store.xavier("word_emb", word_vocab.len(), hyper.word_emb_dim, &mut init);
        let char_emb = store.xavier("char_emb", char_vocab.len(), hyper.char_emb_dim, &mut init);
        let pos_emb = store.xavier("pos_emb", pos_vocab.len(), hyper.pos_emb_dim, &mut init);
        let char_lstm =
            BiLstmParams::new(&mut store, "char_lstm", hyper.char_emb_dim, hyper.char_hidden, &mut init);
        let layer1 =
            BiLstmParams::new(&mut store, "word_lstm1", hyper.embed_dim(), hyper.word_hidden, &mut init);
        let layer2 =
            BiLstmParams::new(&mut store, "word_lstm2", hyper.word_hidden, hyper.word_hidden, &mut init);
        let heads = head_specs
            .into_iter()
            .map(|(name, vocab)| {
                let weight =
                    store.xavier(&format!("head.{name}.w"), vocab.len(), hyper.word_hidden, &mut init);
                let bias = store.zeros(&format!("head.{name}.b"), vocab.len());
                TaskHead { name, vocab, weight, bias }
            })
            .collect();
        Ok(ModelParams {
            hyper,
            seed,
            word_vocab,
            char_vocab,
            pos_vocab,
            discretizer,
            store,
            word_emb,
            char_emb,
            pos_emb,
            char_lstm,
            layer1,
            layer2,
            heads,
        })
    }

    pub fn store(&self) -> &ParamStore {
        &self.store
    }

    pub fn store_mut(&mut self) -> &mut ParamStore {
        &mut self.store
    }

    pub fn head_index(&self, name: &str) -> Option<usize> {
        self.heads.iter().position(|h| h.name == name)
    }

    /// Overwrites one named parameter, e.g. when loading a model file or an
    /// external embedding table.
    pub fn set_param_values(&mut self, name: &str, values: &[f64]) -> Result<(), NnError> {
        let id = self
            .store
            .find(name)
            .ok_or_else(|| NnError::UnknownParam { name: name.to_string() })?;
        let tensor = &mut self.store.get_mut(id).tensor;
        if tensor.len() != values.len() {
            return Err(NnError::ValueCount {
                name: name.to_string(),
                expected: tensor.len(),
                found: values.len(),
            });
        }
        tensor.values_mut().copy_from_slice(values);
        Ok(())
    }

    /// Overwrites the word embedding row of `word` if it is in-vocabulary.
    pub fn set_word_embedding(&mut self, word: &str, values: &[f64]) -> Result<bool, NnError> {
        let Some(row) = self.word_vocab.get(word) else {
            return Ok(false);
        };
        let dim = self.hyper.word_emb_dim;
        if values.len() != dim {
            return Err(NnError::ValueCount {
                name: format!("word embedding for {word:?}"),
                expected: dim,
                found: values.len(),
            });
        }
        let tensor = &mut self.store.get_mut(self.word_emb).tensor;
        tensor.values_mut()[row * dim..(row + 1) * dim].copy_from_slice(values);
        Ok(true)
    }

    /// Builds the per-token input vectors: word embedding (unknown words fall
    /// back to the `<unk>` row), the final states of a character BiLSTM over
    /// the token's characters, and the PoS embedding, concatenated. With
    /// `train` set, inverted dropout is applied to each vector.
    pub fn embed(
        &self,
        g: &mut Graph<'_>,
        tokens: &[TokenInput],
        train: bool,
        dropout_rng: &mut ChaCha8Rng,
    ) -> Vec<NodeId> {
        let word_mat = g.param(self.word_emb);
        let char_mat = g.param(self.char_emb);
        let pos_mat = g.param(self.pos_emb);
        tokens
            .iter()
            .map(|token| {
                let word = g.row(word_mat, self.word_vocab.lookup(&token.form));
                let mut buf = [0u8; 4];
                let char_rows: Vec<NodeId> = token
                    .form
                    .chars()
                    .map(|c| {
                        let id = self.char_vocab.lookup(c.encode_utf8(&mut buf));
                        g.row(char_mat, id)
                    })
                    .collect();
                let chars = self.char_lstm.final_states(g, &char_rows);
                let pos = g.row(pos_mat, self.pos_vocab.lookup(&token.pos));
                let embedded = g.concat(&[word, chars, pos]);
                if train {
                    g.dropout(embedded, self.hyper.dropout, dropout_rng)
                } else {
                    embedded
                }
            })
            .collect()
    }

    /// Runs the shared two-layer BiLSTM stack and every task head, returning
    /// per-head, per-token logit nodes. Dropout sits between the two layers
    /// and only in `train` mode.
    pub fn forward(
        &self,
        g: &mut Graph<'_>,
        inputs: &[NodeId],
        train: bool,
        dropout_rng: &mut ChaCha8Rng,
    ) -> Vec<Vec<NodeId>> {
        let first = self.layer1.run(g, inputs);
        let between: Vec<NodeId> = if train {
            first.iter().map(|&h| g.dropout(h, self.hyper.dropout, dropout_rng)).collect()
        } else {
            first
        };
        let states = self.layer2.run(g, &between);
        self.heads
            .iter()
            .map(|head| {
                let w = g.param(head.weight);
                let b = g.param(head.bias);
                states
                    .iter()
                    .map(|&h| {
                        let wh = g.matvec(w, h);
                        g.add(wh, b)
                    })
                    .collect()
            })
            .collect()
    }
}
