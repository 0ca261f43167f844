//! Treebank and gaze-record ingestion.
//!
//! This module reads CoNLL-U treebanks and per-token gaze measurements from
//! text (IO stays in the companion crate), aligns the two by sentence id, and
//! produces deterministic sentence-consistent train/dev/test splits.

mod conllu;
mod split;
mod tsv;

pub use conllu::{parse_conllu, write_conllu};
pub use split::{Split, SplitRatios, split};
pub use tsv::parse_gaze_tsv;

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Which CoNLL-U column carries the part-of-speech tag used by the parser.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PosColumn {
    /// Column 4 (universal PoS), the default for UD-style treebanks.
    Upos,
    /// Column 5 (language-specific PoS), for converted PTB-style treebanks.
    Xpos,
}

impl PosColumn {
    pub fn name(self) -> &'static str {
        match self {
            PosColumn::Upos => "upos",
            PosColumn::Xpos => "xpos",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "upos" => Some(PosColumn::Upos),
            "xpos" => Some(PosColumn::Xpos),
            _ => None,
        }
    }
}

/// One syntactic token. `head` is `None` when the HEAD column is `_`
/// (unannotated input, e.g. text that is about to be parsed).
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Token {
    /// 1-based position in the sentence.
    pub index: usize,
    pub form: String,
    pub pos: String,
    /// 0 denotes the artificial root.
    pub head: Option<usize>,
    pub deprel: String,
}

/// An ordered sequence of tokens with a stable identifier.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Sentence {
    pub sent_id: String,
    pub tokens: Vec<Token>,
}

impl Sentence {
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// PoS tags in token order.
    pub fn pos_tags(&self) -> Vec<String> {
        self.tokens.iter().map(|t| t.pos.clone()).collect()
    }

    /// Checks that the annotated heads form a tree: every head present and in
    /// range, exactly one root, no token its own ancestor.
    pub fn validate_tree(&self) -> Result<(), TreeError> {
        let n = self.len();
        if n == 0 {
            return Err(TreeError::Empty { sent_id: self.sent_id.clone() });
        }
        let mut roots = 0usize;
        for token in &self.tokens {
            match token.head {
                None => {
                    return Err(TreeError::MissingHead {
                        sent_id: self.sent_id.clone(),
                        index: token.index,
                    });
                }
                Some(0) => roots += 1,
                Some(h) if h > n => {
                    return Err(TreeError::HeadOutOfRange {
                        sent_id: self.sent_id.clone(),
                        index: token.index,
                        head: h,
                        len: n,
                    });
                }
                Some(h) if h == token.index => {
                    return Err(TreeError::SelfHead {
                        sent_id: self.sent_id.clone(),
                        index: token.index,
                    });
                }
                Some(_) => {}
            }
        }
        if roots != 1 {
            return Err(TreeError::RootCount { sent_id: self.sent_id.clone(), roots });
        }
        // Every token must reach the artificial root; a chain longer than n
        // steps has necessarily entered a cycle.
        for start in 1..=n {
            let mut at = start;
            let mut steps = 0usize;
            while at != 0 {
                at = self.tokens[at - 1].head.unwrap_or(0);
                steps += 1;
                if steps > n {
                    return Err(TreeError::Cycle { sent_id: self.sent_id.clone(), index: start });
                }
            }
        }
        Ok(())
    }
}

/// Raw per-token gaze measurements from one participant's reading.
#[derive(Clone, Debug, PartialEq)]
pub struct RawGaze {
    /// Total fixation duration in milliseconds.
    pub total_fix_dur: f64,
    /// Duration of the first fixation in milliseconds.
    pub first_fix_dur: f64,
    /// Summed fixation time before the gaze first leaves the word.
    pub first_pass_dur: f64,
    /// Number of fixations.
    pub n_fix: u32,
    /// Number of re-fixations.
    pub n_refix: u32,
    /// Whether the word was reread.
    pub reread: bool,
}

impl RawGaze {
    /// A token that was never fixated.
    pub fn zero() -> Self {
        RawGaze {
            total_fix_dur: 0.0,
            first_fix_dur: 0.0,
            first_pass_dur: 0.0,
            n_fix: 0,
            n_refix: 0,
            reread: false,
        }
    }
}

/// One participant's reading of one sentence, one record per token.
#[derive(Clone, Debug, PartialEq)]
pub struct GazeReading {
    pub sent_id: String,
    pub participant_id: String,
    pub records: Vec<RawGaze>,
}

/// A violation of the tree invariants on annotated sentences.
#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum TreeError {
    #[error("sentence {sent_id}: empty sentence")]
    Empty { sent_id: String },
    #[error("sentence {sent_id}: token {index} has no head annotation")]
    MissingHead { sent_id: String, index: usize },
    #[error("sentence {sent_id}: token {index} has head {head} out of range 0..={len}")]
    HeadOutOfRange { sent_id: String, index: usize, head: usize, len: usize },
    #[error("sentence {sent_id}: token {index} is its own head")]
    SelfHead { sent_id: String, index: usize },
    #[error("sentence {sent_id}: expected exactly one root, found {roots}")]
    RootCount { sent_id: String, roots: usize },
    #[error("sentence {sent_id}: head arcs starting at token {index} form a cycle")]
    Cycle { sent_id: String, index: usize },
}

/// Errors from treebank/gaze parsing, alignment and splitting. Line and row
/// numbers are 1-based positions in the input text.
#[derive(Clone, Debug, Error, PartialEq)]
pub enum CorpusError {
    #[error("line {line}: expected 10 tab-separated columns, found {found}")]
    ColumnCount { line: usize, found: usize },
    #[error("line {line}: token id must be a positive integer, found {value:?}")]
    BadTokenId { line: usize, value: String },
    #[error("line {line}: token id {found} out of order, expected {expected}")]
    TokenIdOrder { line: usize, found: usize, expected: usize },
    #[error("line {line}: HEAD must be a non-negative integer or '_', found {value:?}")]
    BadHead { line: usize, value: String },
    #[error("line {line}: HEAD {head} out of range for a sentence of {len} tokens")]
    HeadOutOfRange { line: usize, head: usize, len: usize },
    #[error("line {line}: token cannot be its own head")]
    SelfHead { line: usize },

    #[error("row {row}: expected 10 tab-separated gaze columns, found {found}")]
    GazeColumnCount { row: usize, found: usize },
    #[error("row {row}: bad header, expected {expected:?}")]
    GazeHeader { row: usize, expected: &'static str },
    #[error("row {row}: field {field} must be {expected}, found {value:?}")]
    GazeField { row: usize, field: &'static str, expected: &'static str, value: String },
    #[error("row {row}: token_index {found}, expected {expected} ({context})")]
    GazeTokenIndex { row: usize, found: usize, expected: usize, context: &'static str },
    #[error("row {row}: group ({sent_id}, {participant_id}) appears twice")]
    GazeDuplicateGroup { row: usize, sent_id: String, participant_id: String },
    #[error("row {row}: {constraint}")]
    GazeInvariant { row: usize, constraint: &'static str },

    #[error("gaze reading for unknown sentence id {sent_id:?}")]
    UnknownSentence { sent_id: String },
    #[error(
        "sentence {sent_id} has {tokens} tokens but participant {participant_id} \
         supplies {records} gaze records"
    )]
    AlignmentLength { sent_id: String, participant_id: String, tokens: usize, records: usize },
    #[error("duplicate sentence id {sent_id:?} in treebank")]
    DuplicateSentence { sent_id: String },

    #[error("split ratios must be non-negative and sum to 1, got {sum}")]
    BadRatios { sum: f64 },
    #[error("cannot split an empty instance list")]
    EmptySplit,
}

/// A pairing of sentence and reading, by index into the input slices.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AlignedPair {
    pub sentence: usize,
    pub reading: usize,
}

/// Result of [`align`]: readings paired with their sentences, plus the
/// sentences no reading refers to (usable only as parsing-only data).
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Alignment {
    pub pairs: Vec<AlignedPair>,
    pub parse_only: Vec<usize>,
}

/// Pairs every reading with its sentence by `sent_id`.
///
/// Readings keep their input order; a sentence read by several participants
/// yields one pair per reading. Fails if a reading names an unknown sentence
/// or its record count differs from the sentence length.
pub fn align(sentences: &[Sentence], readings: &[GazeReading]) -> Result<Alignment, CorpusError> {
    let mut by_id: BTreeMap<&str, usize> = BTreeMap::new();
    for (idx, sentence) in sentences.iter().enumerate() {
        if by_id.insert(sentence.sent_id.as_str(), idx).is_some() {
            return Err(CorpusError::DuplicateSentence { sent_id: sentence.sent_id.clone() });
        }
    }
    let mut pairs = Vec::with_capacity(readings.len());
    let mut seen = alloc::vec![false; sentences.len()];
    for (ridx, reading) in readings.iter().enumerate() {
        let &sidx = by_id
            .get(reading.sent_id.as_str())
            .ok_or_else(|| CorpusError::UnknownSentence { sent_id: reading.sent_id.clone() })?;
        let sentence = &sentences[sidx];
        if sentence.len() != reading.records.len() {
            return Err(CorpusError::AlignmentLength {
                sent_id: sentence.sent_id.clone(),
                participant_id: reading.participant_id.clone(),
                tokens: sentence.len(),
                records: reading.records.len(),
            });
        }
        seen[sidx] = true;
        pairs.push(AlignedPair { sentence: sidx, reading: ridx });
    }
    let parse_only = (0..sentences.len()).filter(|&i| !seen[i]).collect();
    Ok(Alignment { pairs, parse_only })
}
