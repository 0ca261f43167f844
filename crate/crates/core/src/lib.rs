//! Core library for `gdparse`: dependency parsing as sequence labeling with
//! eye-tracking features as training-only auxiliary tasks.
//!
//! The crate is `no_std` (it requires `alloc`) and contains no IO. Everything
//! here is a pure function over in-memory data:
//!
//! * [`corpus`] — CoNLL-U and gaze-TSV text parsing, corpus alignment and
//!   sentence-consistent splitting,
//! * [`encoder`] — the head-offset label encoding of dependency trees and a
//!   repairing decoder that always returns a well-formed tree,
//! * [`gaze`] — the twelve per-token gaze features, percentile binning,
//! * [`nn`] — a small reverse-mode gradient engine and the stacked BiLSTM
//!   multitask tagger trained with SGD,
//! * [`mtl`] — task specifications, combined losses for parallel and disjoint
//!   corpora, and the two-corpus batch scheduler,
//! * [`eval`] — attachment scoring and model selection.
//!
//! File handling, the model file format and the command-line interface live in
//! the companion `gdparse` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod corpus;
pub mod encoder;
pub mod eval;
pub mod gaze;
pub mod mtl;
pub mod nn;
pub mod rng;
pub mod vocab;
