//! Indexed label vocabularies with an unknown-entry fallback.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

/// The reserved unknown entry. It is always present at index 0.
pub const UNK: &str = "<unk>";

/// A bidirectional string/index map with deterministic (first-occurrence)
/// ordering and an `<unk>` entry at index 0.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct Vocab {
    entries: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Vocab {
    /// An empty vocabulary containing only the unknown entry.
    pub fn new() -> Self {
        let mut vocab = Vocab { entries: Vec::new(), index: BTreeMap::new() };
        vocab.intern(UNK);
        vocab
    }

    /// Builds a vocabulary from items in first-occurrence order.
    pub fn collect<I, S>(items: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut vocab = Vocab::new();
        for item in items {
            vocab.intern(item.as_ref());
        }
        vocab
    }

    /// Index of `entry`, inserting it if absent.
    pub fn intern(&mut self, entry: &str) -> usize {
        if let Some(&id) = self.index.get(entry) {
            return id;
        }
        let id = self.entries.len();
        self.entries.push(String::from(entry));
        self.index.insert(String::from(entry), id);
        id
    }

    /// Index of `entry`, falling back to the unknown entry.
    pub fn lookup(&self, entry: &str) -> usize {
        self.index.get(entry).copied().unwrap_or(Self::unk_id())
    }

    /// Index of `entry` if present.
    pub fn get(&self, entry: &str) -> Option<usize> {
        self.index.get(entry).copied()
    }

    /// The string at `id`. Panics on out-of-range ids (an id can only come
    /// from this vocabulary).
    pub fn entry(&self, id: usize) -> &str {
        &self.entries[id]
    }

    /// Index of the unknown entry.
    pub const fn unk_id() -> usize {
        0
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Entries in index order.
    pub fn iter(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(String::as_str)
    }
}

impl Default for Vocab {
    fn default() -> Self {
        Self::new()
    }
}

impl From<Vec<String>> for Vocab {
    fn from(entries: Vec<String>) -> Self {
        let mut vocab = Vocab { entries: Vec::new(), index: BTreeMap::new() };
        vocab.intern(UNK);
        for entry in entries {
            vocab.intern(&entry);
        }
        vocab
    }
}

impl From<Vocab> for Vec<String> {
    fn from(vocab: Vocab) -> Self {
        vocab.entries
    }
}
