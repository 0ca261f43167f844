//! Sentence-consistent corpus splitting.
//!
//! Instances are split by their sentence id, never individually: all readings
//! of a sentence land in the same partition. Unique ids are shuffled with a
//! seeded generator, so a fixed seed always yields the same split.

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use rand::seq::SliceRandom;

use super::CorpusError;
use crate::rng;

/// Fractions of unique sentences for each partition. Train and dev sizes are
/// rounded down, the remainder goes to test.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Self {
        SplitRatios { train, dev, test }
    }

    fn validate(self) -> Result<(), CorpusError> {
        let sum = self.train + self.dev + self.test;
        let non_negative = self.train >= 0.0 && self.dev >= 0.0 && self.test >= 0.0;
        if !non_negative || libm::fabs(sum - 1.0) > 1e-9 {
            return Err(CorpusError::BadRatios { sum });
        }
        Ok(())
    }
}

/// Instance indices of the three partitions, each in input order.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub dev: Vec<usize>,
    pub test: Vec<usize>,
}

/// Partitions instances (given by their sentence ids) into train/dev/test.
///
/// Every instance of a sentence follows that sentence's partition. The split
/// is a partition of `0..sent_ids.len()`: the three index lists are disjoint
/// and jointly exhaustive.
pub fn split<S: AsRef<str>>(
    sent_ids: &[S],
    ratios: SplitRatios,
    seed: u64,
) -> Result<Split, CorpusError> {
    ratios.validate()?;
    if sent_ids.is_empty() {
        return Err(CorpusError::EmptySplit);
    }

    // Unique ids in first-occurrence order.
    let mut unique: Vec<&str> = Vec::new();
    let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
    for id in sent_ids {
        let id = id.as_ref();
        if seen.insert(id, ()).is_none() {
            unique.push(id);
        }
    }

    let mut shuffled = unique;
    shuffled.shuffle(&mut rng::stream(seed, rng::SPLIT));

    let total = shuffled.len();
    // The epsilon keeps floor() from dropping a unit to representation error
    // (e.g. 0.3 * 10 evaluating just below 3.0).
    let n_train = (ratios.train * total as f64 + 1e-9) as usize;
    let n_dev = (ratios.dev * total as f64 + 1e-9) as usize;
    let n_dev = n_dev.min(total - n_train);

    #[derive(Clone, Copy)]
    enum Part {
        Train,
        Dev,
        Test,
    }
    let mut part_of: BTreeMap<&str, Part> = BTreeMap::new();
    for (rank, id) in shuffled.into_iter().enumerate() {
        let part = if rank < n_train {
            Part::Train
        } else if rank < n_train + n_dev {
            Part::Dev
        } else {
            Part::Test
        };
        part_of.insert(id, part);
    }

    let mut result = Split::default();
    for (idx, id) in sent_ids.iter().enumerate() {
        match part_of[id.as_ref()] {
            Part::Train => result.train.push(idx),
            Part::Dev => result.dev.push(idx),
            Part::Test => result.test.push(idx),
        }
    }
    Ok(result)
}
