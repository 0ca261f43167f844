//! Per-token gaze features and their discretization.
//!
//! Twelve features in four groups are derived from raw measurements:
//!
//! * basic: `total_fix_dur`, `mean_fix_dur`, `n_fix`, `fix_prob`,
//! * early: `first_fix_dur`, `first_pass_dur`,
//! * late: `n_refix`, `reread_prob`,
//! * context: `prev_fix_prob`, `next_fix_prob`, `prev_fix_dur`,
//!   `next_fix_dur` (the neighbouring words' fixation probability and total
//!   fixation duration).
//!
//! The six duration features are binned into training-set percentile
//! intervals of width 20 (`0-20` ... `80-100`); the other six keep their raw
//! values as label strings.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::GazeReading;

/// One of the twelve gaze features.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum GazeFeature {
    TotalFixDur,
    MeanFixDur,
    NFix,
    FixProb,
    FirstFixDur,
    FirstPassDur,
    NRefix,
    RereadProb,
    PrevFixProb,
    NextFixProb,
    PrevFixDur,
    NextFixDur,
}

/// The four feature groups.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureGroup {
    Basic,
    Early,
    Late,
    Context,
}

impl GazeFeature {
    /// All features in canonical order.
    pub const ALL: [GazeFeature; 12] = [
        GazeFeature::TotalFixDur,
        GazeFeature::MeanFixDur,
        GazeFeature::NFix,
        GazeFeature::FixProb,
        GazeFeature::FirstFixDur,
        GazeFeature::FirstPassDur,
        GazeFeature::NRefix,
        GazeFeature::RereadProb,
        GazeFeature::PrevFixProb,
        GazeFeature::NextFixProb,
        GazeFeature::PrevFixDur,
        GazeFeature::NextFixDur,
    ];

    pub fn name(self) -> &'static str {
        match self {
            GazeFeature::TotalFixDur => "total_fix_dur",
            GazeFeature::MeanFixDur => "mean_fix_dur",
            GazeFeature::NFix => "n_fix",
            GazeFeature::FixProb => "fix_prob",
            GazeFeature::FirstFixDur => "first_fix_dur",
            GazeFeature::FirstPassDur => "first_pass_dur",
            GazeFeature::NRefix => "n_refix",
            GazeFeature::RereadProb => "reread_prob",
            GazeFeature::PrevFixProb => "prev_fix_prob",
            GazeFeature::NextFixProb => "next_fix_prob",
            GazeFeature::PrevFixDur => "prev_fix_dur",
            GazeFeature::NextFixDur => "next_fix_dur",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        GazeFeature::ALL.into_iter().find(|f| f.name() == name)
    }

    pub fn group(self) -> FeatureGroup {
        match self {
            GazeFeature::TotalFixDur
            | GazeFeature::MeanFixDur
            | GazeFeature::NFix
            | GazeFeature::FixProb => FeatureGroup::Basic,
            GazeFeature::FirstFixDur | GazeFeature::FirstPassDur => FeatureGroup::Early,
            GazeFeature::NRefix | GazeFeature::RereadProb => FeatureGroup::Late,
            GazeFeature::PrevFixProb
            | GazeFeature::NextFixProb
            | GazeFeature::PrevFixDur
            | GazeFeature::NextFixDur => FeatureGroup::Context,
        }
    }

    /// Whether the feature is a duration, i.e. percentile-binned rather than
    /// used at its raw value.
    pub fn is_binned(self) -> bool {
        matches!(
            self,
            GazeFeature::TotalFixDur
                | GazeFeature::MeanFixDur
                | GazeFeature::FirstFixDur
                | GazeFeature::FirstPassDur
                | GazeFeature::PrevFixDur
                | GazeFeature::NextFixDur
        )
    }
}

impl FeatureGroup {
    pub const ALL: [FeatureGroup; 4] =
        [FeatureGroup::Basic, FeatureGroup::Early, FeatureGroup::Late, FeatureGroup::Context];

    pub fn name(self) -> &'static str {
        match self {
            FeatureGroup::Basic => "basic",
            FeatureGroup::Early => "early",
            FeatureGroup::Late => "late",
            FeatureGroup::Context => "context",
        }
    }

    pub fn parse(name: &str) -> Option<Self> {
        FeatureGroup::ALL.into_iter().find(|g| g.name() == name)
    }

    pub fn features(self) -> &'static [GazeFeature] {
        match self {
            FeatureGroup::Basic => &[
                GazeFeature::TotalFixDur,
                GazeFeature::MeanFixDur,
                GazeFeature::NFix,
                GazeFeature::FixProb,
            ],
            FeatureGroup::Early => &[GazeFeature::FirstFixDur, GazeFeature::FirstPassDur],
            FeatureGroup::Late => &[GazeFeature::NRefix, GazeFeature::RereadProb],
            FeatureGroup::Context => &[
                GazeFeature::PrevFixProb,
                GazeFeature::NextFixProb,
                GazeFeature::PrevFixDur,
                GazeFeature::NextFixDur,
            ],
        }
    }
}

/// The twelve derived feature values for one token.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct GazeVector {
    pub total_fix_dur: f64,
    pub mean_fix_dur: f64,
    pub n_fix: f64,
    pub fix_prob: f64,
    pub first_fix_dur: f64,
    pub first_pass_dur: f64,
    pub n_refix: f64,
    pub reread_prob: f64,
    pub prev_fix_prob: f64,
    pub next_fix_prob: f64,
    pub prev_fix_dur: f64,
    pub next_fix_dur: f64,
}

impl GazeVector {
    pub fn get(&self, feature: GazeFeature) -> f64 {
        match feature {
            GazeFeature::TotalFixDur => self.total_fix_dur,
            GazeFeature::MeanFixDur => self.mean_fix_dur,
            GazeFeature::NFix => self.n_fix,
            GazeFeature::FixProb => self.fix_prob,
            GazeFeature::FirstFixDur => self.first_fix_dur,
            GazeFeature::FirstPassDur => self.first_pass_dur,
            GazeFeature::NRefix => self.n_refix,
            GazeFeature::RereadProb => self.reread_prob,
            GazeFeature::PrevFixProb => self.prev_fix_prob,
            GazeFeature::NextFixProb => self.next_fix_prob,
            GazeFeature::PrevFixDur => self.prev_fix_dur,
            GazeFeature::NextFixDur => self.next_fix_dur,
        }
    }

    fn set(&mut self, feature: GazeFeature, value: f64) {
        match feature {
            GazeFeature::TotalFixDur => self.total_fix_dur = value,
            GazeFeature::MeanFixDur => self.mean_fix_dur = value,
            GazeFeature::NFix => self.n_fix = value,
            GazeFeature::FixProb => self.fix_prob = value,
            GazeFeature::FirstFixDur => self.first_fix_dur = value,
            GazeFeature::FirstPassDur => self.first_pass_dur = value,
            GazeFeature::NRefix => self.n_refix = value,
            GazeFeature::RereadProb => self.reread_prob = value,
            GazeFeature::PrevFixProb => self.prev_fix_prob = value,
            GazeFeature::NextFixProb => self.next_fix_prob = value,
            GazeFeature::PrevFixDur => self.prev_fix_dur = value,
            GazeFeature::NextFixDur => self.next_fix_dur = value,
        }
    }
}

/// Derives the twelve features for every token of a reading.
///
/// `mean_fix_dur` is `total / n_fix` (0 for unfixated tokens); the context
/// features copy the neighbour's `fix_prob` and `total_fix_dur`, with 0 at
/// the sentence boundaries.
pub fn derive(reading: &GazeReading) -> Vec<GazeVector> {
    let n = reading.records.len();
    let mut vectors: Vec<GazeVector> = reading
        .records
        .iter()
        .map(|r| {
            let n_fix = r.n_fix as f64;
            GazeVector {
                total_fix_dur: r.total_fix_dur,
                mean_fix_dur: if r.n_fix > 0 { r.total_fix_dur / n_fix } else { 0.0 },
                n_fix,
                fix_prob: if r.n_fix > 0 { 1.0 } else { 0.0 },
                first_fix_dur: r.first_fix_dur,
                first_pass_dur: r.first_pass_dur,
                n_refix: r.n_refix as f64,
                reread_prob: if r.reread { 1.0 } else { 0.0 },
                ..GazeVector::default()
            }
        })
        .collect();
    for i in 0..n {
        if i > 0 {
            vectors[i].prev_fix_prob = vectors[i - 1].fix_prob;
            vectors[i].prev_fix_dur = vectors[i - 1].total_fix_dur;
        }
        if i + 1 < n {
            vectors[i].next_fix_prob = vectors[i + 1].fix_prob;
            vectors[i].next_fix_dur = vectors[i + 1].total_fix_dur;
        }
    }
    vectors
}

/// Averages aligned readings of the same sentence into one vector sequence.
/// All inputs must have the same length; panics otherwise (callers align
/// readings to one sentence first).
pub fn average(readings: &[Vec<GazeVector>]) -> Vec<GazeVector> {
    assert!(!readings.is_empty(), "cannot average zero readings");
    let len = readings[0].len();
    assert!(readings.iter().all(|r| r.len() == len), "readings must have equal length");
    let scale = 1.0 / readings.len() as f64;
    (0..len)
        .map(|i| {
            let mut out = GazeVector::default();
            for feature in GazeFeature::ALL {
                let sum: f64 = readings.iter().map(|r| r[i].get(feature)).sum();
                out.set(feature, sum * scale);
            }
            out
        })
        .collect()
}

/// The five percentile interval labels.
pub const BIN_LABELS: [&str; 5] = ["0-20", "20-40", "40-60", "60-80", "80-100"];

/// Number of duration features that carry cut points.
const BINNED: usize = 6;

const BINNED_FEATURES: [GazeFeature; BINNED] = [
    GazeFeature::TotalFixDur,
    GazeFeature::MeanFixDur,
    GazeFeature::FirstFixDur,
    GazeFeature::FirstPassDur,
    GazeFeature::PrevFixDur,
    GazeFeature::NextFixDur,
];

/// Training-set percentile cut points (20th, 40th, 60th, 80th) for each
/// duration feature. Fit this on training data only.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Discretizer {
    cuts: [[f64; 4]; BINNED],
}

impl Discretizer {
    /// Cut points of a duration feature; `None` for raw-valued features.
    pub fn cuts(&self, feature: GazeFeature) -> Option<&[f64; 4]> {
        BINNED_FEATURES.iter().position(|&f| f == feature).map(|i| &self.cuts[i])
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum GazeError {
    #[error("cannot fit a discretizer on an empty training set")]
    EmptyTrainingSet,
    #[error("feature {0} is not part of the selected task set")]
    UnselectedFeature(&'static str),
    #[error("unknown gaze feature or group {0:?}")]
    UnknownFeature(String),
}

/// Fits percentile cut points on training vectors.
///
/// The cut for percentile `q` is the value at 1-based rank `ceil(q*N/100)` of
/// the ascending sorted values, zeros included.
pub fn fit_discretizer(train: &[GazeVector]) -> Result<Discretizer, GazeError> {
    if train.is_empty() {
        return Err(GazeError::EmptyTrainingSet);
    }
    let mut cuts = [[0.0; 4]; BINNED];
    for (slot, &feature) in BINNED_FEATURES.iter().enumerate() {
        let mut values: Vec<f64> = train.iter().map(|v| v.get(feature)).collect();
        values.sort_by(f64::total_cmp);
        for (k, &q) in [20usize, 40, 60, 80].iter().enumerate() {
            // Integer arithmetic: rank = ceil(q * n / 100).
            let rank = (q * values.len()).div_ceil(100);
            cuts[slot][k] = values[rank - 1];
        }
    }
    Ok(Discretizer { cuts })
}

/// The selected features' label strings for one token.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GazeLabelSet {
    labels: Vec<(GazeFeature, String)>,
}

impl GazeLabelSet {
    pub fn get(&self, feature: GazeFeature) -> Result<&str, GazeError> {
        self.labels
            .iter()
            .find(|(f, _)| *f == feature)
            .map(|(_, l)| l.as_str())
            .ok_or(GazeError::UnselectedFeature(feature.name()))
    }

    pub fn iter(&self) -> impl Iterator<Item = (GazeFeature, &str)> {
        self.labels.iter().map(|(f, l)| (*f, l.as_str()))
    }
}

/// Maps a feature vector to label strings for the selected features:
/// percentile bins for durations, raw value strings for the rest.
pub fn discretize(
    vector: &GazeVector,
    discretizer: &Discretizer,
    features: &[GazeFeature],
) -> GazeLabelSet {
    let labels = features
        .iter()
        .map(|&feature| {
            let value = vector.get(feature);
            let label = match discretizer.cuts(feature) {
                Some(cuts) => bin_label(value, cuts).to_string(),
                None => format_raw(value),
            };
            (feature, label)
        })
        .collect();
    GazeLabelSet { labels }
}

/// `v <= cut` falls into the lower bin; above the last cut is `80-100`.
fn bin_label(value: f64, cuts: &[f64; 4]) -> &'static str {
    for (i, &cut) in cuts.iter().enumerate() {
        if value <= cut {
            return BIN_LABELS[i];
        }
    }
    BIN_LABELS[4]
}

/// Canonical string for a raw-valued feature: integers render without a
/// fractional part, anything else with up to four decimals.
pub fn format_raw(value: f64) -> String {
    if value == libm::round(value) && libm::fabs(value) < 1e15 {
        alloc::format!("{}", value as i64)
    } else {
        let mut s = alloc::format!("{value:.4}");
        while s.ends_with('0') {
            s.pop();
        }
        if s.ends_with('.') {
            s.pop();
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::RawGaze;
    use alloc::vec;

    fn reading(records: Vec<RawGaze>) -> GazeReading {
        GazeReading { sent_id: "s".into(), participant_id: "p".into(), records }
    }

    fn fixated(
        total: f64,
        first: f64,
        pass: f64,
        n_fix: u32,
        n_refix: u32,
        reread: bool,
    ) -> RawGaze {
        RawGaze {
            total_fix_dur: total,
            first_fix_dur: first,
            first_pass_dur: pass,
            n_fix,
            n_refix,
            reread,
        }
    }

    fn with_totals(values: &[f64]) -> Vec<GazeVector> {
        values.iter().map(|&v| GazeVector { total_fix_dur: v, ..Default::default() }).collect()
    }

    #[test]
    fn derive_fix_probability_follows_fixation_counts() {
        // nb-fix row [2, 0, 3, 5, 1] from the worked example.
        let r = reading(vec![
            fixated(200.0, 100.0, 150.0, 2, 0, false),
            RawGaze::zero(),
            fixated(300.0, 80.0, 200.0, 3, 1, true),
            fixated(500.0, 90.0, 300.0, 5, 2, true),
            fixated(120.0, 120.0, 120.0, 1, 0, false),
        ]);
        let vectors = derive(&r);
        let probs: Vec<f64> = vectors.iter().map(|v| v.fix_prob).collect();
        let counts: Vec<f64> = vectors.iter().map(|v| v.n_fix).collect();
        assert_eq!(probs, vec![1.0, 0.0, 1.0, 1.0, 1.0]);
        assert_eq!(counts, vec![2.0, 0.0, 3.0, 5.0, 1.0]);
        assert_eq!(vectors[0].mean_fix_dur, 100.0);
        assert_eq!(vectors[1].mean_fix_dur, 0.0);
        assert_eq!(vectors[3].mean_fix_dur, 100.0);
    }

    #[test]
    fn derive_shifts_fix_prob_into_context_columns() {
        // A reading whose fixation pattern is [0, 0, 1, 1, 0]: the next-word
        // probabilities are the pattern shifted left with a 0 boundary, the
        // previous-word ones shifted right.
        let r = reading(vec![
            RawGaze::zero(),
            RawGaze::zero(),
            fixated(300.0, 80.0, 200.0, 3, 0, false),
            fixated(500.0, 90.0, 300.0, 5, 0, false),
            RawGaze::zero(),
        ]);
        let vectors = derive(&r);
        let next: Vec<f64> = vectors.iter().map(|v| v.next_fix_prob).collect();
        let prev: Vec<f64> = vectors.iter().map(|v| v.prev_fix_prob).collect();
        assert_eq!(next, vec![0.0, 1.0, 1.0, 0.0, 0.0]);
        assert_eq!(prev, vec![0.0, 0.0, 0.0, 1.0, 1.0]);
    }

    #[test]
    fn derive_all_zero_reading_gives_all_zero_vectors() {
        let r = reading(vec![RawGaze::zero(); 3]);
        for v in derive(&r) {
            for feature in GazeFeature::ALL {
                assert_eq!(v.get(feature), 0.0);
            }
        }
    }

    #[test]
    fn derive_copies_neighbour_durations_with_zero_boundaries() {
        let r = reading(vec![fixated(100.0, 100.0, 100.0, 1, 0, false), RawGaze::zero()]);
        let vectors = derive(&r);
        assert_eq!(vectors[0].next_fix_dur, 0.0);
        assert_eq!(vectors[0].prev_fix_dur, 0.0);
        assert_eq!(vectors[1].prev_fix_dur, 100.0);
        assert_eq!(vectors[1].next_fix_dur, 0.0);
    }

    #[test]
    fn fit_on_five_distinct_totals() {
        let disc = fit_discretizer(&with_totals(&[100.0, 200.0, 300.0, 400.0, 500.0])).unwrap();
        assert_eq!(disc.cuts(GazeFeature::TotalFixDur), Some(&[100.0, 200.0, 300.0, 400.0]));
    }

    #[test]
    fn fit_on_constant_values_collapses_cuts() {
        let disc = fit_discretizer(&with_totals(&[7.0, 7.0, 7.0])).unwrap();
        assert_eq!(disc.cuts(GazeFeature::TotalFixDur), Some(&[7.0, 7.0, 7.0, 7.0]));
    }

    #[test]
    fn fit_with_many_zeros_collapses_low_bins() {
        let disc = fit_discretizer(&with_totals(&[0.0, 0.0, 0.0, 0.0, 120.0])).unwrap();
        assert_eq!(disc.cuts(GazeFeature::TotalFixDur), Some(&[0.0, 0.0, 0.0, 0.0]));
    }

    #[test]
    fn fit_rejects_empty_training_set() {
        assert_eq!(fit_discretizer(&[]).unwrap_err(), GazeError::EmptyTrainingSet);
    }

    #[test]
    fn discretize_boundary_rule() {
        let disc = fit_discretizer(&with_totals(&[100.0, 200.0, 300.0, 400.0, 500.0])).unwrap();
        let bin = |v: f64| {
            let vector = GazeVector { total_fix_dur: v, ..Default::default() };
            let set = discretize(&vector, &disc, &[GazeFeature::TotalFixDur]);
            set.get(GazeFeature::TotalFixDur).unwrap().to_string()
        };
        assert_eq!(bin(250.0), "40-60");
        assert_eq!(bin(400.0), "60-80");
        assert_eq!(bin(401.0), "80-100");
        assert_eq!(bin(100.0), "0-20");
        assert_eq!(bin(0.0), "0-20");
    }

    #[test]
    fn zero_value_with_zero_cuts_lands_in_lowest_bin() {
        let disc = fit_discretizer(&with_totals(&[0.0, 0.0, 0.0, 0.0, 120.0])).unwrap();
        let vector = GazeVector::default();
        let set = discretize(&vector, &disc, &[GazeFeature::TotalFixDur]);
        assert_eq!(set.get(GazeFeature::TotalFixDur).unwrap(), "0-20");
    }

    #[test]
    fn mean_fix_bins_match_worked_example_row() {
        // Training distribution chosen so the cuts are (100, 200, 300, 400);
        // mean values 350 / 0 / 310 / 500 / 150 then fall into the bins
        // 60-80 / 0-20 / 60-80 / 80-100 / 20-40.
        let train: Vec<GazeVector> = [100.0, 200.0, 300.0, 400.0, 500.0]
            .iter()
            .map(|&v| GazeVector { mean_fix_dur: v, ..Default::default() })
            .collect();
        let disc = fit_discretizer(&train).unwrap();
        let bins: Vec<String> = [350.0, 0.0, 310.0, 500.0, 150.0]
            .iter()
            .map(|&m| {
                let v = GazeVector { mean_fix_dur: m, ..Default::default() };
                discretize(&v, &disc, &[GazeFeature::MeanFixDur])
                    .get(GazeFeature::MeanFixDur)
                    .unwrap()
                    .to_string()
            })
            .collect();
        assert_eq!(bins, vec!["60-80", "0-20", "60-80", "80-100", "20-40"]);
    }

    #[test]
    fn raw_features_keep_integer_strings() {
        let disc = fit_discretizer(&with_totals(&[1.0])).unwrap();
        let vector = GazeVector { n_fix: 3.0, fix_prob: 1.0, ..Default::default() };
        let set = discretize(&vector, &disc, &[GazeFeature::NFix, GazeFeature::FixProb]);
        assert_eq!(set.get(GazeFeature::NFix).unwrap(), "3");
        assert_eq!(set.get(GazeFeature::FixProb).unwrap(), "1");
        assert!(set.get(GazeFeature::RereadProb).is_err());
    }

    #[test]
    fn raw_format_trims_fractions() {
        assert_eq!(format_raw(2.0), "2");
        assert_eq!(format_raw(2.5), "2.5");
        assert_eq!(format_raw(1.0 / 3.0), "0.3333");
        assert_eq!(format_raw(0.0), "0");
    }

    #[test]
    fn groups_cover_all_features_once() {
        let mut seen = Vec::new();
        for group in FeatureGroup::ALL {
            for &f in group.features() {
                assert_eq!(f.group(), group);
                seen.push(f);
            }
        }
        assert_eq!(seen.len(), 12);
        for f in GazeFeature::ALL {
            assert!(seen.contains(&f));
        }
        assert_eq!(FeatureGroup::Basic.features().iter().filter(|f| f.is_binned()).count(), 2);
    }

    #[test]
    fn averaging_readings_averages_each_feature() {
        let a = derive(&reading(vec![fixated(100.0, 50.0, 100.0, 2, 1, true), RawGaze::zero()]));
        let b = derive(&reading(vec![RawGaze::zero(), RawGaze::zero()]));
        let avg = average(&[a, b]);
        assert_eq!(avg[0].total_fix_dur, 50.0);
        assert_eq!(avg[0].fix_prob, 0.5);
        assert_eq!(avg[0].reread_prob, 0.5);
        assert_eq!(avg[1].prev_fix_dur, 50.0);
        assert_eq!(format_raw(avg[0].fix_prob), "0.5");
    }
}
