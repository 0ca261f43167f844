//! Run configuration: a `key = value` text file plus command-line overrides.
//! One file fully specifies a training run, so an ablation over gaze features
//! is a loop over config files.

use std::path::PathBuf;

use gdparse_core::corpus::{PosColumn, SplitRatios};
use gdparse_core::eval::PunctPolicy;
use gdparse_core::gaze::{FeatureGroup, GazeFeature};
use gdparse_core::mtl::DEFAULT_AUX_WEIGHT;
use gdparse_core::nn::Hyperparams;

use crate::CliError;

/// Training regime.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    /// One corpus carrying both parsing and gaze gold.
    Parallel,
    /// A parsing corpus and a separate gaze corpus.
    Disjoint,
    /// Parsing only; gaze tasks are forbidden.
    Baseline,
}

impl Mode {
    fn parse(s: &str) -> Option<Self> {
        match s {
            "parallel" => Some(Mode::Parallel),
            "disjoint" => Some(Mode::Disjoint),
            "baseline" => Some(Mode::Baseline),
            _ => None,
        }
    }
}

/// A fully parsed run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub mode: Mode,
    /// Parsing corpus as one file to be split by `split`/`seed`.
    pub treebank: Option<PathBuf>,
    /// Pre-split parsing corpus; `train` is required if `treebank` is unset.
    pub train: Option<PathBuf>,
    pub dev: Option<PathBuf>,
    pub test: Option<PathBuf>,
    /// Gaze TSV.
    pub gaze: Option<PathBuf>,
    /// Sentences (forms and PoS) of the gaze corpus, disjoint mode only.
    pub gaze_treebank: Option<PathBuf>,
    pub split: SplitRatios,
    pub gaze_split: SplitRatios,
    pub seed: u64,
    /// Auxiliary gaze tasks with their loss weights.
    pub tasks: Vec<(GazeFeature, f64)>,
    pub punct: PunctPolicy,
    pub pos_column: PosColumn,
    /// PoS column for the gaze-side treebank in disjoint mode; inherits
    /// `pos_column` when unset.
    pub gaze_pos_column: Option<PosColumn>,
    pub outdir: PathBuf,
    pub hyper: Hyperparams,
    /// Average the readings of each sentence into one instance.
    pub gaze_aggregate: bool,
    /// Optional external word embedding table (`word v1 v2 ...` per line).
    pub word_embeddings: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            mode: Mode::Baseline,
            treebank: None,
            train: None,
            dev: None,
            test: None,
            gaze: None,
            gaze_treebank: None,
            split: SplitRatios::new(0.8, 0.1, 0.1),
            gaze_split: SplitRatios::new(0.9, 0.1, 0.0),
            seed: 1,
            tasks: Vec::new(),
            punct: PunctPolicy::UdDeprel,
            pos_column: PosColumn::Upos,
            gaze_pos_column: None,
            outdir: PathBuf::from("run"),
            hyper: Hyperparams::default(),
            gaze_aggregate: false,
            word_embeddings: None,
        }
    }
}

impl RunConfig {
    /// Parses a config file body, then applies `key=value` overrides in
    /// order, then validates.
    pub fn from_text(text: &str, overrides: &[String]) -> Result<Self, CliError> {
        let mut config = RunConfig::default();
        let mut saw_mode = false;
        let mut aux_weight = DEFAULT_AUX_WEIGHT;
        let mut task_text: Option<String> = None;

        let mut apply = |config: &mut RunConfig, key: &str, value: &str| -> Result<(), CliError> {
            match key {
                "mode" => {
                    config.mode = Mode::parse(value)
                        .ok_or_else(|| bad(key, value, "parallel, disjoint or baseline"))?;
                    saw_mode = true;
                }
                "treebank" => config.treebank = Some(PathBuf::from(value)),
                "train" => config.train = Some(PathBuf::from(value)),
                "dev" => config.dev = Some(PathBuf::from(value)),
                "test" => config.test = Some(PathBuf::from(value)),
                "gaze" => config.gaze = Some(PathBuf::from(value)),
                "gaze_treebank" => config.gaze_treebank = Some(PathBuf::from(value)),
                "split" => config.split = parse_ratios(key, value)?,
                "gaze_split" => config.gaze_split = parse_ratios(key, value)?,
                "seed" => config.seed = parse_num(key, value)?,
                "tasks" => task_text = Some(value.to_string()),
                "aux_weight" => aux_weight = parse_num(key, value)?,
                "punct" => {
                    config.punct = PunctPolicy::parse(value)
                        .ok_or_else(|| bad(key, value, "ud-deprel, ptb-pos or none"))?;
                }
                "pos_column" => {
                    config.pos_column =
                        PosColumn::parse(value).ok_or_else(|| bad(key, value, "upos or xpos"))?;
                }
                "gaze_pos_column" => {
                    config.gaze_pos_column = Some(
                        PosColumn::parse(value).ok_or_else(|| bad(key, value, "upos or xpos"))?,
                    );
                }
                "outdir" => config.outdir = PathBuf::from(value),
                "preset" => match value {
                    "paper" => config.hyper = Hyperparams::default(),
                    "desk" => config.hyper = Hyperparams::desk(),
                    _ => return Err(bad(key, value, "paper or desk")),
                },
                "word_emb_dim" => config.hyper.word_emb_dim = parse_num(key, value)?,
                "char_emb_dim" => config.hyper.char_emb_dim = parse_num(key, value)?,
                "pos_emb_dim" => config.hyper.pos_emb_dim = parse_num(key, value)?,
                "word_hidden" => config.hyper.word_hidden = parse_num(key, value)?,
                "char_hidden" => config.hyper.char_hidden = parse_num(key, value)?,
                "lr0" => config.hyper.lr0 = parse_num(key, value)?,
                "decay" => config.hyper.decay = parse_num(key, value)?,
                "momentum" => config.hyper.momentum = parse_num(key, value)?,
                "dropout" => config.hyper.dropout = parse_num(key, value)?,
                "batch_size" => config.hyper.batch_size = parse_num(key, value)?,
                "max_epochs" => config.hyper.max_epochs = parse_num(key, value)?,
                "gaze_aggregate" => match value {
                    "none" => config.gaze_aggregate = false,
                    "mean" => config.gaze_aggregate = true,
                    _ => return Err(bad(key, value, "none or mean")),
                },
                "word_embeddings" => config.word_embeddings = Some(PathBuf::from(value)),
                _ => return Err(CliError::config(format!("unknown config key {key:?}"))),
            }
            Ok(())
        };

        for (lineno, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (key, value) = line.split_once('=').ok_or_else(|| {
                CliError::config(format!("config line {}: expected key = value", lineno + 1))
            })?;
            apply(&mut config, key.trim(), value.trim())?;
        }
        for pair in overrides {
            let (key, value) = pair
                .split_once('=')
                .ok_or_else(|| CliError::config(format!("override {pair:?}: expected key=value")))?;
            apply(&mut config, key.trim(), value.trim())?;
        }

        if !saw_mode {
            return Err(CliError::config("config must set mode = parallel | disjoint | baseline"));
        }
        if let Some(text) = task_text {
            config.tasks = parse_tasks(&text, aux_weight)?;
        }
        config.validate()?;
        Ok(config)
    }

    fn validate(&self) -> Result<(), CliError> {
        if self.treebank.is_none() && self.train.is_none() {
            return Err(CliError::config(
                "a parsing corpus is required: set treebank = ... or train = ...",
            ));
        }
        if self.treebank.is_some() && self.train.is_some() {
            return Err(CliError::config("set either treebank or train/dev/test, not both"));
        }
        match self.mode {
            Mode::Baseline => {
                if !self.tasks.is_empty() {
                    return Err(CliError::config(
                        "baseline mode forbids gaze tasks; drop tasks = ... or use mode = parallel",
                    ));
                }
            }
            Mode::Parallel => {
                if !self.tasks.is_empty() && self.gaze.is_none() {
                    return Err(CliError::config(
                        "parallel mode with gaze tasks requires gaze = <tsv>",
                    ));
                }
                if self.gaze_treebank.is_some() {
                    return Err(CliError::config(
                        "gaze_treebank is for disjoint mode; parallel data aligns the gaze TSV \
                         with the parsing treebank itself",
                    ));
                }
            }
            Mode::Disjoint => {
                if self.gaze.is_none() || self.gaze_treebank.is_none() {
                    return Err(CliError::config(
                        "disjoint mode requires both gaze = <tsv> and gaze_treebank = <conllu>",
                    ));
                }
                if self.tasks.is_empty() {
                    return Err(CliError::config(
                        "disjoint mode without gaze tasks trains nothing from the gaze corpus; \
                         list tasks = ... or use mode = baseline",
                    ));
                }
            }
        }
        self.hyper.validate().map_err(CliError::config)?;
        Ok(())
    }
}

fn bad(key: &str, value: &str, expected: &str) -> CliError {
    CliError::config(format!("config key {key}: expected {expected}, got {value:?}"))
}

fn parse_num<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, CliError> {
    value.parse().map_err(|_| bad(key, value, "a number"))
}

fn parse_ratios(key: &str, value: &str) -> Result<SplitRatios, CliError> {
    let parts: Vec<&str> = value.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(bad(key, value, "three comma-separated fractions"));
    }
    let mut nums = [0.0f64; 3];
    for (slot, part) in nums.iter_mut().zip(&parts) {
        *slot = part.parse().map_err(|_| bad(key, value, "three comma-separated fractions"))?;
    }
    Ok(SplitRatios::new(nums[0], nums[1], nums[2]))
}

/// Parses the task list: comma-separated feature or group names, each with an
/// optional `:weight` suffix. Group names expand to their features, one task
/// per feature.
pub fn parse_tasks(text: &str, default_weight: f64) -> Result<Vec<(GazeFeature, f64)>, CliError> {
    let mut tasks: Vec<(GazeFeature, f64)> = Vec::new();
    for entry in text.split(',').map(str::trim).filter(|e| !e.is_empty()) {
        let (name, weight) = match entry.split_once(':') {
            Some((name, weight)) => {
                let weight: f64 = weight
                    .trim()
                    .parse()
                    .map_err(|_| CliError::config(format!("task {entry:?}: bad weight")))?;
                (name.trim(), weight)
            }
            None => (entry, default_weight),
        };
        if weight < 0.0 {
            return Err(CliError::config(format!("task {entry:?}: weight must be >= 0")));
        }
        let features: Vec<GazeFeature> = if let Some(group) = FeatureGroup::parse(name) {
            group.features().to_vec()
        } else if let Some(feature) = GazeFeature::parse(name) {
            vec![feature]
        } else {
            return Err(CliError::config(format!(
                "unknown gaze feature or group {name:?}; features are {}, groups are {}",
                GazeFeature::ALL.map(|f| f.name()).join(", "),
                FeatureGroup::ALL.map(|g| g.name()).join(", ")
            )));
        };
        for feature in features {
            if tasks.iter().any(|(f, _)| *f == feature) {
                return Err(CliError::config(format!(
                    "gaze feature {} is listed twice",
                    feature.name()
                )));
            }
            tasks.push((feature, weight));
        }
    }
    Ok(tasks)
}
