//! The versioned binary model file.
//!
//! Layout: the magic bytes `GDP1`, a little-endian `u32` format version, a
//! little-endian `u64` length followed by that many bytes of JSON metadata
//! (hyperparameters, seed, vocabularies, task list, discretizer and the
//! parameter manifest), then the raw little-endian `f64` parameter blocks in
//! manifest order.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use gdparse_core::corpus::PosColumn;
use gdparse_core::gaze::Discretizer;
use gdparse_core::mtl::{self, TaskSpec};
use gdparse_core::nn::{Hyperparams, ModelParams};
use gdparse_core::vocab::Vocab;

use crate::CliError;

pub const MAGIC: [u8; 4] = *b"GDP1";
pub const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct HeadMeta {
    name: String,
    vocab: Vocab,
}

#[derive(Serialize, Deserialize)]
struct ParamMeta {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct Metadata {
    hyper: Hyperparams,
    seed: u64,
    pos_column: PosColumn,
    word_vocab: Vocab,
    char_vocab: Vocab,
    pos_vocab: Vocab,
    tasks: Vec<TaskSpec>,
    heads: Vec<HeadMeta>,
    discretizer: Option<Discretizer>,
    params: Vec<ParamMeta>,
}

/// Everything a loaded model file provides.
#[derive(Debug)]
pub struct LoadedModel {
    pub model: ModelParams,
    pub tasks: Vec<TaskSpec>,
    pub pos_column: PosColumn,
}

/// Writes a trained model with its task list.
pub fn save(
    path: &Path,
    model: &ModelParams,
    tasks: &[TaskSpec],
    pos_column: PosColumn,
) -> Result<(), CliError> {
    let metadata = Metadata {
        hyper: model.hyper,
        seed: model.seed,
        pos_column,
        word_vocab: model.word_vocab.clone(),
        char_vocab: model.char_vocab.clone(),
        pos_vocab: model.pos_vocab.clone(),
        tasks: tasks.to_vec(),
        heads: model
            .heads
            .iter()
            .map(|h| HeadMeta { name: h.name.clone(), vocab: h.vocab.clone() })
            .collect(),
        discretizer: model.discretizer.clone(),
        params: model
            .store()
            .iter()
            .map(|(_, e)| ParamMeta { name: e.name.clone(), shape: e.tensor.shape().to_vec() })
            .collect(),
    };
    let json = serde_json::to_vec(&metadata)
        .map_err(|e| CliError::data(format!("encoding model metadata: {e}")))?;

    let file = std::fs::File::create(path)
        .map_err(|e| CliError::data(format!("creating {}: {e}", path.display())))?;
    let mut out = std::io::BufWriter::new(file);
    let write = |out: &mut std::io::BufWriter<std::fs::File>, bytes: &[u8]| {
        out.write_all(bytes).map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
    };
    write(&mut out, &MAGIC)?;
    write(&mut out, &VERSION.to_le_bytes())?;
    write(&mut out, &(json.len() as u64).to_le_bytes())?;
    write(&mut out, &json)?;
    for (_, entry) in model.store().iter() {
        for value in entry.tensor.values() {
            write(&mut out, &value.to_le_bytes())?;
        }
    }
    out.flush().map_err(|e| CliError::data(format!("writing {}: {e}", path.display())))
}

/// Reads a model file, validating magic, version and parameter shapes.
pub fn load(path: &Path) -> Result<LoadedModel, CliError> {
    let file = std::fs::File::open(path)
        .map_err(|e| CliError::data(format!("opening {}: {e}", path.display())))?;
    let mut input = std::io::BufReader::new(file);
    let corrupt = |what: &str| CliError::data(format!("{}: {what}", path.display()));

    let mut magic = [0u8; 4];
    read_exact(&mut input, &mut magic, path)?;
    if magic != MAGIC {
        return Err(corrupt("not a model file (bad magic bytes)"));
    }
    let mut version = [0u8; 4];
    read_exact(&mut input, &mut version, path)?;
    if u32::from_le_bytes(version) != VERSION {
        return Err(corrupt("unsupported model file version"));
    }
    let mut len = [0u8; 8];
    read_exact(&mut input, &mut len, path)?;
    let mut json = vec![0u8; u64::from_le_bytes(len) as usize];
    read_exact(&mut input, &mut json, path)?;
    let metadata: Metadata = serde_json::from_slice(&json)
        .map_err(|e| corrupt(&format!("bad metadata block: {e}")))?;

    let mut model = ModelParams::new(
        metadata.hyper,
        metadata.seed,
        metadata.word_vocab,
        metadata.char_vocab,
        metadata.pos_vocab,
        metadata.heads.into_iter().map(|h| (h.name, h.vocab)).collect(),
        metadata.discretizer,
    )
    .map_err(|e| corrupt(&format!("inconsistent hyperparameters: {e}")))?;

    // The manifest must describe exactly the parameters the architecture
    // declares, in order.
    if metadata.params.len() != model.store().len() {
        return Err(corrupt("parameter manifest does not match the architecture"));
    }
    for (meta, (_, entry)) in metadata.params.iter().zip(model.store().iter()) {
        if meta.name != entry.name || meta.shape != entry.tensor.shape() {
            return Err(corrupt(&format!("parameter manifest mismatch at {}", meta.name)));
        }
    }
    for meta in &metadata.params {
        let count: usize = meta.shape.iter().product();
        let mut bytes = vec![0u8; count * 8];
        read_exact(&mut input, &mut bytes, path)?;
        let values: Vec<f64> = bytes
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        model
            .set_param_values(&meta.name, &values)
            .map_err(|e| corrupt(&format!("loading {}: {e}", meta.name)))?;
    }
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing).map_err(|e| corrupt(&format!("read error: {e}")))? != 0 {
        return Err(corrupt("trailing bytes after parameter blocks"));
    }

    mtl::validate_heads(&model, &metadata.tasks).map_err(|e| corrupt(&e.to_string()))?;
    Ok(LoadedModel { model, tasks: metadata.tasks, pos_column: metadata.pos_column })
}

fn read_exact(
    input: &mut impl Read,
    buf: &mut [u8],
    path: &Path,
) -> Result<(), CliError> {
    input
        .read_exact(buf)
        .map_err(|e| CliError::data(format!("{}: truncated model file ({e})", path.display())))
}

#[cfg(test)]
mod tests {
    use super::*;
    use gdparse_core::nn::TokenInput;
    use gdparse_core::rng;

    fn toy() -> (ModelParams, Vec<TaskSpec>) {
        let hyper = Hyperparams { dropout: 0.0, ..Hyperparams::desk() };
        let model = ModelParams::new(
            hyper,
            7,
            Vocab::collect(["a", "b"]),
            Vocab::collect(["a", "b"]),
            Vocab::collect(["X"]),
            vec![
                ("parse-pair".into(), Vocab::collect(["+1@X", "-1@ROOT"])),
                ("parse-rel".into(), Vocab::collect(["dep", "root"])),
            ],
            None,
        )
        .unwrap();
        (model, vec![TaskSpec::parse_pair(), TaskSpec::parse_rel()])
    }

    fn logits_of(model: &ModelParams) -> Vec<f64> {
        let mut g = gdparse_core::nn::Graph::new(model.store());
        let mut rng = rng::stream(0, rng::DROPOUT);
        let inputs = model.embed(&mut g, &[TokenInput::new("a", "X")], false, &mut rng);
        let logits = model.forward(&mut g, &inputs, false, &mut rng);
        g.value(logits[0][0]).to_vec()
    }

    #[test]
    fn save_load_round_trip_preserves_behaviour() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gdp");
        let (model, tasks) = toy();
        save(&path, &model, &tasks, PosColumn::Upos).unwrap();
        let loaded = load(&path).unwrap();
        assert_eq!(loaded.tasks, tasks);
        assert_eq!(loaded.pos_column, PosColumn::Upos);
        assert_eq!(logits_of(&model), logits_of(&loaded.model));
        // Bit-identical files on re-save.
        let path2 = dir.path().join("model2.gdp");
        save(&path2, &loaded.model, &loaded.tasks, loaded.pos_column).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn bad_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gdp");
        std::fs::write(&path, b"NOPE....").unwrap();
        let err = load(&path).unwrap_err();
        assert!(err.to_string().contains("magic"), "{err}");
        assert_eq!(err.exit_code(), 1);
    }

    #[test]
    fn wrong_version_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gdp");
        let (model, tasks) = toy();
        save(&path, &model, &tasks, PosColumn::Upos).unwrap();
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[4] = 99;
        std::fs::write(&path, &bytes).unwrap();
        assert!(load(&path).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.gdp");
        let (model, tasks) = toy();
        save(&path, &model, &tasks, PosColumn::Upos).unwrap();
        let bytes = std::fs::read(&path).unwrap();
        std::fs::write(&path, &bytes[..bytes.len() - 9]).unwrap();
        assert!(load(&path).unwrap_err().to_string().contains("truncated"));
    }
}
