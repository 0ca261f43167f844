//! Shared fixtures for the command-line and acceptance tests.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use rand::Rng;
use rand_chacha::ChaCha8Rng;

/// The worked five-token example: "Can a parser see ?" with one extra
/// multiword-token line that parsers must skip.
pub const EXAMPLE_CONLLU: &str = "\
# sent_id = ex1
1\tCan\t_\tV\t_\t_\t4\taux\t_\t_
2\ta\t_\tD\t_\t_\t3\tdet\t_\t_
3-4\tparser see\t_\t_\t_\t_\t_\t_\t_\t_
3\tparser\t_\tN\t_\t_\t4\tnsubj\t_\t_
4\tsee\t_\tV\t_\t_\t0\troot\t_\t_
5\t?\t_\tP\t_\t_\t4\tpunct\t_\t_
";

pub const EXAMPLE_LABELS: &str = "+1@V@aux +1@N@det +1@V@nsubj -1@ROOT@root -1@V@punct";

pub fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_gdparse")
}

/// Runs the binary with arguments and returns its output.
pub fn gdparse(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("binary runs")
}

pub fn stdout_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stdout).into_owned()
}

pub fn stderr_of(output: &Output) -> String {
    String::from_utf8_lossy(&output.stderr).into_owned()
}

/// A deterministic synthetic treebank of simple clause shapes. The PoS tag is
/// written to both the UPOS and XPOS columns so either column choice works.
pub fn synthetic_treebank(sentences: usize, seed: u64) -> String {
    let mut rng = gdparse_core::rng::stream(seed, 90);
    let determiners = ["the", "a"];
    let nouns = ["dog", "cat", "bird", "horse", "cow", "fox"];
    let verbs = ["sees", "likes", "finds", "chases"];
    let adverbs = ["today", "often", "rarely"];
    let pick = |set: &[&'static str], rng: &mut ChaCha8Rng| -> &'static str {
        set[rng.random_range(0..set.len())]
    };
    let mut out = String::new();
    for i in 0..sentences {
        let d1 = pick(&determiners, &mut rng);
        let n1 = pick(&nouns, &mut rng);
        let v = pick(&verbs, &mut rng);
        let rows: Vec<(&str, &str, usize, &str)> = match i % 3 {
            0 => {
                let d2 = pick(&determiners, &mut rng);
                let n2 = pick(&nouns, &mut rng);
                vec![
                    (d1, "DET", 2, "det"),
                    (n1, "NOUN", 3, "nsubj"),
                    (v, "VERB", 0, "root"),
                    (d2, "DET", 5, "det"),
                    (n2, "NOUN", 3, "obj"),
                    (".", "PUNCT", 3, "punct"),
                ]
            }
            1 => vec![
                (d1, "DET", 2, "det"),
                (n1, "NOUN", 3, "nsubj"),
                (v, "VERB", 0, "root"),
                (".", "PUNCT", 3, "punct"),
            ],
            _ => {
                let a = pick(&adverbs, &mut rng);
                vec![
                    (d1, "DET", 2, "det"),
                    (n1, "NOUN", 3, "nsubj"),
                    (v, "VERB", 0, "root"),
                    (a, "ADV", 3, "advmod"),
                    (".", "PUNCT", 3, "punct"),
                ]
            }
        };
        out.push_str(&format!("# sent_id = syn{}\n", i + 1));
        for (j, (form, pos, head, deprel)) in rows.iter().enumerate() {
            out.push_str(&format!(
                "{}\t{form}\t_\t{pos}\t{pos}\t_\t{head}\t{deprel}\t_\t_\n",
                j + 1
            ));
        }
        out.push('\n');
    }
    out
}

/// Deterministic synthetic gaze measurements for every sentence of a
/// treebank produced by [`synthetic_treebank`].
pub fn synthetic_gaze(treebank: &str, participants: usize, seed: u64) -> String {
    let sentences =
        gdparse_core::corpus::parse_conllu(treebank, gdparse_core::corpus::PosColumn::Upos)
            .expect("synthetic treebank parses");
    let mut rng = gdparse_core::rng::stream(seed, 91);
    let mut out = String::from(
        "sent_id\tparticipant_id\ttoken_index\tform\ttotal_fix_dur\tfirst_fix_dur\t\
         first_pass_dur\tn_fix\tn_refix\treread\n",
    );
    for sentence in &sentences {
        for p in 0..participants {
            for token in &sentence.tokens {
                let n_fix: u32 = rng.random_range(0..5);
                let (total, first, pass, n_refix, reread) = if n_fix == 0 {
                    (0u32, 0u32, 0u32, 0u32, 0u8)
                } else {
                    let first = rng.random_range(40..160);
                    let pass = first + rng.random_range(0..80);
                    let total = pass + rng.random_range(0..150) * n_fix.saturating_sub(1);
                    let n_refix = if n_fix > 1 { rng.random_range(0..n_fix) } else { 0 };
                    let reread = u8::from(n_refix > 0 && rng.random_range(0..2) == 1);
                    (total, first, pass, n_refix, reread)
                };
                out.push_str(&format!(
                    "{}\tp{}\t{}\t{}\t{total}\t{first}\t{pass}\t{n_fix}\t{n_refix}\t{reread}\n",
                    sentence.sent_id,
                    p + 1,
                    token.index,
                    token.form
                ));
            }
        }
    }
    out
}

/// Writes a file under `dir`, creating parents.
pub fn write_file(dir: &Path, name: &str, contents: &str) -> PathBuf {
    let path = dir.join(name);
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).expect("create fixture directory");
    }
    std::fs::write(&path, contents).expect("write fixture");
    path
}
