//! Dependency trees as per-token labels.
//!
//! Each token gets a label `(offset, pos, deprel)`: its head is the
//! `offset`-th token to the right (left for negative offsets) carrying the
//! PoS tag `pos`, counting outward from the token. The syntactic root gets
//! the sentinel `(-1, ROOT, deprel)`. [`encode`] is exact on valid trees;
//! [`decode`] accepts *any* label sequence and repairs it into a single-rooted
//! tree, so a tagger's raw predictions always produce usable output.
//!
//! The textual form of a label is `offset@pos@deprel`, e.g. `+1@V@aux`.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use thiserror::Error;

use crate::corpus::{Sentence, TreeError};
use crate::vocab::{UNK, Vocab};

/// PoS sentinel marking root attachment. Not a valid tag of the tagset.
pub const ROOT_POS: &str = "ROOT";
/// Relation assigned when the decoder has to force a root.
pub const ROOT_DEPREL: &str = "root";

/// The per-token encoding of one dependency arc.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct DepLabel {
    /// Signed outward count of same-PoS candidates; never 0.
    pub offset: i32,
    /// PoS tag of the head, or [`ROOT_POS`].
    pub pos: String,
    /// Dependency relation of the arc.
    pub deprel: String,
}

impl DepLabel {
    pub fn new(offset: i32, pos: &str, deprel: &str) -> Self {
        DepLabel { offset, pos: pos.to_string(), deprel: deprel.to_string() }
    }

    /// The `(offset, pos)` part as a vocabulary entry, e.g. `+1@V`.
    pub fn pair_entry(&self) -> String {
        format!("{:+}@{}", self.offset, self.pos)
    }

    /// Parses a pair entry produced by [`DepLabel::pair_entry`].
    pub fn parse_pair_entry(entry: &str) -> Option<(i32, &str)> {
        let (offset, pos) = entry.split_once('@')?;
        Some((offset.parse().ok()?, pos))
    }

    /// Full textual form `offset@pos@deprel`.
    pub fn render(&self) -> String {
        format!("{:+}@{}@{}", self.offset, self.pos, self.deprel)
    }

    /// Parses the textual form. The deprel may itself contain `@`.
    pub fn parse(text: &str) -> Result<Self, LabelParseError> {
        let mut parts = text.splitn(3, '@');
        let bad = || LabelParseError { text: text.to_string() };
        let offset = parts.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let pos = parts.next().ok_or_else(bad)?;
        let deprel = parts.next().ok_or_else(bad)?;
        if pos.is_empty() || deprel.is_empty() {
            return Err(bad());
        }
        Ok(DepLabel::new(offset, pos, deprel))
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("cannot parse {text:?} as offset@pos@deprel")]
pub struct LabelParseError {
    pub text: String,
}

#[derive(Clone, Debug, Error, PartialEq)]
pub enum EncodeError {
    #[error(transparent)]
    Tree(#[from] TreeError),
    #[error("cannot build label vocabularies from an empty corpus")]
    EmptyCorpus,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum DecodeError {
    #[error("cannot decode an empty label sequence")]
    Empty,
    #[error("{labels} labels for {tags} PoS tags")]
    LengthMismatch { labels: usize, tags: usize },
}

/// Encodes a valid dependency tree into one label per token.
pub fn encode(sentence: &Sentence) -> Result<Vec<DepLabel>, EncodeError> {
    sentence.validate_tree()?;
    let tags: Vec<&str> = sentence.tokens.iter().map(|t| t.pos.as_str()).collect();
    let mut labels = Vec::with_capacity(sentence.len());
    for token in &sentence.tokens {
        let head = token.head.expect("validated tree has all heads");
        let label = if head == 0 {
            DepLabel::new(-1, ROOT_POS, &token.deprel)
        } else {
            let head_pos = tags[head - 1];
            let i = token.index;
            let count = if head > i {
                tags[i..head].iter().filter(|&&p| p == head_pos).count() as i32
            } else {
                -(tags[head - 1..i - 1].iter().filter(|&&p| p == head_pos).count() as i32)
            };
            DepLabel::new(count, head_pos, &token.deprel)
        };
        labels.push(label);
    }
    Ok(labels)
}

/// A decoded (and possibly repaired) tree.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DecodedTree {
    /// Head per token, 0 for the root. Always a valid single-rooted tree.
    pub heads: Vec<usize>,
    pub deprels: Vec<String>,
    /// Number of repair actions taken; 0 means the labels were consistent.
    pub repairs: usize,
}

/// Resolves labels to head indices and repairs any inconsistency:
///
/// 1. labels without a matching PoS in their direction attach to the root,
/// 2. if nothing attaches to the root, the first ROOT-labelled token (token 1
///    as a last resort) is forced to,
/// 3. with several root attachments the leftmost wins and the rest reattach
///    to it,
/// 4. remaining cycles are broken by reattaching their leftmost member to
///    the root token.
///
/// The result is always a single-rooted acyclic tree; `repairs` counts how
/// often the rules fired.
pub fn decode(labels: &[DepLabel], pos_tags: &[String]) -> Result<DecodedTree, DecodeError> {
    if labels.is_empty() {
        return Err(DecodeError::Empty);
    }
    if labels.len() != pos_tags.len() {
        return Err(DecodeError::LengthMismatch { labels: labels.len(), tags: pos_tags.len() });
    }
    let n = labels.len();
    let mut repairs = 0usize;

    let mut heads: Vec<usize> = Vec::with_capacity(n);
    for (i, label) in labels.iter().enumerate() {
        let index = i + 1;
        if label.pos == ROOT_POS && label.offset == -1 {
            heads.push(0);
            continue;
        }
        match resolve_offset(label, index, pos_tags) {
            Some(head) => heads.push(head),
            None => {
                heads.push(0);
                repairs += 1;
            }
        }
    }

    let mut deprels: Vec<String> = labels.iter().map(|l| l.deprel.clone()).collect();

    // No root at all: force one.
    if !heads.contains(&0) {
        let forced = labels.iter().position(|l| l.pos == ROOT_POS).unwrap_or(0);
        heads[forced] = 0;
        deprels[forced] = ROOT_DEPREL.to_string();
        repairs += 1;
    }

    // Several roots: keep the leftmost, hang the others off it.
    let root = heads.iter().position(|&h| h == 0).expect("a root exists") + 1;
    for (i, head) in heads.iter_mut().enumerate() {
        if *head == 0 && i + 1 != root {
            *head = root;
            repairs += 1;
        }
    }

    // Cycles cannot contain the root token; reattach their leftmost member.
    loop {
        let mut reaches_root = vec![false; n + 1];
        reaches_root[0] = true;
        for start in 1..=n {
            let mut path = Vec::new();
            let mut at = start;
            while !reaches_root[at] && !path.contains(&at) {
                path.push(at);
                at = heads[at - 1];
            }
            if reaches_root[at] {
                for node in path {
                    reaches_root[node] = true;
                }
            }
        }
        let Some(stranded) = (1..=n).find(|&i| !reaches_root[i]) else {
            break;
        };
        // Walk from the stranded token into its cycle, then pick the cycle's
        // leftmost member.
        let mut seen = vec![false; n + 1];
        let mut at = stranded;
        while !seen[at] {
            seen[at] = true;
            at = heads[at - 1];
        }
        let mut cycle = vec![at];
        let mut walker = heads[at - 1];
        while walker != at {
            cycle.push(walker);
            walker = heads[walker - 1];
        }
        let leftmost = *cycle.iter().min().expect("cycle is non-empty");
        heads[leftmost - 1] = root;
        repairs += 1;
    }

    Ok(DecodedTree { heads, deprels, repairs })
}

fn resolve_offset(label: &DepLabel, index: usize, tags: &[String]) -> Option<usize> {
    let n = tags.len();
    let mut remaining = label.offset.unsigned_abs() as usize;
    if remaining == 0 {
        return None;
    }
    if label.offset > 0 {
        for j in index + 1..=n {
            if tags[j - 1] == label.pos {
                remaining -= 1;
                if remaining == 0 {
                    return Some(j);
                }
            }
        }
    } else {
        for j in (1..index).rev() {
            if tags[j - 1] == label.pos {
                remaining -= 1;
                if remaining == 0 {
                    return Some(j);
                }
            }
        }
    }
    None
}

/// The two prediction vocabularies: `(offset, pos)` pairs and deprels.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LabelVocabs {
    pub pairs: Vocab,
    pub rels: Vocab,
}

/// Builds the `(offset, pos)` and deprel vocabularies over a labelled corpus,
/// in first-occurrence order with an unknown entry each.
pub fn label_vocab<'a, I>(corpus: I) -> Result<LabelVocabs, EncodeError>
where
    I: IntoIterator<Item = &'a [DepLabel]>,
{
    let mut pairs = Vocab::new();
    let mut rels = Vocab::new();
    let mut seen_any = false;
    for labels in corpus {
        for label in labels {
            seen_any = true;
            pairs.intern(&label.pair_entry());
            rels.intern(&label.deprel);
        }
    }
    if !seen_any {
        return Err(EncodeError::EmptyCorpus);
    }
    Ok(LabelVocabs { pairs, rels })
}

/// Turns predicted vocabulary ids back into a label. Unknown entries become
/// unresolvable labels (offset 0), which the decoder then repairs.
pub fn label_from_ids(pair_id: usize, rel_id: usize, vocabs: &LabelVocabs) -> DepLabel {
    let deprel = vocabs.rels.entry(rel_id);
    match DepLabel::parse_pair_entry(vocabs.pairs.entry(pair_id)) {
        Some((offset, pos)) => DepLabel::new(offset, pos, deprel),
        None => DepLabel::new(0, UNK, deprel),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;

    fn sentence(tags: &[&str], heads: &[usize], deprels: &[&str]) -> Sentence {
        let tokens = tags
            .iter()
            .zip(heads)
            .zip(deprels)
            .enumerate()
            .map(|(i, ((&pos, &head), &deprel))| Token {
                index: i + 1,
                form: format!("w{}", i + 1),
                pos: pos.to_string(),
                head: Some(head),
                deprel: deprel.to_string(),
            })
            .collect();
        Sentence { sent_id: "t".to_string(), tokens }
    }

    fn example() -> Sentence {
        sentence(
            &["V", "D", "N", "V", "P"],
            &[4, 3, 4, 0, 4],
            &["aux", "det", "nsubj", "root", "punct"],
        )
    }

    #[test]
    fn encodes_example_sentence() {
        let labels = encode(&example()).unwrap();
        let rendered: Vec<String> = labels.iter().map(DepLabel::render).collect();
        assert_eq!(
            rendered,
            ["+1@V@aux", "+1@N@det", "+1@V@nsubj", "-1@ROOT@root", "-1@V@punct"]
        );
    }

    #[test]
    fn encodes_single_token_sentence() {
        let labels = encode(&sentence(&["V"], &[0], &["root"])).unwrap();
        assert_eq!(labels, vec![DepLabel::new(-1, ROOT_POS, "root")]);
    }

    #[test]
    fn encodes_left_attachment() {
        let labels = encode(&sentence(&["N", "V", "N"], &[2, 0, 2], &["nsubj", "root", "obj"]))
            .unwrap();
        let rendered: Vec<String> = labels.iter().map(DepLabel::render).collect();
        assert_eq!(rendered, ["+1@V@nsubj", "-1@ROOT@root", "-1@V@obj"]);
    }

    #[test]
    fn second_candidate_offsets() {
        // Token 1 attaches to the *second* V to the right.
        let labels =
            encode(&sentence(&["D", "V", "V"], &[3, 3, 0], &["det", "aux", "root"])).unwrap();
        assert_eq!(labels[0], DepLabel::new(2, "V", "det"));
        assert_eq!(labels[1], DepLabel::new(1, "V", "aux"));
    }

    #[test]
    fn decodes_example_labels() {
        let s = example();
        let labels = encode(&s).unwrap();
        let tree = decode(&labels, &s.pos_tags()).unwrap();
        assert_eq!(tree.heads, vec![4, 3, 4, 0, 4]);
        assert_eq!(tree.deprels, vec!["aux", "det", "nsubj", "root", "punct"]);
        assert_eq!(tree.repairs, 0);
    }

    #[test]
    fn unresolvable_label_on_single_token_becomes_root() {
        let labels = vec![DepLabel::new(3, "N", "det")];
        let tree = decode(&labels, &["X".to_string()]).unwrap();
        assert_eq!(tree.heads, vec![0]);
        assert!(tree.repairs > 0);
    }

    #[test]
    fn cycle_is_broken_through_leftmost_member() {
        // 1 -> 2, 2 -> 1, valid root at 3.
        let tags: Vec<String> = ["A", "A", "B"].iter().map(|s| s.to_string()).collect();
        let labels = vec![
            DepLabel::new(1, "A", "x"),
            DepLabel::new(-1, "A", "y"),
            DepLabel::new(-1, ROOT_POS, "root"),
        ];
        let tree = decode(&labels, &tags).unwrap();
        assert_eq!(tree.heads, vec![3, 1, 0]);
        assert_eq!(tree.repairs, 1);
    }

    #[test]
    fn multiple_roots_keep_leftmost() {
        let tags: Vec<String> = ["A", "B", "C"].iter().map(|s| s.to_string()).collect();
        let labels = vec![
            DepLabel::new(-1, ROOT_POS, "root"),
            DepLabel::new(-1, ROOT_POS, "root"),
            DepLabel::new(-1, "A", "dep"),
        ];
        let tree = decode(&labels, &tags).unwrap();
        assert_eq!(tree.heads, vec![0, 1, 1]);
        assert_eq!(tree.repairs, 1);
    }

    #[test]
    fn root_pos_with_bad_offset_still_attaches_to_root() {
        let tags: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let labels = vec![DepLabel::new(1, "B", "x"), DepLabel::new(2, ROOT_POS, "y")];
        let tree = decode(&labels, &tags).unwrap();
        // No token is tagged ROOT, so label 2 is unresolvable and rule 1
        // sends it to the root; token 1 keeps its real head.
        assert_eq!(tree.heads, vec![2, 0]);
        assert_eq!(tree.repairs, 1);
    }

    #[test]
    fn rootless_resolvable_labels_force_token_one() {
        // Both labels resolve to real heads (1 <-> 2), so nothing attaches
        // to the root; rule 2 forces token 1, which also breaks the cycle.
        let tags: Vec<String> = ["A", "B"].iter().map(|s| s.to_string()).collect();
        let labels = vec![DepLabel::new(1, "B", "x"), DepLabel::new(-1, "A", "y")];
        let tree = decode(&labels, &tags).unwrap();
        assert_eq!(tree.heads, vec![0, 1]);
        assert_eq!(tree.deprels, vec![ROOT_DEPREL, "y"]);
        assert_eq!(tree.repairs, 1);
    }

    #[test]
    fn decode_rejects_empty_and_mismatched_input() {
        assert_eq!(decode(&[], &[]), Err(DecodeError::Empty));
        let labels = vec![DepLabel::new(-1, ROOT_POS, "root")];
        assert_eq!(
            decode(&labels, &["A".to_string(), "B".to_string()]),
            Err(DecodeError::LengthMismatch { labels: 1, tags: 2 })
        );
    }

    #[test]
    fn decode_is_deterministic() {
        let tags: Vec<String> = ["A", "A", "A"].iter().map(|s| s.to_string()).collect();
        let labels = vec![
            DepLabel::new(1, "A", "x"),
            DepLabel::new(1, "A", "y"),
            DepLabel::new(-2, "A", "z"),
        ];
        assert_eq!(decode(&labels, &tags).unwrap(), decode(&labels, &tags).unwrap());
    }

    #[test]
    fn label_vocab_counts_example_corpus() {
        let s = example();
        let labels = encode(&s).unwrap();
        let vocabs = label_vocab([labels.as_slice()]).unwrap();
        // +1@V appears twice; 4 distinct pairs plus <unk>.
        assert_eq!(vocabs.pairs.len(), 5);
        // 5 distinct deprels plus <unk>.
        assert_eq!(vocabs.rels.len(), 6);
    }

    #[test]
    fn label_vocab_rejects_empty_corpus() {
        assert_eq!(label_vocab([]).unwrap_err(), EncodeError::EmptyCorpus);
        let empty: &[DepLabel] = &[];
        assert_eq!(label_vocab([empty]).unwrap_err(), EncodeError::EmptyCorpus);
    }

    #[test]
    fn label_vocab_is_idempotent_over_duplicates() {
        let s = example();
        let labels = encode(&s).unwrap();
        let once = label_vocab([labels.as_slice()]).unwrap();
        let twice = label_vocab([labels.as_slice(), labels.as_slice()]).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn label_text_round_trips() {
        for text in ["+1@V@aux", "-1@ROOT@root", "+12@NOUN@nmod:poss", "-3@X@a@b"] {
            let label = DepLabel::parse(text).unwrap();
            assert_eq!(label.render(), text);
        }
        assert!(DepLabel::parse("nonsense").is_err());
        assert!(DepLabel::parse("x@V@dep").is_err());
    }
}
