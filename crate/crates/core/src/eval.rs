//! Attachment scoring and model selection.

use alloc::string::String;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Sentence;

/// Which tokens to exclude from scoring as punctuation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum PunctPolicy {
    /// Exclude tokens whose gold deprel is `punct` (UD-style data).
    UdDeprel,
    /// Exclude tokens whose gold PoS tag is one of `` ` `` `` '' : , .
    /// (PTB-style data).
    PtbPos,
    /// Evaluate every token.
    None,
}

const PTB_PUNCT_TAGS: [&str; 5] = ["``", "''", ":", ",", "."];

impl PunctPolicy {
    pub fn name(self) -> &'static str {
        match self {
            PunctPolicy::UdDeprel => "ud-deprel",
            PunctPolicy::PtbPos => "ptb-pos",
            PunctPolicy::None => "none",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "ud-deprel" => Some(PunctPolicy::UdDeprel),
            "ptb-pos" => Some(PunctPolicy::PtbPos),
            "none" => Some(PunctPolicy::None),
            _ => None,
        }
    }

    fn excludes(self, gold_pos: &str, gold_deprel: &str) -> bool {
        match self {
            PunctPolicy::UdDeprel => gold_deprel == "punct",
            PunctPolicy::PtbPos => PTB_PUNCT_TAGS.contains(&gold_pos),
            PunctPolicy::None => false,
        }
    }
}

/// Attachment scores over a corpus, as percentages.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ParseScore {
    pub uas: f64,
    pub las: f64,
    pub evaluated_tokens: usize,
    pub excluded_tokens: usize,
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
pub enum EvalError {
    #[error("gold corpus has {gold} sentences, predictions have {predicted}")]
    CorpusLength { gold: usize, predicted: usize },
    #[error("sentence {sent_id}: gold has {gold} tokens, prediction has {predicted}")]
    SentenceLength { sent_id: String, gold: usize, predicted: usize },
    #[error("sentence {sent_id}: token {index} has no gold head")]
    MissingGoldHead { sent_id: String, index: usize },
}

/// Scores predicted heads and relations against gold, excluding punctuation
/// per `policy`. UAS counts correct heads; LAS additionally requires the
/// correct deprel. A predicted token without a head counts as incorrect.
pub fn score(
    gold: &[Sentence],
    predicted: &[Sentence],
    policy: PunctPolicy,
) -> Result<ParseScore, EvalError> {
    if gold.len() != predicted.len() {
        return Err(EvalError::CorpusLength { gold: gold.len(), predicted: predicted.len() });
    }
    let mut evaluated = 0usize;
    let mut excluded = 0usize;
    let mut heads_correct = 0usize;
    let mut both_correct = 0usize;
    for (g, p) in gold.iter().zip(predicted) {
        if g.len() != p.len() {
            return Err(EvalError::SentenceLength {
                sent_id: g.sent_id.clone(),
                gold: g.len(),
                predicted: p.len(),
            });
        }
        for (gt, pt) in g.tokens.iter().zip(&p.tokens) {
            let gold_head = gt.head.ok_or_else(|| EvalError::MissingGoldHead {
                sent_id: g.sent_id.clone(),
                index: gt.index,
            })?;
            if policy.excludes(&gt.pos, &gt.deprel) {
                excluded += 1;
                continue;
            }
            evaluated += 1;
            if pt.head == Some(gold_head) {
                heads_correct += 1;
                if pt.deprel == gt.deprel {
                    both_correct += 1;
                }
            }
        }
    }
    let pct = |n: usize| if evaluated == 0 { 0.0 } else { 100.0 * n as f64 / evaluated as f64 };
    Ok(ParseScore {
        uas: pct(heads_correct),
        las: pct(both_correct),
        evaluated_tokens: evaluated,
        excluded_tokens: excluded,
    })
}

/// Index of the epoch with the highest LAS; earliest epoch wins ties.
/// Returns `None` for an empty history.
pub fn select_best(dev_scores: &[ParseScore]) -> Option<usize> {
    let mut best: Option<usize> = None;
    for (epoch, score) in dev_scores.iter().enumerate() {
        match best {
            Some(b) if dev_scores[b].las >= score.las => {}
            _ => best = Some(epoch),
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Token;
    use alloc::string::ToString;
    use alloc::vec;

    fn sentence(id: &str, rows: &[(&str, &str, usize, &str)]) -> Sentence {
        let tokens = rows
            .iter()
            .enumerate()
            .map(|(i, &(form, pos, head, deprel))| Token {
                index: i + 1,
                form: form.to_string(),
                pos: pos.to_string(),
                head: Some(head),
                deprel: deprel.to_string(),
            })
            .collect();
        Sentence { sent_id: id.to_string(), tokens }
    }

    fn example() -> Sentence {
        sentence(
            "ex1",
            &[
                ("Can", "V", 4, "aux"),
                ("a", "D", 3, "det"),
                ("parser", "N", 4, "nsubj"),
                ("see", "V", 0, "root"),
                ("?", "P", 4, "punct"),
            ],
        )
    }

    #[test]
    fn wrong_head_on_one_of_four_evaluable_tokens_gives_75() {
        let gold = vec![example()];
        let mut pred = example();
        pred.tokens[0].head = Some(3);
        let s = score(&gold, &[pred], PunctPolicy::UdDeprel).unwrap();
        assert_eq!(s.evaluated_tokens, 4);
        assert_eq!(s.excluded_tokens, 1);
        assert!((s.uas - 75.0).abs() < 1e-12);
        assert!((s.las - 75.0).abs() < 1e-12);
    }

    #[test]
    fn wrong_head_on_the_excluded_token_does_not_count() {
        let gold = vec![example()];
        let mut pred = example();
        pred.tokens[4].head = Some(1);
        let s = score(&gold, &[pred], PunctPolicy::UdDeprel).unwrap();
        assert_eq!(s.uas, 100.0);
        assert_eq!(s.las, 100.0);
        // Under `none` the same prediction loses a point.
        let s = score(&gold, &[example_with_head(5, 1)], PunctPolicy::None).unwrap();
        assert_eq!(s.evaluated_tokens, 5);
        assert!((s.uas - 80.0).abs() < 1e-12);
    }

    fn example_with_head(index: usize, head: usize) -> Sentence {
        let mut s = example();
        s.tokens[index - 1].head = Some(head);
        s
    }

    #[test]
    fn identical_prediction_scores_100() {
        let s = score(&[example()], &[example()], PunctPolicy::UdDeprel).unwrap();
        assert_eq!(s.uas, 100.0);
        assert_eq!(s.las, 100.0);
    }

    #[test]
    fn wrong_deprel_lowers_only_las() {
        let gold = vec![example()];
        let mut pred = example();
        pred.tokens[1].deprel = "amod".to_string();
        let s = score(&gold, &[pred], PunctPolicy::UdDeprel).unwrap();
        assert_eq!(s.uas, 100.0);
        assert!((s.las - 75.0).abs() < 1e-12);
    }

    #[test]
    fn ptb_policy_excludes_by_pos_tag() {
        let gold = sentence(
            "g",
            &[("He", "PRP", 2, "nsubj"), ("runs", "VBZ", 0, "root"), (".", ".", 2, "punct")],
        );
        let predicted = gold.clone();
        let s = score(&[gold], &[predicted], PunctPolicy::PtbPos).unwrap();
        assert_eq!(s.evaluated_tokens, 2);
        assert_eq!(s.excluded_tokens, 1);
    }

    #[test]
    fn token_count_mismatch_names_sentence() {
        let gold = vec![example()];
        let pred = vec![sentence("ex1", &[("x", "X", 0, "root")])];
        assert_eq!(
            score(&gold, &pred, PunctPolicy::None).unwrap_err(),
            EvalError::SentenceLength { sent_id: "ex1".into(), gold: 5, predicted: 1 }
        );
    }

    #[test]
    fn las_never_exceeds_uas() {
        let gold = vec![example()];
        let mut pred = example();
        pred.tokens[0].deprel = "x".into();
        pred.tokens[2].head = Some(1);
        let s = score(&gold, &[pred], PunctPolicy::None).unwrap();
        assert!(s.las <= s.uas);
    }

    fn ps(las: f64) -> ParseScore {
        ParseScore { uas: las, las, evaluated_tokens: 1, excluded_tokens: 0 }
    }

    #[test]
    fn select_best_takes_argmax() {
        assert_eq!(select_best(&[ps(78.0), ps(79.4), ps(79.1)]), Some(1));
    }

    #[test]
    fn select_best_breaks_ties_towards_earliest() {
        assert_eq!(select_best(&[ps(79.0), ps(79.0)]), Some(0));
    }

    #[test]
    fn select_best_single_and_empty() {
        assert_eq!(select_best(&[ps(10.0)]), Some(0));
        assert_eq!(select_best(&[]), None);
    }
}
