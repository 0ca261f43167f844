//! CoNLL-U reading and writing.
//!
//! Ten tab-separated columns per token line, `#` comments, blank-line
//! sentence separators. Multiword-token and empty-node lines (ids containing
//! `-` or `.`) are skipped. Carriage returns before the newline are accepted.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CorpusError, PosColumn, Sentence, Token};

const COLUMNS: usize = 10;

/// Parses CoNLL-U text into sentences, taking the parser-visible PoS tag from
/// `pos_column`. Sentence ids come from `# sent_id = ...` comments and fall
/// back to `s1`, `s2`, ... by position.
pub fn parse_conllu(text: &str, pos_column: PosColumn) -> Result<Vec<Sentence>, CorpusError> {
    let mut sentences = Vec::new();
    let mut builder = SentenceBuilder::default();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let lineno = lineno + 1;
        if line.is_empty() {
            builder.flush(&mut sentences)?;
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((key, value)) = comment.split_once('=')
                && key.trim() == "sent_id"
            {
                builder.sent_id = Some(value.trim().to_string());
            }
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(CorpusError::ColumnCount { line: lineno, found: cols.len() });
        }
        // Multiword tokens ("1-2") and empty nodes ("5.1") carry no tree arcs.
        if cols[0].contains('-') || cols[0].contains('.') {
            continue;
        }
        let index: usize = cols[0]
            .parse()
            .ok()
            .filter(|&id| id > 0)
            .ok_or_else(|| CorpusError::BadTokenId { line: lineno, value: cols[0].to_string() })?;
        let expected = builder.tokens.len() + 1;
        if index != expected {
            return Err(CorpusError::TokenIdOrder { line: lineno, found: index, expected });
        }
        let head = match cols[6] {
            "_" => None,
            text => Some(text.parse::<usize>().map_err(|_| CorpusError::BadHead {
                line: lineno,
                value: text.to_string(),
            })?),
        };
        if head == Some(index) {
            return Err(CorpusError::SelfHead { line: lineno });
        }
        let pos = match pos_column {
            PosColumn::Upos => cols[3],
            PosColumn::Xpos => cols[4],
        };
        builder.tokens.push(Token {
            index,
            form: cols[1].to_string(),
            pos: pos.to_string(),
            head,
            deprel: cols[7].to_string(),
        });
        builder.lines.push(lineno);
    }
    builder.flush(&mut sentences)?;
    Ok(sentences)
}

#[derive(Default)]
struct SentenceBuilder {
    sent_id: Option<String>,
    tokens: Vec<Token>,
    lines: Vec<usize>,
}

impl SentenceBuilder {
    fn flush(&mut self, sentences: &mut Vec<Sentence>) -> Result<(), CorpusError> {
        if self.tokens.is_empty() {
            self.sent_id = None;
            return Ok(());
        }
        let len = self.tokens.len();
        for (token, &line) in self.tokens.iter().zip(&self.lines) {
            if let Some(head) = token.head
                && head > len {
                    return Err(CorpusError::HeadOutOfRange { line, head, len });
                }
        }
        let sent_id = self
            .sent_id
            .take()
            .unwrap_or_else(|| format!("s{}", sentences.len() + 1));
        sentences.push(Sentence { sent_id, tokens: core::mem::take(&mut self.tokens) });
        self.lines.clear();
        Ok(())
    }
}

/// Renders sentences back to CoNLL-U. The PoS tag is written to `pos_column`,
/// all unmodelled columns are `_`, and each sentence gets a `# sent_id`
/// comment, so [`parse_conllu`] of the output reproduces the input sentences.
pub fn write_conllu(sentences: &[Sentence], pos_column: PosColumn) -> String {
    let mut out = String::new();
    for sentence in sentences {
        out.push_str("# sent_id = ");
        out.push_str(&sentence.sent_id);
        out.push('\n');
        for token in &sentence.tokens {
            let head = match token.head {
                Some(h) => h.to_string(),
                None => "_".to_string(),
            };
            let (upos, xpos) = match pos_column {
                PosColumn::Upos => (token.pos.as_str(), "_"),
                PosColumn::Xpos => ("_", token.pos.as_str()),
            };
            out.push_str(&format!(
                "{}\t{}\t_\t{}\t{}\t_\t{}\t{}\t_\t_\n",
                token.index, token.form, upos, xpos, head, token.deprel
            ));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    /// Six token-numbered lines (five real tokens and one multiword-token
    /// range line that must be skipped) for "Can a parser see ?".
    pub(crate) const EXAMPLE_CONLLU: &str = "\
# sent_id = ex1
1\tCan\t_\tV\t_\t_\t4\taux\t_\t_
2\ta\t_\tD\t_\t_\t3\tdet\t_\t_
3-4\tparser see\t_\t_\t_\t_\t_\t_\t_\t_
3\tparser\t_\tN\t_\t_\t4\tnsubj\t_\t_
4\tsee\t_\tV\t_\t_\t0\troot\t_\t_
5\t?\t_\tP\t_\t_\t4\tpunct\t_\t_
";

    #[test]
    fn parses_example_block() {
        let sentences = parse_conllu(EXAMPLE_CONLLU, PosColumn::Upos).unwrap();
        assert_eq!(sentences.len(), 1);
        let s = &sentences[0];
        assert_eq!(s.sent_id, "ex1");
        assert_eq!(s.len(), 5);
        let heads: Vec<usize> = s.tokens.iter().map(|t| t.head.unwrap()).collect();
        let deprels: Vec<&str> = s.tokens.iter().map(|t| t.deprel.as_str()).collect();
        let pos: Vec<&str> = s.tokens.iter().map(|t| t.pos.as_str()).collect();
        assert_eq!(heads, vec![4, 3, 4, 0, 4]);
        assert_eq!(deprels, vec!["aux", "det", "nsubj", "root", "punct"]);
        assert_eq!(pos, vec!["V", "D", "N", "V", "P"]);
        s.validate_tree().unwrap();
    }

    #[test]
    fn empty_input_gives_no_sentences() {
        assert_eq!(parse_conllu("", PosColumn::Upos).unwrap(), vec![]);
        assert_eq!(parse_conllu("\n\n", PosColumn::Upos).unwrap(), vec![]);
    }

    #[test]
    fn empty_list_writes_empty_string() {
        assert_eq!(write_conllu(&[], PosColumn::Upos), "");
    }

    #[test]
    fn written_head_column_matches_tree() {
        let sentences = parse_conllu(EXAMPLE_CONLLU, PosColumn::Upos).unwrap();
        let text = write_conllu(&sentences, PosColumn::Upos);
        let heads: Vec<&str> = text
            .lines()
            .filter(|l| !l.is_empty() && !l.starts_with('#'))
            .map(|l| l.split('\t').nth(6).unwrap())
            .collect();
        assert_eq!(heads, vec!["4", "3", "4", "0", "4"]);
    }

    #[test]
    fn three_sentence_file_round_trips_byte_identically() {
        // Hand-written file in canonical form: token lines must survive a
        // parse/write cycle unchanged.
        let text = "\
# sent_id = a
1\tshe\t_\tPRON\t_\t_\t2\tnsubj\t_\t_
2\truns\t_\tVERB\t_\t_\t0\troot\t_\t_

# sent_id = b
1\tbirds\t_\tNOUN\t_\t_\t2\tnsubj\t_\t_
2\tsing\t_\tVERB\t_\t_\t0\troot\t_\t_
3\tloudly\t_\tADV\t_\t_\t2\tadvmod\t_\t_

# sent_id = c
1\tgo\t_\tVERB\t_\t_\t0\troot\t_\t_

";
        let sentences = parse_conllu(text, PosColumn::Upos).unwrap();
        assert_eq!(sentences.len(), 3);
        let rendered = write_conllu(&sentences, PosColumn::Upos);
        assert_eq!(rendered, text);
        assert_eq!(parse_conllu(&rendered, PosColumn::Upos).unwrap(), sentences);
    }

    #[test]
    fn xpos_column_selection() {
        let text = "1\tthe\t_\tDET\tDT\t_\t2\tdet\t_\t_\n2\tcat\t_\tNOUN\tNN\t_\t0\troot\t_\t_\n";
        let upos = parse_conllu(text, PosColumn::Upos).unwrap();
        let xpos = parse_conllu(text, PosColumn::Xpos).unwrap();
        assert_eq!(upos[0].tokens[0].pos, "DET");
        assert_eq!(xpos[0].tokens[0].pos, "DT");
        // Auto-generated id for files without sent_id comments.
        assert_eq!(upos[0].sent_id, "s1");
    }

    #[test]
    fn unannotated_heads_parse_as_none() {
        let text = "1\tword\t_\tX\t_\t_\t_\t_\t_\t_\n";
        let sentences = parse_conllu(text, PosColumn::Upos).unwrap();
        assert_eq!(sentences[0].tokens[0].head, None);
        let rendered = write_conllu(&sentences, PosColumn::Upos);
        assert_eq!(rendered.lines().nth(1).unwrap(), "1\tword\t_\tX\t_\t_\t_\t_\t_\t_");
    }

    #[test]
    fn malformed_column_count_names_line() {
        let text = "1\tonly\tfour\tcols\n";
        assert_eq!(
            parse_conllu(text, PosColumn::Upos).unwrap_err(),
            CorpusError::ColumnCount { line: 1, found: 4 }
        );
    }

    #[test]
    fn non_integer_head_names_line() {
        let text = "1\tx\t_\tX\t_\t_\tbad\tdep\t_\t_\n";
        assert_eq!(
            parse_conllu(text, PosColumn::Upos).unwrap_err(),
            CorpusError::BadHead { line: 1, value: "bad".into() }
        );
    }

    #[test]
    fn head_out_of_range_names_line() {
        let text = "1\tx\t_\tX\t_\t_\t2\tdep\t_\t_\n\n2\ty\t_\tY\t_\t_\t9\tdep\t_\t_\n";
        // First sentence is fine (head 2 > len 1): caught at flush, line 1.
        assert_eq!(
            parse_conllu(text, PosColumn::Upos).unwrap_err(),
            CorpusError::HeadOutOfRange { line: 1, head: 2, len: 1 }
        );
    }

    #[test]
    fn self_head_rejected() {
        let text = "1\tx\t_\tX\t_\t_\t1\tdep\t_\t_\n";
        assert_eq!(
            parse_conllu(text, PosColumn::Upos).unwrap_err(),
            CorpusError::SelfHead { line: 1 }
        );
    }

    #[test]
    fn crlf_accepted() {
        let text = "1\tx\t_\tX\t_\t_\t0\troot\t_\t_\r\n\r\n";
        let sentences = parse_conllu(text, PosColumn::Upos).unwrap();
        assert_eq!(sentences[0].tokens[0].form, "x");
    }
}
