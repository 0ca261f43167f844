//! The gaze measurement interchange format.
//!
//! A header line followed by one row per (sentence, participant, token):
//!
//! ```text
//! sent_id  participant_id  token_index  form  total_fix_dur  first_fix_dur
//! first_pass_dur  n_fix  n_refix  reread
//! ```
//!
//! (all on one line, tab-separated). Rows are grouped by
//! `(sent_id, participant_id)` with `token_index` counting up from 1 without
//! gaps. `reread` is `0` or `1`.

use alloc::collections::BTreeSet;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{CorpusError, GazeReading, RawGaze};

pub(crate) const HEADER: &str = "sent_id\tparticipant_id\ttoken_index\tform\ttotal_fix_dur\t\
first_fix_dur\tfirst_pass_dur\tn_fix\tn_refix\treread";

const COLUMNS: usize = 10;

/// Parses gaze TSV text into one reading per (sentence, participant) group.
pub fn parse_gaze_tsv(text: &str) -> Result<Vec<GazeReading>, CorpusError> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header.strip_suffix('\r').unwrap_or(header).trim_end() == HEADER => {}
        Some((row, _)) => return Err(CorpusError::GazeHeader { row: row + 1, expected: HEADER }),
        None => return Ok(Vec::new()),
    }

    let mut readings: Vec<GazeReading> = Vec::new();
    let mut finished: BTreeSet<(String, String)> = BTreeSet::new();
    let mut current: Option<GazeReading> = None;

    for (lineno, raw) in lines {
        let line = raw.strip_suffix('\r').unwrap_or(raw);
        let row = lineno + 1;
        if line.is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != COLUMNS {
            return Err(CorpusError::GazeColumnCount { row, found: cols.len() });
        }
        let sent_id = cols[0];
        let participant_id = cols[1];
        let token_index = parse_count(row, "token_index", cols[2])? as usize;

        let same_group = current
            .as_ref()
            .is_some_and(|r| r.sent_id == sent_id && r.participant_id == participant_id);
        if !same_group {
            if let Some(done) = current.take() {
                finished.insert((done.sent_id.clone(), done.participant_id.clone()));
                readings.push(done);
            }
            if finished.contains(&(sent_id.to_string(), participant_id.to_string())) {
                return Err(CorpusError::GazeDuplicateGroup {
                    row,
                    sent_id: sent_id.to_string(),
                    participant_id: participant_id.to_string(),
                });
            }
            if token_index != 1 {
                return Err(CorpusError::GazeTokenIndex {
                    row,
                    found: token_index,
                    expected: 1,
                    context: "a group must start at token 1",
                });
            }
            current = Some(GazeReading {
                sent_id: sent_id.to_string(),
                participant_id: participant_id.to_string(),
                records: Vec::new(),
            });
        }
        let reading = current.as_mut().expect("group was just opened");
        let expected = reading.records.len() + 1;
        if token_index != expected {
            return Err(CorpusError::GazeTokenIndex {
                row,
                found: token_index,
                expected,
                context: "token indices must be gapless and unique",
            });
        }
        reading.records.push(parse_record(row, &cols)?);
    }
    if let Some(done) = current.take() {
        readings.push(done);
    }
    Ok(readings)
}

fn parse_record(row: usize, cols: &[&str]) -> Result<RawGaze, CorpusError> {
    let total_fix_dur = parse_duration(row, "total_fix_dur", cols[4])?;
    let first_fix_dur = parse_duration(row, "first_fix_dur", cols[5])?;
    let first_pass_dur = parse_duration(row, "first_pass_dur", cols[6])?;
    let n_fix = parse_count(row, "n_fix", cols[7])?;
    let n_refix = parse_count(row, "n_refix", cols[8])?;
    let reread = match cols[9] {
        "0" => false,
        "1" => true,
        other => {
            return Err(CorpusError::GazeField {
                row,
                field: "reread",
                expected: "0 or 1",
                value: other.to_string(),
            });
        }
    };

    let zeros = [n_fix == 0, total_fix_dur == 0.0, first_fix_dur == 0.0];
    if zeros.iter().any(|&z| z != zeros[0]) {
        return Err(CorpusError::GazeInvariant {
            row,
            constraint: "n_fix, total_fix_dur and first_fix_dur must be zero together",
        });
    }
    if !(first_fix_dur <= first_pass_dur && first_pass_dur <= total_fix_dur) {
        return Err(CorpusError::GazeInvariant {
            row,
            constraint: "first_fix_dur <= first_pass_dur <= total_fix_dur must hold",
        });
    }
    if n_refix > n_fix {
        return Err(CorpusError::GazeInvariant { row, constraint: "n_refix must not exceed n_fix" });
    }
    Ok(RawGaze { total_fix_dur, first_fix_dur, first_pass_dur, n_fix, n_refix, reread })
}

fn parse_duration(row: usize, field: &'static str, value: &str) -> Result<f64, CorpusError> {
    value
        .parse::<f64>()
        .ok()
        .filter(|v| v.is_finite() && *v >= 0.0)
        .ok_or(CorpusError::GazeField {
            row,
            field,
            expected: "a non-negative number of milliseconds",
            value: value.to_string(),
        })
}

fn parse_count(row: usize, field: &'static str, value: &str) -> Result<u32, CorpusError> {
    value.parse::<u32>().map_err(|_| CorpusError::GazeField {
        row,
        field,
        expected: "a non-negative integer",
        value: value.to_string(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;

    fn with_header(rows: &str) -> String {
        format!("{HEADER}\n{rows}")
    }

    #[test]
    fn no_fixation_row_parses_to_zeros() {
        let text = with_header("s1\tp1\t1\tthe\t0\t0\t0\t0\t0\t0\n");
        let readings = parse_gaze_tsv(&text).unwrap();
        assert_eq!(readings.len(), 1);
        assert_eq!(readings[0].records[0], RawGaze::zero());
    }

    #[test]
    fn full_row_maps_fields_directly() {
        let text = with_header("s1\tp1\t1\tword\t240\t80\t160\t3\t1\t1\n");
        let readings = parse_gaze_tsv(&text).unwrap();
        let r = &readings[0].records[0];
        assert_eq!(r.total_fix_dur, 240.0);
        assert_eq!(r.first_fix_dur, 80.0);
        assert_eq!(r.first_pass_dur, 160.0);
        assert_eq!(r.n_fix, 3);
        assert_eq!(r.n_refix, 1);
        assert!(r.reread);
    }

    #[test]
    fn first_fix_longer_than_total_is_rejected_with_row() {
        let text = with_header("s1\tp1\t1\tword\t100\t150\t100\t2\t0\t0\n");
        let err = parse_gaze_tsv(&text).unwrap_err();
        assert!(matches!(err, CorpusError::GazeInvariant { row: 2, .. }), "{err}");
    }

    #[test]
    fn zero_mismatch_is_rejected() {
        let text = with_header("s1\tp1\t1\tword\t100\t100\t100\t0\t0\t0\n");
        assert!(matches!(parse_gaze_tsv(&text).unwrap_err(), CorpusError::GazeInvariant { .. }));
    }

    #[test]
    fn token_index_gap_is_rejected() {
        let text = with_header(
            "s1\tp1\t1\tx\t0\t0\t0\t0\t0\t0\ns1\tp1\t3\ty\t0\t0\t0\t0\t0\t0\n",
        );
        assert_eq!(
            parse_gaze_tsv(&text).unwrap_err(),
            CorpusError::GazeTokenIndex {
                row: 3,
                found: 3,
                expected: 2,
                context: "token indices must be gapless and unique",
            }
        );
    }

    #[test]
    fn duplicate_token_is_rejected() {
        let text = with_header(
            "s1\tp1\t1\tx\t0\t0\t0\t0\t0\t0\ns1\tp1\t1\tx\t0\t0\t0\t0\t0\t0\n",
        );
        assert!(matches!(parse_gaze_tsv(&text).unwrap_err(), CorpusError::GazeTokenIndex { .. }));
    }

    #[test]
    fn regrouping_is_rejected() {
        let text = with_header(
            "s1\tp1\t1\tx\t0\t0\t0\t0\t0\t0\n\
             s1\tp2\t1\tx\t0\t0\t0\t0\t0\t0\n\
             s1\tp1\t1\tx\t0\t0\t0\t0\t0\t0\n",
        );
        assert!(matches!(
            parse_gaze_tsv(&text).unwrap_err(),
            CorpusError::GazeDuplicateGroup { row: 4, .. }
        ));
    }

    #[test]
    fn groups_split_on_participant_change() {
        let text = with_header(
            "s1\tp1\t1\tx\t50\t50\t50\t1\t0\t0\n\
             s1\tp1\t2\ty\t0\t0\t0\t0\t0\t0\n\
             s1\tp2\t1\tx\t0\t0\t0\t0\t0\t0\n",
        );
        let readings = parse_gaze_tsv(&text).unwrap();
        assert_eq!(readings.len(), 2);
        assert_eq!(readings[0].records.len(), 2);
        assert_eq!(readings[1].participant_id, "p2");
    }

    #[test]
    fn bad_header_is_rejected() {
        let err = parse_gaze_tsv("sent\tid\n").unwrap_err();
        assert!(matches!(err, CorpusError::GazeHeader { row: 1, .. }));
    }

    #[test]
    fn refix_exceeding_fix_count_is_rejected() {
        let text = with_header("s1\tp1\t1\tword\t100\t50\t100\t2\t3\t0\n");
        assert!(matches!(parse_gaze_tsv(&text).unwrap_err(), CorpusError::GazeInvariant { .. }));
    }
}
