//! Human-judgment dataset: tab-separated, one row per annotation.
//!
//! Columns are `id, source, mt, annotator_id, raw_score`. A leading header
//! row starting with `id` is accepted and skipped.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

pub const DATASET_HEADER: &str = "id\tsource\tmt\tannotator_id\traw_score";

/// A translated segment with its human quality scores.
#[derive(Debug, Clone, PartialEq)]
pub struct QESegment {
    pub segment_id: String,
    pub source_text: String,
    pub mt_text: String,
    /// `(annotator_id, raw score in [0, 100])`.
    pub annotator_scores: Vec<(String, f64)>,
    pub da_z: Option<f64>,
}

/// Loads a dataset, grouping annotation rows by segment in first-seen order.
pub fn load_dataset(path: impl AsRef<Path>) -> Result<Vec<QESegment>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_dataset(&text)
}

pub(crate) fn parse_dataset(text: &str) -> Result<Vec<QESegment>> {
    let mut segments: Vec<QESegment> = Vec::new();
    let mut index = std::collections::HashMap::new();
    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() || (i == 0 && line.starts_with("id\t")) {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 5 {
            return Err(Error::parse(
                line_no,
                "row",
                format!("expected 5 tab-separated columns, found {}", cols.len()),
            ));
        }
        let [id, source, mt, annotator, raw] = [cols[0], cols[1], cols[2], cols[3], cols[4]];
        let score: f64 = raw
            .trim()
            .parse()
            .map_err(|e| Error::parse(line_no, "raw_score", e))?;
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::parse(
                line_no,
                "raw_score",
                format!("{score} outside [0, 100]"),
            ));
        }
        let slot = *index.entry(id.to_string()).or_insert_with(|| {
            segments.push(QESegment {
                segment_id: id.to_string(),
                source_text: source.to_string(),
                mt_text: mt.to_string(),
                annotator_scores: Vec::new(),
                da_z: None,
            });
            segments.len() - 1
        });
        let segment = &mut segments[slot];
        if segment.source_text != source || segment.mt_text != mt {
            return Err(Error::parse(
                line_no,
                "source/mt",
                format!("segment {id} repeats with different text"),
            ));
        }
        segment.annotator_scores.push((annotator.to_string(), score));
    }
    Ok(segments)
}

pub(crate) fn format_dataset(segments: &[QESegment]) -> Result<String> {
    let mut out = String::from(DATASET_HEADER);
    out.push('\n');
    for seg in segments {
        for field in [&seg.segment_id, &seg.source_text, &seg.mt_text] {
            if field.contains(['\t', '\n', '\r']) {
                return Err(Error::InvalidArgument(format!(
                    "segment {}: text fields may not contain tabs or newlines",
                    seg.segment_id
                )));
            }
        }
        for (annotator, score) in &seg.annotator_scores {
            writeln!(
                out,
                "{}\t{}\t{}\t{}\t{}",
                seg.segment_id, seg.source_text, seg.mt_text, annotator, score
            )
            .expect("writing to a String cannot fail");
        }
    }
    Ok(out)
}

pub fn write_dataset(segments: &[QESegment], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = format_dataset(segments)?;
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn groups_rows_by_segment() {
        let text = "id\tsource\tmt\tannotator_id\traw_score\n\
                    s1\tsrc one\tmt one\ta\t50\n\
                    s2\tsrc two\tmt two\ta\t70\n\
                    s1\tsrc one\tmt one\tb\t62.5\n";
        let segs = parse_dataset(text).unwrap();
        assert_eq!(segs.len(), 2);
        assert_eq!(segs[0].segment_id, "s1");
        assert_eq!(
            segs[0].annotator_scores,
            vec![("a".to_string(), 50.0), ("b".to_string(), 62.5)]
        );
        let again = parse_dataset(&format_dataset(&segs).unwrap()).unwrap();
        assert_eq!(again, segs);
    }

    #[test]
    fn out_of_range_score_is_rejected() {
        let err = parse_dataset("s1\tx\ty\ta\t101\n").unwrap_err();
        assert!(matches!(err, Error::Parse { line: 1, .. }));
    }

    #[test]
    fn wrong_column_count() {
        assert!(parse_dataset("s1\tx\ty\n").is_err());
    }
}
