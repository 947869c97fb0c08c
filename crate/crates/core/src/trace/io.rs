use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::{validate_trace, DecodingTrace};
use crate::error::{Error, Result};

/// Reads a JSON-lines trace file, validating every record.
///
/// Blank lines are skipped. Errors carry the 1-based line number and the
/// JSON path of the offending field.
pub fn load_traces(path: impl AsRef<Path>) -> Result<Vec<DecodingTrace>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    parse_traces(BufReader::new(file)).map_err(|e| match e {
        Error::Io { source, .. } => Error::io(path, source),
        other => other,
    })
}

pub fn parse_traces(reader: impl BufRead) -> Result<Vec<DecodingTrace>> {
    let mut traces = Vec::new();
    for (index, line) in reader.lines().enumerate() {
        let line_no = index + 1;
        let line = line.map_err(|e| Error::io("<reader>", e))?;
        if line.trim().is_empty() {
            continue;
        }
        let mut de = serde_json::Deserializer::from_str(&line);
        let trace: DecodingTrace = serde_path_to_error::deserialize(&mut de).map_err(|e| {
            let field = e.path().to_string();
            Error::parse(line_no, field, e.into_inner())
        })?;
        let report = validate_trace(&trace);
        if !report.is_ok() {
            let first = &report.violations[0];
            return Err(Error::parse(
                line_no,
                trace.segment_id.clone(),
                format!(
                    "{first} ({} violation{} total)",
                    report.violations.len(),
                    if report.violations.len() == 1 { "" } else { "s" }
                ),
            ));
        }
        traces.push(trace);
    }
    Ok(traces)
}

/// Writes traces as JSON lines. Floats use the shortest representation that
/// parses back to the identical `f64`.
pub fn write_traces(traces: &[DecodingTrace], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for trace in traces {
        serde_json::to_writer(&mut out, trace)
            .map_err(|e| Error::io(path, std::io::Error::other(e)))?;
        out.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}
