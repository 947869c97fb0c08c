//! Files-in, files-out commands behind the `glassbox-qe` binary.
//!
//! Every command reads its inputs from a [`RunConfig`], writes into
//! `config.out` and returns the structured result so callers and tests can
//! use it without reparsing the files.

mod config;
mod studies;

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::indicators::{
    best_head_layer, compute_all, format_indicator_table, parse_indicator_table, HeadIndex, HeadSelection,
    Indicator, IndicatorConfig, IndicatorVector,
};
use crate::stats::{
    aggregate_da, correlation_report, qc_range_filter, z_standardize, Annotation, CorrelationReport, QcVerdict,
    QC_RANGE_THRESHOLD,
};
use crate::trace::{load_dataset, load_traces, DecodingTrace, QESegment};

pub use config::*;
pub use studies::{
    cmd_domain_shift, cmd_epoch_sweep, cmd_simulate, cmd_variants, domain_shift, epoch_sweep, variant_study,
    DomainShift, EpochRow, GapRow, VariantRow,
};

/// The command-line subcommands.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Compute,
    Correlate,
    Simulate,
    Variants,
    EpochSweep,
    DomainShift,
    SelectHead,
    Plotdata,
}

/// Validates `config` and runs `command`.
pub fn run(command: Command, config: &RunConfig) -> Result<()> {
    config.validate()?;
    match command {
        Command::Compute => cmd_compute(config).map(drop),
        Command::Correlate => cmd_correlate(config).map(drop),
        Command::Simulate => cmd_simulate(config).map(drop),
        Command::Variants => cmd_variants(config).map(drop),
        Command::EpochSweep => cmd_epoch_sweep(config).map(drop),
        Command::DomainShift => cmd_domain_shift(config).map(drop),
        Command::SelectHead => cmd_select_head(config).map(drop),
        Command::Plotdata => cmd_plotdata(config).map(drop),
    }
}

pub(crate) fn write_output(config: &RunConfig, name: &str, text: &str) -> Result<PathBuf> {
    fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))?;
    let path = config.output(name);
    fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
    log::info!("wrote {}", path.display());
    Ok(path)
}

/// Indicator vectors for every trace, in trace order.
pub fn compute(traces: &[DecodingTrace], config: &IndicatorConfig) -> Vec<IndicatorVector> {
    traces.par_iter().map(|t| compute_all(t, config)).collect()
}

pub fn read_best_head(path: impl AsRef<Path>) -> Result<HeadSelection> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::parse(e.line(), "best_head", e))
}

/// Writes `indicators.tsv`.
pub fn cmd_compute(config: &RunConfig) -> Result<Vec<IndicatorVector>> {
    let traces = load_traces(config.required(&config.traces, "--traces")?)?;
    let best = match &config.best_head {
        Some(p) => {
            let s = read_best_head(p)?;
            Some(HeadIndex::new(s.layer, s.head))
        }
        None => None,
    };
    let ind = config.indicator_config(best);
    let rows = compute(&traces, &ind);
    write_output(config, INDICATORS_FILE, &format_indicator_table(&ind.enabled, &rows))?;
    Ok(rows)
}

/// Human scores per segment, sorted by id: range QC on the raw scores, then
/// per-annotator z-scores over the accepted segments, then the mean.
/// Also returns the number of segments QC rejected.
pub fn human_scores(segments: &[QESegment]) -> Result<(Vec<(String, f64)>, usize)> {
    let mut flagged = 0;
    let mut annotations = Vec::new();
    for seg in segments {
        let raw: Vec<f64> = seg.annotator_scores.iter().map(|(_, s)| *s).collect();
        if qc_range_filter(&raw, QC_RANGE_THRESHOLD) == QcVerdict::Flag {
            flagged += 1;
            continue;
        }
        annotations.extend(
            seg.annotator_scores
                .iter()
                .map(|(a, s)| Annotation::new(a.clone(), seg.segment_id.clone(), *s)),
        );
    }
    annotations.sort_by(|a, b| {
        (&a.annotator_id, &a.segment_id)
            .cmp(&(&b.annotator_id, &b.segment_id))
            .then(a.score.total_cmp(&b.score))
    });
    if annotations.is_empty() {
        return Ok((Vec::new(), flagged));
    }
    let mut scores = aggregate_da(&z_standardize(&annotations)?);
    scores.sort_by(|a, b| a.0.cmp(&b.0));
    Ok((scores, flagged))
}

/// A correlation report and the bookkeeping behind it.
#[derive(Debug, Clone, PartialEq)]
pub struct Correlation {
    pub report: CorrelationReport,
    /// Columns skipped because no segment had a value.
    pub disabled: Vec<Indicator>,
    /// Segments skipped because some remaining column was unavailable.
    pub dropped: usize,
}

fn column_order(columns: &[Indicator]) -> Vec<Indicator> {
    let mut cols = columns.to_vec();
    cols.sort_by_key(|c| (c.group(), *c));
    cols.dedup();
    cols
}

/// Correlates indicator rows with human scores keyed by segment id.
///
/// Every row id must have a human score and vice versa. Columns are ordered
/// by group, values are multiplied by the indicator polarity, and rows are
/// processed in id order so the result ignores input order.
pub fn correlate(
    columns: &[Indicator],
    rows: &[IndicatorVector],
    human: &[(String, f64)],
    alpha: f64,
) -> Result<Correlation> {
    let labels: BTreeMap<&str, f64> = human.iter().map(|(id, z)| (id.as_str(), *z)).collect();
    let mut by_id: BTreeMap<&str, &IndicatorVector> = BTreeMap::new();
    for r in rows {
        if by_id.insert(&r.segment_id, r).is_some() {
            return Err(Error::InvalidArgument(format!("duplicate indicator row {}", r.segment_id)));
        }
    }
    if let Some(id) = by_id.keys().find(|id| !labels.contains_key(*id)) {
        return Err(Error::InvalidArgument(format!("segment {id} has indicators but no human score")));
    }
    if let Some(id) = labels.keys().find(|id| !by_id.contains_key(*id)) {
        return Err(Error::InvalidArgument(format!("segment {id} has a human score but no indicators")));
    }
    let (kept, disabled): (Vec<Indicator>, Vec<Indicator>) = column_order(columns)
        .into_iter()
        .partition(|&c| by_id.values().any(|r| r.value(c).is_some()));
    for c in &disabled {
        log::warn!("{c} is unavailable for every segment; skipped");
    }
    let mut values = vec![Vec::new(); kept.len()];
    let mut target = Vec::new();
    let mut dropped = 0;
    for (id, row) in &by_id {
        let vals: Option<Vec<f64>> = kept.iter().map(|&c| row.value(c).map(|v| v * c.polarity())).collect();
        match vals {
            Some(vals) => {
                for (col, v) in values.iter_mut().zip(vals) {
                    col.push(v);
                }
                target.push(labels[id]);
            }
            None => dropped += 1,
        }
    }
    if dropped > 0 {
        log::info!("dropped {dropped} segments with unavailable indicators");
    }
    if target.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable segments; at least 3 are needed",
            target.len()
        )));
    }
    let predictors: Vec<(String, String, Vec<f64>)> = kept
        .iter()
        .zip(values)
        .map(|(c, v)| (c.name().to_string(), c.group().label().to_string(), v))
        .collect();
    Ok(Correlation {
        report: correlation_report(&predictors, &target, alpha)?,
        disabled,
        dropped,
    })
}

/// Writes `report.tsv`, `pvalues.tsv` and `summary.tsv`.
pub fn cmd_correlate(config: &RunConfig) -> Result<Correlation> {
    let table_path = config.indicators.clone().unwrap_or_else(|| config.output(INDICATORS_FILE));
    let text = fs::read_to_string(&table_path).map_err(|e| Error::io(&table_path, e))?;
    let (columns, rows) = parse_indicator_table(&text)?;
    let segments = load_dataset(config.required(&config.dataset, "--dataset")?)?;
    let (human, flagged) = human_scores(&segments)?;
    if flagged > 0 {
        log::info!("quality control rejected {flagged} segments");
    }
    let rejected: std::collections::HashSet<&str> = {
        let kept: std::collections::HashSet<&str> = human.iter().map(|(id, _)| id.as_str()).collect();
        segments
            .iter()
            .map(|s| s.segment_id.as_str())
            .filter(|id| !kept.contains(id))
            .collect()
    };
    let known: std::collections::HashSet<&str> = segments.iter().map(|s| s.segment_id.as_str()).collect();
    if let Some(r) = rows.iter().find(|r| !known.contains(r.segment_id.as_str())) {
        return Err(Error::InvalidArgument(format!("segment {} is missing from the dataset", r.segment_id)));
    }
    let rows: Vec<IndicatorVector> = rows
        .into_iter()
        .filter(|r| !rejected.contains(r.segment_id.as_str()))
        .collect();
    let columns: Vec<Indicator> = columns.into_iter().filter(|c| config.enabled.contains(c)).collect();
    let result = correlate(&columns, &rows, &human, config.alpha)?;
    write_output(config, REPORT_FILE, &result.report.to_tsv())?;
    write_output(config, PVALUES_FILE, &result.report.p_values_tsv())?;
    let mut summary = String::from("key\tvalue\n");
    let disabled: Vec<&str> = result.disabled.iter().map(|c| c.name()).collect();
    for (k, v) in [
        ("segments", segments.len().to_string()),
        ("qc_rejected", flagged.to_string()),
        ("dropped_unavailable", result.dropped.to_string()),
        ("used", result.report.n.to_string()),
        ("disabled", disabled.join(",")),
        ("alpha", config.alpha.to_string()),
    ] {
        writeln!(summary, "{k}\t{v}").expect("writing to a String cannot fail");
    }
    write_output(config, SUMMARY_FILE, &summary)?;
    Ok(result)
}

/// Pairs traces that carry attention with their human score and picks the
/// best head.
pub fn select_head(traces: &[DecodingTrace], human: &[(String, f64)], config: &RunConfig) -> Result<HeadSelection> {
    let labels: HashMap<&str, f64> = human.iter().map(|(id, z)| (id.as_str(), *z)).collect();
    let mut dev: Vec<(&str, _, f64)> = traces
        .iter()
        .filter_map(|t| {
            let attn = t.attention.as_ref()?;
            labels.get(t.segment_id.as_str()).map(|z| (t.segment_id.as_str(), attn, *z))
        })
        .collect();
    dev.sort_by(|a, b| a.0.cmp(b.0));
    let pairs: Vec<_> = dev.iter().map(|(_, a, z)| (*a, *z)).collect();
    best_head_layer(&pairs, config.eos_policy)
}

/// Writes `best_head.json`.
pub fn cmd_select_head(config: &RunConfig) -> Result<HeadSelection> {
    let traces = load_traces(config.required(&config.traces, "--traces")?)?;
    let segments = load_dataset(config.required(&config.dataset, "--dataset")?)?;
    let (human, _) = human_scores(&segments)?;
    let selection = select_head(&traces, &human, config)?;
    let json = serde_json::to_string_pretty(&selection).expect("a head selection always serialises");
    write_output(config, BEST_HEAD_FILE, &(json + "\n"))?;
    Ok(selection)
}

/// `id  position  token  logprob` for every step of the selected traces.
pub fn plotdata(traces: &[DecodingTrace], select: Option<&[String]>) -> String {
    let mut out = String::from("id\tposition\ttoken\tlogprob\n");
    for t in traces {
        if select.is_some_and(|ids| !ids.contains(&t.segment_id)) {
            continue;
        }
        for (pos, (tok, step)) in t.hyp_tokens.iter().zip(&t.steps).enumerate() {
            writeln!(out, "{}\t{}\t{}\t{}", t.segment_id, pos, tok, step.chosen_logprob)
                .expect("writing to a String cannot fail");
        }
    }
    out
}

/// Writes `plotdata.tsv`.
pub fn cmd_plotdata(config: &RunConfig) -> Result<String> {
    let traces = load_traces(config.required(&config.traces, "--traces")?)?;
    let text = plotdata(&traces, config.select.as_deref());
    write_output(config, PLOTDATA_FILE, &text)?;
    Ok(text)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::indicators::Value;

    fn row(id: &str, vals: &[(Indicator, Option<f64>)]) -> IndicatorVector {
        IndicatorVector {
            segment_id: id.into(),
            values: vals
                .iter()
                .map(|&(i, v)| (i, v.map_or_else(|| Value::Unavailable("x".into()), Value::Available)))
                .collect(),
        }
    }

    fn human(vals: &[f64]) -> Vec<(String, f64)> {
        vals.iter().enumerate().map(|(i, v)| (format!("s{i}"), *v)).collect()
    }

    #[test]
    fn indicator_equal_to_the_label_is_perfect_and_best() {
        let z = [0.3, -1.2, 0.8, 2.0, -0.4];
        let rows: Vec<_> = z
            .iter()
            .enumerate()
            .map(|(i, v)| row(&format!("s{i}"), &[(Indicator::Tp, Some(*v)), (Indicator::SentStd, Some((i * i) as f64))]))
            .collect();
        let c = correlate(&[Indicator::Tp, Indicator::SentStd], &rows, &human(&z), 0.05).unwrap();
        let tp = &c.report.methods[0];
        assert_eq!(tp.name, "TP");
        assert!((tp.r - 1.0).abs() < 1e-12);
        assert!(tp.global_best && tp.group_best);
    }

    #[test]
    fn negative_polarity_flips_only_the_sign() {
        let z = [0.3, -1.2, 0.8, 2.0, -0.4, 0.1];
        let ent = [1.0, 2.5, 0.7, 0.2, 1.9, 1.4];
        let rows: Vec<_> = (0..6)
            .map(|i| row(&format!("s{i}"), &[(Indicator::SoftmaxEnt, Some(ent[i]))]))
            .collect();
        let r = correlate(&[Indicator::SoftmaxEnt], &rows, &human(&z), 0.05).unwrap().report.methods[0].r;
        let raw = crate::stats::pearson(&ent, &z).unwrap();
        assert!(r > 0.0);
        assert_eq!(r, -raw);
    }

    #[test]
    fn unavailable_columns_and_segments_are_removed() {
        let z = [0.3, -1.2, 0.8, 2.0, -0.4];
        let rows: Vec<_> = (0..5)
            .map(|i| {
                let d = if i == 2 { None } else { Some(i as f64 * 0.5 + (i % 2) as f64) };
                row(
                    &format!("s{i}"),
                    &[(Indicator::Tp, Some(z[i] + 0.1 * i as f64)), (Indicator::DTp, d), (Indicator::AwBest, None)],
                )
            })
            .collect();
        let c = correlate(&[Indicator::Tp, Indicator::DTp, Indicator::AwBest], &rows, &human(&z), 0.05).unwrap();
        assert_eq!(c.disabled, vec![Indicator::AwBest]);
        assert_eq!(c.dropped, 1);
        assert_eq!(c.report.n, 4);
        assert_eq!(c.report.methods.len(), 2);
    }

    #[test]
    fn columns_follow_group_order() {
        let cols = column_order(&[Indicator::AwEntMin, Indicator::DTp, Indicator::TpTemp, Indicator::Tp]);
        assert_eq!(cols, vec![Indicator::Tp, Indicator::TpTemp, Indicator::DTp, Indicator::AwEntMin]);
    }

    #[test]
    fn mismatched_or_tiny_inputs_are_errors() {
        let rows = vec![row("s0", &[(Indicator::Tp, Some(1.0))]), row("s1", &[(Indicator::Tp, Some(2.0))])];
        let err = correlate(&[Indicator::Tp], &rows, &human(&[1.0, 2.0]), 0.05).unwrap_err();
        assert!(matches!(err, Error::InsufficientData(_)));
        assert_eq!(err.exit_code(), 3);
        assert!(correlate(&[Indicator::Tp], &rows, &human(&[1.0, 2.0, 3.0]), 0.05).is_err());
        assert!(correlate(&[Indicator::Tp], &rows, &human(&[1.0]), 0.05).is_err());
    }

    #[test]
    fn human_scores_apply_qc_before_standardising() {
        let seg = |id: &str, scores: &[f64]| QESegment {
            segment_id: id.into(),
            source_text: "a".into(),
            mt_text: "b".into(),
            annotator_scores: scores.iter().enumerate().map(|(k, s)| (format!("ann{k}"), *s)).collect(),
            da_z: None,
        };
        let segments = vec![
            seg("b", &[60.0, 70.0]),
            seg("a", &[20.0, 30.0]),
            seg("c", &[10.0, 90.0]),
            seg("d", &[40.0, 50.0]),
        ];
        let (scores, flagged) = human_scores(&segments).unwrap();
        assert_eq!(flagged, 1);
        let ids: Vec<&str> = scores.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["a", "b", "d"]);
        // Both annotators see {20,40,60} and {30,50,70}: z = -1.2247, 0, 1.2247.
        let sd = (800.0f64 / 3.0).sqrt();
        assert!((scores[0].1 + 20.0 / sd).abs() < 1e-12);
        assert!(scores[2].1.abs() < 1e-12);
        assert!((scores[1].1 - 20.0 / sd).abs() < 1e-12);
    }

    #[test]
    fn plotdata_rows_follow_the_trace() {
        use crate::trace::TokenDist;
        let t = DecodingTrace {
            segment_id: "x".into(),
            source_tokens: vec!["a".into()],
            hyp_tokens: vec!["p".into(), "q".into()],
            steps: vec![TokenDist::from_logprob(-0.5), TokenDist::from_logprob(-1.25)],
            attention: None,
            passes: None,
            encoder_state_mean: None,
        };
        assert_eq!(plotdata(std::slice::from_ref(&t), None), "id\tposition\ttoken\tlogprob\nx\t0\tp\t-0.5\nx\t1\tq\t-1.25\n");
        assert_eq!(plotdata(&[t], Some(&[])), "id\tposition\ttoken\tlogprob\n");
    }
}
