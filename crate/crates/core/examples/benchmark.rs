//! Simulates a small benchmark into a temporary directory and runs the
//! compute and correlate commands on it.

use glassbox_qe::harness::{cmd_compute, cmd_correlate, cmd_simulate, RunConfig};

fn main() -> glassbox_qe::Result<()> {
    let dir = std::env::temp_dir().join("glassbox-qe-example");
    let mut cfg = RunConfig {
        n_segments: 200,
        out: dir.clone(),
        ..RunConfig::default()
    };
    cmd_simulate(&cfg)?;
    cfg.traces = Some(dir.join("traces.jsonl"));
    cfg.dataset = Some(dir.join("dataset.tsv"));
    let rows = cmd_compute(&cfg)?;
    let corr = cmd_correlate(&cfg)?;
    println!("{} segments, {} used after QC and missing values", rows.len(), corr.report.n);
    print!("{}", corr.report.to_tsv());
    println!("files in {}", dir.display());
    Ok(())
}
