//! Computes every indicator for a few simulated segments and prints the
//! table that `glassbox-qe compute` would write.

use glassbox_qe::indicators::{compute_all, format_indicator_table, IndicatorConfig};
use glassbox_qe::sim::{make_benchmark, BenchmarkConfig};

fn main() -> glassbox_qe::Result<()> {
    let bench = make_benchmark(&BenchmarkConfig {
        n_segments: 5,
        n_passes: 10,
        ..BenchmarkConfig::default()
    })?;
    let cfg = IndicatorConfig::default();
    let rows: Vec<_> = bench.traces.iter().map(|t| compute_all(t, &cfg)).collect();
    // AW:best stays NA until a head has been selected.
    print!("{}", format_indicator_table(&cfg.enabled, &rows));
    Ok(())
}
