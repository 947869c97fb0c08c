//! Mean quality and TP correlation for each decoder on the same sources.

use glassbox_qe::harness::{variant_study, RunConfig};

fn main() -> glassbox_qe::Result<()> {
    let cfg = RunConfig {
        n_segments: 300,
        ..RunConfig::default()
    };
    println!("variant\tmean_quality\tr");
    for row in variant_study(&cfg)? {
        println!("{}\t{:.4}\t{:.4}", row.variant.name(), row.mean_quality, row.r);
    }
    Ok(())
}
