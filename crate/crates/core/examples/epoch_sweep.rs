//! Sharpening the model leaves its outputs alone but erodes how well its
//! probabilities track quality.

use glassbox_qe::harness::{epoch_sweep, RunConfig};

fn main() -> glassbox_qe::Result<()> {
    let cfg = RunConfig {
        n_segments: 300,
        epochs: 12,
        ..RunConfig::default()
    };
    println!("epoch\tgamma\tmean_quality\tr");
    for row in epoch_sweep(&cfg)? {
        println!("{}\t{:.2}\t{:.4}\t{:.4}", row.epoch, row.gamma, row.mean_quality, row.r);
    }
    Ok(())
}
