//! Segments far from the encoder centroid versus the rest: TP barely moves,
//! D-TP drops.

use glassbox_qe::harness::{domain_shift, RunConfig};
use glassbox_qe::sim::make_benchmark;

fn main() -> glassbox_qe::Result<()> {
    let cfg = RunConfig {
        ood_fraction: 0.1,
        ..RunConfig::default()
    };
    let bench = make_benchmark(&cfg.benchmark())?;
    let shift = domain_shift(&bench.traces, cfg.ood_top_fraction)?;
    let hits = shift
        .out_of_domain
        .iter()
        .zip(&bench.out_of_domain)
        .filter(|(a, b)| **a && **b)
        .count();
    println!("{hits} of {} flagged segments came from the shifted sources", shift.rows[0].n_out);
    println!("metric\tmean_in\tmean_out\tp");
    for r in &shift.rows {
        println!("{}\t{:.4}\t{:.4}\t{:.3e}", r.metric, r.mean_in, r.mean_out, r.p);
    }
    Ok(())
}
