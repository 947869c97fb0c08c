//! Picks the attention head whose entropy best tracks human scores on one
//! half of a benchmark and reports it on the other half.

use glassbox_qe::harness::{correlate, human_scores, select_head, RunConfig};
use glassbox_qe::indicators::{compute_all, HeadIndex, Indicator};
use glassbox_qe::sim::make_benchmark;

fn main() -> glassbox_qe::Result<()> {
    let cfg = RunConfig {
        n_segments: 400,
        n_passes: 5,
        ..RunConfig::default()
    };
    let bench = make_benchmark(&cfg.benchmark())?;
    let (human, _) = human_scores(&bench.segments)?;
    let (dev, test) = bench.traces.split_at(200);
    let sel = select_head(dev, &human, &cfg)?;
    println!("selected layer {} head {} (dev r {:.4})", sel.layer, sel.head, sel.r);

    let ind = cfg.indicator_config(Some(HeadIndex::new(sel.layer, sel.head)));
    let rows: Vec<_> = test.iter().map(|t| compute_all(t, &ind)).collect();
    let ids: std::collections::HashSet<&str> = test.iter().map(|t| t.segment_id.as_str()).collect();
    let labels: Vec<_> = human.iter().filter(|(id, _)| ids.contains(id.as_str())).cloned().collect();
    let rows: Vec<_> = rows.into_iter().filter(|r| labels.iter().any(|(id, _)| *id == r.segment_id)).collect();
    let cols = [Indicator::AttEnt, Indicator::AwEntMin, Indicator::AwEntAvg, Indicator::AwBest];
    print!("{}", correlate(&cols, &rows, &labels, cfg.alpha)?.report.to_tsv());
    Ok(())
}
