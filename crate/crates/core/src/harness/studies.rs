use std::fmt::Write as _;

use rayon::prelude::*;

use super::{write_output, RunConfig, Variant, DISTANCES_FILE, DOMAIN_FILE, EPOCHS_FILE, VARIANTS_FILE};
use crate::error::{Error, Result};
use crate::indicators::{d_tp, tp, tp_temp};
use crate::numeric;
use crate::sim::{
    beam_search, build_model, build_truth, decode_one, make_benchmark, mc_dropout_passes, sample_sources, seed,
    true_quality, Benchmark, Decoder, DropoutMode, SimModel,
};
use crate::stats::{pearson, students_t};
use crate::trace::{load_traces, DecodingTrace};

/// Writes the benchmark files into `config.out`.
pub fn cmd_simulate(config: &RunConfig) -> Result<Benchmark> {
    let bench = make_benchmark(&config.benchmark())?;
    bench.write(&config.out)?;
    log::info!("simulated {} segments into {}", bench.traces.len(), config.out.display());
    Ok(bench)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariantRow {
    pub variant: Variant,
    pub mean_quality: f64,
    /// Pearson correlation of the variant's score with the true quality.
    pub r: f64,
}

fn source_set(config: &RunConfig) -> Vec<Vec<usize>> {
    let bench = config.benchmark();
    sample_sources(&config.sim, config.seed, config.n_segments, bench.n_ood())
        .into_iter()
        .map(|s| s.tokens)
        .collect()
}

/// Scores and true qualities of one variant over the shared source set.
fn variant_scores(
    variant: Variant,
    config: &RunConfig,
    models: &[SimModel],
    truth: &SimModel,
    sources: &[Vec<usize>],
) -> Result<Vec<(f64, f64)>> {
    let decoder = match variant {
        Variant::Sampling => Decoder::Sampling,
        Variant::DiverseBeam => Decoder::DiverseBeam,
        Variant::Ensemble => Decoder::Ensemble,
        Variant::Beam | Variant::McDropout | Variant::TpTemp => Decoder::Beam,
    };
    let bench = crate::sim::BenchmarkConfig {
        decoder,
        ..config.benchmark()
    };
    sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| {
            let decoded = decode_one(&bench, models, src, i)?;
            let quality = true_quality(truth, src, &decoded.hypothesis.tokens)?;
            let score = match variant {
                Variant::McDropout => d_tp(&mc_dropout_passes(
                    &models[0],
                    src,
                    &decoded.hypothesis.tokens,
                    config.n_passes,
                    config.dropout_rate,
                    DropoutMode::Rescore,
                    seed::derive(&[config.seed, i as u64]),
                )?)?,
                Variant::TpTemp => tp_temp(&decoded.trace, config.temperature)?,
                _ => tp(&decoded.trace)?,
            };
            Ok((score, quality))
        })
        .collect()
}

/// Mean true quality and Pearson(score, quality) for each enabled variant.
pub fn variant_study(config: &RunConfig) -> Result<Vec<VariantRow>> {
    let models = (0..config.ensemble_size as u64)
        .map(|k| build_model(config.seed + k, &config.sim))
        .collect::<Result<Vec<_>>>()?;
    let truth = build_truth(&config.sim)?;
    let sources = source_set(config);
    config
        .variants
        .iter()
        .map(|&variant| {
            let pairs = variant_scores(variant, config, &models, &truth, &sources)?;
            let (scores, qualities): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Ok(VariantRow {
                variant,
                mean_quality: numeric::mean(&qualities),
                r: pearson(&scores, &qualities)?,
            })
        })
        .collect()
}

/// Writes `variants.tsv`.
pub fn cmd_variants(config: &RunConfig) -> Result<Vec<VariantRow>> {
    let rows = variant_study(config)?;
    let mut out = String::from("variant\tmean_quality\tr\n");
    for r in &rows {
        writeln!(out, "{}\t{}\t{}", r.variant.name(), r.mean_quality, r.r).expect("writing to a String cannot fail");
    }
    write_output(config, VARIANTS_FILE, &out)?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpochRow {
    pub epoch: usize,
    pub gamma: f64,
    pub mean_quality: f64,
    pub r: f64,
}

/// Beam-decodes the fixed source set at each sharpening of the schedule.
pub fn epoch_sweep(config: &RunConfig) -> Result<Vec<EpochRow>> {
    let schedule = config.schedule();
    if schedule.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "the sharpening schedule needs at least 2 epochs, found {}",
            schedule.len()
        )));
    }
    let base = build_model(config.seed, &config.sim)?;
    let truth = build_truth(&config.sim)?;
    let sources = source_set(config);
    schedule
        .iter()
        .enumerate()
        .map(|(e, &gamma)| {
            let m = base.with_gamma(gamma)?;
            let pairs = sources
                .par_iter()
                .map(|src| {
                    let d = beam_search(&m, src, config.beam_width)?;
                    Ok((tp(&d.trace)?, true_quality(&truth, src, &d.hypothesis.tokens)?))
                })
                .collect::<Result<Vec<(f64, f64)>>>()?;
            let (scores, qualities): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
            Ok(EpochRow {
                epoch: e + 1,
                gamma,
                mean_quality: numeric::mean(&qualities),
                r: pearson(&scores, &qualities)?,
            })
        })
        .collect()
}

/// Writes `epochs.tsv`.
pub fn cmd_epoch_sweep(config: &RunConfig) -> Result<Vec<EpochRow>> {
    let rows = epoch_sweep(config)?;
    let mut out = String::from("epoch\tgamma\tmean_quality\tr\n");
    for r in &rows {
        writeln!(out, "{}\t{}\t{}\t{}", r.epoch, r.gamma, r.mean_quality, r.r).expect("writing to a String cannot fail");
    }
    write_output(config, EPOCHS_FILE, &out)?;
    Ok(rows)
}

/// In-domain versus out-of-domain comparison of one indicator.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub metric: String,
    pub n_in: usize,
    pub n_out: usize,
    pub mean_in: f64,
    pub mean_out: f64,
    pub t: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DomainShift {
    /// Euclidean distance of each encoder mean to the pool centroid.
    pub distances: Vec<f64>,
    /// Whether each segment was among the most distant ones.
    pub out_of_domain: Vec<bool>,
    pub rows: Vec<GapRow>,
}

fn gap(metric: &str, values: &[f64], ood: &[bool]) -> Result<GapRow> {
    let pick = |side: bool| -> Vec<f64> { values.iter().zip(ood).filter(|(_, o)| **o == side).map(|(v, _)| *v).collect() };
    let (inside, out) = (pick(false), pick(true));
    let test = students_t(&inside, &out)?;
    Ok(GapRow {
        metric: metric.into(),
        n_in: inside.len(),
        n_out: out.len(),
        mean_in: numeric::mean(&inside),
        mean_out: numeric::mean(&out),
        t: test.t,
        p: test.p,
    })
}

/// Flags the `top_fraction` of traces farthest from the centroid of all
/// encoder means and tests the TP and D-TP gaps between the two sets.
pub fn domain_shift(traces: &[DecodingTrace], top_fraction: f64) -> Result<DomainShift> {
    let encs = traces
        .iter()
        .map(|t| {
            t.encoder_state_mean
                .as_deref()
                .ok_or_else(|| Error::InvalidArgument(format!("segment {} has no encoder state", t.segment_id)))
        })
        .collect::<Result<Vec<&[f64]>>>()?;
    let dim = encs.first().map_or(0, |e| e.len());
    if encs.iter().any(|e| e.len() != dim) {
        return Err(Error::InvalidArgument("encoder states differ in dimension".into()));
    }
    let mut centroid = vec![0.0; dim];
    for e in &encs {
        for (c, v) in centroid.iter_mut().zip(*e) {
            *c += v;
        }
    }
    for c in &mut centroid {
        *c /= encs.len() as f64;
    }
    let distances: Vec<f64> = encs
        .iter()
        .map(|e| e.iter().zip(&centroid).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt())
        .collect();
    let k = (top_fraction * traces.len() as f64).round() as usize;
    let mut order: Vec<usize> = (0..traces.len()).collect();
    order.sort_by(|&a, &b| distances[b].total_cmp(&distances[a]).then(a.cmp(&b)));
    let mut out_of_domain = vec![false; traces.len()];
    for &i in &order[..k.min(order.len())] {
        out_of_domain[i] = true;
    }
    let tps = traces.iter().map(tp).collect::<Result<Vec<_>>>()?;
    let dtps = traces
        .iter()
        .map(|t| t.passes.as_ref().ok_or(Error::RescoringRequired).and_then(d_tp))
        .collect::<Result<Vec<_>>>()?;
    let rows = vec![gap("TP", &tps, &out_of_domain)?, gap("D-TP", &dtps, &out_of_domain)?];
    Ok(DomainShift {
        distances,
        out_of_domain,
        rows,
    })
}

/// Writes `domain_shift.tsv` and `distances.tsv`.
pub fn cmd_domain_shift(config: &RunConfig) -> Result<DomainShift> {
    let traces = load_traces(config.required(&config.traces, "--traces")?)?;
    let shift = domain_shift(&traces, config.ood_top_fraction)?;
    let mut out = String::from("metric\tn_in\tn_out\tmean_in\tmean_out\tt\tp\n");
    for r in &shift.rows {
        writeln!(out, "{}\t{}\t{}\t{}\t{}\t{}\t{}", r.metric, r.n_in, r.n_out, r.mean_in, r.mean_out, r.t, r.p)
            .expect("writing to a String cannot fail");
    }
    write_output(config, DOMAIN_FILE, &out)?;
    let mut dist = String::from("id\tdistance\tout_of_domain\n");
    for ((t, d), o) in traces.iter().zip(&shift.distances).zip(&shift.out_of_domain) {
        writeln!(dist, "{}\t{}\t{}", t.segment_id, d, o).expect("writing to a String cannot fail");
    }
    write_output(config, DISTANCES_FILE, &dist)?;
    Ok(shift)
}
