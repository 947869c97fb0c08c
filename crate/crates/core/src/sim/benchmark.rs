use std::fs;
use std::path::Path;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    beam_search, build_model, build_truth, diverse_beam, ensemble_decode, mc_dropout_passes, rescore,
    sample_decode, seed, true_quality, Decoded, DropoutMode, SimConfig, SimModel,
};
use crate::error::{Error, Result};
use crate::trace::{write_dataset, write_traces, DecodingTrace, QESegment};

/// Which decoder produces the benchmark hypotheses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decoder {
    #[default]
    Beam,
    Sampling,
    /// Diverse beam search, reporting the leader of a seeded random group.
    DiverseBeam,
    /// Beam search over `ensemble_size` models with consecutive seeds.
    Ensemble,
}

impl std::str::FromStr for Decoder {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beam" => Ok(Decoder::Beam),
            "sampling" => Ok(Decoder::Sampling),
            "diverse_beam" => Ok(Decoder::DiverseBeam),
            "ensemble" => Ok(Decoder::Ensemble),
            other => Err(Error::InvalidArgument(format!("unknown decoder {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchmarkConfig {
    /// Seeds the model, the source sentences, the passes and the annotators.
    pub seed: u64,
    pub n_segments: usize,
    pub decoder: Decoder,
    pub beam_width: usize,
    pub groups: usize,
    pub diversity: f64,
    pub ensemble_size: usize,
    /// Zero disables dropout passes.
    pub n_passes: usize,
    pub dropout_rate: f64,
    pub dropout_mode: DropoutMode,
    /// Share of segments whose words follow the reversed frequency ranking.
    pub ood_fraction: f64,
    pub annotators: usize,
    /// Standard deviation of each annotator's per-score noise, in DA points.
    pub annotator_noise: f64,
    pub sim: SimConfig,
}

impl Default for BenchmarkConfig {
    fn default() -> Self {
        BenchmarkConfig {
            seed: 2020,
            n_segments: 500,
            decoder: Decoder::Beam,
            beam_width: 4,
            groups: 2,
            diversity: 0.5,
            ensemble_size: 4,
            n_passes: 30,
            dropout_rate: 0.3,
            dropout_mode: DropoutMode::Both,
            ood_fraction: 0.0,
            annotators: 3,
            annotator_noise: 5.0,
            sim: SimConfig::default(),
        }
    }
}

impl BenchmarkConfig {
    pub fn validate(&self) -> Result<()> {
        self.sim.validate()?;
        let mut problems = Vec::new();
        if self.beam_width == 0 || self.groups == 0 || !self.beam_width.is_multiple_of(self.groups) {
            problems.push(format!("{} groups do not divide beam width {}", self.groups, self.beam_width));
        }
        if !(self.diversity >= 0.0) {
            problems.push(format!("diversity {} < 0", self.diversity));
        }
        if self.ensemble_size == 0 {
            problems.push("ensemble_size must be at least 1".into());
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            problems.push(format!("dropout rate {} outside [0, 1)", self.dropout_rate));
        }
        if !(0.0..=1.0).contains(&self.ood_fraction) {
            problems.push(format!("ood_fraction {} outside [0, 1]", self.ood_fraction));
        }
        if self.annotators == 0 {
            problems.push("at least one annotator is required".into());
        }
        if !(self.annotator_noise >= 0.0) {
            problems.push(format!("annotator noise {} < 0", self.annotator_noise));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    pub fn n_ood(&self) -> usize {
        (self.ood_fraction * self.n_segments as f64).round() as usize
    }

    /// Models used by the configured decoder; the first is the primary one.
    pub fn models(&self) -> Result<Vec<SimModel>> {
        let count = if self.decoder == Decoder::Ensemble { self.ensemble_size } else { 1 };
        (0..count as u64).map(|k| build_model(self.seed + k, &self.sim)).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SourceSentence {
    pub tokens: Vec<usize>,
    pub out_of_domain: bool,
}

/// `n` seeded sentences; the last `n_ood` draw their words from the
/// reversed frequency ranking.
pub fn sample_sources(cfg: &SimConfig, seed_value: u64, n: usize, n_ood: usize) -> Vec<SourceSentence> {
    let zipf: Vec<f64> = (0..cfg.src_vocab)
        .map(|r| 1.0 / ((r + 1) as f64).powf(cfg.zipf_exponent))
        .collect();
    let reversed: Vec<f64> = zipf.iter().rev().copied().collect();
    let in_domain = WeightedIndex::new(&zipf).expect("weights are positive");
    let shifted = WeightedIndex::new(&reversed).expect("weights are positive");
    (0..n)
        .map(|i| {
            let out_of_domain = i >= n - n_ood.min(n);
            let mut rng = seed::rng(&[seed_value, seed::SOURCE, i as u64]);
            let len = rng.random_range(cfg.min_len..=cfg.max_len);
            let dist = if out_of_domain { &shifted } else { &in_domain };
            SourceSentence {
                tokens: (0..len).map(|_| dist.sample(&mut rng)).collect(),
                out_of_domain,
            }
        })
        .collect()
}

/// A generated benchmark: traces, DA-annotated segments and true qualities,
/// all in segment order.
#[derive(Debug, Clone, PartialEq)]
pub struct Benchmark {
    pub traces: Vec<DecodingTrace>,
    pub segments: Vec<QESegment>,
    pub qualities: Vec<f64>,
    pub out_of_domain: Vec<bool>,
}

pub fn segment_id(i: usize) -> String {
    format!("seg{i:05}")
}

/// Decodes `source` with the configured decoder.
pub(crate) fn decode_one(cfg: &BenchmarkConfig, models: &[SimModel], source: &[usize], i: usize) -> Result<Decoded> {
    let m = &models[0];
    match cfg.decoder {
        Decoder::Beam => beam_search(m, source, cfg.beam_width),
        Decoder::Sampling => sample_decode(m, source, seed::derive(&[cfg.seed, i as u64])),
        Decoder::DiverseBeam => {
            let hyps = diverse_beam(m, source, cfg.beam_width, cfg.groups, cfg.diversity)?;
            let per_group = cfg.beam_width / cfg.groups;
            let mut rng = seed::rng(&[cfg.seed, seed::LEADER, i as u64]);
            let group = rng.random_range(0..cfg.groups);
            let pick = (group * per_group).min(hyps.len() - 1);
            rescore(m, source, &hyps[pick].tokens)
        }
        Decoder::Ensemble => ensemble_decode(models, source, cfg.beam_width),
    }
}

#[derive(Debug, Clone)]
struct Annotator {
    offset: f64,
    scale: f64,
}

fn annotators(cfg: &BenchmarkConfig) -> Vec<Annotator> {
    (0..cfg.annotators)
        .map(|k| {
            let mut rng = seed::rng(&[cfg.seed, seed::ANNOTATOR, k as u64]);
            Annotator {
                offset: rng.random_range(-5.0..5.0),
                scale: rng.random_range(0.9..1.1),
            }
        })
        .collect()
}

pub fn make_benchmark(cfg: &BenchmarkConfig) -> Result<Benchmark> {
    cfg.validate()?;
    let models = cfg.models()?;
    let truth = build_truth(&cfg.sim)?;
    let sources = sample_sources(&cfg.sim, cfg.seed, cfg.n_segments, cfg.n_ood());
    let raters = annotators(cfg);
    let rows = sources
        .par_iter()
        .enumerate()
        .map(|(i, src)| {
            let mut decoded = decode_one(cfg, &models, &src.tokens, i)?;
            let id = segment_id(i);
            decoded.trace.segment_id = id.clone();
            if cfg.n_passes > 0 {
                decoded.trace.passes = Some(mc_dropout_passes(
                    &models[0],
                    &src.tokens,
                    &decoded.hypothesis.tokens,
                    cfg.n_passes,
                    cfg.dropout_rate,
                    cfg.dropout_mode,
                    seed::derive(&[cfg.seed, i as u64]),
                )?);
            }
            let quality = true_quality(&truth, &src.tokens, &decoded.hypothesis.tokens)?;
            let scores = raters
                .iter()
                .enumerate()
                .map(|(k, a)| {
                    let mut rng = seed::rng(&[cfg.seed, seed::SCORE, i as u64, k as u64]);
                    let noise: f64 = rng.sample(StandardNormal);
                    let raw = a.offset + a.scale * 100.0 * quality + cfg.annotator_noise * noise;
                    (format!("ann{}", k + 1), raw.round().clamp(0.0, 100.0))
                })
                .collect();
            let segment = QESegment {
                segment_id: id,
                source_text: decoded.trace.source_tokens.join(" "),
                mt_text: decoded.trace.hyp_tokens.join(" "),
                annotator_scores: scores,
                da_z: None,
            };
            Ok((decoded.trace, segment, quality))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut bench = Benchmark {
        traces: Vec::with_capacity(rows.len()),
        segments: Vec::with_capacity(rows.len()),
        qualities: Vec::with_capacity(rows.len()),
        out_of_domain: sources.iter().map(|s| s.out_of_domain).collect(),
    };
    for (trace, segment, quality) in rows {
        bench.traces.push(trace);
        bench.segments.push(segment);
        bench.qualities.push(quality);
    }
    Ok(bench)
}

pub const TRACES_FILE: &str = "traces.jsonl";
pub const DATASET_FILE: &str = "dataset.tsv";
pub const QUALITY_FILE: &str = "quality.tsv";

impl Benchmark {
    /// Writes `traces.jsonl`, `dataset.tsv` and `quality.tsv` into `dir`.
    pub fn write(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        write_traces(&self.traces, dir.join(TRACES_FILE))?;
        write_dataset(&self.segments, dir.join(DATASET_FILE))?;
        let mut quality = String::from("id\tquality\tout_of_domain\n");
        for ((t, q), ood) in self.traces.iter().zip(&self.qualities).zip(&self.out_of_domain) {
            quality.push_str(&format!("{}\t{}\t{}\n", t.segment_id, q, ood));
        }
        let path = dir.join(QUALITY_FILE);
        fs::write(&path, quality).map_err(|e| Error::io(&path, e))
    }
}
