use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::{EosPolicy, HeadIndex, Indicator, IndicatorConfig};
use crate::sim::{BenchmarkConfig, Decoder, DropoutMode, SimConfig};

/// Everything a run needs; loadable from a JSON object with the same keys.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub traces: Option<PathBuf>,
    pub dataset: Option<PathBuf>,
    /// Indicator table read by `correlate`; defaults to `<out>/indicators.tsv`.
    pub indicators: Option<PathBuf>,
    /// Head selection read by `compute` for the `AW:best` column.
    pub best_head: Option<PathBuf>,
    pub out: PathBuf,
    pub eos_policy: EosPolicy,
    pub temperature: f64,
    pub attention_head: HeadIndex,
    pub enabled: Vec<Indicator>,
    pub alpha: f64,
    pub n_passes: usize,
    pub dropout_rate: f64,
    pub dropout_mode: DropoutMode,
    pub seed: u64,
    pub n_segments: usize,
    pub decoder: Decoder,
    pub beam_width: usize,
    pub groups: usize,
    pub diversity: f64,
    pub ensemble_size: usize,
    pub ood_fraction: f64,
    /// Share of the pool treated as out-of-domain by `domain-shift`.
    pub ood_top_fraction: f64,
    pub annotators: usize,
    pub annotator_noise: f64,
    pub epochs: usize,
    /// `gamma(epoch) = 1 + epoch_slope * epoch` for epochs `1..=epochs`.
    pub epoch_slope: f64,
    /// Explicit sharpening per epoch; overrides `epochs` and `epoch_slope`.
    pub gamma_schedule: Option<Vec<f64>>,
    pub variants: Vec<Variant>,
    /// Segment ids kept by `plotdata`; all when absent.
    pub select: Option<Vec<String>>,
    pub sim: SimConfig,
}

/// Rows of the decoding-variant study.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Variant {
    Beam,
    Sampling,
    DiverseBeam,
    Ensemble,
    McDropout,
    TpTemp,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Beam,
        Variant::Sampling,
        Variant::DiverseBeam,
        Variant::Ensemble,
        Variant::McDropout,
        Variant::TpTemp,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Beam => "beam",
            Variant::Sampling => "sampling",
            Variant::DiverseBeam => "diverse_beam",
            Variant::Ensemble => "ensemble",
            Variant::McDropout => "mc_dropout",
            Variant::TpTemp => "tp_temp",
        }
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        let bench = BenchmarkConfig::default();
        RunConfig {
            traces: None,
            dataset: None,
            indicators: None,
            best_head: None,
            out: PathBuf::from("out"),
            eos_policy: EosPolicy::Exclude,
            temperature: 1.5,
            attention_head: HeadIndex::new(0, 0),
            enabled: Indicator::ALL.to_vec(),
            alpha: 0.05,
            n_passes: bench.n_passes,
            dropout_rate: bench.dropout_rate,
            dropout_mode: bench.dropout_mode,
            seed: bench.seed,
            n_segments: bench.n_segments,
            decoder: bench.decoder,
            beam_width: bench.beam_width,
            groups: bench.groups,
            diversity: bench.diversity,
            ensemble_size: bench.ensemble_size,
            ood_fraction: bench.ood_fraction,
            ood_top_fraction: 0.1,
            annotators: bench.annotators,
            annotator_noise: bench.annotator_noise,
            epochs: 20,
            epoch_slope: 1.25,
            gamma_schedule: None,
            variants: Variant::ALL.to_vec(),
            select: None,
            sim: bench.sim,
        }
    }
}

pub const INDICATORS_FILE: &str = "indicators.tsv";
pub const REPORT_FILE: &str = "report.tsv";
pub const PVALUES_FILE: &str = "pvalues.tsv";
pub const SUMMARY_FILE: &str = "summary.tsv";
pub const VARIANTS_FILE: &str = "variants.tsv";
pub const EPOCHS_FILE: &str = "epochs.tsv";
pub const DOMAIN_FILE: &str = "domain_shift.tsv";
pub const DISTANCES_FILE: &str = "distances.tsv";
pub const BEST_HEAD_FILE: &str = "best_head.json";
pub const PLOTDATA_FILE: &str = "plotdata.tsv";

impl RunConfig {
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: RunConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let field = e.path().to_string();
            Error::parse(e.inner().line(), field, e.inner())
        })?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let mut problems = Vec::new();
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            problems.push(format!("alpha {} outside (0, 1)", self.alpha));
        }
        if self.n_passes == 0 {
            problems.push("n_passes must be at least 1".into());
        }
        if !(self.temperature > 0.0) {
            problems.push(format!("temperature {} must be positive", self.temperature));
        }
        if !(self.ood_top_fraction > 0.0 && self.ood_top_fraction < 1.0) {
            problems.push(format!("ood_top_fraction {} outside (0, 1)", self.ood_top_fraction));
        }
        if problems.is_empty() {
            self.benchmark().validate()
        } else {
            Err(Error::InvalidArgument(problems.join("; ")))
        }
    }

    pub fn benchmark(&self) -> BenchmarkConfig {
        BenchmarkConfig {
            seed: self.seed,
            n_segments: self.n_segments,
            decoder: self.decoder,
            beam_width: self.beam_width,
            groups: self.groups,
            diversity: self.diversity,
            ensemble_size: self.ensemble_size,
            n_passes: self.n_passes,
            dropout_rate: self.dropout_rate,
            dropout_mode: self.dropout_mode,
            ood_fraction: self.ood_fraction,
            annotators: self.annotators,
            annotator_noise: self.annotator_noise,
            sim: self.sim.clone(),
        }
    }

    pub fn indicator_config(&self, best_head: Option<HeadIndex>) -> IndicatorConfig {
        IndicatorConfig {
            temperature: self.temperature,
            eos_policy: self.eos_policy,
            attention_head: self.attention_head,
            best_head,
            enabled: self.enabled.clone(),
        }
    }

    pub fn schedule(&self) -> Vec<f64> {
        match &self.gamma_schedule {
            Some(s) => s.clone(),
            None => (1..=self.epochs).map(|e| 1.0 + self.epoch_slope * e as f64).collect(),
        }
    }

    pub fn output(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }

    pub(crate) fn required<'a>(&self, path: &'a Option<PathBuf>, flag: &str) -> Result<&'a Path> {
        path.as_deref()
            .ok_or_else(|| Error::InvalidArgument(format!("this command needs {flag}")))
    }
}
