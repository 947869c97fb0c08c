//! A seeded noisy-channel translation simulator with a known quality oracle.
//!
//! A world (ground-truth lexicon, source-word frequencies and embeddings) is
//! drawn from `SimConfig::world_seed`. Models built on it differ from the
//! truth through estimation noise, swapped translations of rare words,
//! per-occurrence context noise, misalignment and sharpening. Dropout is
//! Gaussian logit noise whose scale grows with source-word rarity.

mod benchmark;
mod decode;
mod model;
pub(crate) mod seed;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::indicators::meteor_lite;
use crate::numeric;
use crate::trace::{StochasticPass, StochasticPassSet};

pub use benchmark::{
    make_benchmark, sample_sources, segment_id, Benchmark, BenchmarkConfig, Decoder, SourceSentence,
    DATASET_FILE, QUALITY_FILE, TRACES_FILE,
};
pub(crate) use benchmark::decode_one;
pub use decode::{
    beam_candidates, beam_over, beam_search, diverse_beam, diverse_beam_over, ensemble_decode,
    ensemble_distributions, greedy, output_len, rescore, sample_decode, Decoded, Hypothesis,
};
pub use model::{build_model, build_truth, Perturbation, SimConfig, SimModel, Step};

/// What each Monte Carlo dropout pass records.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropoutMode {
    /// Log-probabilities of the fixed hypothesis under perturbation.
    #[default]
    Rescore,
    /// A fresh greedy hypothesis under perturbation.
    Generate,
    Both,
}

impl std::str::FromStr for DropoutMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rescore" => Ok(DropoutMode::Rescore),
            "generate" => Ok(DropoutMode::Generate),
            "both" => Ok(DropoutMode::Both),
            other => Err(Error::InvalidArgument(format!("unknown dropout mode {other:?}"))),
        }
    }
}

/// Seed of pass `i` in a set seeded with `set_seed`.
pub fn pass_seed(set_seed: u64, i: usize) -> u64 {
    seed::derive(&[set_seed, seed::PASSES, i as u64])
}

/// `n` perturbed passes over `source`, optionally rescoring `hyp`.
pub fn mc_dropout_passes(
    m: &SimModel,
    source: &[usize],
    hyp: &[usize],
    n: usize,
    rate: f64,
    mode: DropoutMode,
    set_seed: u64,
) -> Result<StochasticPassSet> {
    if n == 0 {
        return Err(Error::InvalidArgument("at least one dropout pass is required".into()));
    }
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::InvalidArgument(format!("dropout rate {rate} outside [0, 1)")));
    }
    let rescoring = matches!(mode, DropoutMode::Rescore | DropoutMode::Both);
    let generating = matches!(mode, DropoutMode::Generate | DropoutMode::Both);
    let passes = (0..n)
        .map(|i| {
            let perturb = Perturbation::Dropout {
                rate,
                pass_seed: pass_seed(set_seed, i),
            };
            let mut pass = StochasticPass::default();
            if rescoring {
                let lps = (0..hyp.len())
                    .map(|t| {
                        let step = m.step_distribution(source, &hyp[..t], perturb)?;
                        Ok(numeric::log_softmax(&step.logits)[hyp[t]])
                    })
                    .collect::<Result<Vec<f64>>>()?;
                pass.score_lp = Some(lps);
            }
            if generating {
                let mut tokens = Vec::new();
                let mut lps = Vec::new();
                for _ in 0..output_len(source) {
                    let step = m.step_distribution(source, &tokens, perturb)?;
                    let tok = numeric::argmax(&step.probs);
                    lps.push(numeric::log_softmax(&step.logits)[tok]);
                    tokens.push(tok);
                }
                pass.gen_tokens = Some(m.target_tokens(&tokens));
                pass.gen_lp = Some(lps);
            }
            Ok(pass)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(StochasticPassSet {
        n_passes: n,
        dropout_rate: rate,
        seed: set_seed,
        passes,
    })
}

/// Similarity of `hyp` to the greedy output of the noiseless truth model.
pub fn true_quality(truth: &SimModel, source: &[usize], hyp: &[usize]) -> Result<f64> {
    let reference = greedy(&truth.noiseless(), source)?.tokens;
    Ok(meteor_lite(hyp, &reference))
}
