//! Glass-box decoding traces: the portable record of what a decoder saw and
//! emitted for one segment.
//!
//! Everything downstream (indicators, harness) consumes only these types.
//! All log quantities are natural logarithms. On disk a trace is one JSON
//! object per line; see [`load_traces`] and [`write_traces`].

mod dataset;
mod io;

use serde::{Deserialize, Serialize};

use crate::numeric;

pub use dataset::{load_dataset, write_dataset, QESegment};
pub use io::{load_traces, parse_traces, write_traces};

/// Tolerance for probability-mass and entropy agreement checks.
pub const MASS_TOLERANCE: f64 = 1e-6;
/// Largest chosen log-probability still accepted as "nonpositive".
pub const LOGPROB_SLACK: f64 = 1e-9;

/// The decoder's output at one target step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TokenDist {
    /// Log-probability of the emitted token.
    #[serde(rename = "lp")]
    pub chosen_logprob: f64,
    /// Full softmax output over the target vocabulary.
    #[serde(rename = "probs", default, skip_serializing_if = "Option::is_none")]
    pub full_probs: Option<Vec<f64>>,
    /// Pre-softmax scores, same length as `full_probs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub logits: Option<Vec<f64>>,
    /// Entropy of the step distribution, for exporters that cannot ship `full_probs`.
    #[serde(rename = "ent", default, skip_serializing_if = "Option::is_none")]
    pub precomputed_entropy: Option<f64>,
}

impl TokenDist {
    pub fn from_logprob(chosen_logprob: f64) -> Self {
        TokenDist {
            chosen_logprob,
            full_probs: None,
            logits: None,
            precomputed_entropy: None,
        }
    }

    /// Entropy in nats, preferring the full distribution over the shipped value.
    pub fn entropy(&self) -> Option<f64> {
        match (&self.full_probs, self.precomputed_entropy) {
            (Some(p), _) => Some(numeric::entropy(p)),
            (None, ent) => ent,
        }
    }
}

/// Encoder-decoder attention weights indexed `[layer][head][target][source]`.
///
/// Stored flat in row-major order; on disk it is the nested array form.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawAttention", into = "RawAttention")]
pub struct AttentionTensor {
    dims: [usize; 4],
    weights: Vec<f64>,
    /// Whether the final source position is an end-of-sequence mark.
    pub include_eos: bool,
}

#[derive(Serialize, Deserialize)]
struct RawAttention {
    weights: Vec<Vec<Vec<Vec<f64>>>>,
    include_eos: bool,
}

impl TryFrom<RawAttention> for AttentionTensor {
    type Error = String;

    fn try_from(raw: RawAttention) -> Result<Self, String> {
        AttentionTensor::from_nested(raw.weights, raw.include_eos)
    }
}

impl From<AttentionTensor> for RawAttention {
    fn from(tensor: AttentionTensor) -> Self {
        RawAttention {
            weights: tensor.to_nested(),
            include_eos: tensor.include_eos,
        }
    }
}

impl AttentionTensor {
    /// Builds a tensor from flat row-major weights of shape `[layers, heads, targets, sources]`.
    pub fn new(dims: [usize; 4], weights: Vec<f64>, include_eos: bool) -> Result<Self, String> {
        let expected: usize = dims.iter().product();
        if weights.len() != expected {
            return Err(format!(
                "attention holds {} weights but shape {:?} needs {}",
                weights.len(),
                dims,
                expected
            ));
        }
        Ok(AttentionTensor {
            dims,
            weights,
            include_eos,
        })
    }

    pub fn from_nested(nested: Vec<Vec<Vec<Vec<f64>>>>, include_eos: bool) -> Result<Self, String> {
        let layers = nested.len();
        let heads = nested.first().map_or(0, Vec::len);
        let targets = nested.first().and_then(|l| l.first()).map_or(0, Vec::len);
        let sources = nested
            .first()
            .and_then(|l| l.first())
            .and_then(|h| h.first())
            .map_or(0, Vec::len);
        let mut weights = Vec::with_capacity(layers * heads * targets * sources);
        for (l, layer) in nested.into_iter().enumerate() {
            if layer.len() != heads {
                return Err(format!("ragged attention: layer {l} has {} heads, expected {heads}", layer.len()));
            }
            for (h, head) in layer.into_iter().enumerate() {
                if head.len() != targets {
                    return Err(format!(
                        "ragged attention: layer {l} head {h} has {} target rows, expected {targets}",
                        head.len()
                    ));
                }
                for (t, row) in head.into_iter().enumerate() {
                    if row.len() != sources {
                        return Err(format!(
                            "ragged attention: row ({l},{h},{t}) has {} source weights, expected {sources}",
                            row.len()
                        ));
                    }
                    weights.extend(row);
                }
            }
        }
        AttentionTensor::new([layers, heads, targets, sources], weights, include_eos)
    }

    pub fn to_nested(&self) -> Vec<Vec<Vec<Vec<f64>>>> {
        (0..self.layers())
            .map(|l| {
                (0..self.heads())
                    .map(|h| (0..self.targets()).map(|t| self.row(l, h, t).to_vec()).collect())
                    .collect()
            })
            .collect()
    }

    pub fn layers(&self) -> usize {
        self.dims[0]
    }

    pub fn heads(&self) -> usize {
        self.dims[1]
    }

    pub fn targets(&self) -> usize {
        self.dims[2]
    }

    pub fn sources(&self) -> usize {
        self.dims[3]
    }

    /// Attention of target step `t` over source positions for one head.
    pub fn row(&self, layer: usize, head: usize, t: usize) -> &[f64] {
        let [_, heads, targets, sources] = self.dims;
        let start = ((layer * heads + head) * targets + t) * sources;
        &self.weights[start..start + sources]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// One stochastic (dropout-perturbed) inference pass.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct StochasticPass {
    /// Per-step log-probabilities of the fixed hypothesis under this pass (rescoring mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub score_lp: Option<Vec<f64>>,
    /// Hypothesis generated under this pass (generation mode).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_tokens: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gen_lp: Option<Vec<f64>>,
}

/// The N passes collected with dropout active at inference time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StochasticPassSet {
    #[serde(rename = "n")]
    pub n_passes: usize,
    #[serde(rename = "rate")]
    pub dropout_rate: f64,
    pub seed: u64,
    #[serde(rename = "items")]
    pub passes: Vec<StochasticPass>,
}

/// Everything recorded about decoding one segment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingTrace {
    #[serde(rename = "id")]
    pub segment_id: String,
    #[serde(rename = "src")]
    pub source_tokens: Vec<String>,
    #[serde(rename = "hyp")]
    pub hyp_tokens: Vec<String>,
    pub steps: Vec<TokenDist>,
    #[serde(rename = "attn", default, skip_serializing_if = "Option::is_none")]
    pub attention: Option<AttentionTensor>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub passes: Option<StochasticPassSet>,
    #[serde(rename = "enc_mean", default, skip_serializing_if = "Option::is_none")]
    pub encoder_state_mean: Option<Vec<f64>>,
}

impl DecodingTrace {
    pub fn chosen_logprobs(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.chosen_logprob).collect()
    }
}

/// A broken trace invariant.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Violation {
    #[error("{steps} steps but {hyp} hypothesis tokens")]
    StepCount { steps: usize, hyp: usize },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("step {step}: chosen log-probability {value} is positive")]
    PositiveLogprob { step: usize, value: f64 },
    #[error("step {step}: negative probability at index {index}")]
    NegativeProbability { step: usize, index: usize },
    #[error("step {step}: probabilities sum to {sum}")]
    ProbabilityMass { step: usize, sum: f64 },
    #[error("step {step}: {logits} logits for {probs} probabilities")]
    LogitsLength { step: usize, logits: usize, probs: usize },
    #[error("step {step}: shipped entropy {given} disagrees with derived {derived}")]
    EntropyMismatch { step: usize, given: f64, derived: f64 },
    #[error("step {step}: entropy {value} outside [0, {max}]")]
    EntropyRange { step: usize, value: f64, max: f64 },
    #[error("attention covers {found} target steps, expected {expected}")]
    AttentionTargets { expected: usize, found: usize },
    #[error("attention covers {found} source positions, expected {expected}")]
    AttentionSources { expected: usize, found: usize },
    #[error("attention has no layers or heads")]
    AttentionEmpty,
    #[error("attention ({layer},{head},{step}): negative weight at source {source_pos}")]
    AttentionNegative {
        layer: usize,
        head: usize,
        step: usize,
        source_pos: usize,
    },
    #[error("attention ({layer},{head},{step}): row sums to {sum}")]
    AttentionRowSum {
        layer: usize,
        head: usize,
        step: usize,
        sum: f64,
    },
    #[error("passes declare n={declared} but carry {found}")]
    PassCount { declared: usize, found: usize },
    #[error("pass set is empty")]
    NoPasses,
    #[error("dropout rate {0} outside [0, 1)")]
    DropoutRate(f64),
    #[error("pass {pass}: {found} rescoring log-probs for {expected} hypothesis tokens")]
    RescoreLength { pass: usize, expected: usize, found: usize },
    #[error("pass {pass}: {tokens} generated tokens but {logprobs} log-probs")]
    GenerationLength { pass: usize, tokens: usize, logprobs: usize },
    #[error("pass {pass}: positive log-probability {value}")]
    PositivePassLogprob { pass: usize, value: f64 },
}

/// Outcome of [`validate_trace`]: empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_ok(&self) -> bool {
        self.violations.is_empty()
    }
}

fn all_finite(values: &[f64]) -> bool {
    values.iter().all(|v| v.is_finite())
}

/// Checks every trace invariant and reports all violations found.
pub fn validate_trace(trace: &DecodingTrace) -> ValidationReport {
    let mut out = Vec::new();
    let hyp_len = trace.hyp_tokens.len();

    if trace.steps.len() != hyp_len {
        out.push(Violation::StepCount {
            steps: trace.steps.len(),
            hyp: hyp_len,
        });
    }

    for (t, step) in trace.steps.iter().enumerate() {
        validate_step(t, step, &mut out);
    }

    if let Some(attn) = &trace.attention {
        validate_attention(trace, attn, &mut out);
    }

    if let Some(passes) = &trace.passes {
        validate_passes(hyp_len, passes, &mut out);
    }

    if let Some(enc) = &trace.encoder_state_mean {
        if !all_finite(enc) {
            out.push(Violation::NonFinite("enc_mean".into()));
        }
    }

    ValidationReport { violations: out }
}

fn validate_step(t: usize, step: &TokenDist, out: &mut Vec<Violation>) {
    if !step.chosen_logprob.is_finite() {
        out.push(Violation::NonFinite(format!("steps[{t}].lp")));
    } else if step.chosen_logprob > LOGPROB_SLACK {
        out.push(Violation::PositiveLogprob {
            step: t,
            value: step.chosen_logprob,
        });
    }

    let mut derived = None;
    if let Some(probs) = &step.full_probs {
        if !all_finite(probs) {
            out.push(Violation::NonFinite(format!("steps[{t}].probs")));
        } else {
            if let Some(index) = probs.iter().position(|&p| p < 0.0) {
                out.push(Violation::NegativeProbability { step: t, index });
            }
            let sum: f64 = probs.iter().sum();
            if (sum - 1.0).abs() > MASS_TOLERANCE {
                out.push(Violation::ProbabilityMass { step: t, sum });
            } else if probs.iter().all(|&p| p >= 0.0) {
                let h = numeric::entropy(probs);
                let max = (probs.len() as f64).ln();
                if h < -MASS_TOLERANCE || h > max + MASS_TOLERANCE {
                    out.push(Violation::EntropyRange {
                        step: t,
                        value: h,
                        max,
                    });
                }
                derived = Some(h);
            }
        }
        if let Some(logits) = &step.logits {
            if logits.len() != probs.len() {
                out.push(Violation::LogitsLength {
                    step: t,
                    logits: logits.len(),
                    probs: probs.len(),
                });
            }
        }
    }
    if let Some(logits) = &step.logits {
        if !all_finite(logits) {
            out.push(Violation::NonFinite(format!("steps[{t}].logits")));
        }
    }

    if let Some(given) = step.precomputed_entropy {
        if !given.is_finite() {
            out.push(Violation::NonFinite(format!("steps[{t}].ent")));
        } else if let Some(derived) = derived {
            if (given - derived).abs() > MASS_TOLERANCE {
                out.push(Violation::EntropyMismatch {
                    step: t,
                    given,
                    derived,
                });
            }
        } else if given < -MASS_TOLERANCE {
            out.push(Violation::EntropyRange {
                step: t,
                value: given,
                max: f64::INFINITY,
            });
        }
    }
}

fn validate_attention(trace: &DecodingTrace, attn: &AttentionTensor, out: &mut Vec<Violation>) {
    if attn.layers() == 0 || attn.heads() == 0 {
        out.push(Violation::AttentionEmpty);
        return;
    }
    if attn.targets() != trace.hyp_tokens.len() {
        out.push(Violation::AttentionTargets {
            expected: trace.hyp_tokens.len(),
            found: attn.targets(),
        });
    }
    let expected_sources = trace.source_tokens.len() + usize::from(attn.include_eos);
    if attn.sources() != expected_sources {
        out.push(Violation::AttentionSources {
            expected: expected_sources,
            found: attn.sources(),
        });
    }
    if !all_finite(attn.weights()) {
        out.push(Violation::NonFinite("attn".into()));
        return;
    }
    for layer in 0..attn.layers() {
        for head in 0..attn.heads() {
            for step in 0..attn.targets() {
                let row = attn.row(layer, head, step);
                if let Some(source_pos) = row.iter().position(|&w| w < 0.0) {
                    out.push(Violation::AttentionNegative {
                        layer,
                        head,
                        step,
                        source_pos,
                    });
                }
                let sum: f64 = row.iter().sum();
                if (sum - 1.0).abs() > MASS_TOLERANCE {
                    out.push(Violation::AttentionRowSum {
                        layer,
                        head,
                        step,
                        sum,
                    });
                }
            }
        }
    }
}

fn validate_passes(hyp_len: usize, set: &StochasticPassSet, out: &mut Vec<Violation>) {
    if set.passes.is_empty() {
        out.push(Violation::NoPasses);
    }
    if set.n_passes != set.passes.len() {
        out.push(Violation::PassCount {
            declared: set.n_passes,
            found: set.passes.len(),
        });
    }
    if !(0.0..1.0).contains(&set.dropout_rate) {
        out.push(Violation::DropoutRate(set.dropout_rate));
    }
    for (pass, item) in set.passes.iter().enumerate() {
        if let Some(lp) = &item.score_lp {
            if lp.len() != hyp_len {
                out.push(Violation::RescoreLength {
                    pass,
                    expected: hyp_len,
                    found: lp.len(),
                });
            }
            check_pass_logprobs(pass, lp, "score_lp", out);
        }
        match (&item.gen_tokens, &item.gen_lp) {
            (Some(tokens), Some(lp)) => {
                if tokens.len() != lp.len() {
                    out.push(Violation::GenerationLength {
                        pass,
                        tokens: tokens.len(),
                        logprobs: lp.len(),
                    });
                }
                check_pass_logprobs(pass, lp, "gen_lp", out);
            }
            (Some(tokens), None) => out.push(Violation::GenerationLength {
                pass,
                tokens: tokens.len(),
                logprobs: 0,
            }),
            (None, Some(lp)) => out.push(Violation::GenerationLength {
                pass,
                tokens: 0,
                logprobs: lp.len(),
            }),
            (None, None) => {}
        }
    }
}

fn check_pass_logprobs(pass: usize, lp: &[f64], field: &str, out: &mut Vec<Violation>) {
    if !all_finite(lp) {
        out.push(Violation::NonFinite(format!("passes.items[{pass}].{field}")));
    } else if let Some(&value) = lp.iter().find(|&&v| v > LOGPROB_SLACK) {
        out.push(Violation::PositivePassLogprob { pass, value });
    }
}
