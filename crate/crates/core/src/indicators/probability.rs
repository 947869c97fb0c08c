//! Indicators computed from a single deterministic decode.

use crate::error::{Error, Result};
use crate::numeric::{self, RunningMoments};
use crate::trace::DecodingTrace;

/// Length-normalised log-probability of a token sequence.
pub fn mean_logprob(logprobs: &[f64]) -> Result<f64> {
    if logprobs.is_empty() {
        return Err(Error::EmptyTrace);
    }
    Ok(numeric::mean(logprobs))
}

/// Sequence log-probability divided by hypothesis length. Always ≤ 0.
pub fn tp(trace: &DecodingTrace) -> Result<f64> {
    mean_logprob(&trace.chosen_logprobs())
}

/// Mean per-step entropy of the output distribution, in nats.
///
/// Uses `full_probs` when present and the shipped entropy otherwise.
pub fn softmax_entropy(trace: &DecodingTrace) -> Result<f64> {
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut total = 0.0;
    for (t, step) in trace.steps.iter().enumerate() {
        total += step.entropy().ok_or_else(|| {
            Error::Unavailable(format!("step {t} has neither probs nor ent"))
        })?;
    }
    Ok(total / trace.steps.len() as f64)
}

/// Population standard deviation of the per-step chosen log-probabilities.
pub fn sent_std(trace: &DecodingTrace) -> Result<f64> {
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let moments: RunningMoments = trace.steps.iter().map(|s| s.chosen_logprob).collect();
    Ok(moments.population_variance().sqrt())
}

/// Log of the largest softmax probability after dividing the logits by `temp`.
pub fn tempered_max_logprob(logits: &[f64], temp: f64) -> f64 {
    let scaled: Vec<f64> = logits.iter().map(|z| z / temp).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    max - numeric::logsumexp(&scaled)
}

/// Temperature-scaled confidence: mean over steps of `log max_k softmax(z/temp)_k`.
pub fn tp_temp(trace: &DecodingTrace, temp: f64) -> Result<f64> {
    if !(temp > 0.0 && temp.is_finite()) {
        return Err(Error::InvalidArgument(format!("temperature must be positive, got {temp}")));
    }
    if trace.steps.is_empty() {
        return Err(Error::EmptyTrace);
    }
    let mut total = 0.0;
    for (t, step) in trace.steps.iter().enumerate() {
        let logits = step
            .logits
            .as_deref()
            .filter(|l| !l.is_empty())
            .ok_or_else(|| Error::Unavailable(format!("step {t} has no logits")))?;
        total += tempered_max_logprob(logits, temp);
    }
    Ok(total / trace.steps.len() as f64)
}
