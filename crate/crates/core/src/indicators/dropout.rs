//! Indicators computed from Monte Carlo dropout passes.

use super::meteor::meteor_lite;
use super::probability::mean_logprob;
use crate::error::{Error, Result};
use crate::numeric::RunningMoments;
use crate::trace::StochasticPassSet;

/// Variance below which D-Combo is considered undefined.
pub const DEGENERATE_VARIANCE: f64 = 1e-12;

/// Length-normalised log-probability of the fixed hypothesis under each pass.
pub fn pass_tps(passes: &StochasticPassSet) -> Result<Vec<f64>> {
    if passes.passes.is_empty() {
        return Err(Error::RescoringRequired);
    }
    passes
        .passes
        .iter()
        .map(|p| {
            let lp = p.score_lp.as_deref().ok_or(Error::RescoringRequired)?;
            mean_logprob(lp)
        })
        .collect()
}

fn moments(passes: &StochasticPassSet) -> Result<RunningMoments> {
    Ok(pass_tps(passes)?.into_iter().collect())
}

/// Mean over passes of the per-pass TP.
pub fn d_tp(passes: &StochasticPassSet) -> Result<f64> {
    Ok(moments(passes)?.mean())
}

/// Population variance over passes of the per-pass TP.
pub fn d_var(passes: &StochasticPassSet) -> Result<f64> {
    Ok(moments(passes)?.population_variance())
}

/// `1 - D-TP / D-Var`; an error when the passes do not vary.
pub fn d_combo(passes: &StochasticPassSet) -> Result<f64> {
    let m = moments(passes)?;
    combo(m.mean(), m.population_variance())
}

pub(crate) fn combo(mean: f64, variance: f64) -> Result<f64> {
    if variance < DEGENERATE_VARIANCE {
        return Err(Error::DegenerateVariance(variance));
    }
    Ok(1.0 - mean / variance)
}

/// Mean pairwise similarity of the hypotheses generated under dropout,
/// taken over ordered pairs `i != j`.
pub fn d_lex_sim(passes: &StochasticPassSet) -> Result<f64> {
    let hyps: Vec<&[String]> = passes
        .passes
        .iter()
        .filter_map(|p| p.gen_tokens.as_deref())
        .collect();
    lexical_similarity(&hyps)
}

pub fn lexical_similarity<T: PartialEq>(hyps: &[&[T]]) -> Result<f64> {
    let n = hyps.len();
    if n < 2 {
        return Err(Error::InsufficientData(format!(
            "D-Lex-Sim needs at least two generated hypotheses, found {n}"
        )));
    }
    let mut total = 0.0;
    for (i, a) in hyps.iter().enumerate() {
        for (j, b) in hyps.iter().enumerate() {
            if i != j {
                total += meteor_lite(a, b);
            }
        }
    }
    Ok(total / (n * (n - 1)) as f64)
}
