use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;

use super::model::{Perturbation, SimModel, Step};
use super::seed;
use crate::error::{Error, Result};
use crate::numeric;
use crate::trace::{AttentionTensor, DecodingTrace, TokenDist};

/// A decoded output sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct Hypothesis {
    pub tokens: Vec<usize>,
    /// Log-probability of each chosen token.
    pub logprobs: Vec<f64>,
    /// Sum of `logprobs`.
    pub score: f64,
}

impl Hypothesis {
    fn empty() -> Self {
        Hypothesis {
            tokens: Vec::new(),
            logprobs: Vec::new(),
            score: 0.0,
        }
    }

    fn extend(&self, token: usize, logprob: f64) -> Self {
        let mut next = self.clone();
        next.tokens.push(token);
        next.logprobs.push(logprob);
        next.score += logprob;
        next
    }
}

/// A hypothesis together with its trace.
#[derive(Debug, Clone, PartialEq)]
pub struct Decoded {
    pub hypothesis: Hypothesis,
    pub trace: DecodingTrace,
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    score: f64,
    parent: usize,
    token: usize,
    logprob: f64,
}

fn expand<F>(beam: &[Hypothesis], step_logprobs: &mut F) -> Vec<Candidate>
where
    F: FnMut(&[usize]) -> Vec<f64>,
{
    let mut cands = Vec::new();
    for (parent, hyp) in beam.iter().enumerate() {
        for (token, lp) in step_logprobs(&hyp.tokens).into_iter().enumerate() {
            cands.push(Candidate {
                score: hyp.score + lp,
                parent,
                token,
                logprob: lp,
            });
        }
    }
    // Ties fall back to the earlier parent, then the smaller token id.
    cands.sort_by(|a, b| {
        b.score
            .total_cmp(&a.score)
            .then(a.parent.cmp(&b.parent))
            .then(a.token.cmp(&b.token))
    });
    cands
}

/// Left-to-right beam search of fixed output length over an arbitrary
/// next-token log-probability function. Returns the final beam, best first.
pub fn beam_over<F>(len: usize, width: usize, mut step_logprobs: F) -> Result<Vec<Hypothesis>>
where
    F: FnMut(&[usize]) -> Vec<f64>,
{
    diverse_beam_over(len, width, 1, 0.0, &mut step_logprobs)
}

/// Diverse beam search with a shared candidate pool. At every step the
/// groups pick in turn: group `g` takes its `width / groups` best remaining
/// candidates after subtracting `penalty` times the number of earlier groups'
/// tokens (at this step) equal to the candidate token. Reported scores are
/// the unpenalised sums of log-probabilities.
pub fn diverse_beam_over<F>(
    len: usize,
    width: usize,
    groups: usize,
    penalty: f64,
    mut step_logprobs: F,
) -> Result<Vec<Hypothesis>>
where
    F: FnMut(&[usize]) -> Vec<f64>,
{
    if width == 0 {
        return Err(Error::InvalidArgument("beam width must be at least 1".into()));
    }
    if groups == 0 || !width.is_multiple_of(groups) {
        return Err(Error::InvalidArgument(format!(
            "{groups} groups do not divide beam width {width}"
        )));
    }
    if !(penalty >= 0.0) {
        return Err(Error::InvalidArgument(format!("diversity penalty {penalty} < 0")));
    }
    let per_group = width / groups;
    let mut beam = vec![Hypothesis::empty()];
    for _ in 0..len {
        let cands = expand(&beam, &mut step_logprobs);
        let mut taken = vec![false; cands.len()];
        let mut earlier_tokens: Vec<usize> = Vec::new();
        let mut next = Vec::with_capacity(width);
        for _ in 0..groups {
            let mut ranked: Vec<(f64, usize)> = cands
                .iter()
                .enumerate()
                .filter(|(i, _)| !taken[*i])
                .map(|(i, c)| {
                    let repeats = earlier_tokens.iter().filter(|&&t| t == c.token).count();
                    (c.score - penalty * repeats as f64, i)
                })
                .collect();
            ranked.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
            let mut chosen_now = Vec::with_capacity(per_group);
            for &(_, i) in ranked.iter().take(per_group) {
                taken[i] = true;
                let c = cands[i];
                chosen_now.push(c.token);
                next.push(beam[c.parent].extend(c.token, c.logprob));
            }
            earlier_tokens.extend(chosen_now);
        }
        beam = next;
    }
    Ok(beam)
}

fn clean_steps(m: &SimModel, source: &[usize], len: usize) -> Result<Vec<Step>> {
    (0..len)
        .map(|t| m.step_distribution(source, &vec![0; t], Perturbation::Off))
        .collect()
}

fn log_table(steps: &[Step]) -> Vec<Vec<f64>> {
    steps.iter().map(|s| numeric::log_softmax(&s.logits)).collect()
}

/// Output length used by every decoder: one target token per source token.
pub fn output_len(source: &[usize]) -> usize {
    source.len()
}

/// Final beam, best first.
pub fn beam_candidates(m: &SimModel, source: &[usize], width: usize) -> Result<Vec<Hypothesis>> {
    let table = log_table(&clean_steps(m, source, output_len(source))?);
    beam_over(table.len(), width, |prefix| table[prefix.len()].clone())
}

pub fn beam_search(m: &SimModel, source: &[usize], width: usize) -> Result<Decoded> {
    let steps = clean_steps(m, source, output_len(source))?;
    let table = log_table(&steps);
    let best = beam_over(table.len(), width, |prefix| table[prefix.len()].clone())?.remove(0);
    let trace = trace_for(m, source, &best, &steps)?;
    Ok(Decoded { hypothesis: best, trace })
}

pub fn greedy(m: &SimModel, source: &[usize]) -> Result<Hypothesis> {
    Ok(beam_search(m, source, 1)?.hypothesis)
}

/// Ancestral sampling, one token per step.
pub fn sample_decode(m: &SimModel, source: &[usize], sample_seed: u64) -> Result<Decoded> {
    let steps = clean_steps(m, source, output_len(source))?;
    let mut rng = seed::rng(&[m.seed(), seed::SAMPLING, sample_seed]);
    let mut hyp = Hypothesis::empty();
    for step in &steps {
        let dist = WeightedIndex::new(&step.probs)
            .map_err(|e| Error::InvalidArgument(format!("cannot sample: {e}")))?;
        let token = dist.sample(&mut rng);
        hyp = hyp.extend(token, numeric::log_softmax(&step.logits)[token]);
    }
    let trace = trace_for(m, source, &hyp, &steps)?;
    Ok(Decoded { hypothesis: hyp, trace })
}

/// Diverse beam search over the model's clean step distributions. The
/// result lists group 1's hypotheses first.
pub fn diverse_beam(
    m: &SimModel,
    source: &[usize],
    width: usize,
    groups: usize,
    penalty: f64,
) -> Result<Vec<Hypothesis>> {
    let table = log_table(&clean_steps(m, source, output_len(source))?);
    diverse_beam_over(table.len(), width, groups, penalty, |prefix| table[prefix.len()].clone())
}

/// Per-step mean of the members' probability vectors.
pub fn ensemble_distributions(models: &[SimModel], source: &[usize], len: usize) -> Result<Vec<Vec<f64>>> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidArgument("an ensemble needs at least one model".into()))?;
    if models.iter().any(|m| !m.same_vocabularies(first)) {
        return Err(Error::InvalidArgument("ensemble members disagree on vocabularies".into()));
    }
    let mut mean = vec![vec![0.0; first.tgt_vocab().len()]; len];
    for m in models {
        for (t, acc) in mean.iter_mut().enumerate() {
            let step = m.step_distribution(source, &vec![0; t], Perturbation::Off)?;
            for (a, p) in acc.iter_mut().zip(step.probs) {
                *a += p / models.len() as f64;
            }
        }
    }
    Ok(mean)
}

/// Beam search over the averaged member distributions.
pub fn ensemble_decode(models: &[SimModel], source: &[usize], width: usize) -> Result<Decoded> {
    let len = output_len(source);
    let probs = ensemble_distributions(models, source, len)?;
    // log of the mean probability, computed in log space so a one-member
    // ensemble reproduces the member exactly.
    let members = models
        .iter()
        .map(|m| Ok(log_table(&clean_steps(m, source, len)?)))
        .collect::<Result<Vec<Vec<Vec<f64>>>>>()?;
    let ln_k = (models.len() as f64).ln();
    let table: Vec<Vec<f64>> = (0..len)
        .map(|t| {
            (0..probs[t].len())
                .map(|tok| {
                    let lps: Vec<f64> = members.iter().map(|m| m[t][tok]).collect();
                    numeric::logsumexp(&lps) - ln_k
                })
                .collect()
        })
        .collect();
    let best = beam_over(len, width, |prefix| table[prefix.len()].clone())?.remove(0);
    let steps = probs
        .into_iter()
        .zip(&table)
        .zip(&best.tokens)
        .map(|((p, logits), &tok)| TokenDist {
            chosen_logprob: logits[tok],
            full_probs: Some(p),
            logits: Some(logits.clone()),
            precomputed_entropy: None,
        })
        .collect();
    let mut attention = models[0].attention_tensor(source, len)?;
    if models.len() > 1 {
        let mut weights = attention.weights().to_vec();
        for m in &models[1..] {
            for (w, x) in weights.iter_mut().zip(m.attention_tensor(source, len)?.weights()) {
                *w += x;
            }
        }
        let k = models.len() as f64;
        let dims = [attention.layers(), attention.heads(), attention.targets(), attention.sources()];
        attention = AttentionTensor::new(dims, weights.into_iter().map(|w| w / k).collect(), false)
            .map_err(Error::InvalidArgument)?;
    }
    let m = &models[0];
    let trace = DecodingTrace {
        segment_id: String::new(),
        source_tokens: m.source_tokens(source),
        hyp_tokens: m.target_tokens(&best.tokens),
        steps,
        attention: Some(attention),
        passes: None,
        encoder_state_mean: Some(m.encoder_state_mean(source)?),
    };
    Ok(Decoded { hypothesis: best, trace })
}

/// Trace of `hyp` under the clean model, given its step distributions.
pub(crate) fn trace_for(m: &SimModel, source: &[usize], hyp: &Hypothesis, steps: &[Step]) -> Result<DecodingTrace> {
    let steps = steps
        .iter()
        .zip(&hyp.tokens)
        .map(|(s, &tok)| TokenDist {
            chosen_logprob: numeric::log_softmax(&s.logits)[tok],
            full_probs: Some(s.probs.clone()),
            logits: Some(s.logits.clone()),
            precomputed_entropy: None,
        })
        .collect();
    Ok(DecodingTrace {
        segment_id: String::new(),
        source_tokens: m.source_tokens(source),
        hyp_tokens: m.target_tokens(&hyp.tokens),
        steps,
        attention: Some(m.attention_tensor(source, hyp.tokens.len())?),
        passes: None,
        encoder_state_mean: Some(m.encoder_state_mean(source)?),
    })
}

/// Trace of an arbitrary token sequence under the clean model.
pub fn rescore(m: &SimModel, source: &[usize], tokens: &[usize]) -> Result<Decoded> {
    let steps = clean_steps(m, source, tokens.len())?;
    let mut hyp = Hypothesis::empty();
    for (s, &tok) in steps.iter().zip(tokens) {
        if tok >= s.probs.len() {
            return Err(Error::InvalidArgument(format!("unknown target token id {tok}")));
        }
        hyp = hyp.extend(tok, numeric::log_softmax(&s.logits)[tok]);
    }
    let trace = trace_for(m, source, &hyp, &steps)?;
    Ok(Decoded { hypothesis: hyp, trace })
}
