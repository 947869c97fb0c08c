//! Attention-entropy indicators.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric;
use crate::stats::pearson;
use crate::trace::AttentionTensor;

/// What to do with a trailing end-of-sequence source column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EosPolicy {
    Include,
    /// Drop the EOS column and renormalise each row before taking the entropy.
    #[default]
    Exclude,
}

impl std::str::FromStr for EosPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "include" => Ok(EosPolicy::Include),
            "exclude" => Ok(EosPolicy::Exclude),
            other => Err(Error::InvalidArgument(format!("unknown EOS policy {other:?}"))),
        }
    }
}

/// A `(layer, head)` coordinate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct HeadIndex {
    pub layer: usize,
    pub head: usize,
}

impl HeadIndex {
    pub fn new(layer: usize, head: usize) -> Self {
        HeadIndex { layer, head }
    }
}

/// Mean row entropy (nats) of one head's attention over source positions.
pub fn att_ent(attn: &AttentionTensor, layer: usize, head: usize, eos: EosPolicy) -> Result<f64> {
    if layer >= attn.layers() || head >= attn.heads() {
        return Err(Error::InvalidArgument(format!(
            "head ({layer},{head}) out of range for {}x{} attention",
            attn.layers(),
            attn.heads()
        )));
    }
    if attn.targets() == 0 {
        return Err(Error::EmptyTrace);
    }
    let drop_eos = eos == EosPolicy::Exclude && attn.include_eos;
    let mut total = 0.0;
    for t in 0..attn.targets() {
        let row = attn.row(layer, head, t);
        let row = if drop_eos { &row[..row.len().saturating_sub(1)] } else { row };
        let mass: f64 = row.iter().sum();
        if !(mass > 0.0) {
            return Err(Error::DegenerateAttentionRow(t));
        }
        let renormalised: Vec<f64> = row.iter().map(|w| w / mass).collect();
        total += numeric::entropy(&renormalised);
    }
    Ok(total / attn.targets() as f64)
}

/// Entropy of every head, in `(layer, head)` order.
pub fn head_entropies(attn: &AttentionTensor, eos: EosPolicy) -> Result<Vec<(HeadIndex, f64)>> {
    let mut out = Vec::with_capacity(attn.layers() * attn.heads());
    for layer in 0..attn.layers() {
        for head in 0..attn.heads() {
            out.push((HeadIndex::new(layer, head), att_ent(attn, layer, head, eos)?));
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument("attention has no heads".into()));
    }
    Ok(out)
}

pub fn aw_ent_min(attn: &AttentionTensor, eos: EosPolicy) -> Result<f64> {
    Ok(head_entropies(attn, eos)?
        .into_iter()
        .map(|(_, e)| e)
        .fold(f64::INFINITY, f64::min))
}

pub fn aw_ent_avg(attn: &AttentionTensor, eos: EosPolicy) -> Result<f64> {
    let all = head_entropies(attn, eos)?;
    Ok(all.iter().map(|(_, e)| e).sum::<f64>() / all.len() as f64)
}

/// The head chosen on a development set and its correlation there.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeadSelection {
    pub layer: usize,
    pub head: usize,
    /// Pearson correlation of the negated entropy with the human score.
    pub r: f64,
}

/// Picks the head whose (negated) attention entropy correlates best with
/// the human scores. Ties go to the smallest `(layer, head)`; heads with a
/// constant entropy column are skipped.
pub fn best_head_layer(dev: &[(&AttentionTensor, f64)], eos: EosPolicy) -> Result<HeadSelection> {
    if dev.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "head selection needs at least 3 labelled segments, found {}",
            dev.len()
        )));
    }
    let (layers, heads) = (dev[0].0.layers(), dev[0].0.heads());
    if dev.iter().any(|(a, _)| a.layers() != layers || a.heads() != heads) {
        return Err(Error::InvalidArgument(
            "development attention tensors disagree on layer/head counts".into(),
        ));
    }
    let labels: Vec<f64> = dev.iter().map(|(_, z)| *z).collect();
    let mut best: Option<HeadSelection> = None;
    for layer in 0..layers {
        for head in 0..heads {
            let scores = dev
                .iter()
                .map(|(a, _)| att_ent(a, layer, head, eos).map(|e| -e))
                .collect::<Result<Vec<f64>>>()?;
            let r = match pearson(&scores, &labels) {
                Ok(r) => r,
                Err(Error::UndefinedCorrelation(_)) => continue,
                Err(e) => return Err(e),
            };
            if best.is_none_or(|b| r > b.r) {
                best = Some(HeadSelection { layer, head, r });
            }
        }
    }
    best.ok_or(Error::NoInformativeHead)
}
