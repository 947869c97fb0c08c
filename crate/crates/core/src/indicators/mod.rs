//! Unsupervised quality indicators computed from a [`DecodingTrace`].
//!
//! Three families:
//!
//! * **Group I** — the deterministic decode: [`tp`], [`softmax_entropy`],
//!   [`sent_std`], plus the temperature-scaled [`tp_temp`].
//! * **Group II** — Monte Carlo dropout passes: [`d_tp`], [`d_var`],
//!   [`d_combo`], [`d_lex_sim`].
//! * **Group III** — encoder-decoder attention: [`att_ent`], [`aw_ent_min`],
//!   [`aw_ent_avg`] and the dev-selected head ([`best_head_layer`]).
//!
//! Values are raw: an entropy is reported as an entropy. The sign that makes
//! "larger is better" is carried separately by [`Indicator::polarity`].

mod attention;
mod dropout;
mod meteor;
mod probability;

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::trace::DecodingTrace;

pub use attention::{
    att_ent, aw_ent_avg, aw_ent_min, best_head_layer, head_entropies, EosPolicy, HeadIndex,
    HeadSelection,
};
pub use dropout::{d_combo, d_lex_sim, d_tp, d_var, lexical_similarity, pass_tps, DEGENERATE_VARIANCE};
pub use meteor::{count_chunks, greedy_alignment, meteor_lite};
pub use probability::{mean_logprob, sent_std, softmax_entropy, tempered_max_logprob, tp, tp_temp};

/// Every indicator the toolkit computes, in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Indicator {
    Tp,
    SoftmaxEnt,
    SentStd,
    DTp,
    DVar,
    DCombo,
    DLexSim,
    TpTemp,
    AttEnt,
    AwEntMin,
    AwEntAvg,
    AwBest,
}

/// Indicator family, used for within-group significance marks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Group {
    Softmax,
    Dropout,
    Attention,
}

impl Group {
    pub fn label(self) -> &'static str {
        match self {
            Group::Softmax => "I",
            Group::Dropout => "II",
            Group::Attention => "III",
        }
    }
}

impl Indicator {
    pub const ALL: [Indicator; 12] = [
        Indicator::Tp,
        Indicator::SoftmaxEnt,
        Indicator::SentStd,
        Indicator::DTp,
        Indicator::DVar,
        Indicator::DCombo,
        Indicator::DLexSim,
        Indicator::TpTemp,
        Indicator::AttEnt,
        Indicator::AwEntMin,
        Indicator::AwEntAvg,
        Indicator::AwBest,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Indicator::Tp => "TP",
            Indicator::SoftmaxEnt => "Softmax-Ent",
            Indicator::SentStd => "Sent-Std",
            Indicator::DTp => "D-TP",
            Indicator::DVar => "D-Var",
            Indicator::DCombo => "D-Combo",
            Indicator::DLexSim => "D-Lex-Sim",
            Indicator::TpTemp => "TP-Temp",
            Indicator::AttEnt => "Att-Ent",
            Indicator::AwEntMin => "AW:Ent-Min",
            Indicator::AwEntAvg => "AW:Ent-Avg",
            Indicator::AwBest => "AW:best",
        }
    }

    pub fn from_name(name: &str) -> Option<Indicator> {
        Indicator::ALL.into_iter().find(|i| i.name() == name)
    }

    /// `+1` when a larger value predicts better quality, `-1` otherwise.
    pub fn polarity(self) -> f64 {
        match self {
            Indicator::Tp | Indicator::DTp | Indicator::DLexSim | Indicator::TpTemp => 1.0,
            _ => -1.0,
        }
    }

    pub fn group(self) -> Group {
        match self {
            Indicator::Tp | Indicator::SoftmaxEnt | Indicator::SentStd | Indicator::TpTemp => {
                Group::Softmax
            }
            Indicator::DTp | Indicator::DVar | Indicator::DCombo | Indicator::DLexSim => {
                Group::Dropout
            }
            Indicator::AttEnt | Indicator::AwEntMin | Indicator::AwEntAvg | Indicator::AwBest => {
                Group::Attention
            }
        }
    }
}

impl std::fmt::Display for Indicator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// One indicator's outcome for one segment.
#[derive(Debug, Clone, PartialEq)]
pub enum Value {
    Available(f64),
    /// Inputs missing or degenerate; never silently replaced by zero.
    Unavailable(String),
}

impl Value {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            Value::Available(v) => Some(*v),
            Value::Unavailable(_) => None,
        }
    }
}

impl From<Result<f64>> for Value {
    fn from(r: Result<f64>) -> Self {
        match r {
            Ok(v) => Value::Available(v),
            Err(e) => Value::Unavailable(e.to_string()),
        }
    }
}

/// Indicator values for one segment, in the order they were requested.
#[derive(Debug, Clone, PartialEq)]
pub struct IndicatorVector {
    pub segment_id: String,
    pub values: Vec<(Indicator, Value)>,
}

impl IndicatorVector {
    pub fn get(&self, indicator: Indicator) -> Option<&Value> {
        self.values.iter().find(|(i, _)| *i == indicator).map(|(_, v)| v)
    }

    pub fn value(&self, indicator: Indicator) -> Option<f64> {
        self.get(indicator).and_then(Value::as_f64)
    }
}

/// Settings shared by every indicator computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct IndicatorConfig {
    pub temperature: f64,
    pub eos_policy: EosPolicy,
    /// Head used for the single-head `Att-Ent` column.
    pub attention_head: HeadIndex,
    /// Head chosen on a development set; `AW:best` is unavailable without it.
    pub best_head: Option<HeadIndex>,
    pub enabled: Vec<Indicator>,
}

impl Default for IndicatorConfig {
    fn default() -> Self {
        IndicatorConfig {
            temperature: 1.5,
            eos_policy: EosPolicy::Exclude,
            attention_head: HeadIndex::new(0, 0),
            best_head: None,
            enabled: Indicator::ALL.to_vec(),
        }
    }
}

// Indicators are (de)serialised by name.
impl Serialize for Indicator {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(self.name())
    }
}

impl<'de> Deserialize<'de> for Indicator {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let name = String::deserialize(d)?;
        Indicator::from_name(&name)
            .ok_or_else(|| serde::de::Error::custom(format!("unknown indicator {name:?}")))
    }
}

fn missing(what: &str) -> Value {
    Value::Unavailable(format!("trace has no {what}"))
}

/// Computes one indicator, reporting missing inputs as unavailable.
pub fn compute_one(trace: &DecodingTrace, indicator: Indicator, config: &IndicatorConfig) -> Value {
    let eos = config.eos_policy;
    let passes = trace.passes.as_ref();
    let attn = trace.attention.as_ref();
    match indicator {
        Indicator::Tp => tp(trace).into(),
        Indicator::SoftmaxEnt => softmax_entropy(trace).into(),
        Indicator::SentStd => sent_std(trace).into(),
        Indicator::TpTemp => tp_temp(trace, config.temperature).into(),
        Indicator::DTp => passes.map_or_else(|| missing("dropout passes"), |p| d_tp(p).into()),
        Indicator::DVar => passes.map_or_else(|| missing("dropout passes"), |p| d_var(p).into()),
        Indicator::DCombo => passes.map_or_else(|| missing("dropout passes"), |p| d_combo(p).into()),
        Indicator::DLexSim => passes.map_or_else(|| missing("dropout passes"), |p| d_lex_sim(p).into()),
        Indicator::AttEnt => attn.map_or_else(
            || missing("attention"),
            |a| {
                let h = config.attention_head;
                att_ent(a, h.layer, h.head, eos).into()
            },
        ),
        Indicator::AwEntMin => attn.map_or_else(|| missing("attention"), |a| aw_ent_min(a, eos).into()),
        Indicator::AwEntAvg => attn.map_or_else(|| missing("attention"), |a| aw_ent_avg(a, eos).into()),
        Indicator::AwBest => match (attn, config.best_head) {
            (None, _) => missing("attention"),
            (_, None) => Value::Unavailable("no best head selected".into()),
            (Some(a), Some(h)) => att_ent(a, h.layer, h.head, eos).into(),
        },
    }
}

/// Computes every enabled indicator whose inputs the trace carries.
pub fn compute_all(trace: &DecodingTrace, config: &IndicatorConfig) -> IndicatorVector {
    IndicatorVector {
        segment_id: trace.segment_id.clone(),
        values: config
            .enabled
            .iter()
            .map(|&i| (i, compute_one(trace, i, config)))
            .collect(),
    }
}

/// Marker written for unavailable values in indicator tables.
pub const UNAVAILABLE: &str = "NA";

/// Renders indicator vectors as TSV: `id` then one column per indicator.
pub fn format_indicator_table(columns: &[Indicator], rows: &[IndicatorVector]) -> String {
    let mut out = String::from("id");
    for c in columns {
        out.push('\t');
        out.push_str(c.name());
    }
    out.push('\n');
    for row in rows {
        out.push_str(&row.segment_id);
        for c in columns {
            match row.value(*c) {
                Some(v) => write!(out, "\t{v}").expect("writing to a String cannot fail"),
                None => write!(out, "\t{UNAVAILABLE}").expect("writing to a String cannot fail"),
            }
        }
        out.push('\n');
    }
    out
}

/// Parses a table written by [`format_indicator_table`].
pub fn parse_indicator_table(text: &str) -> Result<(Vec<Indicator>, Vec<IndicatorVector>)> {
    let mut lines = text.lines().enumerate();
    let header = match lines.next() {
        Some((_, h)) => h,
        None => return Ok((Vec::new(), Vec::new())),
    };
    let mut names = header.split('\t');
    if names.next() != Some("id") {
        return Err(Error::parse(1, "header", "first column must be `id`"));
    }
    let columns = names
        .map(|n| Indicator::from_name(n).ok_or_else(|| Error::parse(1, "header", format!("unknown indicator {n:?}"))))
        .collect::<Result<Vec<_>>>()?;
    let mut rows = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let line_no = i + 1;
        let mut cells = line.split('\t');
        let id = cells.next().unwrap_or_default().to_string();
        let cells: Vec<&str> = cells.collect();
        if cells.len() != columns.len() {
            return Err(Error::parse(
                line_no,
                "row",
                format!("expected {} values, found {}", columns.len(), cells.len()),
            ));
        }
        let values = columns
            .iter()
            .zip(cells)
            .map(|(&c, cell)| {
                let v = if cell == UNAVAILABLE {
                    Value::Unavailable("unavailable in input table".into())
                } else {
                    Value::Available(cell.parse().map_err(|e| Error::parse(line_no, c.name(), e))?)
                };
                Ok((c, v))
            })
            .collect::<Result<Vec<_>>>()?;
        rows.push(IndicatorVector { segment_id: id, values });
    }
    Ok((columns, rows))
}
