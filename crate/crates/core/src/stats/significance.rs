//! Correlation reports with significance marks.
//!
//! A method is *global best* when no other method has a higher correlation
//! with a significant Williams test, and *group best* when the same holds
//! against the methods of its own group.

use std::fmt::Write as _;

use super::{pearson, williams_test};
use crate::error::{Error, Result};

/// A method's correlation with the human score.
#[derive(Debug, Clone, PartialEq)]
pub struct MethodScore {
    pub name: String,
    pub group: String,
    pub r: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MethodRow {
    pub name: String,
    pub group: String,
    pub r: f64,
    pub global_best: bool,
    pub group_best: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub methods: Vec<MethodRow>,
    /// Williams p-value for every pair of methods; the diagonal is 1.
    pub p_values: Vec<Vec<f64>>,
    pub n: usize,
    pub alpha: f64,
}

/// Marks methods that no other method significantly outperforms.
///
/// `predictor_r[i][j]` is the correlation between methods `i` and `j`.
pub fn significance_groups(
    methods: &[MethodScore],
    predictor_r: &[Vec<f64>],
    n: usize,
    alpha: f64,
) -> Result<CorrelationReport> {
    let k = methods.len();
    if predictor_r.len() != k || predictor_r.iter().any(|row| row.len() != k) {
        return Err(Error::InvalidArgument(format!(
            "predictor correlation matrix must be {k}x{k}"
        )));
    }
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let mut p_values = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let test = williams_test(predictor_r[i][j], methods[i].r, methods[j].r, n)?;
            p_values[i][j] = test.p;
            p_values[j][i] = test.p;
        }
    }
    let outperformed = |m: usize, same_group_only: bool| {
        (0..k).any(|o| {
            o != m
                && (!same_group_only || methods[o].group == methods[m].group)
                && methods[o].r > methods[m].r
                && p_values[m][o] < alpha
        })
    };
    let rows = (0..k)
        .map(|m| MethodRow {
            name: methods[m].name.clone(),
            group: methods[m].group.clone(),
            r: methods[m].r,
            global_best: !outperformed(m, false),
            group_best: !outperformed(m, true),
        })
        .collect();
    Ok(CorrelationReport {
        methods: rows,
        p_values,
        n,
        alpha,
    })
}

/// Correlates each predictor with `human` and marks significance.
///
/// `predictors` are `(name, group, values)`; values must already carry the
/// desired sign convention.
pub fn correlation_report(
    predictors: &[(String, String, Vec<f64>)],
    human: &[f64],
    alpha: f64,
) -> Result<CorrelationReport> {
    let scores = predictors
        .iter()
        .map(|(name, group, values)| {
            let r = pearson(values, human).map_err(|e| match e {
                Error::UndefinedCorrelation(why) => Error::UndefinedCorrelation(format!("{name}: {why}")),
                other => other,
            })?;
            Ok(MethodScore {
                name: name.clone(),
                group: group.clone(),
                r,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let k = predictors.len();
    let mut matrix = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in i + 1..k {
            let r = pearson(&predictors[i].2, &predictors[j].2)?;
            matrix[i][j] = r;
            matrix[j][i] = r;
        }
    }
    significance_groups(&scores, &matrix, human.len(), alpha)
}

impl CorrelationReport {
    /// `method  group  r  global_best  group_best`, one row per method.
    pub fn to_tsv(&self) -> String {
        let mut out = String::from("method\tgroup\tr\tglobal_best\tgroup_best\n");
        for m in &self.methods {
            writeln!(out, "{}\t{}\t{}\t{}\t{}", m.name, m.group, m.r, m.global_best, m.group_best)
                .expect("writing to a String cannot fail");
        }
        out
    }

    /// Square matrix of pairwise Williams p-values with a name header.
    pub fn p_values_tsv(&self) -> String {
        let mut out = String::from("method");
        for m in &self.methods {
            out.push('\t');
            out.push_str(&m.name);
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&self.p_values) {
            out.push_str(&m.name);
            for p in row {
                write!(out, "\t{p}").expect("writing to a String cannot fail");
            }
            out.push('\n');
        }
        out
    }
}
