//! Statistics for evaluating indicators against human judgments.
//!
//! Pearson correlation, the Hotelling-Williams test for two dependent
//! correlations that share a variable, the pooled two-sample Student's t
//! test, annotator standardisation, and significance marking.

mod da;
mod distribution;
mod significance;

use crate::error::{Error, Result};
use crate::numeric::RunningMoments;

pub use da::{
    aggregate_da, annotator_consistency, qc_range_filter, z_standardize, Annotation, QcVerdict,
    QC_RANGE_THRESHOLD,
};
pub use distribution::{ln_gamma, regularized_incomplete_beta, t_cdf, t_two_tailed};
pub use significance::{
    correlation_report, significance_groups, CorrelationReport, MethodRow, MethodScore,
};

/// Pearson product-moment correlation, accumulated in a single pass.
pub fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::InvalidArgument(format!(
            "length mismatch: {} vs {}",
            x.len(),
            y.len()
        )));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "correlation needs at least 3 points, found {}",
            x.len()
        )));
    }
    let (mut mx, mut my) = (0.0, 0.0);
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (i, (&a, &b)) in x.iter().zip(y).enumerate() {
        let k = (i + 1) as f64;
        let dx = a - mx;
        let dy = b - my;
        mx += dx / k;
        my += dy / k;
        sxx += dx * (a - mx);
        syy += dy * (b - my);
        sxy += dx * (b - my);
    }
    if sxx <= 0.0 || syy <= 0.0 || !(sxx.is_finite() && syy.is_finite()) {
        return Err(Error::UndefinedCorrelation(
            "one of the inputs is constant".into(),
        ));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

/// Test statistic and two-tailed p-value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TTest {
    pub t: f64,
    pub p: f64,
    pub df: f64,
}

/// Determinant slack below zero still treated as a (numerically) singular
/// but consistent correlation matrix.
const DETERMINANT_SLACK: f64 = 1e-12;

/// Hotelling-Williams test for `r13 != r23`, where predictors 1 and 2 are
/// both correlated with a shared variable 3 and with each other (`r12`).
pub fn williams_test(r12: f64, r13: f64, r23: f64, n: usize) -> Result<TTest> {
    if n < 4 {
        return Err(Error::InsufficientData(format!(
            "Williams test needs n >= 4, found {n}"
        )));
    }
    for r in [r12, r13, r23] {
        if !(-1.0..=1.0).contains(&r) {
            return Err(Error::InvalidArgument(format!("correlation {r} outside [-1, 1]")));
        }
    }
    let df = (n - 3) as f64;
    if r13 == r23 {
        return Ok(TTest { t: 0.0, p: 1.0, df });
    }
    let det = 1.0 - r12 * r12 - r13 * r13 - r23 * r23 + 2.0 * r12 * r13 * r23;
    if det < -DETERMINANT_SLACK {
        return Err(Error::InconsistentCorrelations(det));
    }
    let det = det.max(0.0);
    let nf = n as f64;
    let rbar = 0.5 * (r13 + r23);
    let denom = 2.0 * ((nf - 1.0) / (nf - 3.0)) * det + rbar * rbar * (1.0 - r12).powi(3);
    if !(denom > 0.0) {
        return Err(Error::InconsistentCorrelations(det));
    }
    let t = (r13 - r23) * ((nf - 1.0) * (1.0 + r12) / denom).sqrt();
    Ok(TTest {
        t,
        p: t_two_tailed(t, df),
        df,
    })
}

/// Two-sample Student's t test with pooled variance.
pub fn students_t(a: &[f64], b: &[f64]) -> Result<TTest> {
    if a.len() < 2 || b.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "t test needs two samples of size >= 2, found {} and {}",
            a.len(),
            b.len()
        )));
    }
    let ma: RunningMoments = a.iter().copied().collect();
    let mb: RunningMoments = b.iter().copied().collect();
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let df = na + nb - 2.0;
    let pooled = (ma.population_variance() * na + mb.population_variance() * nb) / df;
    if !(pooled > 0.0) {
        return Err(Error::UndefinedCorrelation(
            "zero pooled variance in t test".into(),
        ));
    }
    let t = (ma.mean() - mb.mean()) / (pooled * (1.0 / na + 1.0 / nb)).sqrt();
    Ok(TTest {
        t,
        p: t_two_tailed(t, df),
        df,
    })
}
