//! Direct-assessment score handling: per-annotator z-scores, per-segment
//! aggregation, range-based quality control and consistency summaries.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numeric::RunningMoments;

/// Segments whose raw scores span more than this many points are rejected.
pub const QC_RANGE_THRESHOLD: f64 = 30.0;

/// One annotator's score for one segment.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub annotator_id: String,
    pub segment_id: String,
    pub score: f64,
}

impl Annotation {
    pub fn new(annotator_id: impl Into<String>, segment_id: impl Into<String>, score: f64) -> Self {
        Annotation {
            annotator_id: annotator_id.into(),
            segment_id: segment_id.into(),
            score,
        }
    }
}

/// Standardises each annotator's scores by their own mean and population
/// standard deviation. Output order follows the input.
pub fn z_standardize(annotations: &[Annotation]) -> Result<Vec<Annotation>> {
    let mut per_annotator: HashMap<&str, RunningMoments> = HashMap::new();
    for a in annotations {
        per_annotator.entry(&a.annotator_id).or_default().push(a.score);
    }
    let mut params = HashMap::with_capacity(per_annotator.len());
    for (id, m) in &per_annotator {
        let std = m.population_variance().sqrt();
        if m.count() < 2 || !(std > 0.0) {
            return Err(Error::DegenerateAnnotator(id.to_string()));
        }
        params.insert(*id, (m.mean(), std));
    }
    Ok(annotations
        .iter()
        .map(|a| {
            let (mean, std) = params[a.annotator_id.as_str()];
            Annotation {
                score: (a.score - mean) / std,
                ..a.clone()
            }
        })
        .collect())
}

/// Averages the (standardised) scores of each segment, in first-seen order.
pub fn aggregate_da(annotations: &[Annotation]) -> Vec<(String, f64)> {
    let mut order: Vec<&str> = Vec::new();
    let mut sums: HashMap<&str, (f64, usize)> = HashMap::new();
    for a in annotations {
        let entry = sums.entry(&a.segment_id).or_insert_with(|| {
            order.push(&a.segment_id);
            (0.0, 0)
        });
        entry.0 += a.score;
        entry.1 += 1;
    }
    order
        .into_iter()
        .map(|id| {
            let (sum, count) = sums[id];
            (id.to_string(), sum / count as f64)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QcVerdict {
    Accept,
    Flag,
}

/// Flags a segment when `max - min` of its raw scores exceeds `threshold`.
pub fn qc_range_filter(scores: &[f64], threshold: f64) -> QcVerdict {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = scores.iter().copied().fold(f64::INFINITY, f64::min);
    if scores.len() >= 2 && max - min > threshold {
        QcVerdict::Flag
    } else {
        QcVerdict::Accept
    }
}

/// Mean and population standard deviation, across segments, of the mean
/// absolute pairwise difference between annotators. Segments with a single
/// score are skipped.
pub fn annotator_consistency(segments: &[Vec<f64>]) -> Result<(f64, f64)> {
    let diffs: RunningMoments = segments
        .iter()
        .filter(|s| s.len() >= 2)
        .map(|s| {
            let mut total = 0.0;
            let mut pairs = 0usize;
            for i in 0..s.len() {
                for j in i + 1..s.len() {
                    total += (s[i] - s[j]).abs();
                    pairs += 1;
                }
            }
            total / pairs as f64
        })
        .collect();
    if diffs.count() == 0 {
        return Err(Error::InsufficientData(
            "no segment has two or more annotations".into(),
        ));
    }
    Ok((diffs.mean(), diffs.population_variance().sqrt()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ann(a: &str, s: &str, x: f64) -> Annotation {
        Annotation::new(a, s, x)
    }

    #[test]
    fn z_scores_of_three() {
        let z = z_standardize(&[ann("a", "1", 50.0), ann("a", "2", 60.0), ann("a", "3", 70.0)]).unwrap();
        let expected = 1.5f64.sqrt();
        assert!((z[0].score + expected).abs() < 1e-12);
        assert!(z[1].score.abs() < 1e-12);
        assert!((z[2].score - expected).abs() < 1e-12);
        assert!((expected - 1.224745).abs() < 1e-6);
    }

    #[test]
    fn degenerate_annotator_named() {
        let err = z_standardize(&[ann("x", "1", 50.0), ann("y", "1", 40.0), ann("y", "2", 40.0)]).unwrap_err();
        match err {
            Error::DegenerateAnnotator(id) => assert!(id == "x" || id == "y"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn identical_multisets_and_shift_invariance() {
        let raw = [10.0, 35.0, 80.0, 55.0];
        let mut anns: Vec<Annotation> = raw.iter().enumerate().map(|(i, &x)| ann("a", &i.to_string(), x)).collect();
        anns.extend(raw.iter().rev().enumerate().map(|(i, &x)| ann("b", &i.to_string(), x)));
        let z = z_standardize(&anns).unwrap();
        let mut za: Vec<f64> = z.iter().filter(|a| a.annotator_id == "a").map(|a| a.score).collect();
        let mut zb: Vec<f64> = z.iter().filter(|a| a.annotator_id == "b").map(|a| a.score).collect();
        za.sort_by(f64::total_cmp);
        zb.sort_by(f64::total_cmp);
        assert_eq!(za, zb);

        let shifted: Vec<Annotation> = anns
            .iter()
            .map(|a| if a.annotator_id == "a" { ann("a", &a.segment_id, a.score + 10.0) } else { a.clone() })
            .collect();
        let zs = z_standardize(&shifted).unwrap();
        for (x, y) in z.iter().zip(&zs) {
            assert!((x.score - y.score).abs() < 1e-12);
        }
    }

    #[test]
    fn aggregation() {
        let out = aggregate_da(&[
            ann("a", "s1", 0.2),
            ann("b", "s2", -1.0),
            ann("b", "s1", 0.4),
            ann("c", "s2", 1.0),
            ann("c", "s1", 0.9),
            ann("c", "s3", 0.7),
        ]);
        assert_eq!(out.len(), 3);
        assert_eq!(out[0].0, "s1");
        assert!((out[0].1 - 0.5).abs() < 1e-12);
        assert_eq!(out[1], ("s2".to_string(), 0.0));
        assert_eq!(out[2], ("s3".to_string(), 0.7));
    }

    #[test]
    fn qc_boundary() {
        assert_eq!(qc_range_filter(&[60.0, 62.0, 65.0], QC_RANGE_THRESHOLD), QcVerdict::Accept);
        assert_eq!(qc_range_filter(&[10.0, 50.0], QC_RANGE_THRESHOLD), QcVerdict::Flag);
        assert_eq!(qc_range_filter(&[10.0, 40.0], QC_RANGE_THRESHOLD), QcVerdict::Accept);
    }

    #[test]
    fn consistency_examples() {
        assert_eq!(annotator_consistency(&[vec![50.0, 50.0], vec![30.0, 30.0, 30.0]]).unwrap(), (0.0, 0.0));
        let (avg, std) = annotator_consistency(&[vec![50.0, 60.0], vec![70.0, 90.0]]).unwrap();
        assert!((avg - 15.0).abs() < 1e-12);
        assert!((std - 5.0).abs() < 1e-12);
        // three annotators: pairs |1-3|, |1-8|, |3-8| -> mean 14/3
        let (avg, _) = annotator_consistency(&[vec![1.0, 3.0, 8.0]]).unwrap();
        assert!((avg - 14.0 / 3.0).abs() < 1e-12);
        assert!(annotator_consistency(&[vec![1.0]]).is_err());
    }

    proptest! {
        #[test]
        fn qc_is_monotone(scores in prop::collection::vec(0.0f64..100.0, 2..6), extra in 0.0f64..100.0) {
            if qc_range_filter(&scores, QC_RANGE_THRESHOLD) == QcVerdict::Flag {
                let mut more = scores.clone();
                more.push(extra);
                prop_assert_eq!(qc_range_filter(&more, QC_RANGE_THRESHOLD), QcVerdict::Flag);
            }
        }

        #[test]
        fn standardised_moments(scores in prop::collection::vec(0.0f64..100.0, 2..40)) {
            let anns: Vec<Annotation> = scores.iter().enumerate().map(|(i, &x)| ann("a", &i.to_string(), x)).collect();
            if let Ok(z) = z_standardize(&anns) {
                let n = z.len() as f64;
                let mean = z.iter().map(|a| a.score).sum::<f64>() / n;
                let var = z.iter().map(|a| (a.score - mean).powi(2)).sum::<f64>() / n;
                prop_assert!(mean.abs() < 1e-12);
                prop_assert!((var - 1.0).abs() < 1e-12);
            }
        }
    }
}
