//! Exact-match unigram Meteor.
//!
//! No stemming, synonymy or paraphrase tables: tokens match only when equal.
//! Parameters are the usual Meteor defaults α = 0.9, β = 3, γ = 0.5.

const ALPHA: f64 = 0.9;
const BETA: f64 = 3.0;
const GAMMA: f64 = 0.5;

/// Aligns each hypothesis token, left to right, to the earliest unused
/// identical reference token. Returns `(hyp_index, ref_index)` pairs in
/// hypothesis order.
pub fn greedy_alignment<T: PartialEq>(hyp: &[T], reference: &[T]) -> Vec<(usize, usize)> {
    let mut used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    for (i, token) in hyp.iter().enumerate() {
        if let Some(j) = (0..reference.len()).find(|&j| !used[j] && reference[j] == *token) {
            used[j] = true;
            pairs.push((i, j));
        }
    }
    pairs
}

/// Number of maximal runs in which consecutive hypothesis positions map to
/// consecutive reference positions.
pub fn count_chunks(alignment: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    let mut prev: Option<(usize, usize)> = None;
    for &(i, j) in alignment {
        match prev {
            Some((pi, pj)) if i == pi + 1 && j == pj + 1 => {}
            _ => chunks += 1,
        }
        prev = Some((i, j));
    }
    chunks
}

/// Similarity in `[0, 1]` between a hypothesis and a reference token list.
pub fn meteor_lite<T: PartialEq>(hyp: &[T], reference: &[T]) -> f64 {
    let alignment = greedy_alignment(hyp, reference);
    let matches = alignment.len();
    if matches == 0 {
        return 0.0;
    }
    let m = matches as f64;
    let precision = m / hyp.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean = precision * recall / (ALPHA * precision + (1.0 - ALPHA) * recall);
    let chunks = count_chunks(&alignment) as f64;
    let penalty = GAMMA * (chunks / m).powf(BETA);
    fmean * (1.0 - penalty)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn disjoint_scores_zero() {
        assert_eq!(meteor_lite(&["a", "b"], &["c", "d"]), 0.0);
        assert_eq!(meteor_lite::<&str>(&[], &[]), 0.0);
        assert_eq!(meteor_lite(&["a"], &[]), 0.0);
    }

    #[test]
    fn identical_three_tokens() {
        let s = ["a", "b", "c"];
        let expected = 1.0 - 0.5 / 27.0;
        assert!((meteor_lite(&s, &s) - expected).abs() < 1e-12);
        assert!((expected - 0.981481).abs() < 1e-6);
    }

    #[test]
    fn swapped_pair_has_two_chunks() {
        assert!((meteor_lite(&["b", "a"], &["a", "b"]) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn partial_match_by_hand() {
        // m = 2 of 3 hyp, 2 of 4 ref; one chunk ("a b").
        let hyp = ["a", "b", "x"];
        let reference = ["a", "b", "c", "d"];
        let (p, r) = (2.0 / 3.0, 0.5);
        let fmean = p * r / (0.9 * p + 0.1 * r);
        let expected = fmean * (1.0 - 0.5 * (0.5f64).powi(3));
        assert!((meteor_lite(&hyp, &reference) - expected).abs() < 1e-12);
    }

    #[test]
    fn duplicate_tokens_use_multiset_matches() {
        let hyp = ["a", "a", "b"];
        let reference = ["a", "b", "a"];
        let alignment = greedy_alignment(&hyp, &reference);
        assert_eq!(alignment, vec![(0, 0), (1, 2), (2, 1)]);
        assert_eq!(count_chunks(&alignment), 3);
    }

    proptest! {
        #[test]
        fn bounded(h in prop::collection::vec(0u8..5, 0..8), r in prop::collection::vec(0u8..5, 0..8)) {
            let s = meteor_lite(&h, &r);
            prop_assert!((0.0..=1.0).contains(&s));
        }

        #[test]
        fn self_score_depends_only_on_length(h in prop::collection::vec(0u8..50, 1..12)) {
            let n = h.len() as f64;
            let expected = 1.0 - 0.5 / (n * n * n);
            prop_assert!((meteor_lite(&h, &h) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn self_score_increases_with_length() {
        let scores: Vec<f64> = (1..20)
            .map(|n| {
                let h: Vec<usize> = (0..n).collect();
                meteor_lite(&h, &h)
            })
            .collect();
        assert!(scores.windows(2).all(|w| w[1] > w[0] && w[1] < 1.0));
    }
}
