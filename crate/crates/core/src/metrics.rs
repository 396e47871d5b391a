//! Evaluation metrics: triplet error rate, cluster-count error, and
//! normalized mutual information.

use crate::data::GroundTruth;
use crate::triplet::TripletSet;
use std::collections::HashMap;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("triplet set is empty")]
    EmptyTripletSet,
    #[error("label sequences differ in length: {a} vs {b}")]
    LengthMismatch { a: usize, b: usize },
    #[error("label sequences must be nonempty")]
    EmptyLabels,
    #[error("trial batch must hold at least one estimate")]
    EmptyBatch,
}

/// Estimated cluster counts across repeated trials of the same task.
#[derive(Debug, Clone)]
pub struct TrialBatch {
    pub estimates: Vec<usize>,
    pub k_true: usize,
}

/// Mean per-triplet impurity: a triplet whose members split 2/1 across
/// ground-truth classes costs 0.5, a fully mixed one costs 1.
pub fn triplet_error_rate(ts: &TripletSet, truth: &GroundTruth) -> Result<f64, MetricsError> {
    if ts.is_empty() {
        return Err(MetricsError::EmptyTripletSet);
    }
    let total: f64 = ts
        .triplets()
        .iter()
        .map(|t| {
            let labels = t.indices().map(|s| truth.labels[s]);
            let plurality = labels
                .iter()
                .map(|l| labels.iter().filter(|&x| x == l).count())
                .max()
                .expect("three members");
            (3 - plurality) as f64 / 2.0
        })
        .sum();
    Ok(total / ts.len() as f64)
}

/// Mean absolute deviation of the estimated cluster counts from the truth.
pub fn nce(batch: &TrialBatch) -> Result<f64, MetricsError> {
    if batch.estimates.is_empty() {
        return Err(MetricsError::EmptyBatch);
    }
    let total: f64 = batch
        .estimates
        .iter()
        .map(|&k| (k as f64 - batch.k_true as f64).abs())
        .sum();
    Ok(total / batch.estimates.len() as f64)
}

/// How the two entropies combine into the NMI denominator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NmiNormalization {
    Min,
    Geometric,
    #[default]
    Arithmetic,
}

/// Normalized mutual information with the arithmetic-mean normalization.
pub fn nmi(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    nmi_with(a, b, NmiNormalization::Arithmetic)
}

/// Normalized mutual information between two labelings, in `[0, 1]`.
///
/// When either labeling has zero entropy the ratio is undefined; identical
/// partitions then score 1 and anything else 0.
pub fn nmi_with(a: &[usize], b: &[usize], norm: NmiNormalization) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch { a: a.len(), b: b.len() });
    }
    if a.is_empty() {
        return Err(MetricsError::EmptyLabels);
    }
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), usize> = HashMap::new();
    let mut count_a: HashMap<usize, usize> = HashMap::new();
    let mut count_b: HashMap<usize, usize> = HashMap::new();
    for (&la, &lb) in a.iter().zip(b.iter()) {
        *joint.entry((la, lb)).or_default() += 1;
        *count_a.entry(la).or_default() += 1;
        *count_b.entry(lb).or_default() += 1;
    }
    let entropy = |counts: &HashMap<usize, usize>| -> f64 {
        counts
            .values()
            .map(|&c| {
                let p = c as f64 / n;
                -p * p.ln()
            })
            .sum()
    };
    let h_a = entropy(&count_a);
    let h_b = entropy(&count_b);
    if h_a <= 0.0 || h_b <= 0.0 {
        return Ok(if same_partition(a, b) { 1.0 } else { 0.0 });
    }
    let mut mi = 0.0;
    for (&(la, lb), &c) in &joint {
        let p = c as f64 / n;
        let pa = count_a[&la] as f64 / n;
        let pb = count_b[&lb] as f64 / n;
        mi += p * (p / (pa * pb)).ln();
    }
    let denom = match norm {
        NmiNormalization::Min => h_a.min(h_b),
        NmiNormalization::Geometric => (h_a * h_b).sqrt(),
        NmiNormalization::Arithmetic => 0.5 * (h_a + h_b),
    };
    Ok((mi / denom).clamp(0.0, 1.0))
}

/// True when both labelings induce the same partition of the samples.
fn same_partition(a: &[usize], b: &[usize]) -> bool {
    let mut fwd: HashMap<usize, usize> = HashMap::new();
    let mut bwd: HashMap<usize, usize> = HashMap::new();
    for (&la, &lb) in a.iter().zip(b.iter()) {
        if *fwd.entry(la).or_insert(lb) != lb || *bwd.entry(lb).or_insert(la) != la {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::GroundTruth;
    use proptest::prelude::*;

    #[test]
    fn triplet_error_hand_cases() {
        let truth = GroundTruth::new(vec![0, 0, 0, 1, 1, 1], 2).unwrap();
        let pure = TripletSet::from_triples(6, &[(0, 1, 2), (3, 4, 5)]).unwrap();
        assert_eq!(triplet_error_rate(&pure, &truth).unwrap(), 0.0);

        let split = TripletSet::from_triples(6, &[(0, 1, 3)]).unwrap();
        assert_eq!(triplet_error_rate(&split, &truth).unwrap(), 0.5);

        let mixed = TripletSet::from_triples(6, &[(0, 1, 2), (0, 1, 3)]).unwrap();
        assert_eq!(triplet_error_rate(&mixed, &truth).unwrap(), 0.25);

        let empty = TripletSet::from_triples(6, &[]).unwrap();
        assert!(matches!(
            triplet_error_rate(&empty, &truth),
            Err(MetricsError::EmptyTripletSet)
        ));
    }

    #[test]
    fn triplet_error_fully_mixed_costs_one() {
        let truth = GroundTruth::new(vec![0, 1, 2], 3).unwrap();
        let ts = TripletSet::from_triples(3, &[(0, 1, 2)]).unwrap();
        assert_eq!(triplet_error_rate(&ts, &truth).unwrap(), 1.0);
    }

    #[test]
    fn nce_hand_cases() {
        let batch = TrialBatch { estimates: vec![5, 7], k_true: 6 };
        assert_eq!(nce(&batch).unwrap(), 1.0);
        let exact = TrialBatch { estimates: vec![4, 4, 4], k_true: 4 };
        assert_eq!(nce(&exact).unwrap(), 0.0);
        let far = TrialBatch { estimates: vec![8], k_true: 38 };
        assert_eq!(nce(&far).unwrap(), 30.0);
    }

    #[test]
    fn nmi_identity_and_permutation() {
        let a = vec![0, 0, 1, 1, 2];
        assert_eq!(nmi(&a, &a).unwrap(), 1.0);
        let b = vec![0, 0, 1, 1];
        let c = vec![1, 1, 0, 0];
        assert_eq!(nmi(&b, &c).unwrap(), 1.0);
    }

    #[test]
    fn nmi_independent_partitions_score_zero() {
        let a = vec![0, 0, 1, 1];
        let b = vec![0, 1, 0, 1];
        assert!(nmi(&a, &b).unwrap().abs() < 1e-12);
    }

    #[test]
    fn nmi_zero_entropy_degenerate_cases() {
        let single = vec![0, 0, 0, 0];
        let other = vec![1, 1, 1, 1];
        let split = vec![0, 0, 1, 1];
        assert_eq!(nmi(&single, &other).unwrap(), 1.0);
        assert_eq!(nmi(&single, &split).unwrap(), 0.0);
        assert_eq!(nmi(&split, &single).unwrap(), 0.0);
    }

    #[test]
    fn nmi_rejects_mismatched_or_empty_inputs() {
        assert!(matches!(
            nmi(&[0, 1], &[0, 1, 2]),
            Err(MetricsError::LengthMismatch { a: 2, b: 3 })
        ));
        assert!(matches!(nmi(&[], &[]), Err(MetricsError::EmptyLabels)));
    }

    #[test]
    fn nmi_normalization_variants_are_ordered() {
        let a = vec![0, 0, 1, 1, 2, 2, 2];
        let b = vec![0, 0, 0, 1, 1, 2, 2];
        let min = nmi_with(&a, &b, NmiNormalization::Min).unwrap();
        let geo = nmi_with(&a, &b, NmiNormalization::Geometric).unwrap();
        let ari = nmi_with(&a, &b, NmiNormalization::Arithmetic).unwrap();
        // min(h) <= geometric mean <= arithmetic mean, so the scores order
        // the other way around.
        assert!(min >= geo && geo >= ari);
        assert!(ari > 0.0 && min <= 1.0);
    }

    proptest! {
        #[test]
        fn nmi_is_symmetric(labels in proptest::collection::vec((0usize..4, 0usize..4), 1..40)) {
            let a: Vec<usize> = labels.iter().map(|&(x, _)| x).collect();
            let b: Vec<usize> = labels.iter().map(|&(_, y)| y).collect();
            let ab = nmi(&a, &b).unwrap();
            let ba = nmi(&b, &a).unwrap();
            prop_assert!((ab - ba).abs() < 1e-12);
            prop_assert!((0.0..=1.0).contains(&ab));
        }

        #[test]
        fn nmi_is_invariant_under_relabeling(labels in proptest::collection::vec((0usize..4, 0usize..4), 1..40)) {
            let a: Vec<usize> = labels.iter().map(|&(x, _)| x).collect();
            let b: Vec<usize> = labels.iter().map(|&(_, y)| y).collect();
            // Send label l to 7 - l: a bijection on the label alphabet.
            let relabeled: Vec<usize> = a.iter().map(|&l| 7 - l).collect();
            let base = nmi(&a, &b).unwrap();
            let twisted = nmi(&relabeled, &b).unwrap();
            prop_assert!((base - twisted).abs() < 1e-12);
        }

        #[test]
        fn nce_is_nonnegative_and_zero_only_when_exact(
            estimates in proptest::collection::vec(1usize..20, 1..30),
            k_true in 1usize..20,
        ) {
            let batch = TrialBatch { estimates: estimates.clone(), k_true };
            let v = nce(&batch).unwrap();
            prop_assert!(v >= 0.0);
            let exact = estimates.iter().all(|&e| e == k_true);
            prop_assert_eq!(v == 0.0, exact);
        }
    }
}
