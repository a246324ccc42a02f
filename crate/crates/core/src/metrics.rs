//! Binary classification metrics with "unstable" (label 1) as the positive class.

use serde::{Deserialize, Serialize};

use crate::error::{DramnError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub specificity: f64,
    pub auroc: Option<f64>,
    pub confusion: Confusion,
    pub threshold: f64,
    pub n_samples: usize,
    /// Metrics whose denominator was zero and were reported as 0.
    pub undefined: Vec<String>,
}

fn ratio(num: usize, den: usize, name: &str, undefined: &mut Vec<String>) -> f64 {
    if den == 0 {
        undefined.push(name.to_string());
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl MetricsReport {
    pub fn from_confusion(c: Confusion, threshold: f64) -> Self {
        let mut undefined = Vec::new();
        let accuracy = ratio(c.tp + c.tn, c.total(), "accuracy", &mut undefined);
        let precision = ratio(c.tp, c.tp + c.fp, "precision", &mut undefined);
        let recall = ratio(c.tp, c.tp + c.fn_, "recall", &mut undefined);
        let specificity = ratio(c.tn, c.tn + c.fp, "specificity", &mut undefined);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            undefined.push("f1".into());
            0.0
        };
        MetricsReport {
            accuracy,
            precision,
            recall,
            f1,
            specificity,
            auroc: None,
            confusion: c,
            threshold,
            n_samples: c.total(),
            undefined,
        }
    }
}

fn check_lengths(probs: &[f64], labels: &[u8]) -> Result<()> {
    if probs.len() != labels.len() {
        return Err(DramnError::ShapeMismatch(format!(
            "{} scores for {} labels",
            probs.len(),
            labels.len()
        )));
    }
    if probs.is_empty() {
        return Err(DramnError::UndefinedMetric("no samples".into()));
    }
    Ok(())
}

/// Counts with `p >= threshold` predicted unstable.
pub fn confusion_metrics(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    check_lengths(probs, labels)?;
    let mut c = Confusion::default();
    for (&p, &y) in probs.iter().zip(labels) {
        match (p >= threshold, y == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(MetricsReport::from_confusion(c, threshold))
}

fn class_counts(probs: &[f64], labels: &[u8]) -> Result<(usize, usize)> {
    check_lengths(probs, labels)?;
    let pos = labels.iter().filter(|&&y| y == 1).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(DramnError::UndefinedMetric("AUROC needs both classes".into()));
    }
    Ok((pos, neg))
}

/// Exact Mann-Whitney count over every positive/negative pair.
pub fn auroc_pairwise(probs: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(probs, labels)?;
    let mut score = 0.0;
    for (i, &pi) in probs.iter().enumerate() {
        if labels[i] != 1 {
            continue;
        }
        for (j, &pj) in probs.iter().enumerate() {
            if labels[j] == 1 {
                continue;
            }
            if pi > pj {
                score += 1.0;
            } else if pi == pj {
                score += 0.5;
            }
        }
    }
    Ok(score / (pos as f64 * neg as f64))
}

/// Rank-sum form with midranks for ties.
pub fn auroc_ranked(probs: &[f64], labels: &[u8]) -> Result<f64> {
    let (pos, neg) = class_counts(probs, labels)?;
    let mut idx: Vec<usize> = (0..probs.len()).collect();
    idx.sort_by(|&a, &b| probs[a].total_cmp(&probs[b]));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && probs[idx[j + 1]] == probs[idx[i]] {
            j += 1;
        }
        let mid = (i + j) as f64 / 2.0 + 1.0;
        rank_sum += idx[i..=j].iter().filter(|&&k| labels[k] == 1).count() as f64 * mid;
        i = j + 1;
    }
    let (p, n) = (pos as f64, neg as f64);
    Ok((rank_sum - p * (p + 1.0) / 2.0) / (p * n))
}

const PAIRWISE_LIMIT: usize = 10_000;

pub fn auroc(probs: &[f64], labels: &[u8]) -> Result<f64> {
    if probs.len() <= PAIRWISE_LIMIT {
        auroc_pairwise(probs, labels)
    } else {
        auroc_ranked(probs, labels)
    }
}

/// Confusion metrics plus AUROC; AUROC stays unset (and flagged) for single-class input.
pub fn full_metrics(probs: &[f64], labels: &[u8], threshold: f64) -> Result<MetricsReport> {
    let mut m = confusion_metrics(probs, labels, threshold)?;
    match auroc(probs, labels) {
        Ok(a) => m.auroc = Some(a),
        Err(DramnError::UndefinedMetric(_)) => m.undefined.push("auroc".into()),
        Err(e) => return Err(e),
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::{prop_assert, prop_assert_eq, proptest, ProptestConfig};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn confusion_example() {
        // tp=2, fp=1, fn=1, tn=6
        let probs = [0.9, 0.8, 0.7, 0.2, 0.1, 0.1, 0.1, 0.1, 0.1, 0.1];
        let labels = [1, 1, 0, 1, 0, 0, 0, 0, 0, 0];
        let m = confusion_metrics(&probs, &labels, 0.5).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 2, fp: 1, fn_: 1, tn: 6 });
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        assert!((m.precision - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.recall - 2.0 / 3.0).abs() < 1e-15);
        assert!((m.specificity - 6.0 / 7.0).abs() < 1e-15);
        assert!((m.f1 - 2.0 / 3.0).abs() < 1e-15);
        assert!(m.undefined.is_empty());
    }

    #[test]
    fn degenerate_confusions() {
        let perfect = confusion_metrics(&[0.9, 0.1], &[1, 0], 0.5).unwrap();
        assert_eq!(
            [perfect.accuracy, perfect.precision, perfect.recall, perfect.f1, perfect.specificity],
            [1.0; 5]
        );
        let none = confusion_metrics(&[0.1, 0.2, 0.3], &[1, 0, 1], 0.5).unwrap();
        assert_eq!(none.recall, 0.0);
        assert!(none.undefined.contains(&"precision".to_string()));
        assert!(confusion_metrics(&[0.1], &[1, 0], 0.5).is_err());
    }

    #[test]
    fn auroc_examples() {
        let s = [0.1, 0.4, 0.35, 0.8];
        let y = [0, 0, 1, 1];
        assert_eq!(auroc(&s, &y).unwrap(), 0.75);
        assert_eq!(auroc_ranked(&s, &y).unwrap(), 0.75);
        assert_eq!(auroc(&[0.1, 0.2, 0.8, 0.9], &y).unwrap(), 1.0);
        assert_eq!(auroc(&[0.5; 4], &y).unwrap(), 0.5);
        assert!(matches!(auroc(&[0.1, 0.2], &[1, 1]), Err(DramnError::UndefinedMetric(_))));
        let m = full_metrics(&[0.1, 0.2], &[0, 0], 0.5).unwrap();
        assert!(m.auroc.is_none() && m.undefined.contains(&"auroc".to_string()));
    }

    #[test]
    fn large_inputs_use_ranks() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let y: Vec<u8> = (0..12_000).map(|_| rng.random_range(0..2)).collect();
        let p: Vec<f64> = y.iter().map(|&l| (rng.random_range(0..20) as f64 + 3.0 * l as f64) / 25.0).collect();
        let a = auroc(&p, &y).unwrap();
        assert!((a - auroc_pairwise(&p, &y).unwrap()).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn rank_and_pairwise_agree(seed in 0u64..1_000_000, n in 2usize..200) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y: Vec<u8> = (0..n).map(|_| rng.random_range(0..2)).collect();
            y[0] = 0;
            y[1] = 1;
            let p: Vec<f64> = (0..n).map(|_| rng.random_range(0..10) as f64 / 10.0).collect();
            prop_assert!((auroc_ranked(&p, &y).unwrap() - auroc_pairwise(&p, &y).unwrap()).abs() < 1e-12);
        }

        #[test]
        fn auroc_invariant_under_monotone_transform(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y: Vec<u8> = (0..60).map(|_| rng.random_range(0..2)).collect();
            y[0] = 0;
            y[1] = 1;
            let p: Vec<f64> = (0..60).map(|_| rng.random_range(0..15) as f64 / 15.0).collect();
            let q: Vec<f64> = p.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(auroc(&p, &y).unwrap(), auroc(&q, &y).unwrap());
        }

        #[test]
        fn threshold_zero_is_all_positive(seed in 0u64..1_000_000) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut y: Vec<u8> = (0..30).map(|_| rng.random_range(0..2)).collect();
            y[0] = 0;
            y[1] = 1;
            let p: Vec<f64> = (0..30).map(|_| rng.random::<f64>()).collect();
            let m = confusion_metrics(&p, &y, 0.0).unwrap();
            prop_assert_eq!(m.recall, 1.0);
            prop_assert_eq!(m.specificity, 0.0);
        }

        #[test]
        fn ratios_follow_counts(tp in 1usize..50, fp in 0usize..50, fn_ in 0usize..50, tn in 0usize..50) {
            prop_assert!(tp + fp + fn_ + tn > 0);
            let c = Confusion { tp, fp, fn_, tn };
            let m = MetricsReport::from_confusion(c, 0.5);
            prop_assert_eq!(m.accuracy, (tp + tn) as f64 / c.total() as f64);
            if tp + fp > 0 {
                prop_assert_eq!(m.precision, tp as f64 / (tp + fp) as f64);
            }
            if m.precision + m.recall > 0.0 {
                prop_assert!((m.f1 - 2.0 * m.precision * m.recall / (m.precision + m.recall)).abs() < 1e-15);
            }
        }
    }
}
