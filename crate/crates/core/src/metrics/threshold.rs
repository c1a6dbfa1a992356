use serde::{Deserialize, Serialize};

use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::pairs::PairDataset;

/// Offset of the sentinel thresholds below the smallest and above the
/// largest score.
const SENTINEL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    pub tau: f64,
    pub f1: f64,
}

fn f1_from_counts(tp: usize, fp: usize, fn_: usize) -> f64 {
    if tp == 0 {
        return 0.0;
    }
    (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
}

/// F1 of predicting positive iff `score >= tau`.
pub fn f1_at(scores: &[f64], labels: &[bool], tau: f64) -> f64 {
    let (mut tp, mut fp, mut fn_) = (0, 0, 0);
    for (&s, &l) in scores.iter().zip(labels) {
        match (s >= tau, l) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    f1_from_counts(tp, fp, fn_)
}

/// Midpoints between consecutive distinct sorted scores, plus one sentinel
/// below the minimum and one above the maximum. Ascending.
pub fn threshold_candidates(scores: &[f64]) -> Vec<f64> {
    let mut sorted: Vec<f64> = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    sorted.dedup();
    let mut out = Vec::with_capacity(sorted.len() + 1);
    if let (Some(&lo), Some(&hi)) = (sorted.first(), sorted.last()) {
        out.push(lo - SENTINEL);
        out.extend(sorted.windows(2).map(|w| (w[0] + w[1]) / 2.0));
        out.push(hi + SENTINEL);
    }
    out
}

pub fn tune_threshold_scores(scores: &[f64], labels: &[bool]) -> Result<ThresholdChoice> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if let Some(index) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidRecord {
            index,
            reason: "non-finite score".into(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    if n_pos == 0 || n_pos == labels.len() {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    let sorted: Vec<f64> = order.iter().map(|&k| scores[k]).collect();
    // positives among sorted[k..]
    let mut pos_suffix = vec![0usize; sorted.len() + 1];
    for k in (0..sorted.len()).rev() {
        pos_suffix[k] = pos_suffix[k + 1] + labels[order[k]] as usize;
    }
    let mut best = ThresholdChoice { tau: f64::NAN, f1: -1.0 };
    for tau in threshold_candidates(scores) {
        let first = sorted.partition_point(|&s| s < tau);
        let predicted = sorted.len() - first;
        let tp = pos_suffix[first];
        let f1 = f1_from_counts(tp, predicted - tp, n_pos - tp);
        // candidates ascend, so >= keeps the largest tau among ties
        if f1 >= best.f1 {
            best = ThresholdChoice { tau, f1 };
        }
    }
    Ok(best)
}

/// Chooses the similarity threshold maximizing F1 on a binary pair set.
pub fn tune_threshold_f1(emb: &EmbeddingSet, val_pairs: &PairDataset) -> Result<ThresholdChoice> {
    let labels = super::binary_labels(val_pairs)?;
    tune_threshold_scores(&super::pair_scores(emb, val_pairs)?, &labels)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn separated_scores_pick_gap_midpoint() {
        let c = tune_threshold_scores(&[0.1, 0.2, 0.6, 0.9], &[false, false, true, true]).unwrap();
        assert_eq!(c.f1, 1.0);
        assert_eq!(c.tau, 0.4);
    }

    #[test]
    fn single_class_rejected() {
        assert!(matches!(tune_threshold_scores(&[0.1, 0.2], &[true, true]), Err(Error::SingleClass)));
    }

    #[test]
    fn agrees_with_direct_count() {
        let s = [0.3, 0.3, 0.5, 0.1, 0.8, 0.5, 0.2];
        let l = [true, false, true, false, true, false, true];
        let c = tune_threshold_scores(&s, &l).unwrap();
        let best = threshold_candidates(&s).into_iter().map(|t| f1_at(&s, &l, t)).fold(0.0, f64::max);
        assert_eq!(c.f1, best);
        assert_eq!(f1_at(&s, &l, c.tau), c.f1);
    }
}
