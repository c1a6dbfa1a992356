use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::pairs::PairDataset;

/// Area under the ROC curve by the rank statistic, ties given half credit.
pub fn auc_from_scores(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::invalid("scores and labels differ in length"));
    }
    if let Some(index) = scores.iter().position(|s| s.is_nan()) {
        return Err(Error::InvalidRecord {
            index,
            reason: "NaN score".into(),
        });
    }
    let n_pos = labels.iter().filter(|&&l| l).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // midranks are half-integers, so the rank sum below is exact
    let mut pos_rank_sum = 0.0;
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && scores[order[end]] == scores[order[start]] {
            end += 1;
        }
        let midrank = (start + 1 + end) as f64 / 2.0;
        let pos_in_group = order[start..end].iter().filter(|&&k| labels[k]).count();
        pos_rank_sum += midrank * pos_in_group as f64;
        start = end;
    }
    let p = n_pos as f64;
    Ok((pos_rank_sum - p * (p + 1.0) / 2.0) / (p * n_neg as f64))
}

/// Cosine of every pair under `emb`, in record order.
pub fn pair_scores(emb: &EmbeddingSet, pairs: &PairDataset) -> Result<Vec<f64>> {
    pairs.records.iter().map(|r| emb.cosine(r.i, r.j)).collect()
}

pub fn pairwise_auc(emb: &EmbeddingSet, pairs: &PairDataset) -> Result<f64> {
    let labels = super::binary_labels(pairs)?;
    auc_from_scores(&pair_scores(emb, pairs)?, &labels)
}
