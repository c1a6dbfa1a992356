//! Evaluation and tuning: pairwise AUC, F1-optimal thresholds, cluster
//! purity, and the purity/granularity Pareto curve with its area (AUPC).

mod auc;
mod pareto;
mod purity;
mod threshold;

pub use auc::{auc_from_scores, pairwise_auc, pair_scores};
pub use pareto::{
    aupc, aupc_on_domain, pareto_scan, write_curve_csv, write_summary_csv, CurvePoint, ParetoCurve,
};
pub use purity::cluster_purity;
pub use threshold::{f1_at, threshold_candidates, tune_threshold_f1, tune_threshold_scores, ThresholdChoice};

use crate::error::{Error, Result};
use crate::pairs::PairDataset;

/// Binary labels of a dataset; non-binary values are rejected.
pub(crate) fn binary_labels(pairs: &PairDataset) -> Result<Vec<bool>> {
    pairs
        .records
        .iter()
        .enumerate()
        .map(|(index, r)| match r.y {
            y if y == 1.0 => Ok(true),
            y if y == 0.0 => Ok(false),
            _ => Err(Error::InvalidRecord {
                index,
                reason: format!("label {} is not binary", r.y),
            }),
        })
        .collect()
}
