use std::collections::HashMap;

use crate::cluster::ClusterResult;
use crate::error::{Error, Result};

/// Majority-vote purity. Each cluster contributes the count of its most
/// frequent gold label. With `include_singletons` every singleton counts as
/// correct and the denominator is the whole item set; without it only
/// clustered items are scored, and a result with no clusters scores 1.
///
/// `labels` is indexed by item id.
pub fn cluster_purity(
    result: &ClusterResult,
    labels: &[Option<String>],
    include_singletons: bool,
) -> Result<f64> {
    let label_of = |id: usize| -> Result<&str> {
        labels
            .get(id)
            .and_then(|l| l.as_deref())
            .ok_or(Error::MissingLabel(id))
    };
    let mut correct = 0usize;
    let mut total = 0usize;
    for cluster in &result.clusters {
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for &m in &cluster.members {
            *counts.entry(label_of(m)?).or_default() += 1;
        }
        correct += counts.values().copied().max().unwrap_or(0);
        total += cluster.members.len();
    }
    for &s in &result.singletons {
        label_of(s)?;
    }
    if include_singletons {
        correct += result.singletons.len();
        total += result.singletons.len();
    }
    if total == 0 {
        return Ok(1.0);
    }
    Ok(correct as f64 / total as f64)
}
