//! Independent reference implementations used by the integration tests and
//! the acceptance suite. They follow the metric definitions directly and
//! trade speed for obviousness.
#![allow(dead_code)]

use std::collections::BTreeMap;

use finetopic_core::distill::{batch_loss, AdapterParams, TrainPair};
use finetopic_core::embedding::dot;
use finetopic_core::{Cluster, ClusterResult, EmbeddingSet, Role};
use rand::rngs::StdRng;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

/// AUC as the fraction of (positive, negative) pairs ranked correctly, ties
/// counting one half.
pub fn brute_force_auc(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut total = 0.0;
    for (p, &lp) in labels.iter().enumerate() {
        if !lp {
            continue;
        }
        for (q, &lq) in labels.iter().enumerate() {
            if lq {
                continue;
            }
            total += 1.0;
            if scores[p] > scores[q] {
                wins += 1.0;
            } else if scores[p] == scores[q] {
                wins += 0.5;
            }
        }
    }
    wins / total
}

/// Purity straight from the definition: every cluster votes for its most
/// common label; singletons are correct when included.
pub fn hand_purity(result: &ClusterResult, labels: &[Option<String>], include_singletons: bool) -> f64 {
    let mut correct = 0usize;
    let mut scored = 0usize;
    for c in &result.clusters {
        let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
        for &m in &c.members {
            *counts.entry(labels[m].as_deref().unwrap()).or_default() += 1;
        }
        correct += counts.values().max().copied().unwrap_or(0);
        scored += c.members.len();
    }
    if include_singletons {
        correct += result.singletons.len();
        scored += result.singletons.len();
    }
    if scored == 0 {
        1.0
    } else {
        correct as f64 / scored as f64
    }
}

/// Exhaustive community detection over a full similarity matrix. Centers are
/// chosen one at a time by scanning every remaining candidate.
pub fn reference_community_detect(emb: &EmbeddingSet, tau: f64, min_size: usize) -> ClusterResult {
    let n = emb.len();
    let ids = emb.item_ids();
    let sim: Vec<Vec<f64>> = (0..n)
        .map(|a| (0..n).map(|b| dot(emb.row(a), emb.row(b))).collect())
        .collect();
    let within = |a: usize, b: usize| a == b || sim[a][b] >= tau;
    let degree: Vec<usize> = (0..n).map(|a| (0..n).filter(|&b| within(a, b)).count()).collect();

    let mut visited = vec![false; n];
    let mut assigned = vec![false; n];
    let mut clusters: Vec<Cluster> = Vec::new();
    loop {
        // next candidate: largest neighborhood, then smallest id
        let mut best: Option<usize> = None;
        for a in 0..n {
            if visited[a] || degree[a] < min_size {
                continue;
            }
            best = match best {
                None => Some(a),
                Some(b) if degree[a] > degree[b] || (degree[a] == degree[b] && ids[a] < ids[b]) => Some(a),
                keep => keep,
            };
        }
        let Some(c) = best else { break };
        visited[c] = true;
        if assigned[c] {
            continue;
        }
        let claim: Vec<usize> = (0..n).filter(|&b| within(c, b) && !assigned[b]).collect();
        if claim.len() < min_size {
            continue;
        }
        for &m in &claim {
            assigned[m] = true;
        }
        let mut members: Vec<usize> = claim.iter().map(|&m| ids[m]).collect();
        members.sort();
        clusters.push(Cluster { center: ids[c], members });
    }
    // insertion sort keeps discovery order among equal sizes
    for i in 1..clusters.len() {
        let mut j = i;
        while j > 0 && clusters[j - 1].members.len() < clusters[j].members.len() {
            clusters.swap(j - 1, j);
            j -= 1;
        }
    }
    let mut singletons: Vec<usize> = (0..n).filter(|&a| !assigned[a]).map(|a| ids[a]).collect();
    singletons.sort();
    ClusterResult {
        tau,
        min_cluster_size: min_size,
        clusters,
        singletons,
        n_items: n,
    }
}

/// Best F1 over every way a threshold can split the scores: predicting
/// positive for scores at or above each distinct score, or for none.
pub fn exhaustive_best_f1(scores: &[f64], labels: &[bool]) -> f64 {
    let f1 = |tau: f64| {
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for (&s, &l) in scores.iter().zip(labels) {
            match (s >= tau, l) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        if tp == 0 {
            0.0
        } else {
            (2 * tp) as f64 / (2 * tp + fp + fn_) as f64
        }
    };
    scores
        .iter()
        .map(|&s| f1(s))
        .chain(std::iter::once(f1(f64::INFINITY)))
        .fold(0.0, f64::max)
}

/// Fourth-order central difference of the batch loss with respect to `W`.
pub fn finite_difference_gradient(batch: &[TrainPair<'_>], params: &AdapterParams, scale: f64, h: f64) -> Vec<f64> {
    let mut grad = vec![0.0; params.w.len()];
    let mut p = params.clone();
    for k in 0..params.w.len() {
        let at = |p: &mut AdapterParams, d: f64| {
            p.w[k] = params.w[k] + d;
            batch_loss(batch, p, scale).unwrap()
        };
        let f = [at(&mut p, -2.0 * h), at(&mut p, -h), at(&mut p, h), at(&mut p, 2.0 * h)];
        p.w[k] = params.w[k];
        grad[k] = (f[0] - 8.0 * f[1] + 8.0 * f[2] - f[3]) / (12.0 * h);
    }
    grad
}

pub fn random_unit(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
    let n = v.iter().map(|x: &f64| x * x).sum::<f64>().sqrt();
    v.into_iter().map(|x| x / n).collect()
}

/// Points scattered around a few random centers, so that every threshold
/// produces a mix of clusters and singletons. Item ids are a shuffled,
/// gapped range to exercise id-based tie breaking.
pub fn clustered_embeddings(rng: &mut StdRng, n: usize, dim: usize, centers: usize, spread: f64) -> EmbeddingSet {
    let cs: Vec<Vec<f64>> = (0..centers).map(|_| random_unit(rng, dim)).collect();
    let mut data = Vec::with_capacity(n * dim);
    for _ in 0..n {
        let c = &cs[rng.random_range(0..centers)];
        data.extend(c.iter().map(|x| x + spread * rng.sample::<f64, _>(StandardNormal)));
    }
    let mut ids: Vec<usize> = (0..n).map(|k| 3 * k + 1).collect();
    ids.shuffle(rng);
    EmbeddingSet::from_rows(Role::Base, dim, &data, ids).unwrap()
}

/// Random gold labels indexed by item id, covering every id in `emb`.
pub fn random_labels(rng: &mut StdRng, emb: &EmbeddingSet, classes: usize) -> Vec<Option<String>> {
    let max_id = emb.item_ids().iter().copied().max().unwrap_or(0);
    (0..=max_id)
        .map(|_| Some(format!("c{}", rng.random_range(0..classes))))
        .collect()
}

/// Scores quantized to a coarse grid so that ties are common.
pub fn tied_scores(rng: &mut StdRng, n: usize, levels: u32) -> Vec<f64> {
    (0..n)
        .map(|_| rng.random_range(0..levels) as f64 / levels as f64 * 2.0 - 1.0)
        .collect()
}

/// Labels with both classes present.
pub fn two_class_labels(rng: &mut StdRng, n: usize, p: f64) -> Vec<bool> {
    loop {
        let l: Vec<bool> = (0..n).map(|_| rng.random_bool(p)).collect();
        if l.iter().any(|&x| x) && l.iter().any(|&x| !x) {
            return l;
        }
    }
}
