//! Thresholded community detection over an embedding set.
//!
//! Each item's neighborhood is every item with cosine at least `tau`,
//! itself included. Items whose neighborhood reaches `min_size` become
//! candidate centers, visited by neighborhood size (largest first, lower id
//! on ties). A center that is still unassigned claims the unassigned members
//! of its neighborhood; the group is kept only if the claim has at least
//! `min_size` members. Whatever is left unclaimed is a singleton.

use std::collections::HashSet;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::embedding::{dot, EmbeddingSet, NORM_TOLERANCE};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cluster {
    pub center: usize,
    /// Item ids, sorted ascending; includes the center.
    pub members: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    pub tau: f64,
    pub min_cluster_size: usize,
    /// Largest first; ties keep discovery order.
    pub clusters: Vec<Cluster>,
    /// Item ids not in any cluster, ascending.
    pub singletons: Vec<usize>,
    pub n_items: usize,
}

impl ClusterResult {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    /// Cluster index for every clustered item id.
    pub fn assignment(&self) -> std::collections::HashMap<usize, usize> {
        self.clusters
            .iter()
            .enumerate()
            .flat_map(|(c, cl)| cl.members.iter().map(move |&m| (m, c)))
            .collect()
    }
}

/// Number of topics, counting every singleton as its own, as a fraction of
/// the corpus size. All singletons gives 1.
pub fn cluster_count_fraction(result: &ClusterResult, corpus_size: usize) -> f64 {
    if corpus_size == 0 {
        return 0.0;
    }
    (result.clusters.len() + result.singletons.len()) as f64 / corpus_size as f64
}

pub fn community_detect(emb: &EmbeddingSet, tau: f64, min_size: usize) -> Result<ClusterResult> {
    if !(tau > -1.0 && tau <= 1.0) {
        return Err(Error::invalid(format!("tau {tau} outside (-1, 1]")));
    }
    if min_size < 2 {
        return Err(Error::invalid("min cluster size must be at least 2"));
    }
    let dev = emb.max_norm_deviation();
    if dev > NORM_TOLERANCE {
        return Err(Error::invalid(format!(
            "embeddings not unit norm (deviation {dev:.3e})"
        )));
    }
    let n = emb.len();
    let neighborhoods: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|a| {
            let ra = emb.row(a);
            (0..n)
                .filter(|&b| b == a || dot(ra, emb.row(b)) >= tau)
                .collect()
        })
        .collect();

    let mut candidates: Vec<usize> = (0..n).filter(|&a| neighborhoods[a].len() >= min_size).collect();
    let ids = emb.item_ids();
    candidates.sort_by(|&a, &b| {
        neighborhoods[b]
            .len()
            .cmp(&neighborhoods[a].len())
            .then(ids[a].cmp(&ids[b]))
    });

    let mut assigned = vec![false; n];
    let mut clusters = Vec::new();
    for c in candidates {
        if assigned[c] {
            continue;
        }
        let claim: Vec<usize> = neighborhoods[c].iter().copied().filter(|&m| !assigned[m]).collect();
        if claim.len() < min_size {
            continue;
        }
        for &m in &claim {
            assigned[m] = true;
        }
        let mut members: Vec<usize> = claim.iter().map(|&m| ids[m]).collect();
        members.sort_unstable();
        clusters.push(Cluster {
            center: ids[c],
            members,
        });
    }
    clusters.sort_by(|a, b| b.members.len().cmp(&a.members.len()));
    let mut singletons: Vec<usize> = (0..n).filter(|&a| !assigned[a]).map(|a| ids[a]).collect();
    singletons.sort_unstable();
    Ok(ClusterResult {
        tau,
        min_cluster_size: min_size,
        clusters,
        singletons,
        n_items: n,
    })
}

#[derive(Serialize, Deserialize)]
struct Header {
    tau: f64,
    min_cluster_size: usize,
    embedding_digest: String,
    n_items: usize,
}

#[derive(Serialize, Deserialize)]
struct Line {
    item: usize,
    /// Cluster index, or the string `"SINGLETON"`.
    cluster: serde_json::Value,
    center: bool,
}

/// Writes one header line, then one line per item in ascending id order.
pub fn save_clusters(result: &ClusterResult, embedding_digest: &str, path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let header = Header {
        tau: result.tau,
        min_cluster_size: result.min_cluster_size,
        embedding_digest: embedding_digest.to_string(),
        n_items: result.n_items,
    };
    let mut lines: Vec<Line> = Vec::with_capacity(result.n_items);
    for (c, cl) in result.clusters.iter().enumerate() {
        for &m in &cl.members {
            lines.push(Line {
                item: m,
                cluster: c.into(),
                center: m == cl.center,
            });
        }
    }
    for &s in &result.singletons {
        lines.push(Line {
            item: s,
            cluster: "SINGLETON".into(),
            center: false,
        });
    }
    lines.sort_by_key(|l| l.item);
    let mut write = |v: String| writeln!(w, "{v}").map_err(|e| Error::io(path, e));
    write(serde_json::to_string(&header)?)?;
    for l in &lines {
        write(serde_json::to_string(l)?)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a cluster file, returning the result and the recorded embedding digest.
pub fn load_clusters(path: &Path) -> Result<(ClusterResult, String)> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut lines = BufReader::new(file).lines();
    let header: Header = match lines.next() {
        Some(l) => serde_json::from_str(&l.map_err(|e| Error::io(path, e))?)?,
        None => return Err(Error::invalid("empty cluster file")),
    };
    let mut clusters: Vec<(Option<usize>, Vec<usize>)> = Vec::new();
    let mut singletons = Vec::new();
    let mut seen = HashSet::new();
    for (k, l) in lines.enumerate() {
        let l = l.map_err(|e| Error::io(path, e))?;
        if l.trim().is_empty() {
            continue;
        }
        let bad = |message: String| Error::Line {
            line: k + 2,
            message,
        };
        let line: Line = serde_json::from_str(&l).map_err(|e| bad(e.to_string()))?;
        if !seen.insert(line.item) {
            return Err(bad(format!("item {} listed twice", line.item)));
        }
        match &line.cluster {
            serde_json::Value::String(s) if s == "SINGLETON" && !line.center => singletons.push(line.item),
            serde_json::Value::Number(n) => {
                let c = n.as_u64().ok_or_else(|| bad("bad cluster index".into()))? as usize;
                if clusters.len() <= c {
                    clusters.resize(c + 1, (None, Vec::new()));
                }
                let cl = &mut clusters[c];
                if line.center {
                    if cl.0.is_some() {
                        return Err(bad(format!("cluster {c} has two centers")));
                    }
                    cl.0 = Some(line.item);
                }
                cl.1.push(line.item);
            }
            _ => return Err(bad("cluster must be an index or SINGLETON".into())),
        }
    }
    if seen.len() != header.n_items {
        return Err(Error::invalid(format!(
            "cluster file lists {} items, header says {}",
            seen.len(),
            header.n_items
        )));
    }
    let clusters = clusters
        .into_iter()
        .enumerate()
        .map(|(c, (center, members))| match center {
            Some(center) => Ok(Cluster { center, members }),
            None => Err(Error::invalid(format!("cluster {c} has no center"))),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((
        ClusterResult {
            tau: header.tau,
            min_cluster_size: header.min_cluster_size,
            clusters,
            singletons,
            n_items: header.n_items,
        },
        header.embedding_digest,
    ))
}
