//! Construction of the comparison and embedding-similarity pair datasets.

use std::collections::HashSet;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::Corpus;
use crate::embedding::{dot, EmbeddingSet, Role};
use crate::error::{Error, Result};
use crate::pairs::{PairDataset, PairRecord, Provenance, Split};
use crate::teacher::{ItemRef, Teacher};

/// An unlabeled pair; `base_sim` is set by the range-bound sampler.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UnlabeledPair {
    pub i: usize,
    pub j: usize,
    pub base_sim: Option<f64>,
}

fn total_pairs(n: usize) -> usize {
    n.saturating_mul(n.saturating_sub(1)) / 2
}

/// Maps a linear index in `0..n(n-1)/2` to the unordered pair `(a, b)`, `a < b`.
fn unrank_pair(mut k: usize, n: usize) -> (usize, usize) {
    let mut a = 0;
    let mut row = n - 1;
    while k >= row {
        k -= row;
        a += 1;
        row -= 1;
    }
    (a, a + 1 + k)
}

/// Draws `m` distinct unordered pairs uniformly without replacement from `items`.
pub fn sample_full_range<R: Rng>(items: &[usize], m: usize, rng: &mut R) -> Result<Vec<UnlabeledPair>> {
    let n = items.len();
    let available = total_pairs(n);
    if m > available {
        return Err(Error::InsufficientPairs {
            found: available,
            requested: m,
        });
    }
    let chosen: Vec<(usize, usize)> = if available <= 4 * m || available <= 1 << 16 {
        index::sample(rng, available, m)
            .into_iter()
            .map(|k| unrank_pair(k, n))
            .collect()
    } else {
        let mut seen = HashSet::with_capacity(m);
        let mut out = Vec::with_capacity(m);
        while out.len() < m {
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let p = (a.min(b), a.max(b));
            if seen.insert(p) {
                out.push(p);
            }
        }
        out
    };
    Ok(chosen
        .into_iter()
        .map(|(a, b)| UnlabeledPair {
            i: items[a],
            j: items[b],
            base_sim: None,
        })
        .collect())
}

/// Draws `m` distinct unordered pairs whose base cosine lies in the closed
/// band `[lo, hi]`. Rejection sampling runs for at most `max_attempts` draws;
/// if that falls short, a sweep over a seed-shuffled enumeration of all pairs
/// completes the request whenever enough in-band pairs exist.
pub fn sample_range_bound<R: Rng>(
    items: &[usize],
    base: &EmbeddingSet,
    m: usize,
    band: (f64, f64),
    rng: &mut R,
    max_attempts: usize,
) -> Result<Vec<UnlabeledPair>> {
    let (lo, hi) = band;
    if !(lo < hi) || lo < -1.0 || hi > 1.0 {
        return Err(Error::invalid(format!("invalid band [{lo}, {hi}]")));
    }
    let rows: Vec<&[f32]> = items.iter().map(|&id| base.row_of(id)).collect::<Result<_>>()?;
    let n = items.len();
    let mut seen = HashSet::new();
    let mut out = Vec::with_capacity(m);
    let in_band = |s: f64| s >= lo && s <= hi;

    if n >= 2 {
        let mut attempts = 0;
        while out.len() < m && attempts < max_attempts {
            attempts += 1;
            let a = rng.random_range(0..n);
            let b = rng.random_range(0..n);
            if a == b {
                continue;
            }
            let p = (a.min(b), a.max(b));
            if !seen.insert(p) {
                continue;
            }
            let s = dot(rows[p.0], rows[p.1]);
            if in_band(s) {
                out.push((p, s));
            }
        }
    }

    if out.len() < m {
        let chosen: HashSet<(usize, usize)> = out.iter().map(|(p, _)| *p).collect();
        let mut all: Vec<(usize, usize)> = (0..n).flat_map(|a| (a + 1..n).map(move |b| (a, b))).collect();
        all.shuffle(rng);
        let mut found = chosen.len();
        for p in all {
            if chosen.contains(&p) {
                continue;
            }
            let s = dot(rows[p.0], rows[p.1]);
            if in_band(s) {
                found += 1;
                if out.len() < m {
                    out.push((p, s));
                }
            }
        }
        if out.len() < m {
            return Err(Error::InsufficientPairs { found, requested: m });
        }
    }

    Ok(out
        .into_iter()
        .map(|((a, b), s)| UnlabeledPair {
            i: items[a],
            j: items[b],
            base_sim: Some(s),
        })
        .collect())
}

/// Labels pairs with binary teacher comparisons, preserving order.
pub fn label_pairs(
    pairs: &[UnlabeledPair],
    corpus: &Corpus,
    teacher: &Teacher,
    provenance: Provenance,
    split: Split,
    band: Option<(f64, f64)>,
) -> Result<PairDataset> {
    if !provenance.is_binary() {
        return Err(Error::invalid("label_pairs produces binary comparison datasets only"));
    }
    let refs = pairs
        .iter()
        .map(|p| Ok((item_ref(corpus, p.i)?, item_ref(corpus, p.j)?)))
        .collect::<Result<Vec<_>>>()?;
    let labels = teacher.compare_all(&refs)?;
    let records = pairs
        .iter()
        .zip(labels)
        .map(|(p, y)| PairRecord {
            i: p.i,
            j: p.j,
            y: y as f64,
            base_sim: p.base_sim,
        })
        .collect();
    PairDataset::new(provenance, split, band, records)
}

fn item_ref(corpus: &Corpus, id: usize) -> Result<ItemRef<'_>> {
    let item = corpus.get(id)?;
    Ok(ItemRef { id, text: &item.text })
}

/// Draws `n` items from `items` without replacement, in draw order.
pub fn sample_items<R: Rng>(items: &[usize], n: usize, rng: &mut R) -> Result<Vec<usize>> {
    if n > items.len() {
        return Err(Error::invalid(format!("cannot draw {n} items from {}", items.len())));
    }
    Ok(index::sample(rng, items.len(), n).into_iter().map(|k| items[k]).collect())
}

/// Embeds the given items once with the teacher and emits every ordered pair
/// `(a, b)`, `a != b`, labeled with the teacher cosine. Returns the dataset and
/// the teacher embeddings of the sampled items.
pub fn embedding_dataset_for(
    sampled: &[usize],
    corpus: &Corpus,
    teacher: &Teacher,
) -> Result<(PairDataset, EmbeddingSet)> {
    if sampled.len() < 2 {
        return Err(Error::invalid("embedding dataset needs at least 2 items"));
    }
    let refs = sampled.iter().map(|&id| item_ref(corpus, id)).collect::<Result<Vec<_>>>()?;
    let vectors = teacher.embed_batch(&refs)?;
    let dim = vectors[0].len();
    let flat: Vec<f64> = vectors.iter().flatten().copied().collect();
    let set = EmbeddingSet::from_rows(Role::Teacher, dim, &flat, sampled.to_vec())?;

    let n = sampled.len();
    let mut records = Vec::with_capacity(n * (n - 1));
    for a in 0..n {
        for b in 0..n {
            if a == b {
                continue;
            }
            let y: f64 = vectors[a].iter().zip(&vectors[b]).map(|(x, z)| x * z).sum();
            records.push(PairRecord {
                i: sampled[a],
                j: sampled[b],
                y: y.clamp(-1.0, 1.0),
                base_sim: None,
            });
        }
    }
    Ok((PairDataset::new(Provenance::EmbeddingSim, Split::Train, None, records)?, set))
}

/// Draws `n` items and builds the embedding-similarity dataset of size n(n-1).
pub fn build_embedding_dataset<R: Rng>(
    items: &[usize],
    corpus: &Corpus,
    n: usize,
    teacher: &Teacher,
    rng: &mut R,
) -> Result<(PairDataset, EmbeddingSet)> {
    if n < 2 {
        return Err(Error::invalid("embedding dataset needs n >= 2"));
    }
    let sampled = sample_items(items, n, rng)?;
    embedding_dataset_for(&sampled, corpus, teacher)
}

fn check_fractions(fractions: [f64; 3]) -> Result<()> {
    if fractions.iter().any(|f| !(*f > 0.0) || !f.is_finite()) || (fractions.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split fractions {fractions:?} must be positive and sum to 1"
        )));
    }
    Ok(())
}

fn split_sizes(n: usize, fractions: [f64; 3]) -> (usize, usize) {
    let train = ((fractions[0] * n as f64).round() as usize).min(n);
    let val = ((fractions[1] * n as f64).round() as usize).min(n - train);
    (train, val)
}

/// Partitions records into train/val/test by shuffled position.
pub fn split_dataset<R: Rng>(
    dataset: &PairDataset,
    fractions: [f64; 3],
    rng: &mut R,
) -> Result<(PairDataset, PairDataset, PairDataset)> {
    check_fractions(fractions)?;
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(rng);
    let (n_train, n_val) = split_sizes(order.len(), fractions);
    let take = |idx: &[usize], split: Split| PairDataset {
        provenance: dataset.provenance,
        split,
        band: dataset.band,
        records: idx.iter().map(|&k| dataset.records[k]).collect(),
    };
    Ok((
        take(&order[..n_train], Split::Train),
        take(&order[n_train..n_train + n_val], Split::Val),
        take(&order[n_train + n_val..], Split::Test),
    ))
}

/// Partitions item ids into train/val/test groups, for item-disjoint pair sets.
pub fn split_items<R: Rng>(
    items: &[usize],
    fractions: [f64; 3],
    rng: &mut R,
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    check_fractions(fractions)?;
    let mut shuffled = items.to_vec();
    shuffled.shuffle(rng);
    let (n_train, n_val) = split_sizes(shuffled.len(), fractions);
    let test = shuffled.split_off(n_train + n_val);
    let val = shuffled.split_off(n_train);
    Ok((shuffled, val, test))
}
