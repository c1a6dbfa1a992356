use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::loss::{loss_and_gradient, TrainPair};
use super::{AdapterParams, TrainingProvenance};
use crate::config::{BatchMode, RunConfig};
use crate::digest::{json_digest, sha256_hex};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::pairs::PairDataset;
use crate::rng::stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    /// Mean batch loss per epoch, measured before each update.
    pub epoch_losses: Vec<f64>,
    pub final_loss: Option<f64>,
    pub pair_count: usize,
    pub steps: usize,
    pub wall_clock_secs: f64,
    pub seed: u64,
}

struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    t: i32,
    m: Vec<f64>,
    v: Vec<f64>,
}

impl Adam {
    fn new(lr: f64, n: usize) -> Self {
        Adam {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            t: 0,
            m: vec![0.0; n],
            v: vec![0.0; n],
        }
    }

    fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - self.beta1.powi(self.t);
        let c2 = 1.0 - self.beta2.powi(self.t);
        for k in 0..params.len() {
            self.m[k] = self.beta1 * self.m[k] + (1.0 - self.beta1) * grad[k];
            self.v[k] = self.beta2 * self.v[k] + (1.0 - self.beta2) * grad[k] * grad[k];
            let m_hat = self.m[k] / c1;
            let v_hat = self.v[k] / c2;
            params[k] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

/// A batch: dataset index plus record indices within it.
type Batch = (usize, Vec<usize>);

fn plan_epoch(datasets: &[PairDataset], config: &RunConfig, epoch: usize) -> Vec<Batch> {
    let mut rng = stream(config.seed, "train-epoch", &[epoch as u64]);
    let bs = config.batch_size;
    match config.batch_mode {
        BatchMode::Segregated => {
            let mut batches = Vec::new();
            for (d, ds) in datasets.iter().enumerate() {
                let mut order: Vec<usize> = (0..ds.len()).collect();
                order.shuffle(&mut rng);
                batches.extend(order.chunks(bs).map(|c| (d, c.to_vec())));
            }
            batches.shuffle(&mut rng);
            batches
        }
        BatchMode::Mixed => {
            // indices into the concatenation of all datasets, tagged usize::MAX
            let total: usize = datasets.iter().map(PairDataset::len).sum();
            let mut order: Vec<usize> = (0..total).collect();
            order.shuffle(&mut rng);
            order.chunks(bs).map(|c| (usize::MAX, c.to_vec())).collect()
        }
    }
}

/// Locates a concatenated index in mixed mode.
fn locate(datasets: &[PairDataset], mut k: usize) -> (usize, usize) {
    for (d, ds) in datasets.iter().enumerate() {
        if k < ds.len() {
            return (d, k);
        }
        k -= ds.len();
    }
    unreachable!("index beyond concatenated datasets")
}

fn dataset_digest(ds: &PairDataset) -> Result<String> {
    let mut bytes = serde_json::to_vec(&(ds.provenance, ds.split, ds.band))?;
    bytes.extend(serde_json::to_vec(&ds.records)?);
    Ok(sha256_hex(&bytes))
}

/// Trains the residual adapter with Adam on mini-batch CoSENT over the given
/// datasets. Comparisons are only formed within a batch. Deterministic for a
/// fixed seed, data, and config, regardless of `workers`.
pub fn train_adapter(
    datasets: &[PairDataset],
    base: &EmbeddingSet,
    config: &RunConfig,
) -> Result<(AdapterParams, TrainReport)> {
    config.validate()?;
    if datasets.is_empty() {
        return Err(Error::invalid("no training datasets"));
    }
    if let Some(ds) = datasets.iter().find(|d| d.is_empty()) {
        return Err(Error::invalid(format!(
            "empty {:?} training dataset",
            ds.provenance
        )));
    }
    if !config.dataset_weights.is_empty() && config.dataset_weights.len() != datasets.len() {
        return Err(Error::invalid(format!(
            "{} dataset weights for {} datasets",
            config.dataset_weights.len(),
            datasets.len()
        )));
    }
    let dim = base.dim();
    let mut base64: Vec<Vec<f64>> = Vec::with_capacity(base.len());
    for r in base.rows() {
        base64.push(r.iter().map(|&v| v as f64).collect());
    }
    // resolve every record to base rows once
    let mut resolved: Vec<Vec<(usize, usize)>> = Vec::with_capacity(datasets.len());
    for ds in datasets {
        let mut rows = Vec::with_capacity(ds.len());
        for r in &ds.records {
            rows.push((base.row_index(r.i)?, base.row_index(r.j)?));
        }
        resolved.push(rows);
    }

    let start = Instant::now();
    let mut params = AdapterParams::identity(dim);
    let provenance = TrainingProvenance {
        dataset_digests: datasets.iter().map(dataset_digest).collect::<Result<_>>()?,
        config_digest: json_digest(config)?,
    };
    let mut adam = Adam::new(config.learning_rate, dim * dim);
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut steps = 0;
    let parallel = config.workers > 1;
    let pool = if parallel {
        Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::invalid(format!("thread pool: {e}")))?,
        )
    } else {
        None
    };

    for epoch in 0..config.epochs {
        let batches = plan_epoch(datasets, config, epoch);
        let mut sum = 0.0;
        let mut counted = 0usize;
        for (d, idx) in batches {
            if idx.len() < 2 {
                continue;
            }
            let members: Vec<(usize, usize)> = if d == usize::MAX {
                idx.iter().map(|&k| locate(datasets, k)).collect()
            } else {
                idx.iter().map(|&k| (d, k)).collect()
            };
            let batch: Vec<TrainPair<'_>> = members
                .iter()
                .map(|&(d, k)| {
                    let (ri, rj) = resolved[d][k];
                    TrainPair {
                        u: &base64[ri],
                        v: &base64[rj],
                        y: datasets[d].records[k].y,
                    }
                })
                .collect();
            let weight = if d != usize::MAX && !config.dataset_weights.is_empty() {
                config.dataset_weights[d]
            } else {
                1.0
            };
            let (loss, mut grad) = match &pool {
                Some(p) => p.install(|| loss_and_gradient(&batch, &params, config.cosent_scale, true))?,
                None => loss_and_gradient(&batch, &params, config.cosent_scale, false)?,
            };
            sum += loss;
            counted += 1;
            if grad.iter().all(|&g| g == 0.0) {
                continue;
            }
            if weight != 1.0 {
                grad.iter_mut().for_each(|g| *g *= weight);
            }
            adam.step(&mut params.w, &grad);
            steps += 1;
        }
        let mean = if counted > 0 { sum / counted as f64 } else { 0.0 };
        log::debug!("epoch {epoch}: mean batch loss {mean:.6}");
        epoch_losses.push(mean);
    }
    if let Some(k) = params.w.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinite { row: k / dim });
    }
    params.provenance = provenance;
    let report = TrainReport {
        final_loss: epoch_losses.last().copied(),
        epoch_losses,
        pair_count: datasets.iter().map(PairDataset::len).sum(),
        steps,
        wall_clock_secs: start.elapsed().as_secs_f64(),
        seed: config.seed,
    };
    Ok((params, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::embedding::Role;
    use crate::pairs::{PairRecord, Provenance, Split};

    fn toy() -> (EmbeddingSet, PairDataset) {
        let data = [1.0, 0.1, 0.0, 0.9, 0.3, 0.1, 0.8, -0.2, 0.3, 0.7, 0.5, -0.4];
        let base = EmbeddingSet::from_rows(Role::Base, 3, &data, (0..4).collect()).unwrap();
        let records = vec![
            PairRecord { i: 0, j: 1, y: 1.0, base_sim: None },
            PairRecord { i: 0, j: 2, y: 0.0, base_sim: None },
            PairRecord { i: 1, j: 3, y: 0.0, base_sim: None },
            PairRecord { i: 2, j: 3, y: 1.0, base_sim: None },
        ];
        (base, PairDataset::new(Provenance::FullRange, Split::Train, None, records).unwrap())
    }

    #[test]
    fn zero_epochs_is_identity() {
        let (base, ds) = toy();
        let mut cfg = RunConfig::default();
        cfg.epochs = 0;
        let (p, report) = train_adapter(&[ds], &base, &cfg).unwrap();
        assert!(p.is_identity());
        assert!(report.epoch_losses.is_empty());
        assert_eq!(report.final_loss, None);
    }

    #[test]
    fn deterministic_and_worker_independent() {
        let (base, ds) = toy();
        let mut cfg = RunConfig::default();
        cfg.batch_size = 4;
        cfg.epochs = 20;
        cfg.learning_rate = 0.01;
        let (a, ra) = train_adapter(&[ds.clone()], &base, &cfg).unwrap();
        let (b, _) = train_adapter(&[ds.clone()], &base, &cfg).unwrap();
        assert_eq!(a, b);
        cfg.workers = 3;
        let (c, _) = train_adapter(&[ds], &base, &cfg).unwrap();
        assert_eq!(a.w, c.w);
        assert!(ra.epoch_losses.iter().all(|l| l.is_finite() && *l >= 0.0));
        assert!(ra.epoch_losses.last() < ra.epoch_losses.first());
    }

    #[test]
    fn mixed_mode_runs_and_weights_validated() {
        let (base, ds) = toy();
        let mut cfg = RunConfig::default();
        cfg.batch_mode = BatchMode::Mixed;
        cfg.batch_size = 3;
        train_adapter(&[ds.clone(), ds.clone()], &base, &cfg).unwrap();
        let mut cfg = RunConfig::default();
        cfg.dataset_weights = vec![1.0, 2.0];
        assert!(train_adapter(&[ds], &base, &cfg).is_err());
    }

    #[test]
    fn unknown_item_and_empty_dataset() {
        let (base, _) = toy();
        let ds = PairDataset::new(
            Provenance::FullRange,
            Split::Train,
            None,
            vec![PairRecord { i: 0, j: 9, y: 1.0, base_sim: None }],
        )
        .unwrap();
        assert!(matches!(train_adapter(&[ds], &base, &RunConfig::default()), Err(Error::UnknownItem(9))));
        let empty = PairDataset::new(Provenance::FullRange, Split::Train, None, vec![]).unwrap();
        assert!(train_adapter(&[empty], &base, &RunConfig::default()).is_err());
        assert!(train_adapter(&[], &base, &RunConfig::default()).is_err());
    }
}
