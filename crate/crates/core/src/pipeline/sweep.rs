use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::config::{ClusterScope, PipelineConfig};
use super::run::{paths, read_json, Runner, SampleFile};
use crate::corpus::load_corpus;
use crate::distill::{encode_student, train_adapter, AdapterParams};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};
use crate::metrics::{aupc, pairwise_auc, pareto_scan};
use crate::pairs::PairDataset;
use crate::rng::stream;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub size: usize,
    pub auc: f64,
    pub aupc: Option<f64>,
}

/// Trains one student per size on prefixes of one fixed shuffle of the
/// binary training set (range-bound if present, else full-range), scoring
/// AUC on the validation pairs and AUPC on gold labels. Sampling and
/// labeling reuse the run directory's stages. Writes `metrics/sweep.csv`.
pub fn cmd_sweep_train_size(cfg: &PipelineConfig, run_dir: &Path, sizes: &[usize]) -> Result<Vec<SweepRow>> {
    cfg.validate()?;
    if sizes.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::invalid("sweep sizes must be ascending"));
    }
    if cfg.sampling.rb_val == 0 {
        return Err(Error::invalid("sweep needs validation pairs (rb_val > 0)"));
    }
    {
        let mut r = Runner::open(cfg, run_dir)?;
        r.run_sample()?;
        r.run_label()?;
    }
    let source = if cfg.sampling.rb_train > 0 {
        paths::RB_TRAIN
    } else if cfg.sampling.fr_train > 0 {
        paths::FR_TRAIN
    } else {
        return Err(Error::invalid("sweep needs a binary training set (rb_train or fr_train)"));
    };
    let full = PairDataset::load(&run_dir.join(source))?;
    if let Some(&s) = sizes.iter().find(|&&s| s > full.len()) {
        return Err(Error::invalid(format!("size {s} exceeds the {} available pairs", full.len())));
    }
    let mut records = full.records.clone();
    records.shuffle(&mut stream(cfg.params.seed, "sweep-order", &[]));

    let base = EmbeddingSet::load(&cfg.base_embeddings)?;
    let val = PairDataset::load(&run_dir.join(paths::RB_VAL))?;
    let corpus = load_corpus(&cfg.corpus)?;
    let labels = corpus.gold_labels();
    let scope = match cfg.sampling.cluster_scope {
        ClusterScope::All => corpus.ids(),
        ClusterScope::HeldOut => read_json::<SampleFile>(&run_dir.join(paths::SAMPLE))?.held_out_items,
    };
    let labeled = scope.iter().all(|&id| labels[id].is_some());
    let taus = cfg.params.tau_grid.values();

    let mut rows = Vec::with_capacity(sizes.len());
    for &size in sizes {
        let params = if size < 2 {
            AdapterParams::identity(base.dim())
        } else {
            let prefix = PairDataset::new(full.provenance, full.split, full.band, records[..size].to_vec())?;
            train_adapter(&[prefix], &base, &cfg.params)?.0
        };
        let student = encode_student(&params, &base)?;
        let auc = pairwise_auc(&student, &val)?;
        let aupc = if labeled {
            let curve = pareto_scan(
                &student.subset(&scope)?,
                &labels,
                &taus,
                cfg.params.min_cluster_size,
                cfg.params.include_singletons,
            )?;
            aupc(&curve).ok()
        } else {
            None
        };
        log::info!("sweep size {size}: auc {auc:.4}");
        rows.push(SweepRow { size, auc, aupc });
    }
    let mut csv = String::from("size,auc,aupc\n");
    for r in &rows {
        let aupc = r.aupc.map(|v| v.to_string()).unwrap_or_default();
        csv.push_str(&format!("{},{},{}\n", r.size, r.auc, aupc));
    }
    let out = run_dir.join(paths::SWEEP);
    std::fs::write(&out, csv).map_err(|e| Error::io(out, e))?;
    Ok(rows)
}
