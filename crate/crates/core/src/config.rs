//! Training and clustering parameters shared by every stage.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// How records from several training datasets are grouped into batches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum BatchMode {
    /// Each dataset is batched on its own; the batches are then interleaved.
    #[default]
    Segregated,
    /// All datasets are concatenated and batched together.
    Mixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    /// Closed range-bound sampling band on base cosine.
    pub band: (f64, f64),
    /// CoSENT scale λ.
    pub cosent_scale: f64,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub batch_mode: BatchMode,
    /// Per-dataset loss multipliers (segregated mode only). Empty means 1.0 each.
    pub dataset_weights: Vec<f64>,
    /// Worker threads for the batch gradient. Results do not depend on it.
    pub workers: usize,
    /// Fixed clustering threshold; `None` selects it by F1 on validation pairs.
    pub tau: Option<f64>,
    pub min_cluster_size: usize,
    /// Threshold grid for the Pareto scan: `lo..=hi` in steps of `step`.
    pub tau_grid: TauGrid,
    /// Count singletons as correctly classified in purity.
    pub include_singletons: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TauGrid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Default for TauGrid {
    fn default() -> Self {
        TauGrid {
            lo: 0.0,
            hi: 1.0,
            step: 0.01,
        }
    }
}

impl TauGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0) || !self.step.is_finite() {
            return Err(Error::invalid("tau grid step must be positive"));
        }
        if !(self.lo > -1.0 && self.hi <= 1.0 && self.lo <= self.hi) {
            return Err(Error::invalid(format!(
                "tau grid [{}, {}] must lie within (-1, 1]",
                self.lo, self.hi
            )));
        }
        Ok(())
    }

    /// Grid values `lo + k*step`, computed from the integer index to avoid drift.
    pub fn values(&self) -> Vec<f64> {
        let n = ((self.hi - self.lo) / self.step + 1e-9).floor() as usize;
        (0..=n)
            .map(|k| {
                let v = self.lo + k as f64 * self.step;
                // snap to 12 decimals so 0.07 prints as 0.07
                (v * 1e12).round() / 1e12
            })
            .filter(|&v| v <= self.hi && v > -1.0)
            .collect()
    }
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            seed: 0,
            band: (0.65, 0.95),
            cosent_scale: 20.0,
            learning_rate: 1e-3,
            epochs: 5,
            batch_size: 64,
            batch_mode: BatchMode::Segregated,
            dataset_weights: Vec::new(),
            workers: 1,
            tau: None,
            min_cluster_size: 2,
            tau_grid: TauGrid::default(),
            include_singletons: true,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        let (lo, hi) = self.band;
        if !(lo < hi) || lo < -1.0 || hi > 1.0 {
            return Err(Error::invalid(format!("band [{lo}, {hi}] must satisfy -1 <= lo < hi <= 1")));
        }
        if !(self.cosent_scale > 0.0) {
            return Err(Error::invalid("cosent_scale must be positive"));
        }
        if !(self.learning_rate > 0.0) {
            return Err(Error::invalid("learning_rate must be positive"));
        }
        if self.batch_size < 2 {
            return Err(Error::invalid("batch_size must be at least 2"));
        }
        if self.workers == 0 {
            return Err(Error::invalid("workers must be at least 1"));
        }
        if self.dataset_weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
            return Err(Error::invalid("dataset weights must be finite and non-negative"));
        }
        if !self.dataset_weights.is_empty() && self.batch_mode == BatchMode::Mixed {
            return Err(Error::invalid("dataset weights require segregated batch mode"));
        }
        if let Some(t) = self.tau {
            if !(t > -1.0 && t <= 1.0) {
                return Err(Error::invalid(format!("tau {t} must lie in (-1, 1]")));
            }
        }
        if self.min_cluster_size < 2 {
            return Err(Error::invalid("min_cluster_size must be at least 2"));
        }
        self.tau_grid.validate()
    }

    /// Validation used by the trainer; zero epochs is allowed there so that
    /// size sweeps can include an untrained point.
    pub fn validate_for_run(&self) -> Result<()> {
        self.validate()?;
        if self.epochs < 1 {
            return Err(Error::invalid("epochs must be at least 1"));
        }
        Ok(())
    }
}
