//! CoSENT ranking loss and its analytic gradient through the adapter.
//!
//! For student cosines `s` and labels `y` over a batch,
//!
//! ```text
//! L = log(1 + sum_{(p,q): y_p < y_q} exp(scale * (s_p - s_q)))
//! ```
//!
//! Only the ordering of `y` matters; pairs with equal labels contribute nothing.

use rayon::prelude::*;

use super::AdapterParams;
use crate::error::{Error, Result};

/// Pairs per gradient chunk. Chunk sums are reduced in index order, so the
/// result does not depend on how many workers compute them.
const CHUNK: usize = 16;

#[derive(Debug, Clone, Copy)]
pub struct TrainPair<'a> {
    pub u: &'a [f64],
    pub v: &'a [f64],
    pub y: f64,
}

/// Returns the loss and `dL/ds` for every pair.
pub fn cosent_loss_and_sim_grads(sims: &[f64], labels: &[f64], scale: f64) -> Result<(f64, Vec<f64>)> {
    if sims.len() != labels.len() {
        return Err(Error::invalid("sims and labels differ in length"));
    }
    if sims.len() < 2 {
        return Err(Error::invalid("CoSENT needs at least 2 pairs"));
    }
    if !(scale > 0.0) {
        return Err(Error::invalid("CoSENT scale must be positive"));
    }
    if let Some(index) = sims.iter().position(|s| !s.is_finite()) {
        return Err(Error::InvalidRecord {
            index,
            reason: "non-finite similarity".into(),
        });
    }
    if let Some(index) = labels.iter().position(|y| !y.is_finite()) {
        return Err(Error::InvalidRecord {
            index,
            reason: "non-finite label".into(),
        });
    }

    let n = sims.len();
    let mut max_term = 0.0f64;
    for p in 0..n {
        for q in 0..n {
            if labels[p] < labels[q] {
                max_term = max_term.max(scale * (sims[p] - sims[q]));
            }
        }
    }
    let mut total = 0.0;
    for p in 0..n {
        for q in 0..n {
            if labels[p] < labels[q] {
                total += (scale * (sims[p] - sims[q]) - max_term).exp();
            }
        }
    }
    let loss = if max_term == 0.0 {
        total.ln_1p()
    } else {
        max_term + ((-max_term).exp() + total).ln()
    };

    let denom = (-max_term).exp() + total;
    let mut grads = vec![0.0; n];
    if total > 0.0 {
        for p in 0..n {
            for q in 0..n {
                if labels[p] < labels[q] {
                    let w = (scale * (sims[p] - sims[q]) - max_term).exp() / denom;
                    grads[p] += scale * w;
                    grads[q] -= scale * w;
                }
            }
        }
    }
    Ok((loss, grads))
}

pub fn cosent_loss(sims: &[f64], labels: &[f64], scale: f64) -> Result<f64> {
    cosent_loss_and_sim_grads(sims, labels, scale).map(|(l, _)| l)
}

/// `normalize(u + W u)` and the pre-normalization norm.
pub fn project(params: &AdapterParams, u: &[f64]) -> Result<(Vec<f64>, f64)> {
    let mut wu = vec![0.0; params.dim];
    params.apply_residual(u, &mut wu);
    let v: Vec<f64> = u.iter().zip(&wu).map(|(a, b)| a + b).collect();
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !norm.is_finite() || norm == 0.0 {
        return Err(Error::invalid("projection is zero or non-finite"));
    }
    Ok((v.into_iter().map(|x| x / norm).collect(), norm))
}

/// Batch loss and its gradient with respect to `W`.
pub(crate) fn loss_and_gradient(
    batch: &[TrainPair<'_>],
    params: &AdapterParams,
    scale: f64,
    parallel: bool,
) -> Result<(f64, Vec<f64>)> {
    let dim = params.dim;
    if batch.len() < 2 {
        return Err(Error::invalid("batch size must be at least 2"));
    }
    let mut projected = Vec::with_capacity(batch.len());
    let mut sims = Vec::with_capacity(batch.len());
    for (index, pair) in batch.iter().enumerate() {
        if pair.u.len() != dim || pair.v.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: pair.u.len().max(pair.v.len()),
            });
        }
        let bad = |_| Error::InvalidRecord {
            index,
            reason: "zero or non-finite projection".into(),
        };
        let (zu, nu) = project(params, pair.u).map_err(bad)?;
        let (zv, nv) = project(params, pair.v).map_err(bad)?;
        let s: f64 = zu.iter().zip(&zv).map(|(a, b)| a * b).sum();
        if !s.is_finite() {
            return Err(Error::InvalidRecord {
                index,
                reason: "non-finite similarity".into(),
            });
        }
        sims.push(s);
        projected.push((zu, nu, zv, nv));
    }
    let labels: Vec<f64> = batch.iter().map(|p| p.y).collect();
    let (loss, sim_grads) = cosent_loss_and_sim_grads(&sims, &labels, scale)?;

    let chunk_grad = |start: usize| -> Vec<f64> {
        let mut g = vec![0.0; dim * dim];
        let end = (start + CHUNK).min(batch.len());
        for k in start..end {
            let ds = sim_grads[k];
            if ds == 0.0 {
                continue;
            }
            let (zu, nu, zv, nv) = &projected[k];
            let s = sims[k];
            let pair = &batch[k];
            // d s / d a_u = (z_v - s z_u) / |a_u|, with a_u = u + W u
            for r in 0..dim {
                let gu = ds * (zv[r] - s * zu[r]) / nu;
                let gv = ds * (zu[r] - s * zv[r]) / nv;
                let row = &mut g[r * dim..(r + 1) * dim];
                for c in 0..dim {
                    row[c] += gu * pair.u[c] + gv * pair.v[c];
                }
            }
        }
        g
    };
    let starts: Vec<usize> = (0..batch.len()).step_by(CHUNK).collect();
    let partials: Vec<Vec<f64>> = if parallel {
        starts.par_iter().map(|&s| chunk_grad(s)).collect()
    } else {
        starts.iter().map(|&s| chunk_grad(s)).collect()
    };
    let mut grad = vec![0.0; dim * dim];
    for part in partials {
        for (g, p) in grad.iter_mut().zip(part) {
            *g += p;
        }
    }
    if let Some(k) = grad.iter().position(|g| !g.is_finite()) {
        return Err(Error::NonFinite { row: k / dim });
    }
    Ok((loss, grad))
}

/// Gradient `dL/dW` of the batch CoSENT loss, row-major `dim x dim`.
pub fn cosent_gradient(batch: &[TrainPair<'_>], params: &AdapterParams, scale: f64) -> Result<Vec<f64>> {
    loss_and_gradient(batch, params, scale, false).map(|(_, g)| g)
}

/// Batch loss of the student defined by `params`.
pub fn batch_loss(batch: &[TrainPair<'_>], params: &AdapterParams, scale: f64) -> Result<f64> {
    loss_and_gradient(batch, params, scale, false).map(|(l, _)| l)
}
