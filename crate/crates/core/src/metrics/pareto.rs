use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cluster_purity;
use crate::cluster::{cluster_count_fraction, community_detect};
use crate::embedding::EmbeddingSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub tau: f64,
    /// Cluster-count fraction, singletons included.
    pub x: f64,
    /// Purity.
    pub y: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParetoCurve {
    /// Raw scan points, sorted by x then tau.
    pub points: Vec<CurvePoint>,
    /// Distinct x ascending, y monotonized to the running maximum.
    pub envelope: Vec<(f64, f64)>,
    pub x_min: f64,
    pub x_max: f64,
}

impl ParetoCurve {
    pub fn from_points(mut points: Vec<CurvePoint>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::invalid("curve has no points"));
        }
        if let Some(p) = points.iter().find(|p| !(p.x > 0.0 && p.x <= 1.0) || !p.y.is_finite()) {
            return Err(Error::invalid(format!("curve point ({}, {}) out of range", p.x, p.y)));
        }
        points.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.tau.total_cmp(&b.tau)));
        let mut envelope: Vec<(f64, f64)> = Vec::new();
        for p in &points {
            match envelope.last_mut() {
                Some(last) if last.0 == p.x => last.1 = last.1.max(p.y),
                _ => envelope.push((p.x, p.y)),
            }
        }
        let mut running = f64::NEG_INFINITY;
        for e in &mut envelope {
            running = running.max(e.1);
            e.1 = running;
        }
        Ok(ParetoCurve {
            x_min: envelope[0].0,
            x_max: envelope[envelope.len() - 1].0,
            points,
            envelope,
        })
    }

    /// Envelope value at `x`, linearly interpolated; `None` outside the domain.
    pub fn envelope_at(&self, x: f64) -> Option<f64> {
        if x < self.x_min || x > self.x_max {
            return None;
        }
        let k = self.envelope.partition_point(|e| e.0 < x);
        let (x1, y1) = self.envelope[k];
        if x1 == x || k == 0 {
            return Some(y1);
        }
        let (x0, y0) = self.envelope[k - 1];
        Some(y0 + (y1 - y0) * (x - x0) / (x1 - x0))
    }

    pub fn on_envelope(&self, p: &CurvePoint) -> bool {
        self.envelope_at(p.x) == Some(p.y)
    }

    /// Raw trapezoidal area under the envelope over its own domain.
    pub fn aupc_raw(&self) -> f64 {
        (self.x_max - self.x_min) - deficit(&self.envelope)
    }
}

/// Area between the envelope and the line y = 1. Integrating the deficit
/// rather than the curve makes a constant-1 curve score exactly 1.
fn deficit(env: &[(f64, f64)]) -> f64 {
    env.windows(2)
        .map(|w| (w[1].0 - w[0].0) * ((1.0 - w[0].1) + (1.0 - w[1].1)) / 2.0)
        .sum()
}

/// Trapezoidal area under the envelope divided by its domain width.
pub fn aupc(curve: &ParetoCurve) -> Result<f64> {
    if curve.envelope.len() < 2 {
        return Err(Error::invalid("AUPC needs at least 2 distinct curve points"));
    }
    let width = curve.x_max - curve.x_min;
    Ok(1.0 - deficit(&curve.envelope) / width)
}

/// Normalized AUPC restricted to `[lo, hi]`, which must lie inside the
/// curve's domain. Used to compare curves on a shared domain.
pub fn aupc_on_domain(curve: &ParetoCurve, lo: f64, hi: f64) -> Result<f64> {
    if !(lo < hi) {
        return Err(Error::invalid(format!("empty domain [{lo}, {hi}]")));
    }
    let (Some(y_lo), Some(y_hi)) = (curve.envelope_at(lo), curve.envelope_at(hi)) else {
        return Err(Error::invalid(format!(
            "domain [{lo}, {hi}] outside curve domain [{}, {}]",
            curve.x_min, curve.x_max
        )));
    };
    let mut env = vec![(lo, y_lo)];
    env.extend(curve.envelope.iter().copied().filter(|e| e.0 > lo && e.0 < hi));
    env.push((hi, y_hi));
    Ok(1.0 - deficit(&env) / (hi - lo))
}

/// Clusters at every threshold in `taus` and records (cluster fraction,
/// purity) per threshold. `labels` is indexed by item id.
pub fn pareto_scan(
    emb: &EmbeddingSet,
    labels: &[Option<String>],
    taus: &[f64],
    min_cluster_size: usize,
    include_singletons: bool,
) -> Result<ParetoCurve> {
    let n = emb.len();
    let points = taus
        .par_iter()
        .map(|&tau| {
            let result = community_detect(emb, tau, min_cluster_size)?;
            Ok(CurvePoint {
                tau,
                x: cluster_count_fraction(&result, n),
                y: cluster_purity(&result, labels, include_singletons)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    ParetoCurve::from_points(points)
}

/// Columns `tau,cluster_fraction,purity,on_envelope`.
pub fn write_curve_csv(curve: &ParetoCurve, path: &Path) -> Result<()> {
    let mut out = String::from("tau,cluster_fraction,purity,on_envelope\n");
    for p in &curve.points {
        out.push_str(&format!("{},{},{},{}\n", p.tau, p.x, p.y, curve.on_envelope(p)));
    }
    write_file(path, &out)
}

/// Columns `aupc_normalized,aupc_raw,x_min,x_max`, one data row.
pub fn write_summary_csv(curve: &ParetoCurve, path: &Path) -> Result<()> {
    let norm = aupc(curve).unwrap_or(f64::NAN);
    let out = format!(
        "aupc_normalized,aupc_raw,x_min,x_max\n{},{},{},{}\n",
        norm,
        curve.aupc_raw(),
        curve.x_min,
        curve.x_max
    );
    write_file(path, &out)
}

fn write_file(path: &Path, content: &str) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(content.as_bytes()).map_err(|e| Error::io(path, e))
}
