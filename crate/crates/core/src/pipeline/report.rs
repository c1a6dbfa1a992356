use std::fmt::Write;
use std::path::Path;

use super::manifest::Manifest;
use super::run::{paths, read_json, EvalMetrics};
use crate::error::{Error, Result};

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "n/a".to_string(), |v| format!("{v:.4}"))
}

/// One-page summary of a completed run directory.
pub fn cmd_report(run_dir: &Path) -> Result<String> {
    let manifest = Manifest::load(run_dir)?.ok_or_else(|| Error::IncompleteRun {
        missing: super::manifest::STAGES.iter().map(|s| s.to_string()).collect(),
    })?;
    let mut missing = manifest.missing();
    for rec in &manifest.stages {
        if rec.outputs.keys().any(|rel| !run_dir.join(rel).exists()) && !missing.contains(&rec.name) {
            missing.push(rec.name.clone());
        }
    }
    if !missing.is_empty() {
        return Err(Error::IncompleteRun { missing });
    }
    let m: EvalMetrics = read_json(&run_dir.join(paths::METRICS))?;

    let mut s = String::new();
    let _ = writeln!(s, "Run report: {}", run_dir.display());
    if let Some(t) = &manifest.teacher {
        let _ = writeln!(s, "Teacher: {t}");
    }
    let _ = writeln!(s, "Seed: {}", manifest.seed);
    let _ = writeln!(s);
    let _ = writeln!(s, "Datasets");
    for d in &m.datasets {
        let _ = writeln!(
            s,
            "  {:<28} {:?}/{:?}  {} records",
            d.file, d.provenance, d.split, d.records
        );
    }
    let _ = writeln!(s);
    let how = if m.tau_manual { "manual" } else { "F1-tuned on validation pairs" };
    let _ = writeln!(s, "Threshold tau*: {:.4} ({how})", m.tau);
    let _ = writeln!(s, "F1 at tau* (validation): {}", opt(m.f1_val));
    let _ = writeln!(
        s,
        "Test AUC: base {}  student {}",
        opt(m.auc_base_test),
        opt(m.auc_student_test)
    );
    let _ = writeln!(
        s,
        "Clustering at tau*: {} clusters, {} singletons over {} items (fraction {:.4})",
        m.clusters, m.singletons, m.items_clustered, m.cluster_fraction
    );
    let _ = writeln!(s, "Purity at tau*: {}", opt(m.purity));
    let aupc = |a: &Option<super::run::AupcSummary>| {
        a.as_ref().map_or_else(
            || "n/a".to_string(),
            |a| format!("{:.4} (raw {:.4} over [{:.4}, {:.4}])", a.normalized, a.raw, a.x_min, a.x_max),
        )
    };
    let _ = writeln!(s, "AUPC student: {}", aupc(&m.aupc_student));
    let _ = writeln!(s, "AUPC base:    {}", aupc(&m.aupc_base));
    if let Some((lo, hi)) = m.shared_domain {
        let _ = writeln!(
            s,
            "AUPC on shared domain [{lo:.4}, {hi:.4}]: student {}  base {}",
            opt(m.aupc_student_shared),
            opt(m.aupc_base_shared)
        );
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Curves");
    for p in [paths::PARETO_STUDENT, paths::PARETO_BASE] {
        let _ = writeln!(s, "  {}", run_dir.join(p).display());
    }
    let _ = writeln!(s, "Stages");
    for rec in &manifest.stages {
        let _ = writeln!(s, "  {:<9} {}  (teacher requests: {})", rec.name, rec.status, rec.teacher_requests);
    }
    Ok(s)
}
