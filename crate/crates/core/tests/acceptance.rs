//! Acceptance suite. Each criterion prints one PASS/FAIL line; the process
//! exits non-zero if any criterion fails.

mod common;

use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpListener;
use std::path::Path;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::time::{Duration, Instant};

use common::*;
use finetopic_core::corpus::load_corpus;
use finetopic_core::distill::{cosent_gradient, encode_student, AdapterParams, TrainPair};
use finetopic_core::embedding::dot;
use finetopic_core::metrics::{
    aupc, aupc_on_domain, auc_from_scores, cluster_purity, pair_scores, pairwise_auc, pareto_scan,
    tune_threshold_f1, tune_threshold_scores, CurvePoint, ParetoCurve,
};
use finetopic_core::pipeline::run::paths;
use finetopic_core::pipeline::{
    cmd_gen_synthetic, generate, run_with_config, ClusterScope, EvalMetrics, PipelineConfig, SampleFile,
    SyntheticSpec,
};
use finetopic_core::rng::stream;
use finetopic_core::sampling::{build_embedding_dataset, sample_range_bound};
use finetopic_core::teacher::{HttpTeacher, HttpTeacherConfig, ItemRef, OracleTeacher, RetryPolicy, Teacher};
use finetopic_core::{community_detect, EmbeddingSet, PairDataset, PairRecord, Provenance, Split};
use rand::Rng;

type Outcome = Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within_time(start: Instant, limit: Duration) -> Result<(), String> {
    let took = start.elapsed();
    check(took < limit, || format!("took {took:.2?}, limit {limit:?}"))
}

// ---------------------------------------------------------------- criterion 1

fn gradient_matches_finite_differences() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(101);
    let rtol = 1e-4;
    let mut worst = 0.0f64;
    for inst in 0..100 {
        let dim = rng.random_range(2..=8);
        let n = rng.random_range(2..=16);
        let us: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut rng, dim)).collect();
        let vs: Vec<Vec<f64>> = (0..n).map(|_| random_unit(&mut rng, dim)).collect();
        let binary = inst % 2 == 0;
        let ys: Vec<f64> = (0..n)
            .map(|_| if binary { rng.random_range(0..2) as f64 } else { rng.random_range(-1.0..1.0) })
            .collect();
        let batch: Vec<TrainPair<'_>> = (0..n).map(|k| TrainPair { u: &us[k], v: &vs[k], y: ys[k] }).collect();
        let mut params = AdapterParams::identity(dim);
        if inst % 4 != 0 {
            params.w.iter_mut().for_each(|w| *w = rng.random_range(-0.3..0.3));
        }
        let analytic = cosent_gradient(&batch, &params, 20.0).map_err(|e| e.to_string())?;
        let numeric = finite_difference_gradient(&batch, &params, 20.0, 1e-4);
        for (k, (a, f)) in analytic.iter().zip(&numeric).enumerate() {
            let scale = a.abs().max(f.abs());
            if scale < 1e-9 {
                // both vanish, e.g. a batch whose labels are all equal
                continue;
            }
            let rel = (a - f).abs() / scale;
            worst = worst.max(rel);
            if rel > rtol {
                return Err(format!("instance {inst} entry {k}: analytic {a} vs numeric {f} (rel {rel:.2e})"));
            }
        }
    }
    within_time(start, Duration::from_secs(10))?;
    Ok(format!("100 instances, worst relative error {worst:.2e}, {:.2?}", start.elapsed()))
}

// ---------------------------------------------------------------- criterion 2

fn oracle_equivalences() -> Outcome {
    let start = Instant::now();
    let mut rng = rng(202);

    for set in 0..200 {
        let n = rng.random_range(2..=300);
        let p = rng.random_range(0.1..0.9);
        let labels = two_class_labels(&mut rng, n, p);
        let scores = if set % 2 == 0 {
            tied_scores(&mut rng, n, 20)
        } else {
            (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()
        };
        let got = auc_from_scores(&scores, &labels).map_err(|e| e.to_string())?;
        let want = brute_force_auc(&scores, &labels);
        check((got - want).abs() <= 1e-12, || format!("AUC set {set}: {got} vs brute force {want}"))?;
    }
    // the embedding path goes through pairwise_auc itself
    for set in 0..20 {
        let emb = clustered_embeddings(&mut rng, 40, 4, 3, 0.4);
        let ids = emb.item_ids().to_vec();
        let mut records = Vec::new();
        let mut seen = std::collections::HashSet::new();
        while records.len() < 60 {
            let (a, b) = (ids[rng.random_range(0..40)], ids[rng.random_range(0..40)]);
            if a != b && seen.insert((a.min(b), a.max(b))) {
                records.push(PairRecord { i: a, j: b, y: (records.len() % 3 == 0) as u8 as f64, base_sim: None });
            }
        }
        let ds = PairDataset::new(Provenance::FullRange, Split::Test, None, records).map_err(|e| e.to_string())?;
        let got = pairwise_auc(&emb, &ds).map_err(|e| e.to_string())?;
        let scores = pair_scores(&emb, &ds).map_err(|e| e.to_string())?;
        let labels: Vec<bool> = ds.records.iter().map(|r| r.y == 1.0).collect();
        let want = brute_force_auc(&scores, &labels);
        check((got - want).abs() <= 1e-12, || format!("pairwise AUC set {set}: {got} vs {want}"))?;
    }

    for case in 0..200 {
        let n = rng.random_range(2..=120);
        let centers = rng.random_range(1..=6);
        let emb = clustered_embeddings(&mut rng, n, 6, centers, 0.35);
        let classes = rng.random_range(1..=5);
        let labels = random_labels(&mut rng, &emb, classes);
        let tau = rng.random_range(0.2..0.95);
        let result = community_detect(&emb, tau, rng.random_range(2..=4)).map_err(|e| e.to_string())?;
        for include in [true, false] {
            let got = cluster_purity(&result, &labels, include).map_err(|e| e.to_string())?;
            let want = hand_purity(&result, &labels, include);
            check(got == want, || format!("purity case {case} (singletons {include}): {got} vs {want}"))?;
        }
    }

    let mut instances = 0;
    for inst in 0..60 {
        let n = if inst == 0 { 200 } else { rng.random_range(1..=200) };
        let dim = rng.random_range(3..=12);
        let (centers, spread) = (rng.random_range(1..=10), rng.random_range(0.1..0.6));
        let emb = clustered_embeddings(&mut rng, n, dim, centers, spread);
        let min_size = rng.random_range(2..=5);
        for tau in [0.3, 0.5, 0.7, 0.9] {
            let got = community_detect(&emb, tau, min_size).map_err(|e| e.to_string())?;
            let want = reference_community_detect(&emb, tau, min_size);
            check(got == want, || format!("community detection instance {inst} (n {n}, tau {tau}) differs"))?;
            instances += 1;
        }
    }

    within_time(start, Duration::from_secs(60))?;
    Ok(format!(
        "200 AUC sets, 200 clusterings, {instances} detection instances, {:.2?}",
        start.elapsed()
    ))
}

// ---------------------------------------------------------------- criterion 3

fn identity_adapter_is_exact() -> Outcome {
    let inst = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let student = encode_student(&AdapterParams::identity(inst.base.dim()), &inst.base).map_err(|e| e.to_string())?;
    check(student.as_slice() == inst.base.as_slice(), || "student rows differ from base rows".into())?;

    let mut rng = rng(303);
    let n = inst.base.len();
    for set in 0..20 {
        let mut records = Vec::new();
        let mut seen = std::collections::HashSet::new();
        while records.len() < 300 {
            let (a, b) = (rng.random_range(0..n), rng.random_range(0..n));
            if a != b && seen.insert((a.min(b), a.max(b))) {
                let y = (inst.oracle.hidden_labels[a] == inst.oracle.hidden_labels[b]) as u8 as f64;
                records.push(PairRecord { i: a, j: b, y, base_sim: None });
            }
        }
        let ds = PairDataset::new(Provenance::FullRange, Split::Test, None, records).map_err(|e| e.to_string())?;
        let sb = pair_scores(&inst.base, &ds).map_err(|e| e.to_string())?;
        let ss = pair_scores(&student, &ds).map_err(|e| e.to_string())?;
        check(sb.iter().zip(&ss).all(|(a, b)| a.to_bits() == b.to_bits()), || {
            format!("set {set}: cosines differ")
        })?;
        let ab = pairwise_auc(&inst.base, &ds).map_err(|e| e.to_string())?;
        let as_ = pairwise_auc(&student, &ds).map_err(|e| e.to_string())?;
        check(ab.to_bits() == as_.to_bits(), || format!("set {set}: AUC {ab} vs {as_}"))?;
    }
    Ok("identity student reproduces base rows, cosines and AUC bit-for-bit on 20 pair sets".into())
}

// ------------------------------------------------------------ criteria 4 and 5

struct SeedRuns {
    seed: u64,
    rb: EvalMetrics,
    aupc_untrained: f64,
    aupc_rb: f64,
    aupc_emb_rb: f64,
}

fn trend_config(data: &Path, emb_items: usize) -> Result<PipelineConfig, String> {
    let mut cfg = PipelineConfig::load(&data.join("pipeline.toml")).map_err(|e| e.to_string())?;
    cfg.sampling.emb_items = emb_items;
    cfg.sampling.rb_train = 1000;
    cfg.sampling.cluster_scope = ClusterScope::HeldOut;
    cfg.params.workers = 1;
    Ok(cfg)
}

fn held_out_curve(emb: &EmbeddingSet, held_out: &[usize], labels: &[Option<String>], cfg: &PipelineConfig) -> Result<ParetoCurve, String> {
    let sub = emb.subset(held_out).map_err(|e| e.to_string())?;
    let p = &cfg.params;
    pareto_scan(&sub, labels, &p.tau_grid.values(), p.min_cluster_size, p.include_singletons).map_err(|e| e.to_string())
}

/// Trains RB-only (and, when `with_emb`, Emb&RB) adapters on one seed and
/// scores them on the held-out items.
fn seed_runs(seed: u64, root: &Path, with_emb: bool) -> Result<SeedRuns, String> {
    let data = root.join(format!("data{seed}"));
    let spec = SyntheticSpec { seed, ..SyntheticSpec::default() };
    cmd_gen_synthetic(&spec, &data).map_err(|e| e.to_string())?;

    let rb_cfg = trend_config(&data, 0)?;
    let rb_dir = root.join(format!("rb{seed}"));
    let rb = run_with_config(&rb_cfg, &rb_dir).map_err(|e| e.to_string())?.metrics;
    if !with_emb {
        return Ok(SeedRuns { seed, rb, aupc_untrained: f64::NAN, aupc_rb: f64::NAN, aupc_emb_rb: f64::NAN });
    }
    let both_cfg = trend_config(&data, 80)?;
    let both_dir = root.join(format!("emb_rb{seed}"));
    run_with_config(&both_cfg, &both_dir).map_err(|e| e.to_string())?;

    let sample = SampleFile::load(&rb_dir.join(paths::SAMPLE)).map_err(|e| e.to_string())?;
    let sample_b = SampleFile::load(&both_dir.join(paths::SAMPLE)).map_err(|e| e.to_string())?;
    check(sample.held_out_items == sample_b.held_out_items, || "runs disagree on held-out items".into())?;
    let labels = load_corpus(&data.join("corpus.jsonl")).map_err(|e| e.to_string())?.gold_labels();
    let load = |p: &Path| EmbeddingSet::load(p).map_err(|e| e.to_string());
    let curves = [
        held_out_curve(&load(&data.join("base.prsm"))?, &sample.held_out_items, &labels, &rb_cfg)?,
        held_out_curve(&load(&rb_dir.join(paths::STUDENT))?, &sample.held_out_items, &labels, &rb_cfg)?,
        held_out_curve(&load(&both_dir.join(paths::STUDENT))?, &sample.held_out_items, &labels, &both_cfg)?,
    ];
    let lo = curves.iter().map(|c| c.x_min).fold(f64::NEG_INFINITY, f64::max);
    let hi = curves.iter().map(|c| c.x_max).fold(f64::INFINITY, f64::min);
    let shared = |c: &ParetoCurve| aupc_on_domain(c, lo, hi).map_err(|e| e.to_string());
    Ok(SeedRuns {
        seed,
        rb,
        aupc_untrained: shared(&curves[0])?,
        aupc_rb: shared(&curves[1])?,
        aupc_emb_rb: shared(&curves[2])?,
    })
}

fn single_threaded<T: Send>(f: impl FnOnce() -> T + Send) -> T {
    rayon::ThreadPoolBuilder::new().num_threads(1).build().expect("thread pool").install(f)
}

fn distillation_trend(root: &Path) -> Outcome {
    let start = Instant::now();
    let runs = single_threaded(|| (1..=3).map(|s| seed_runs(s, &root.join("c4"), false)).collect::<Result<Vec<_>, _>>())?;
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for r in &runs {
        let (base, student) = (r.rb.auc_base_test.unwrap_or(f64::NAN), r.rb.auc_student_test.unwrap_or(f64::NAN));
        let gain = student - base;
        parts.push(format!("seed {}: {base:.4} -> {student:.4} (+{gain:.4})", r.seed));
        if !(gain >= 0.05) {
            failures.push(r.seed);
        }
    }
    let took = start.elapsed();
    let detail = format!("{}; {took:.2?}", parts.join(", "));
    if !failures.is_empty() {
        return Err(format!("gain below 0.05 for seeds {failures:?}: {detail}"));
    }
    within_time(start, Duration::from_secs(300)).map_err(|e| format!("{e}: {detail}"))?;
    Ok(detail)
}

fn precision_trend(root: &Path) -> Outcome {
    let start = Instant::now();
    let runs = (1..=3).map(|s| seed_runs(s, &root.join("c5"), true)).collect::<Result<Vec<_>, _>>()?;
    let mut parts = Vec::new();
    let mut failures = Vec::new();
    for r in &runs {
        parts.push(format!(
            "seed {}: untrained {:.4}, RB {:.4}, Emb&RB {:.4}",
            r.seed, r.aupc_untrained, r.aupc_rb, r.aupc_emb_rb
        ));
        if !(r.aupc_emb_rb >= r.aupc_rb - 0.01 && r.aupc_rb >= r.aupc_untrained + 0.02) {
            failures.push(r.seed);
        }
    }
    let detail = format!("{}; {:.2?}", parts.join(", "), start.elapsed());
    if failures.is_empty() {
        Ok(detail)
    } else {
        Err(format!("ordering violated for seeds {failures:?}: {detail}"))
    }
}

// ---------------------------------------------------------------- criterion 6

fn threshold_tuning_is_optimal() -> Outcome {
    let mut rng = rng(606);
    for set in 0..100 {
        let n = rng.random_range(2..=200);
        let (scores, labels, got) = if set % 2 == 0 {
            let (levels, p) = (rng.random_range(2..=30), rng.random_range(0.05..0.95));
            let scores = tied_scores(&mut rng, n, levels);
            let labels = two_class_labels(&mut rng, n, p);
            let got = tune_threshold_scores(&scores, &labels).map_err(|e| e.to_string())?;
            (scores, labels, got)
        } else {
            let emb = clustered_embeddings(&mut rng, 60, 5, 4, 0.5);
            let ids = emb.item_ids().to_vec();
            let mut records = Vec::new();
            let mut seen = std::collections::HashSet::new();
            while records.len() < n.max(4) {
                let (a, b) = (ids[rng.random_range(0..60)], ids[rng.random_range(0..60)]);
                if a != b && seen.insert((a.min(b), a.max(b))) {
                    let y = (records.len() % 2 == 0 || rng.random_bool(0.3)) as u8 as f64;
                    records.push(PairRecord { i: a, j: b, y, base_sim: None });
                }
            }
            let ds = PairDataset::new(Provenance::FullRange, Split::Val, None, records).map_err(|e| e.to_string())?;
            let got = tune_threshold_f1(&emb, &ds).map_err(|e| e.to_string())?;
            let scores = pair_scores(&emb, &ds).map_err(|e| e.to_string())?;
            let labels = ds.records.iter().map(|r| r.y == 1.0).collect();
            (scores, labels, got)
        };
        let want = exhaustive_best_f1(&scores, &labels);
        check(got.f1 == want, || format!("set {set}: tuned F1 {} vs exhaustive {want}", got.f1))?;
    }
    Ok("100 labeled sets, tuned F1 equals the exhaustive maximum exactly".into())
}

// ---------------------------------------------------------------- criterion 7

fn pareto_endpoint() -> Outcome {
    let inst = generate(&SyntheticSpec::default()).map_err(|e| e.to_string())?;
    let n = inst.base.len();
    let mut max_cos = f64::NEG_INFINITY;
    for a in 0..n {
        for b in a + 1..n {
            max_cos = max_cos.max(dot(inst.base.row(a), inst.base.row(b)));
        }
    }
    let taus: Vec<f64> = (0..=100).map(|k| k as f64 / 100.0).collect();
    check(taus.iter().any(|&t| t > max_cos), || format!("grid never exceeds max cosine {max_cos}"))?;
    let labels = inst.corpus.gold_labels();
    let curve = pareto_scan(&inst.base, &labels, &taus, 2, true).map_err(|e| e.to_string())?;
    check(curve.points.iter().any(|p| p.x == 1.0 && p.y == 1.0), || "no raw point at (1, 1)".into())?;
    check(curve.envelope.last() == Some(&(1.0, 1.0)), || format!("envelope ends at {:?}", curve.envelope.last()))?;

    let xs = [0.0123, 0.1, 0.2, 0.3, 0.37, 0.55, 0.7, 0.91, 1.0];
    let flat = ParetoCurve::from_points(xs.iter().enumerate().map(|(k, &x)| CurvePoint { tau: k as f64, x, y: 1.0 }).collect())
        .map_err(|e| e.to_string())?;
    let a = aupc(&flat).map_err(|e| e.to_string())?;
    check(a == 1.0, || format!("constant-1 AUPC {a:?}"))?;
    let a = aupc_on_domain(&flat, 0.05, 0.95).map_err(|e| e.to_string())?;
    check(a == 1.0, || format!("constant-1 AUPC on a subdomain {a:?}"))?;
    Ok(format!("max base cosine {max_cos:.4}; curve ends at (1, 1); constant-1 AUPC = 1.0"))
}

// ---------------------------------------------------------------- criterion 8

fn dataset_sizes() -> Outcome {
    let spec = SyntheticSpec { per_topic: 63, ..SyntheticSpec::default() };
    let inst = generate(&spec).map_err(|e| e.to_string())?;
    let teacher = Teacher::new(Box::new(OracleTeacher::new(inst.oracle.clone()).map_err(|e| e.to_string())?), None)
        .map_err(|e| e.to_string())?;
    let ids = inst.corpus.ids();
    let mut sizes = Vec::new();
    for (n, want) in [(500usize, 249_500usize), (20, 380)] {
        let mut r = stream(8, "acceptance-emb", &[n as u64]);
        let (ds, _) = build_embedding_dataset(&ids, &inst.corpus, n, &teacher, &mut r).map_err(|e| e.to_string())?;
        check(ds.len() == want, || format!("n={n}: {} records, want {want}", ds.len()))?;
        sizes.push(ds.len());
    }

    let band = (0.65, 0.95);
    let mut r = stream(8, "acceptance-rb", &[]);
    let pairs = sample_range_bound(&ids, &inst.base, 1000, band, &mut r, 1_000_000).map_err(|e| e.to_string())?;
    check(pairs.len() == 1000, || format!("RB sampler returned {} pairs", pairs.len()))?;
    for p in &pairs {
        let c = inst.base.cosine(p.i, p.j).map_err(|e| e.to_string())?;
        check(c >= band.0 - 1e-6 && c <= band.1 + 1e-6, || format!("pair ({}, {}) cosine {c} out of band", p.i, p.j))?;
        check(p.base_sim.is_some_and(|s| (s - c).abs() <= 1e-6), || format!("pair ({}, {}) recorded cosine disagrees", p.i, p.j))?;
    }
    Ok(format!("Emb sizes {sizes:?}; 1000/1000 RB pairs in band"))
}

// ---------------------------------------------------------------- criterion 9

fn reproducible_runs(root: &Path) -> Outcome {
    let mut files = Vec::new();
    for run in 0..2 {
        let data = root.join(format!("c9/data{run}"));
        cmd_gen_synthetic(&SyntheticSpec { seed: 17, ..SyntheticSpec::default() }, &data).map_err(|e| e.to_string())?;
        let cfg = PipelineConfig::load(&data.join("pipeline.toml")).map_err(|e| e.to_string())?;
        let dir = root.join(format!("c9/run{run}"));
        run_with_config(&cfg, &dir).map_err(|e| e.to_string())?;
        let read = |rel: &str| std::fs::read(dir.join(rel)).map_err(|e| format!("{rel}: {e}"));
        files.push([read(paths::ADAPTER)?, read(paths::CLUSTERS)?, read(paths::METRICS)?]);
    }
    for (k, name) in [paths::ADAPTER, paths::CLUSTERS, paths::METRICS].iter().enumerate() {
        check(files[0][k] == files[1][k], || format!("{name} differs between runs"))?;
    }
    Ok("adapter, cluster file and metrics identical across two runs".into())
}

// --------------------------------------------------------------- criterion 10

/// Minimal OpenAI-compatible endpoint. Comparison answers are looked up by
/// the first text of the pair, `"left {k}"`; embeddings are fixed vectors.
struct MockServer {
    port: u16,
    hits: Arc<AtomicUsize>,
}

fn read_request(stream: &mut std::net::TcpStream) -> Option<(String, String)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut request_line = String::new();
    reader.read_line(&mut request_line).ok()?;
    let path = request_line.split_whitespace().nth(1)?.to_string();
    let mut length = 0;
    loop {
        let mut line = String::new();
        if reader.read_line(&mut line).ok()? == 0 {
            return None;
        }
        let line = line.trim_end();
        if line.is_empty() {
            break;
        }
        if let Some((k, v)) = line.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                length = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; length];
    reader.read_exact(&mut body).ok()?;
    Some((path, String::from_utf8(body).ok()?))
}

fn start_mock(answers: Vec<&'static str>) -> MockServer {
    let listener = TcpListener::bind("127.0.0.1:0").expect("bind");
    let port = listener.local_addr().unwrap().port();
    let hits = Arc::new(AtomicUsize::new(0));
    let counter = hits.clone();
    std::thread::spawn(move || {
        for conn in listener.incoming() {
            let Ok(mut conn) = conn else { continue };
            let Some((path, body)) = read_request(&mut conn) else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            let req: serde_json::Value = serde_json::from_str(&body).unwrap_or_default();
            let reply = if path.ends_with("/chat/completions") {
                let prompt = req["messages"][0]["content"].as_str().unwrap_or_default();
                let k = (0..answers.len()).find(|k| prompt.contains(&format!("left {k} and"))).unwrap_or(0);
                serde_json::json!({ "choices": [{ "message": { "role": "assistant", "content": answers[k] } }] })
            } else {
                let n = req["input"].as_array().map_or(0, Vec::len);
                let data: Vec<_> = (0..n)
                    .map(|i| serde_json::json!({ "index": i, "embedding": [1.0, i as f64, 0.5] }))
                    .collect();
                serde_json::json!({ "data": data })
            }
            .to_string();
            let _ = write!(
                conn,
                "HTTP/1.1 200 OK\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{reply}",
                reply.len()
            );
        }
    });
    MockServer { port, hits }
}

fn teacher_contract(root: &Path) -> Outcome {
    let answers = vec!["Yes.", "yes", "YES indeed", "No", "Not at all", "yesterday"];
    let expected = [1u8, 1, 1, 0, 0, 0];
    let server = start_mock(answers);
    let cfg = HttpTeacherConfig {
        base_url: format!("http://127.0.0.1:{}/v1", server.port),
        api_key_env: "FINETOPIC_ACCEPTANCE_UNSET_KEY".into(),
        max_in_flight: 2,
        retry: RetryPolicy { max_retries: 1, backoff_base_ms: 10, backoff_cap_ms: 10 },
        timeout_secs: 10,
        ..HttpTeacherConfig::default()
    };
    let cache = root.join("c10/cache");
    let left: Vec<String> = (0..expected.len()).map(|k| format!("left {k}")).collect();
    let right: Vec<String> = (0..expected.len()).map(|k| format!("right {k}")).collect();
    let pairs: Vec<(ItemRef<'_>, ItemRef<'_>)> = (0..expected.len())
        .map(|k| (ItemRef { id: 2 * k, text: &left[k] }, ItemRef { id: 2 * k + 1, text: &right[k] }))
        .collect();
    let items: Vec<ItemRef<'_>> = pairs.iter().map(|p| p.0).collect();

    let cold = Teacher::new(Box::new(HttpTeacher::new(cfg.clone()).map_err(|e| e.to_string())?), Some(cache.clone()))
        .map_err(|e| e.to_string())?;
    let labels = cold.compare_all(&pairs).map_err(|e| e.to_string())?;
    check(labels == expected, || format!("parsed {labels:?}, want {expected:?}"))?;
    let vectors = cold.embed_batch(&items).map_err(|e| e.to_string())?;
    let cold_hits = server.hits.load(Ordering::SeqCst);
    check(cold_hits == expected.len() + 1, || format!("cold run made {cold_hits} calls"))?;

    let warm = Teacher::new(Box::new(HttpTeacher::new(cfg).map_err(|e| e.to_string())?), Some(cache))
        .map_err(|e| e.to_string())?;
    let again = warm.compare_all(&pairs).map_err(|e| e.to_string())?;
    let vectors_again = warm.embed_batch(&items).map_err(|e| e.to_string())?;
    check(again == labels && vectors_again == vectors, || "warm cache returned different answers".into())?;
    let warm_calls = server.hits.load(Ordering::SeqCst) - cold_hits;
    check(warm_calls == 0 && warm.requests() == 0, || format!("warm run made {warm_calls} calls"))?;
    Ok(format!("labels {labels:?}; cold run {cold_hits} calls, warm run 0"))
}

fn main() {
    let dir = tempfile::tempdir().expect("temp dir");
    let root = dir.path();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome>)> = vec![
        ("gradient matches finite differences", Box::new(gradient_matches_finite_differences)),
        ("oracle equivalences", Box::new(oracle_equivalences)),
        ("identity adapter at init", Box::new(identity_adapter_is_exact)),
        ("distillation raises held-out AUC", Box::new(|| distillation_trend(root))),
        ("AUPC ordering Emb&RB >= RB >= untrained", Box::new(|| precision_trend(root))),
        ("threshold tuning optimality", Box::new(threshold_tuning_is_optimal)),
        ("Pareto endpoint and constant-1 AUPC", Box::new(pareto_endpoint)),
        ("dataset size formulas and RB band", Box::new(dataset_sizes)),
        ("end-to-end reproducibility", Box::new(|| reproducible_runs(root))),
        ("teacher client contract", Box::new(|| teacher_contract(root))),
    ];
    let mut failed = 0;
    for (k, (name, run)) in criteria.iter().enumerate() {
        match run() {
            Ok(detail) => println!("PASS criterion {:>2}: {name} ({detail})", k + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL criterion {:>2}: {name} ({why})", k + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
