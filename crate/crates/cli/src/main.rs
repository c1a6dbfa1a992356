//! `finetopic` command-line front end.
//!
//! Exit codes: 0 success, 1 validation error, 2 teacher or transport error,
//! 3 incomplete run.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use finetopic_core::cluster::{community_detect, load_clusters, save_clusters};
use finetopic_core::config::{BatchMode, RunConfig, TauGrid};
use finetopic_core::corpus::load_corpus;
use finetopic_core::distill::{encode_student, train_adapter, AdapterParams};
use finetopic_core::metrics::{
    aupc, cluster_purity, pairwise_auc, pareto_scan, tune_threshold_f1, write_curve_csv, write_summary_csv,
};
use finetopic_core::pipeline::{
    cmd_gen_synthetic, cmd_report, cmd_run, cmd_sweep_train_size, draw_samples, label_samples, PipelineConfig,
    SampleFile, SyntheticSpec,
};
use finetopic_core::rng::stream;
use finetopic_core::sampling::build_embedding_dataset;
use finetopic_core::{cluster_count_fraction, EmbeddingSet, Error, PairDataset, Result};

#[derive(Parser)]
#[command(name = "finetopic", version, about = "Distill teacher supervision into an embedding adapter and discover fine-grained topics")]
struct Cli {
    /// Log verbosity (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus, base embeddings, oracle teacher, and starter config.
    GenSynthetic(GenArgs),
    /// Split items and draw unlabeled pair sets according to a pipeline config.
    Sample {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label a sample file with the configured teacher.
    Label {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        sample: PathBuf,
        /// Root directory; datasets go under `datasets/`.
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Build a teacher-embedding similarity dataset over n sampled items.
    BuildEmbDataset {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Also write the teacher embeddings of the sampled items.
        #[arg(long)]
        teacher_out: Option<PathBuf>,
    },
    /// Train an adapter on one or more pair datasets.
    Train(TrainArgs),
    /// Apply an adapter to base embeddings.
    Encode {
        #[arg(long)]
        adapter: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Cluster embeddings at a threshold.
    Cluster {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        tau: f64,
        #[arg(long, default_value_t = 2)]
        min_size: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Choose the F1-optimal threshold on a validation pair set.
    Tune {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: PathBuf,
    },
    /// Pairwise AUC on a pair set, and purity of a cluster file if given.
    Eval {
        #[arg(long)]
        embeddings: PathBuf,
        #[arg(long)]
        pairs: Option<PathBuf>,
        #[arg(long, requires = "corpus")]
        clusters: Option<PathBuf>,
        #[arg(long)]
        corpus: Option<PathBuf>,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        include_singletons: bool,
    },
    /// Scan thresholds and write the purity/cluster-fraction curve.
    Pareto(ParetoArgs),
    /// Train on growing prefixes of the training set and tabulate AUC and AUPC.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
        /// Comma-separated ascending sizes.
        #[arg(long, value_delimiter = ',', required = true)]
        sizes: Vec<usize>,
    },
    /// Run every stage end to end.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        run_dir: PathBuf,
    },
    /// Summarize a completed run directory.
    Report {
        #[arg(long)]
        run_dir: PathBuf,
    },
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 8)]
    topics: usize,
    #[arg(long, default_value_t = 50)]
    per_topic: usize,
    #[arg(long, default_value_t = 32)]
    dim: usize,
    #[arg(long, default_value_t = 0.5)]
    jitter: f64,
    #[arg(long, default_value_t = 0.5)]
    base_resolution: f64,
    #[arg(long, default_value_t = 0.0)]
    flip_rate: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    base: PathBuf,
    /// Pair dataset file; repeat for several.
    #[arg(long = "dataset", required = true)]
    datasets: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// TOML file with training parameters; flags below override it.
    #[arg(long)]
    params: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    mixed: bool,
    /// Write the training report (JSON) here.
    #[arg(long)]
    report: Option<PathBuf>,
}

#[derive(Args)]
struct ParetoArgs {
    #[arg(long)]
    embeddings: PathBuf,
    #[arg(long)]
    corpus: PathBuf,
    /// Output prefix; writes `<prefix>.csv` and `<prefix>_summary.csv`.
    #[arg(long)]
    out_prefix: PathBuf,
    #[arg(long, default_value_t = 0.0)]
    lo: f64,
    #[arg(long, default_value_t = 1.0)]
    hi: f64,
    #[arg(long, default_value_t = 0.01)]
    step: f64,
    #[arg(long, default_value_t = 2)]
    min_size: usize,
    #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
    include_singletons: bool,
}

fn print_json(value: serde_json::Value) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic(a) => {
            let spec = SyntheticSpec {
                topics: a.topics,
                per_topic: a.per_topic,
                dim: a.dim,
                jitter_sigma: a.jitter,
                base_resolution: a.base_resolution,
                flip_rate: a.flip_rate,
                seed: a.seed,
            };
            let inst = cmd_gen_synthetic(&spec, &a.out)?;
            println!("wrote {} items of dim {} to {}", inst.corpus.len(), spec.dim, a.out.display());
        }
        Command::Sample { config, out } => {
            let cfg = PipelineConfig::load(&config)?;
            let s = draw_samples(&cfg)?;
            s.save(&out)?;
            println!(
                "train items {}, held-out items {}, rb_train {}, fr_train {}, emb items {}, rb_val {}, rb_test {}",
                s.train_items.len(),
                s.held_out_items.len(),
                s.rb_train.len(),
                s.fr_train.len(),
                s.emb_items.len(),
                s.rb_val.len(),
                s.rb_test.len()
            );
        }
        Command::Label { config, sample, out_dir } => {
            let cfg = PipelineConfig::load(&config)?;
            let teacher = cfg.build_teacher()?;
            label_samples(&cfg, &SampleFile::load(&sample)?, &teacher, &out_dir)?;
            println!("labeled with {} ({} teacher requests)", teacher.identity(), teacher.requests());
        }
        Command::BuildEmbDataset { config, n, out, teacher_out } => {
            let cfg = PipelineConfig::load(&config)?;
            let corpus = load_corpus(&cfg.corpus)?;
            let teacher = cfg.build_teacher()?;
            let mut rng = stream(cfg.params.seed, "build-emb", &[]);
            let (ds, set) = build_embedding_dataset(&corpus.ids(), &corpus, n, &teacher, &mut rng)?;
            ds.save(&out)?;
            if let Some(p) = teacher_out {
                set.save(&p)?;
            }
            println!("{} records ({} teacher requests)", ds.len(), teacher.requests());
        }
        Command::Train(a) => {
            let mut cfg = match &a.params {
                Some(p) => {
                    let text = std::fs::read_to_string(p).map_err(|e| Error::Io { path: p.clone(), source: e })?;
                    toml::from_str::<RunConfig>(&text).map_err(|e| Error::Invalid(format!("{}: {e}", p.display())))?
                }
                None => RunConfig::default(),
            };
            if let Some(v) = a.seed {
                cfg.seed = v;
            }
            if let Some(v) = a.epochs {
                cfg.epochs = v;
            }
            if let Some(v) = a.lr {
                cfg.learning_rate = v;
            }
            if let Some(v) = a.batch_size {
                cfg.batch_size = v;
            }
            if let Some(v) = a.workers {
                cfg.workers = v;
            }
            if a.mixed {
                cfg.batch_mode = BatchMode::Mixed;
            }
            let datasets = a.datasets.iter().map(|p| PairDataset::load(p)).collect::<Result<Vec<_>>>()?;
            let base = EmbeddingSet::load(&a.base)?;
            let (params, report) = train_adapter(&datasets, &base, &cfg)?;
            params.save(&a.out)?;
            if let Some(p) = a.report {
                std::fs::write(&p, serde_json::to_string_pretty(&report)?)
                    .map_err(|e| Error::Io { path: p.clone(), source: e })?;
            }
            println!(
                "trained on {} pairs, {} steps, final loss {}",
                report.pair_count,
                report.steps,
                report.final_loss.map_or_else(|| "n/a".into(), |l| format!("{l:.6}"))
            );
        }
        Command::Encode { adapter, base, out } => {
            let params = AdapterParams::load(&adapter)?;
            let student = encode_student(&params, &EmbeddingSet::load(&base)?)?;
            student.save(&out)?;
            println!("encoded {} items", student.len());
        }
        Command::Cluster { embeddings, tau, min_size, out } => {
            let emb = EmbeddingSet::load(&embeddings)?;
            let result = community_detect(&emb, tau, min_size)?;
            save_clusters(&result, &emb.digest(), &out)?;
            println!(
                "{} clusters, {} singletons, cluster fraction {:.4}",
                result.clusters.len(),
                result.singletons.len(),
                cluster_count_fraction(&result, emb.len())
            );
        }
        Command::Tune { embeddings, pairs } => {
            let choice = tune_threshold_f1(&EmbeddingSet::load(&embeddings)?, &PairDataset::load(&pairs)?)?;
            print_json(serde_json::json!({ "tau": choice.tau, "f1": choice.f1 }))?;
        }
        Command::Eval {
            embeddings,
            pairs,
            clusters,
            corpus,
            include_singletons,
        } => {
            let emb = EmbeddingSet::load(&embeddings)?;
            let mut out = serde_json::Map::new();
            if let Some(p) = pairs {
                out.insert("auc".into(), pairwise_auc(&emb, &PairDataset::load(&p)?)?.into());
            }
            if let (Some(c), Some(corpus)) = (clusters, corpus) {
                let (result, _) = load_clusters(&c)?;
                let labels = load_corpus(&corpus)?.gold_labels();
                out.insert("purity".into(), cluster_purity(&result, &labels, include_singletons)?.into());
                out.insert(
                    "cluster_fraction".into(),
                    cluster_count_fraction(&result, result.n_items).into(),
                );
            }
            print_json(out.into())?;
        }
        Command::Pareto(a) => {
            let grid = TauGrid {
                lo: a.lo,
                hi: a.hi,
                step: a.step,
            };
            grid.validate()?;
            let emb = EmbeddingSet::load(&a.embeddings)?;
            let labels = load_corpus(&a.corpus)?.gold_labels();
            let curve = pareto_scan(&emb, &labels, &grid.values(), a.min_size, a.include_singletons)?;
            write_curve_csv(&curve, &with_suffix(&a.out_prefix, ".csv"))?;
            write_summary_csv(&curve, &with_suffix(&a.out_prefix, "_summary.csv"))?;
            println!(
                "AUPC {:.4} (raw {:.4} over [{:.4}, {:.4}])",
                aupc(&curve)?,
                curve.aupc_raw(),
                curve.x_min,
                curve.x_max
            );
        }
        Command::Sweep { config, run_dir, sizes } => {
            let cfg = PipelineConfig::load(&config)?;
            let rows = cmd_sweep_train_size(&cfg, &run_dir, &sizes)?;
            println!("size,auc,aupc");
            for r in rows {
                println!("{},{},{}", r.size, r.auc, r.aupc.map(|v| v.to_string()).unwrap_or_default());
            }
        }
        Command::Run { config, run_dir } => {
            let s = cmd_run(&config, &run_dir)?;
            println!(
                "run complete: executed [{}], {} teacher requests",
                s.executed.join(", "),
                s.teacher_requests
            );
            print!("{}", cmd_report(&run_dir)?);
        }
        Command::Report { run_dir } => {
            print!("{}", cmd_report(&run_dir)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    env_logger::Builder::new().parse_filters(&cli.log).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(s) = source {
                eprintln!("  caused by: {s}");
                source = s.source();
            }
            if let Error::Stage { completed, .. } = &e {
                if !completed.is_empty() {
                    eprintln!("completed artifacts:");
                    for p in completed {
                        eprintln!("  {}", p.display());
                    }
                }
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
