use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::{info, warn};
use rayon::prelude::*;

use masktrack_core::io::{
    format_mots, load_config, read_mots, write_heatmaps, write_manifest, write_reid, SequenceDir,
};
use masktrack_core::lta::admissible_pairs;
use masktrack_core::metrics::{evaluate, evaluate_many, EvalReport};
use masktrack_core::model::{BackendKind, PipelineConfig, RefVariant};
use masktrack_core::oracles::GtIndex;
use masktrack_core::pipeline::{run, short_term_stage, Association, RunResult, SequenceInputs};
use masktrack_core::similarity::{heatmap_requests, BackendInputs};
use masktrack_core::synth::{
    export_features, export_heatmaps, generate, preset, write_scenario, IdealFeatures, IdealHeatmaps,
};

#[derive(Parser)]
#[command(name = "masktrack", version, about = "Mask-based multi-object tracking and evaluation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Track sequences and write one result file per sequence.
    Run(RunArgs),
    /// Score result files against ground truth.
    Eval(EvalArgs),
    /// Track with ground-truth assisted association.
    Oracle(OracleArgs),
    /// Track and evaluate over a grid of values for one hyperparameter.
    Sweep(SweepArgs),
    /// Generate synthetic sequences with ground truth and ideal appearance inputs.
    Synth(SynthArgs),
    /// Write tracklets and the heatmap work list for an external producer.
    Manifest(ManifestArgs),
}

#[derive(Args, Clone)]
struct PipelineArgs {
    /// Sequence directories.
    #[arg(required = true)]
    sequences: Vec<PathBuf>,
    /// TOML file with hyperparameters; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    backend: Option<BackendKind>,
    #[arg(long)]
    theta_l: Option<f64>,
    #[arg(long)]
    ref_variant: Option<RefVariant>,
    /// Report short-term tracklets as tracks.
    #[arg(long)]
    disable_lta: bool,
    /// Sequences processed in parallel (0 = all cores).
    #[arg(long, default_value_t = 0)]
    jobs: usize,
    /// Accepted for reproducible invocations; the pipeline itself is deterministic.
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct EvalArgs {
    /// Result files or directories of `<sequence>.txt` files.
    #[arg(long, required = true)]
    pred: PathBuf,
    /// Ground-truth file, or a directory of sequence folders or `<sequence>.txt` files.
    #[arg(long, required = true)]
    gt: PathBuf,
    /// Only score this class.
    #[arg(long)]
    class: Option<u32>,
    /// Write `metrics.txt` and `alpha_curves.csv` here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum OracleMode {
    Lta,
    Slta,
}

#[derive(Args)]
struct OracleArgs {
    #[arg(value_enum)]
    mode: OracleMode,
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "results")]
    out: PathBuf,
}

#[derive(Args)]
struct SweepArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    /// Hyperparameter to vary.
    #[arg(long, default_value = "theta_l")]
    key: String,
    /// Comma-separated values.
    #[arg(long, value_delimiter = ',', default_value = "0.0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9")]
    values: Vec<String>,
    /// CSV output with one row per value and metric.
    #[arg(long, default_value = "sweep.csv")]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    /// One of lanes, noisy, gap2s, jump.
    #[arg(long, default_value = "lanes")]
    preset: String,
    /// Number of sequences; sequence k uses seed `seed + k`.
    #[arg(long, default_value_t = 1)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Parent directory for the sequence folders.
    #[arg(long, default_value = "synth")]
    out: PathBuf,
    /// Also write PPM frames.
    #[arg(long)]
    images: bool,
    /// Box blur radius of the ideal heatmaps.
    #[arg(long, default_value_t = 0)]
    blur: u32,
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct ManifestArgs {
    #[command(flatten)]
    pipeline: PipelineArgs,
    #[arg(long, default_value = "manifest")]
    out: PathBuf,
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run(a) => cmd_run(&a.pipeline, &a.out, None),
        Command::Oracle(a) => {
            let mode = match a.mode {
                OracleMode::Lta => Association::OracleLta,
                OracleMode::Slta => Association::OracleSlta,
            };
            cmd_run(&a.pipeline, &a.out, Some(mode))
        }
        Command::Eval(a) => cmd_eval(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Synth(a) => cmd_synth(&a),
        Command::Manifest(a) => cmd_manifest(&a),
    };
    if let Err(e) = result {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn base_config(args: &PipelineArgs) -> Result<PipelineConfig> {
    let mut cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(b) = args.backend {
        cfg.backend = b;
    }
    if let Some(t) = args.theta_l {
        cfg.theta_l = t;
    }
    if let Some(v) = args.ref_variant {
        cfg.ref_variant = v;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn thread_pool(jobs: usize) -> Result<rayon::ThreadPool> {
    Ok(rayon::ThreadPoolBuilder::new().num_threads(jobs).build()?)
}

/// Loads a sequence folder and runs the pipeline on it. Only the inputs the
/// chosen backend or mode needs are read.
fn track_sequence(dir: &Path, cfg: &PipelineConfig, mode: Association) -> Result<(String, RunResult)> {
    let seq = SequenceDir::new(dir);
    let meta = seq.meta()?;
    let detections = seq.detections()?;
    let flows = seq.flows();
    let needs_gt = mode != Association::Full || cfg.backend == BackendKind::Oracle;
    let gt = if needs_gt { seq.gt()?.map(|g| GtIndex::new(&g)) } else { None };
    let lta = mode == Association::Full;
    let heatmaps = if lta && cfg.backend == BackendKind::StmHeatmap { seq.heatmaps()? } else { None };
    let features = if lta && matches!(cfg.backend, BackendKind::Reid2x2 | BackendKind::ReidNxP) {
        seq.reid()?
    } else {
        None
    };
    let images = if lta && matches!(cfg.backend, BackendKind::Rgb2x2 | BackendKind::RgbNxP) {
        seq.images(meta.frame_count)?
    } else {
        None
    };
    let inputs = SequenceInputs {
        meta: &meta,
        detections: &detections,
        flows: &flows,
        backend: BackendInputs {
            heatmaps: heatmaps.as_ref().map(|h| h as _),
            images: images.as_ref(),
            features: features.as_ref().map(|f| f as _),
            gt: gt.as_ref(),
        },
    };
    let result = run(&inputs, cfg, mode).with_context(|| format!("sequence {}", dir.display()))?;
    Ok((meta.sequence_id, result))
}

fn mode_for(args: &PipelineArgs, oracle: Option<Association>) -> Association {
    match oracle {
        Some(m) => m,
        None if args.disable_lta => Association::ShortTermOnly,
        None => Association::Full,
    }
}

fn cmd_run(args: &PipelineArgs, out: &Path, oracle: Option<Association>) -> Result<()> {
    let cfg = base_config(args)?;
    let mode = mode_for(args, oracle);
    let pool = thread_pool(args.jobs)?;
    let results: Vec<Result<(String, RunResult)>> =
        pool.install(|| args.sequences.par_iter().map(|d| track_sequence(d, &cfg, mode)).collect());
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    for r in results {
        let (name, result) = r?;
        let path = out.join(format!("{name}.txt"));
        fs::write(&path, format_mots(&result.records()))
            .with_context(|| format!("writing {}", path.display()))?;
        fs::write(out.join(format!("{name}.log")), result.counts.to_log())?;
        println!("{name}: {} tracks -> {}", result.tracks.len(), path.display());
    }
    Ok(())
}

/// Result and ground-truth files paired by sequence name.
fn collect_pairs(pred: &Path, gt: &Path) -> Result<Vec<(String, PathBuf, PathBuf)>> {
    if pred.is_file() {
        let gt_file = if gt.is_dir() { gt.join("gt.txt") } else { gt.to_path_buf() };
        let name = pred.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        return Ok(vec![(name, pred.to_path_buf(), gt_file)]);
    }
    let mut out = Vec::new();
    let mut entries: Vec<PathBuf> = fs::read_dir(pred)
        .with_context(|| format!("reading {}", pred.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "txt"))
        .collect();
    entries.sort();
    for p in entries {
        let name = p.file_stem().unwrap().to_string_lossy().into_owned();
        let candidates = [gt.join(&name).join("gt.txt"), gt.join(format!("{name}.txt"))];
        match candidates.into_iter().find(|c| c.is_file()) {
            Some(g) => out.push((name, p, g)),
            None => warn!("no ground truth for {name}; skipped"),
        }
    }
    if out.is_empty() {
        bail!("no result files with matching ground truth under {}", pred.display());
    }
    Ok(out)
}

fn cmd_eval(args: &EvalArgs) -> Result<()> {
    let pairs = collect_pairs(&args.pred, &args.gt)?;
    let mut sequences = Vec::new();
    for (name, p, g) in &pairs {
        let pred = read_mots(p)?;
        let gt = read_mots(g)?;
        println!("{name}\n{}", evaluate(&pred, &gt, args.class)?.to_table());
        sequences.push((pred, gt));
    }
    let combined = evaluate_many(&sequences, args.class)?;
    if pairs.len() > 1 {
        println!("combined\n{}", combined.to_table());
    }
    if let Some(out) = &args.out {
        fs::create_dir_all(out)?;
        fs::write(out.join("metrics.txt"), combined.to_key_values())?;
        fs::write(out.join("alpha_curves.csv"), combined.alpha_csv())?;
    }
    Ok(())
}

fn evaluate_sequences(dirs: &[PathBuf], cfg: &PipelineConfig, mode: Association) -> Result<EvalReport> {
    let mut sequences = Vec::new();
    for d in dirs {
        let (_, result) = track_sequence(d, cfg, mode)?;
        let gt = SequenceDir::new(d)
            .gt()?
            .with_context(|| format!("{} has no gt.txt", d.display()))?;
        sequences.push((result.records(), gt));
    }
    Ok(evaluate_many(&sequences, None)?)
}

fn cmd_sweep(args: &SweepArgs) -> Result<()> {
    let base = base_config(&args.pipeline)?;
    let mode = mode_for(&args.pipeline, None);
    let pool = thread_pool(args.pipeline.jobs)?;
    let rows: Vec<Result<(String, EvalReport)>> = pool.install(|| {
        args.values
            .par_iter()
            .map(|v| {
                let mut cfg = base.clone();
                cfg.set(&args.key, v)?;
                Ok((v.clone(), evaluate_sequences(&args.pipeline.sequences, &cfg, mode)?))
            })
            .collect()
    });
    let mut csv = format!("{},metric,value\n", args.key);
    for r in rows {
        let (v, rep) = r?;
        println!("{}={v}: HOTA {:.4} AssA {:.4}", args.key, rep.hota, rep.assa);
        for (name, value) in rep.summary() {
            let _ = writeln!(csv, "{v},{name},{value}");
        }
    }
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    fs::write(&args.out, csv)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs) -> Result<()> {
    let cfg = match &args.config {
        Some(p) => load_config(p)?,
        None => PipelineConfig::default(),
    };
    for k in 0..args.count {
        let spec = preset(&args.preset, args.seed + k)?;
        let scenario = generate(&spec)?;
        let dir = SequenceDir::new(args.out.join(&spec.name));
        write_scenario(&dir, &scenario, args.images)?;

        // Appearance inputs are keyed by tracklet id, so they are produced
        // from the tracklets the pipeline will build from these files.
        let (_, tracklets) = short_term_stage(&scenario.meta, &scenario.detections, &scenario.flows, &cfg)?;
        let gt = GtIndex::new(&scenario.gt);
        let pairs = admissible_pairs(&tracklets, &scenario.meta, &cfg)?;
        let mut requests: Vec<_> = RefVariant::ALL
            .iter()
            .flat_map(|&v| heatmap_requests(&tracklets, &pairs, v, cfg.n_ref))
            .collect();
        requests.sort();
        requests.dedup();
        let provider = IdealHeatmaps { gt: &gt, width: spec.width, height: spec.height, blur: args.blur };
        let store = export_heatmaps(&provider, &tracklets, &requests, spec.width, spec.height);
        write_heatmaps(&dir.heatmaps_path(), &store)?;
        let features = IdealFeatures { gt: &gt, dim: 16, seed: spec.seed };
        write_reid(&dir.reid_path(), &export_features(&features, &tracklets))?;
        info!("{}: {} tracklets, {} heatmaps", spec.name, tracklets.len(), store.maps.len());
        println!("{}", dir.root.display());
    }
    Ok(())
}

fn cmd_manifest(args: &ManifestArgs) -> Result<()> {
    let cfg = base_config(&args.pipeline)?;
    let mut summary: BTreeMap<String, usize> = BTreeMap::new();
    for d in &args.pipeline.sequences {
        let seq = SequenceDir::new(d);
        let meta = seq.meta()?;
        let (_, tracklets) = short_term_stage(&meta, &seq.detections()?, &seq.flows(), &cfg)?;
        let pairs = admissible_pairs(&tracklets, &meta, &cfg)?;
        let requests = heatmap_requests(&tracklets, &pairs, cfg.ref_variant, cfg.n_ref);
        write_manifest(&args.out.join(&meta.sequence_id), &tracklets, &requests)?;
        summary.insert(meta.sequence_id, requests.len());
    }
    for (name, n) in summary {
        println!("{name}: {n} heatmap requests");
    }
    Ok(())
}
