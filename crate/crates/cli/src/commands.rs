use std::fs;
use std::path::{Path, PathBuf};

use alerta_core::data::{
    load_frame, read_feature_names, write_frame, AblationMode, FeatureGroup, FeatureSchema, LabelCounts,
    LabelThresholds, PreparedDataset, WindowedSample,
};
use alerta_core::model::{checkpoint, AlertaNet, ModelKind};
use alerta_core::synth::{generate_with_truth, SynthSpec};
use alerta_core::train::{evaluate, train, EvalReport, TrainConfig, TrainReport};
use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use crate::args::{
    AblateArgs, BaselineArgs, EvalArgs, PrepareArgs, SignalArg, SplitArg, SynthArgs, TrainArgs, TrainOptions,
};
use crate::manifest::{write_json, RunRecorder};
use crate::report::{render_eval, ComparisonTable, MetricsRow};

pub const DATASET_FILE: &str = "dataset.json";
pub const SPLIT_MANIFEST_FILE: &str = "split_manifest.json";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
pub const TRAIN_REPORT_FILE: &str = "train_report.json";
pub const EVAL_REPORT_FILE: &str = "eval_report.json";
pub const ABLATION_FILE: &str = "ablation.json";
pub const BASELINE_FILE: &str = "baseline.json";
pub const SYNTH_FILE: &str = "synth.json";

/// What a successful command produced.
#[derive(Debug, Default)]
pub struct Outcome {
    pub stdout: String,
    pub warnings: Vec<String>,
    pub artifacts: Vec<PathBuf>,
}

/// Text for stdout and the artifacts written.
pub type Produced = (String, Vec<PathBuf>);

fn data_dir(out_dir: &Path, data: &Option<PathBuf>) -> PathBuf {
    data.clone().unwrap_or_else(|| out_dir.join("data"))
}

// synth

/// What `synth` wrote, with label counts for targets at or after the window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthStock {
    pub spec: SynthSpec,
    pub file: String,
    pub labeled_days: usize,
    pub up: usize,
    pub down: usize,
    pub events: usize,
}

pub fn synth(out_dir: &Path, args: &SynthArgs, rec: &mut RunRecorder) -> Result<Produced> {
    if args.stocks == 0 {
        bail!("--stocks must be at least 1");
    }
    let dir = data_dir(out_dir, &args.data);
    fs::create_dir_all(&dir).with_context(|| format!("cannot create {}", dir.display()))?;
    rec.set_seed(args.seed);
    let mut stocks = Vec::new();
    let mut artifacts = Vec::new();
    for k in 0..args.stocks {
        let mut spec = SynthSpec::new(args.days, args.features, args.seed.wrapping_add(k as u64));
        spec.stock_id = if args.stocks == 1 { "SYN".into() } else { format!("SYN{k}") };
        spec.flip_prob = args.flip;
        spec.lag = args.lag;
        spec.window = args.window;
        if args.signal == SignalArg::Sentiment {
            for (w, g) in spec.signal_weights.iter_mut().zip(&spec.groups) {
                if *g != FeatureGroup::Sentiment {
                    *w = 0.0;
                }
            }
        }
        let g = generate_with_truth(&spec)?;
        let path = dir.join(format!("{}.csv", spec.stock_id));
        write_frame(&g.frame, &path)?;
        rec.output(&path);
        artifacts.push(path.clone());
        let targets = spec.window..spec.n_days;
        let up = targets.clone().filter(|&t| g.truth.up[t]).count();
        stocks.push(SynthStock {
            file: path.display().to_string(),
            labeled_days: targets.len(),
            up,
            down: targets.len() - up,
            events: targets.filter(|&t| g.truth.event[t]).count(),
            spec,
        });
    }
    rec.set_config(&stocks.iter().map(|s| &s.spec).collect::<Vec<_>>())?;
    let summary = out_dir.join(SYNTH_FILE);
    write_json(&summary, &stocks)?;
    rec.output(&summary);
    artifacts.push(summary);
    let stdout = format!(
        "wrote {} synthetic stock(s) of {} days to {}\n",
        args.stocks,
        args.days,
        dir.display()
    );
    Ok((stdout, artifacts))
}

// prepare

#[derive(Debug, Clone, Serialize)]
struct PrepareConfig<'a> {
    data: String,
    window: usize,
    features: &'a [String],
    train_frac: f64,
    valid_frac: f64,
    thresholds: LabelThresholds,
}

pub fn prepare(out_dir: &Path, args: &PrepareArgs, rec: &mut RunRecorder) -> Result<Produced> {
    let dir = data_dir(out_dir, &args.data);
    let mut files: Vec<PathBuf> = match fs::read_dir(&dir) {
        Ok(entries) => entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("csv")))
            .collect(),
        Err(e) => return Err(e).with_context(|| format!("cannot read data directory {}", dir.display())),
    };
    files.sort();
    if files.is_empty() {
        bail!("no input frames: {} holds no .csv files", dir.display());
    }
    let names = match &args.features {
        Some(f) => f.clone(),
        None => read_feature_names(&files[0]).with_context(|| format!("reading header of {}", files[0].display()))?,
    };
    let schema = FeatureSchema::from_names(&names)?;
    let thresholds = LabelThresholds {
        dead_zone: (args.dead_zone_low, args.dead_zone_high),
        outlier: args.outlier,
    };
    thresholds.validate()?;
    rec.set_config(&PrepareConfig {
        data: dir.display().to_string(),
        window: args.window,
        features: &names,
        train_frac: args.train_frac,
        valid_frac: args.valid_frac,
        thresholds,
    })?;

    let mut frames = Vec::with_capacity(files.len());
    for f in &files {
        rec.input(f)?;
        frames.push(load_frame(f, &schema).with_context(|| format!("loading {}", f.display()))?);
    }
    let (ds, warnings) =
        PreparedDataset::build(&frames, &schema, args.window, thresholds, args.train_frac, args.valid_frac)?;
    for w in &warnings {
        rec.warn(w.clone());
    }
    fs::create_dir_all(out_dir)?;
    let ds_path = out_dir.join(DATASET_FILE);
    ds.save(&ds_path)?;
    rec.output(&ds_path);
    let manifest = ds.manifest(warnings);
    let split_path = out_dir.join(SPLIT_MANIFEST_FILE);
    write_json(&split_path, &manifest)?;
    rec.output(&split_path);

    let mut stdout = format!(
        "prepared {} stock(s), window {}, {} features\n",
        ds.stocks.len(),
        ds.window,
        schema.len()
    );
    let line = |name: &str, c: &LabelCounts| {
        format!(
            "{name:<10} {:>6} samples  up {:>6}  down {:>6}  abstain {:>6} ({:.3})  volatile {:>6}\n",
            c.samples, c.up, c.down, c.abstain, c.abstain_rate, c.volatile
        )
    };
    stdout += &line("train", &manifest.train);
    stdout += &line("validation", &manifest.validation);
    stdout += &line("test", &manifest.test);
    Ok((stdout, vec![ds_path, split_path]))
}

// shared training plumbing

fn load_dataset(out_dir: &Path, explicit: &Option<PathBuf>, rec: &mut RunRecorder) -> Result<(PathBuf, PreparedDataset)> {
    let path = explicit.clone().unwrap_or_else(|| out_dir.join(DATASET_FILE));
    if !path.exists() {
        bail!(
            "prepared dataset {} not found; run `alerta prepare` first (or pass --dataset)",
            path.display()
        );
    }
    rec.input(&path)?;
    let ds = PreparedDataset::load(&path).with_context(|| format!("loading dataset {}", path.display()))?;
    Ok((path, ds))
}

/// `--config` file, then flag overrides.
pub fn resolve_config(opts: &TrainOptions, rec: Option<&mut RunRecorder>) -> Result<TrainConfig> {
    let mut cfg = match &opts.config {
        Some(p) => {
            let text = fs::read_to_string(p).with_context(|| format!("cannot read config {}", p.display()))?;
            if let Some(rec) = rec {
                rec.input(p)?;
            }
            serde_json::from_str(&text).with_context(|| format!("invalid config {}", p.display()))?
        }
        None => TrainConfig::default(),
    };
    if let Some(v) = opts.seed {
        cfg.seed = v;
    }
    if let Some(v) = opts.window {
        cfg.window = Some(v);
    }
    if let Some(v) = opts.hidden {
        cfg.hidden = v;
    }
    if let Some(v) = opts.lambda {
        cfg.lambda = v;
    }
    if let Some(v) = opts.epochs {
        cfg.epochs = v;
    }
    if let Some(v) = opts.batch_size {
        cfg.batch_size = v;
    }
    if let Some(v) = opts.learning_rate {
        cfg.learning_rate = v;
    }
    if let Some(v) = opts.patience {
        cfg.patience = v;
    }
    cfg.tda_normalize |= opts.tda_normalize;
    cfg.two_stage |= opts.two_stage;
    cfg.separate_context_cell |= opts.separate_context_cell;
    cfg.validate()?;
    Ok(cfg)
}

fn split_samples(ds: &PreparedDataset, split: SplitArg) -> (&'static str, &[WindowedSample]) {
    match split {
        SplitArg::Train => ("train", &ds.split.train),
        SplitArg::Validation => ("validation", &ds.split.validation),
        SplitArg::Test => ("test", &ds.split.test),
    }
}

fn row_name(kind: ModelKind, mode: AblationMode) -> String {
    match kind {
        ModelKind::Alerta => mode.label().to_string(),
        ModelKind::Gru => match mode {
            AblationMode::Full => "GRU".into(),
            other => format!("GRU({})", other.label().trim_start_matches("ALERTA-Net(").trim_end_matches(')')),
        },
    }
}

fn train_and_score(ds: &PreparedDataset, cfg: &TrainConfig, manifest: &str) -> Result<MetricsRow> {
    log::info!("training {} ({})", row_name(cfg.model, cfg.ablation), cfg.ablation);
    let (net, report) = train(&ds.split, &ds.schema, cfg)?;
    let mut eval = evaluate(&net, &ds.schema, &ds.split.test, 0.5)?;
    eval.manifest = Some(manifest.into());
    Ok(MetricsRow::new(
        row_name(cfg.model, cfg.ablation),
        cfg.ablation.to_string(),
        cfg.model.to_string(),
        report.best_epoch,
        eval,
    ))
}

fn write_table(out_dir: &Path, file: &str, table: &ComparisonTable, rec: &mut RunRecorder) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir)?;
    let json = out_dir.join(file);
    write_json(&json, table)?;
    let text = json.with_extension("txt");
    fs::write(&text, table.render())?;
    rec.output(&json);
    rec.output(&text);
    Ok(vec![json, text])
}

// train

pub fn train_cmd(out_dir: &Path, args: &TrainArgs, rec: &mut RunRecorder) -> Result<Produced> {
    let mut cfg = resolve_config(&args.options, Some(rec))?;
    if let Some(a) = args.ablation {
        cfg.ablation = a.into();
    }
    if let Some(m) = args.model {
        cfg.model = m.into();
    }
    rec.set_config(&cfg)?;
    rec.set_seed(cfg.seed);
    let (_, ds) = load_dataset(out_dir, &args.options.dataset, rec)?;

    let (net, mut report) = train(&ds.split, &ds.schema, &cfg)?;
    fs::create_dir_all(out_dir)?;
    let ckpt = args.checkpoint.clone().unwrap_or_else(|| out_dir.join(CHECKPOINT_FILE));
    checkpoint::save(&net, &ckpt)?;
    rec.output(&ckpt);
    report.checkpoint = Some(file_label(&ckpt, out_dir));
    report.manifest = Some(rec.file_name());
    let report_path = out_dir.join(TRAIN_REPORT_FILE);
    write_json(&report_path, &report)?;
    rec.output(&report_path);

    let stdout = render_train(&report);
    Ok((stdout, vec![ckpt, report_path]))
}

/// Paths inside the output directory are reported relative to it so reports
/// do not depend on where the directory lives.
fn file_label(path: &Path, out_dir: &Path) -> String {
    path.strip_prefix(out_dir).unwrap_or(path).display().to_string()
}

fn render_train(r: &TrainReport) -> String {
    let mut s = format!("trained {}\n", r.model.describe());
    for st in &r.stages {
        s += &format!(
            "stage {:?}: {} epochs run, best epoch {}{}\n",
            st.stage,
            st.epochs_run,
            st.best_epoch,
            if st.stopped_early { " (early stop)" } else { "" }
        );
    }
    if let Some(best) = r
        .epochs
        .iter()
        .rev()
        .find(|e| Some(e.epoch) == r.stages.last().map(|s| s.best_epoch))
    {
        s += &format!(
            "best validation loss {:.5} (movement {:.5}, volatility {:.5})\n",
            best.validation.total, best.validation.movement, best.validation.volatility
        );
    }
    s
}

// eval

pub fn eval_cmd(out_dir: &Path, args: &EvalArgs, rec: &mut RunRecorder) -> Result<Produced> {
    let (_, ds) = load_dataset(out_dir, &args.dataset, rec)?;
    let ckpt = args.checkpoint.clone().unwrap_or_else(|| out_dir.join(CHECKPOINT_FILE));
    if !ckpt.exists() {
        bail!("checkpoint {} not found; run `alerta train` first (or pass --checkpoint)", ckpt.display());
    }
    rec.input(&ckpt)?;
    let net: AlertaNet = checkpoint::load(&ckpt).with_context(|| format!("loading checkpoint {}", ckpt.display()))?;
    let (split_name, samples) = split_samples(&ds, args.split);
    rec.set_config(&serde_json::json!({
        "split": split_name,
        "threshold": args.threshold,
        "checkpoint": net.config,
    }))?;
    let mut report: EvalReport = evaluate(&net, &ds.schema, samples, args.threshold)
        .with_context(|| format!("evaluating checkpoint {}", ckpt.display()))?;
    report.manifest = Some(rec.file_name());
    fs::create_dir_all(out_dir)?;
    let json = out_dir.join(EVAL_REPORT_FILE);
    write_json(&json, &report)?;
    let text = render_eval(&report, split_name);
    let text_path = json.with_extension("txt");
    fs::write(&text_path, &text)?;
    rec.output(&json);
    rec.output(&text_path);
    Ok((text, vec![json, text_path]))
}

// ablate / baseline

pub fn ablate(out_dir: &Path, args: &AblateArgs, rec: &mut RunRecorder) -> Result<Produced> {
    let mut cfg = resolve_config(&args.options, Some(rec))?;
    if let Some(m) = args.model {
        cfg.model = m.into();
    }
    rec.set_config(&cfg)?;
    rec.set_seed(cfg.seed);
    let (_, ds) = load_dataset(out_dir, &args.options.dataset, rec)?;
    let mut rows = Vec::new();
    for mode in AblationMode::ALL {
        let run = TrainConfig {
            ablation: mode,
            ..cfg.clone()
        };
        rows.push(train_and_score(&ds, &run, &rec.file_name()).with_context(|| format!("ablation {mode}"))?);
    }
    let table = ComparisonTable {
        title: "Feature-group ablation".into(),
        split: "test".into(),
        rows,
        manifest: rec.file_name(),
    };
    let artifacts = write_table(out_dir, ABLATION_FILE, &table, rec)?;
    Ok((table.render(), artifacts))
}

pub fn baseline(out_dir: &Path, args: &BaselineArgs, rec: &mut RunRecorder) -> Result<Produced> {
    let mut cfg = resolve_config(&args.options, Some(rec))?;
    if let Some(a) = args.ablation {
        cfg.ablation = a.into();
    }
    rec.set_config(&cfg)?;
    rec.set_seed(cfg.seed);
    let (_, ds) = load_dataset(out_dir, &args.options.dataset, rec)?;
    let mut rows = Vec::new();
    for kind in [ModelKind::Alerta, ModelKind::Gru] {
        let run = TrainConfig {
            model: kind,
            ..cfg.clone()
        };
        rows.push(train_and_score(&ds, &run, &rec.file_name())?);
    }
    let table = ComparisonTable {
        title: "Temporal-distance context vs plain GRU".into(),
        split: "test".into(),
        rows,
        manifest: rec.file_name(),
    };
    let artifacts = write_table(out_dir, BASELINE_FILE, &table, rec)?;
    Ok((table.render(), artifacts))
}
