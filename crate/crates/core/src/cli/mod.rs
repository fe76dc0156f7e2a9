//! The `dmt` command line: dataset generation, training, evaluation,
//! plotting, layer export, parameter sweeps and manifest replay.

pub mod config;
pub mod svg;

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::datasets::{
    format_f64, gen_repeat_points, gen_smile_face, gen_swiss_roll, gen_three_gauss, load_csv, write_csv, CsvOptions,
    Dataset,
};
use crate::metrics::{evaluate_all, MetricsReport};
use crate::numerics::pca::project_2d;
use crate::numerics::{Matrix, SeededRng};
use crate::trainer::{export_layer_activations, Checkpoint, TrainConfig, Trainer};
use crate::Error;

pub const TOOL: &str = concat!("dmt ", env!("CARGO_PKG_VERSION"));
const SUBSAMPLE_STREAM: u64 = 3;

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Run(Error),
    /// A replay produced different output than the manifest records.
    Mismatch(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Run(e)
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Mismatch(m) => f.write_str(m),
            CliError::Run(e) => write!(f, "{e}"),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Mismatch(_) => EXIT_NUMERICAL,
            CliError::Run(e) if e.is_numerical() => EXIT_NUMERICAL,
            CliError::Run(Error::InvalidArgument(_)) => EXIT_USAGE,
            CliError::Run(Error::Domain(_)) => EXIT_NUMERICAL,
            CliError::Run(_) => EXIT_DATA,
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(name = "dmt", version, about = "Deep manifold transformation for nonlinear dimensionality reduction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic dataset as CSV with the label in the first column.
    Generate(GenerateArgs),
    /// Train an encoder (or autoencoder) and write the embedding, checkpoints and manifest.
    Train(TrainArgs),
    /// Compute embedding quality metrics.
    Eval(EvalArgs),
    /// Render a 2-D embedding as an SVG scatter plot.
    Plot(PlotArgs),
    /// Export every layer's activations from a checkpoint.
    Layers(LayersArgs),
    /// Train once per value of `q` or `nu_end` and tabulate the results.
    Sweep(SweepArgs),
    /// Re-run the training recorded in a manifest and check the embedding matches.
    Replay(ReplayArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// swissroll, smileface, threegauss or repeatpoints
    pub name: String,
    #[arg(long, default_value_t = 1500)]
    pub size: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Gaussian noise added to the swiss roll.
    #[arg(long, default_value_t = 0.0)]
    pub noise: f64,
    /// Copies per location (repeatpoints).
    #[arg(long, default_value_t = 300)]
    pub copies: usize,
    /// Ambient dimension (threegauss, repeatpoints).
    #[arg(long, default_value_t = 100)]
    pub dim: usize,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug, Clone)]
pub struct DataArgs {
    /// Input CSV.
    pub data: PathBuf,
    /// Column holding integer labels.
    #[arg(long, alias = "label_col")]
    pub label_col: Option<usize>,
    /// Subsample this many rows (seeded).
    #[arg(long, alias = "max_rows")]
    pub max_rows: Option<usize>,
}

/// Per-key overrides applied after the preset and config file.
#[derive(Args, Debug, Clone, Default)]
pub struct Overrides {
    #[arg(long)]
    pub epochs: Option<String>,
    #[arg(long, alias = "batch_size")]
    pub batch_size: Option<String>,
    #[arg(long)]
    pub lr: Option<String>,
    #[arg(long)]
    pub seed: Option<String>,
    #[arg(long)]
    pub mode: Option<String>,
    #[arg(long)]
    pub alpha: Option<String>,
    #[arg(long)]
    pub beta: Option<String>,
    #[arg(long)]
    pub mu0: Option<String>,
    #[arg(long, alias = "push_threshold")]
    pub push_threshold: Option<String>,
    #[arg(long, alias = "nu_start")]
    pub nu_start: Option<String>,
    #[arg(long, alias = "nu_end")]
    pub nu_end: Option<String>,
    #[arg(long, alias = "nu_input")]
    pub nu_input: Option<String>,
    #[arg(long)]
    pub q: Option<String>,
    #[arg(long)]
    pub k: Option<String>,
    #[arg(long, allow_hyphen_values = true)]
    pub dims: Option<String>,
    #[arg(long, alias = "eval_every")]
    pub eval_every: Option<String>,
    #[arg(long)]
    pub autoencoder: Option<String>,
    #[arg(long, alias = "checkpoint_every")]
    pub checkpoint_every: Option<String>,
}

impl Overrides {
    fn pairs(&self) -> [(&'static str, &Option<String>); 18] {
        [
            ("epochs", &self.epochs),
            ("batch_size", &self.batch_size),
            ("lr", &self.lr),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("mu0", &self.mu0),
            ("push_threshold", &self.push_threshold),
            ("nu_start", &self.nu_start),
            ("nu_end", &self.nu_end),
            ("nu_input", &self.nu_input),
            ("q", &self.q),
            ("k", &self.k),
            ("dims", &self.dims),
            ("eval_every", &self.eval_every),
            ("autoencoder", &self.autoencoder),
            ("checkpoint_every", &self.checkpoint_every),
        ]
    }
}

#[derive(Args, Debug, Clone)]
pub struct ConfigArgs {
    /// Built-in dataset preset.
    #[arg(long)]
    pub preset: Option<String>,
    /// `key = value` configuration file.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[command(flatten)]
    pub overrides: Overrides,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Continue from a checkpoint written by an identical configuration.
    #[arg(long)]
    pub resume: Option<PathBuf>,
    /// Output directory.
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    pub input: PathBuf,
    pub embedding: PathBuf,
    #[arg(long, alias = "label_col")]
    pub label_col: Option<usize>,
    /// Neighbourhood size; defaults to max(1, M/20).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report file; printed to stdout as well.
    #[arg(short, long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct PlotArgs {
    pub embedding: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct LayersArgs {
    pub checkpoint: PathBuf,
    #[command(flatten)]
    pub data: DataArgs,
    /// Seed used for subsampling, as in training.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct SweepArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub config: ConfigArgs,
    /// q or nu_end
    #[arg(long)]
    pub key: String,
    /// Comma-separated values.
    #[arg(long, allow_hyphen_values = true)]
    pub values: String,
    #[arg(short, long)]
    pub out: PathBuf,
}

#[derive(Args, Debug)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    #[arg(short, long)]
    pub out: PathBuf,
}

/// Parses arguments and runs; returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
        }
    };
    match run(cli.command) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Generate(a) => cmd_generate(&a),
        Command::Train(a) => cmd_train(&a),
        Command::Eval(a) => cmd_eval(&a),
        Command::Plot(a) => cmd_plot(&a),
        Command::Layers(a) => cmd_layers(&a),
        Command::Sweep(a) => cmd_sweep(&a),
        Command::Replay(a) => cmd_replay(&a),
    }
}

fn write_file(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e).into())
}

fn create_dir(path: &Path) -> CliResult<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e).into())
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn cmd_generate(a: &GenerateArgs) -> CliResult<()> {
    let mut rng = SeededRng::new(a.seed);
    let ds = match a.name.as_str() {
        "swissroll" => gen_swiss_roll(a.size, a.noise, &mut rng)?,
        "smileface" => gen_smile_face(a.size, &mut rng)?,
        "threegauss" => gen_three_gauss(a.size, a.dim, &mut rng)?,
        "repeatpoints" => gen_repeat_points(a.copies, a.dim, &mut rng)?,
        other => {
            return Err(CliError::Usage(format!(
                "unknown dataset `{other}`; expected swissroll, smileface, threegauss or repeatpoints"
            )))
        }
    };
    write_csv(&a.out, &ds)?;
    Ok(())
}

/// Defaults, then preset, then config file, then flags.
pub fn resolve_config(c: &ConfigArgs) -> CliResult<TrainConfig> {
    let mut cfg = TrainConfig::default();
    if let Some(p) = &c.preset {
        let text = config::preset(p).ok_or_else(|| {
            let names: Vec<&str> = config::PRESETS.iter().map(|(n, _)| *n).collect();
            CliError::Usage(format!("unknown preset `{p}`; available: {}", names.join(", ")))
        })?;
        config::apply_text(&mut cfg, text, p).map_err(CliError::Usage)?;
    }
    if let Some(path) = &c.config {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        config::apply_text(&mut cfg, &text, &path.display().to_string()).map_err(CliError::Usage)?;
    }
    let mut errors = Vec::new();
    for (k, v) in c.overrides.pairs() {
        if let Some(v) = v {
            if let Err(e) = config::apply(&mut cfg, k, v) {
                errors.push(format!("--{}: {e}", k.replace('_', "-")));
            }
        }
    }
    if !errors.is_empty() {
        return Err(CliError::Usage(errors.join("\n")));
    }
    cfg.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(cfg)
}

pub fn load_data(d: &DataArgs, seed: u64) -> CliResult<Dataset> {
    let opts = CsvOptions {
        label_col: d.label_col,
        max_rows: d.max_rows,
    };
    Ok(load_csv(&d.data, &opts, &mut SeededRng::with_stream(seed, SUBSAMPLE_STREAM))?)
}

/// `id,label,z1,…` with the label column omitted when absent.
pub fn embedding_csv(z: &Matrix, labels: Option<&[usize]>) -> String {
    let mut s = String::from("id");
    if labels.is_some() {
        s.push_str(",label");
    }
    for c in 0..z.cols() {
        write!(s, ",z{}", c + 1).unwrap();
    }
    s.push('\n');
    for (i, row) in z.iter_rows().enumerate() {
        write!(s, "{i}").unwrap();
        if let Some(l) = labels {
            write!(s, ",{}", l[i]).unwrap();
        }
        for v in row {
            write!(s, ",{}", format_f64(*v)).unwrap();
        }
        s.push('\n');
    }
    s
}

/// Embedding rows sorted by id, plus the label column if present.
pub fn read_embedding(path: &Path) -> CliResult<(Matrix, Option<Vec<usize>>)> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let data_err = |row: usize, column: usize, message: String| Error::Data {
        path: path.to_path_buf(),
        row,
        column,
        message,
    };
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or("").split(',').map(str::trim).collect();
    if header.first() != Some(&"id") {
        return Err(data_err(1, 1, "header must start with `id`".into()).into());
    }
    let has_label = header.get(1) == Some(&"label");
    let first_z = if has_label { 2 } else { 1 };
    let dim = header.len() - first_z;
    if dim == 0 || header[first_z..].iter().enumerate().any(|(c, h)| *h != format!("z{}", c + 1)) {
        return Err(data_err(1, 1, "expected columns id[,label],z1,…".into()).into());
    }
    let mut rows: Vec<(usize, Option<usize>, Vec<f64>)> = Vec::new();
    for (n, line) in lines.enumerate() {
        let row = n + 2;
        if line.trim().is_empty() {
            continue;
        }
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != header.len() {
            return Err(data_err(row, f.len().min(header.len()) + 1, format!("expected {} fields", header.len())).into());
        }
        let id = f[0].parse().map_err(|_| data_err(row, 1, format!("bad id `{}`", f[0])))?;
        let label = if has_label {
            Some(f[1].parse().map_err(|_| data_err(row, 2, format!("bad label `{}`", f[1])))?)
        } else {
            None
        };
        let z = f[first_z..]
            .iter()
            .enumerate()
            .map(|(c, v)| {
                v.parse::<f64>()
                    .map_err(|_| data_err(row, first_z + c + 1, format!("bad number `{v}`")))
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push((id, label, z));
    }
    rows.sort_by_key(|r| r.0);
    for (i, r) in rows.iter().enumerate() {
        if r.0 != i {
            let msg = if i > 0 && rows[i - 1].0 == r.0 {
                format!("duplicate id {}", r.0)
            } else {
                format!("ids must be 0..{} without gaps; missing {i}", rows.len())
            };
            return Err(Error::Format(format!("{}: {msg}", path.display())).into());
        }
    }
    let labels = if has_label {
        Some(rows.iter().map(|r| r.1.unwrap()).collect())
    } else {
        None
    };
    let z: Vec<Vec<f64>> = rows.into_iter().map(|r| r.2).collect();
    if z.is_empty() {
        return Err(data_err(2, 1, "no rows".into()).into());
    }
    Ok((Matrix::from_rows(&z)?, labels))
}

/// Flat `key = value` text.
pub fn parse_kv(text: &str) -> Vec<(String, String)> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.trim().to_string(), v.trim().to_string()))
        .collect()
}

fn kv_text(entries: &[(String, String)]) -> String {
    entries.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
}

fn join_f64(v: impl Iterator<Item = f64>) -> String {
    v.map(format_f64).collect::<Vec<_>>().join(",")
}

/// What a finished training run produced.
#[derive(Clone, Debug)]
pub struct RunSummary {
    pub final_loss: f64,
    pub metrics: MetricsReport,
    pub embedding_sha256: String,
}

struct RunSpec<'a> {
    data: &'a DataArgs,
    cfg: TrainConfig,
    resume: Option<&'a Path>,
}

fn metrics_row(epoch: usize, m: &MetricsReport) -> String {
    let vals: Vec<String> = m.entries().into_iter().take(7).filter(|(k, _)| *k != "dpc_sampled").map(|(_, v)| v).collect();
    format!("{epoch},{}\n", vals.join(","))
}

fn train_into(spec: &RunSpec<'_>, out: &Path) -> CliResult<RunSummary> {
    create_dir(out)?;
    let cfg = spec.cfg.clone();
    let ds = load_data(spec.data, cfg.seed)?;
    let labels = ds.labels.as_deref();
    let mut trainer = match spec.resume {
        Some(p) => Trainer::resume(&ds, cfg.clone(), Checkpoint::load(p)?)?,
        None => Trainer::new(&ds, cfg.clone())?,
    };
    let mut history = String::from("epoch,con,tru,rre,dpc,srm,acc\n");
    trainer.run_with(|t, st| {
        let done = st.epoch + 1;
        if cfg.eval_every > 0 && done % cfg.eval_every == 0 {
            let m = evaluate_all(&ds.features, &t.embed()?, labels, None, cfg.seed)?;
            history.push_str(&metrics_row(done, &m));
        }
        if cfg.checkpoint_every > 0 && done % cfg.checkpoint_every == 0 {
            t.checkpoint().save(&out.join(format!("ckpt-{done}")))?;
        }
        Ok(())
    })?;
    let final_ckpt = trainer.checkpoint();
    final_ckpt.save(&out.join(format!("ckpt-{}", final_ckpt.epoch)))?;
    let graph = trainer.graph().clone();
    let outcome = trainer.finish()?;
    let report = &outcome.report;
    let z = &report.embedding;

    let emb = embedding_csv(z, labels);
    write_file(&out.join("embedding.csv"), &emb)?;
    if cfg.eval_every > 0 {
        write_file(&out.join("metrics_history.csv"), &history)?;
    }
    let metrics = evaluate_all(&ds.features, z, labels, None, cfg.seed)?;

    let fp = ds.fingerprint();
    let ep = &report.epochs;
    let mut m: Vec<(String, String)> = vec![
        ("tool".into(), TOOL.into()),
        ("data".into(), spec.data.data.display().to_string()),
        ("label_col".into(), spec.data.label_col.map_or("none".into(), |c| c.to_string())),
        ("max_rows".into(), spec.data.max_rows.map_or("none".into(), |c| c.to_string())),
        ("dataset_rows".into(), fp.rows.to_string()),
        ("dataset_cols".into(), fp.cols.to_string()),
        ("dataset_sha256".into(), fp.sha256.clone()),
    ];
    for k in config::CONFIG_KEYS {
        m.push((format!("config.{k}"), config::value_of(&cfg, k)));
    }
    let max = |f: fn(&crate::trainer::EpochStats) -> f64| ep.iter().map(f).fold(0.0, f64::max);
    let converged_input: Vec<f64> = graph
        .sigma_residual
        .iter()
        .zip(&graph.sigma_converged)
        .filter(|(_, &c)| c)
        .map(|(r, _)| r.abs())
        .collect();
    m.extend([
        ("epochs_run".into(), ep.len().to_string()),
        ("loss".into(), join_f64(ep.iter().map(|e| e.loss))),
        ("nu".into(), join_f64(ep.iter().map(|e| e.nu))),
        ("mu".into(), join_f64(ep.iter().map(|e| e.mu))),
    ]);
    if cfg.autoencoder {
        m.push(("reconstruction".into(), join_f64(ep.iter().map(|e| e.reconstruction))));
    }
    m.extend([
        ("kernel_evaluations".into(), ep.iter().map(|e| e.kernel_evaluations.to_string()).collect::<Vec<_>>().join(",")),
        ("pair_budget".into(), ep.iter().map(|e| e.pair_budget.to_string()).collect::<Vec<_>>().join(",")),
        ("latent_sigma_unconverged".into(), ep.iter().map(|e| e.sigma_unconverged.to_string()).collect::<Vec<_>>().join(",")),
        ("latent_sigma_max_residual".into(), format_f64(max(|e| e.sigma_max_residual))),
        ("input_sigma_unconverged".into(), (graph.len() - converged_input.len()).to_string()),
        ("input_sigma_max_residual".into(), format_f64(converged_input.iter().fold(0.0, |a, &b| f64::max(a, b)))),
    ]);
    for (k, v) in metrics.entries() {
        m.push((format!("metrics.{k}"), v));
    }
    let sha = sha256_hex(emb.as_bytes());
    m.push(("embedding_sha256".into(), sha.clone()));
    write_file(&out.join("manifest.txt"), &kv_text(&m))?;
    write_file(&out.join("timing.txt"), &format!("wall_seconds = {:.3}\n", report.wall_seconds))?;
    Ok(RunSummary {
        final_loss: ep.last().map_or(f64::NAN, |e| e.loss),
        metrics,
        embedding_sha256: sha,
    })
}

pub fn cmd_train(a: &TrainArgs) -> CliResult<()> {
    let cfg = resolve_config(&a.config)?;
    let s = train_into(
        &RunSpec {
            data: &a.data,
            cfg,
            resume: a.resume.as_deref(),
        },
        &a.out,
    )?;
    print!("{}", s.metrics);
    Ok(())
}

pub fn cmd_eval(a: &EvalArgs) -> CliResult<()> {
    let ds = load_csv(
        &a.input,
        &CsvOptions {
            label_col: a.label_col,
            max_rows: None,
        },
        &mut SeededRng::new(a.seed),
    )?;
    let (z, emb_labels) = read_embedding(&a.embedding)?;
    if z.rows() != ds.len() {
        return Err(Error::Shape(format!("{} input rows but {} embedding rows", ds.len(), z.rows())).into());
    }
    let labels = ds.labels.as_deref().or(emb_labels.as_deref());
    let report = evaluate_all(&ds.features, &z, labels, a.k, a.seed)?;
    let text = report.to_string();
    if let Some(out) = &a.out {
        write_file(out, &text)?;
    }
    print!("{text}");
    Ok(())
}

pub fn cmd_plot(a: &PlotArgs) -> CliResult<()> {
    let (z, labels) = read_embedding(&a.embedding)?;
    write_file(&a.out, &svg::scatter_svg(&z, labels.as_deref())?)
}

pub fn cmd_layers(a: &LayersArgs) -> CliResult<()> {
    let ck = Checkpoint::load(&a.checkpoint)?;
    let ds = load_data(&a.data, a.seed)?;
    if ds.dim() != ck.encoder.input_dim() {
        return Err(Error::Shape(format!(
            "checkpoint expects {} input columns, data has {}",
            ck.encoder.input_dim(),
            ds.dim()
        ))
        .into());
    }
    create_dir(&a.out)?;
    let labels = ds.labels.as_deref();
    let layers = export_layer_activations(&ck.encoder, &ds.features)?;
    for (l, x) in layers.iter().enumerate() {
        write_file(&a.out.join(format!("layer_{l}.csv")), &embedding_csv(x, labels))?;
        let flat = match x.cols() {
            2 => Some(x.clone()),
            w if w > 2 => {
                let p = project_2d(x)?;
                write_file(&a.out.join(format!("layer_{l}_pca.csv")), &embedding_csv(&p, labels))?;
                Some(p)
            }
            _ => None,
        };
        if let Some(p) = flat {
            write_file(&a.out.join(format!("layer_{l}.svg")), &svg::scatter_svg(&p, labels)?)?;
        }
    }
    Ok(())
}

pub fn cmd_sweep(a: &SweepArgs) -> CliResult<()> {
    if a.key != "q" && a.key != "nu_end" {
        return Err(CliError::Usage(format!("sweep key must be q or nu_end, got `{}`", a.key)));
    }
    let base = resolve_config(&a.config)?;
    let values: Vec<&str> = a.values.split(',').map(str::trim).filter(|v| !v.is_empty()).collect();
    if values.is_empty() {
        return Err(CliError::Usage("--values is empty".into()));
    }
    let mut cfgs = Vec::new();
    for v in &values {
        let mut c = base.clone();
        config::apply(&mut c, &a.key, v).map_err(|e| CliError::Usage(format!("--values: {e}")))?;
        c.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        cfgs.push(c);
    }
    create_dir(&a.out)?;
    let mut summary = String::from("value,final_loss,con,tru,rre,dpc,srm,acc\n");
    let mut worst: Option<CliError> = None;
    for (v, cfg) in values.iter().zip(cfgs) {
        let dir = a.out.join(format!("{}-{v}", a.key));
        match train_into(&RunSpec { data: &a.data, cfg, resume: None }, &dir) {
            Ok(s) => {
                let e = s.metrics.entries();
                let get = |k: &str| e.iter().find(|(n, _)| *n == k).map(|(_, v)| v.clone()).unwrap_or_default();
                writeln!(
                    summary,
                    "{v},{},{},{},{},{},{},{}",
                    format_f64(s.final_loss),
                    get("con"),
                    get("tru"),
                    get("rre"),
                    get("dpc"),
                    get("srm"),
                    get("acc")
                )
                .unwrap();
            }
            Err(e) => {
                eprintln!("error: {} = {v}: {e}", a.key);
                writeln!(summary, "{v},failed: {},,,,,,", e.to_string().replace([',', '\n'], ";")).unwrap();
                if worst.as_ref().is_none_or(|w| e.exit_code() > w.exit_code()) {
                    worst = Some(e);
                }
            }
        }
    }
    write_file(&a.out.join("summary.csv"), &summary)?;
    print!("{summary}");
    worst.map_or(Ok(()), Err)
}

pub fn cmd_replay(a: &ReplayArgs) -> CliResult<()> {
    let text = fs::read_to_string(&a.manifest).map_err(|e| Error::io(&a.manifest, e))?;
    let kv = parse_kv(&text);
    let get = |k: &str| {
        kv.iter()
            .find(|(n, _)| n == k)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| CliError::Run(Error::Format(format!("manifest is missing `{k}`"))))
    };
    let opt = |k: &str| -> CliResult<Option<usize>> {
        match get(k)? {
            "none" => Ok(None),
            v => v
                .parse()
                .map(Some)
                .map_err(|_| Error::Format(format!("manifest `{k}`: bad value `{v}`")).into()),
        }
    };
    let data = DataArgs {
        data: PathBuf::from(get("data")?),
        label_col: opt("label_col")?,
        max_rows: opt("max_rows")?,
    };
    let mut cfg = TrainConfig::default();
    for k in config::CONFIG_KEYS {
        config::apply(&mut cfg, k, get(&format!("config.{k}"))?)
            .map_err(|e| Error::Format(format!("manifest `config.{k}`: {e}")))?;
    }
    let fp = load_data(&data, cfg.seed)?.fingerprint();
    if fp.sha256 != get("dataset_sha256")? {
        return Err(Error::Format(format!("{} no longer matches the dataset recorded in the manifest", data.data.display())).into());
    }
    let s = train_into(&RunSpec { data: &data, cfg, resume: None }, &a.out)?;
    let want = get("embedding_sha256")?;
    if s.embedding_sha256 != want {
        return Err(CliError::Mismatch(format!(
            "replayed embedding hash {} differs from recorded {want}",
            s.embedding_sha256
        )));
    }
    println!("replay matches: embedding_sha256 = {want}");
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn embedding_csv_round_trip() {
        let z = Matrix::from_rows(&[vec![0.1, -2.0], vec![3e-300, 4.5]]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("e.csv");
        fs::write(&p, embedding_csv(&z, Some(&[1, 0]))).unwrap();
        let (back, l) = read_embedding(&p).unwrap();
        assert_eq!(back, z);
        assert_eq!(l, Some(vec![1, 0]));
        fs::write(&p, "id,z1,z2\n1,0,0\n0,1,1\n").unwrap();
        let (back, l) = read_embedding(&p).unwrap();
        assert_eq!(back.row(0), &[1.0, 1.0]);
        assert!(l.is_none());
        fs::write(&p, "id,z1,z2\n0,0,0\n0,1,1\n").unwrap();
        assert!(read_embedding(&p).unwrap_err().to_string().contains("duplicate id 0"));
    }

    #[test]
    fn exit_code_mapping() {
        assert_eq!(CliError::Usage("x".into()).exit_code(), EXIT_USAGE);
        assert_eq!(CliError::Run(Error::Format("x".into())).exit_code(), EXIT_DATA);
        assert_eq!(CliError::Run(Error::NonFinite("x".into())).exit_code(), EXIT_NUMERICAL);
        assert_eq!(main_with_args(["dmt", "frobnicate"]), EXIT_USAGE);
        assert_eq!(main_with_args(["dmt", "--version"]), EXIT_OK);
    }
}
