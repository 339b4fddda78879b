//! Command-line front end: `synth`, `train`, `eval`, `ablate`, `inspect`.
//!
//! Every command resolves one [`RunConfig`] from built-in defaults, then an
//! optional `key=value` file, then flags, and echoes it as
//! `resolved-config.txt` next to its outputs.

use std::ffi::OsString;
use std::fmt::{self, Write as _};
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use sha2::{Digest, Sha256};

use crate::backbone::{BackboneConfig, ModelBundle, ModelConfig};
use crate::checkpoint::Checkpoint;
use crate::data::{load_folder, split, synth_dataset, write_folder, Dataset, SplitSpec};
use crate::error::{Error, Result};
use crate::contrast::DEFAULT_FACTORS;
use crate::mcfm::McfmConfig;
use crate::tensor::{DType, Real};
use crate::train::{
    evaluate, history_csv, predict_scores, run_ablation, train_with, AblationModel, TrainConfig, EVAL_BATCH,
};

pub const RESOLVED_CONFIG: &str = "resolved-config.txt";
pub const CHECKPOINT_FILE: &str = "model.ckpt";
/// Checkpoint text record holding the resolved run config, so `eval` can
/// rebuild the exact dataset and split.
pub const RUN_CONFIG_RECORD: &str = "run-config";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Precision {
    F32,
    F64,
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Precision::F32 => "f32",
            Precision::F64 => "f64",
        })
    }
}

/// Everything a run depends on. `data` is either `synth` (generated in
/// memory from `per_class`, `image_size`, `data_seed`) or a class-folder path.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub data: String,
    pub per_class: usize,
    pub image_size: usize,
    pub data_seed: u64,
    pub train_fraction: f64,
    pub mcfm: bool,
    pub factors: Vec<f64>,
    pub features_per_branch: usize,
    pub kernel_size: usize,
    pub gate_hidden: usize,
    pub stage_widths: Vec<usize>,
    pub blocks_per_stage: usize,
    pub stem_stride: usize,
    pub batch: usize,
    pub epochs: usize,
    pub lr: f64,
    pub optimizer: String,
    pub loss: String,
    pub seed: u64,
    pub seeds: Vec<u64>,
    pub precision: Precision,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        let m = McfmConfig::default();
        let b = BackboneConfig::default();
        let t = TrainConfig::default();
        RunConfig {
            data: "synth".into(),
            per_class: 300,
            image_size: 64,
            data_seed: 7,
            train_fraction: 0.7,
            mcfm: true,
            factors: DEFAULT_FACTORS.to_vec(),
            features_per_branch: m.features_per_branch,
            kernel_size: m.kernel_size,
            gate_hidden: m.gate_hidden,
            stage_widths: b.stage_widths,
            blocks_per_stage: b.blocks_per_stage,
            stem_stride: b.stem_stride,
            batch: t.batch_size,
            epochs: t.epochs,
            lr: t.lr,
            optimizer: t.optimizer,
            loss: t.loss,
            seed: 0,
            seeds: vec![0, 1, 2, 3, 4],
            precision: Precision::F32,
            out: PathBuf::from("runs"),
        }
    }
}

fn list<T: fmt::Display>(v: &[T]) -> String {
    v.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_num<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse {v:?}")))
}

fn parse_list<T: std::str::FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',').map(|s| parse_num(key, s)).collect()
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        _ => Err(Error::Config(format!("{key}: expected true or false, got {v:?}"))),
    }
}

impl RunConfig {
    /// Applies one `key=value` setting.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "data" => self.data = v.to_string(),
            "per_class" => self.per_class = parse_num(key, v)?,
            "image_size" => self.image_size = parse_num(key, v)?,
            "data_seed" => self.data_seed = parse_num(key, v)?,
            "train_fraction" => self.train_fraction = parse_num(key, v)?,
            "mcfm" => self.mcfm = parse_bool(key, v)?,
            "factors" => self.factors = parse_list(key, v)?,
            "features_per_branch" => self.features_per_branch = parse_num(key, v)?,
            "kernel_size" => self.kernel_size = parse_num(key, v)?,
            "gate_hidden" => self.gate_hidden = parse_num(key, v)?,
            "stage_widths" => self.stage_widths = parse_list(key, v)?,
            "blocks_per_stage" => self.blocks_per_stage = parse_num(key, v)?,
            "stem_stride" => self.stem_stride = parse_num(key, v)?,
            "batch" => self.batch = parse_num(key, v)?,
            "epochs" => self.epochs = parse_num(key, v)?,
            "lr" => self.lr = parse_num(key, v)?,
            "optimizer" => self.optimizer = v.to_string(),
            "loss" => self.loss = v.to_string(),
            "seed" => self.seed = parse_num(key, v)?,
            "seeds" => self.seeds = parse_list(key, v)?,
            "precision" => {
                self.precision = match v {
                    "f32" => Precision::F32,
                    "f64" => Precision::F64,
                    _ => return Err(Error::Config(format!("precision: expected f32 or f64, got {v:?}"))),
                }
            }
            "out" => self.out = PathBuf::from(v),
            other => return Err(Error::Config(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `key=value` document; `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value, got {line:?}", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k}={v}");
        }
        s
    }

    fn entries(&self) -> Vec<(&'static str, String)> {
        vec![
            ("data", self.data.clone()),
            ("per_class", self.per_class.to_string()),
            ("image_size", self.image_size.to_string()),
            ("data_seed", self.data_seed.to_string()),
            ("train_fraction", self.train_fraction.to_string()),
            ("mcfm", self.mcfm.to_string()),
            ("factors", list(&self.factors)),
            ("features_per_branch", self.features_per_branch.to_string()),
            ("kernel_size", self.kernel_size.to_string()),
            ("gate_hidden", self.gate_hidden.to_string()),
            ("stage_widths", list(&self.stage_widths)),
            ("blocks_per_stage", self.blocks_per_stage.to_string()),
            ("stem_stride", self.stem_stride.to_string()),
            ("batch", self.batch.to_string()),
            ("epochs", self.epochs.to_string()),
            ("lr", self.lr.to_string()),
            ("optimizer", self.optimizer.clone()),
            ("loss", self.loss.clone()),
            ("seed", self.seed.to_string()),
            ("seeds", list(&self.seeds)),
            ("precision", self.precision.to_string()),
            ("out", self.out.display().to_string()),
        ]
    }

    /// Hex SHA-256 of every setting except `seed` and `out`, so seed-paired
    /// runs share a prefix and the output location does not change it.
    pub fn hash(&self) -> String {
        let mut h = Sha256::new();
        for (k, v) in self.entries() {
            if k != "seed" && k != "out" {
                h.update(format!("{k}={v}\n"));
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    /// `<out>/<hash prefix>-seed<seed>`
    pub fn run_dir(&self) -> PathBuf {
        self.out.join(format!("{}-seed{}", &self.hash()[..12], self.seed))
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch,
            epochs: self.epochs,
            lr: self.lr,
            optimizer: self.optimizer.clone(),
            loss: self.loss.clone(),
            seed: self.seed,
        }
    }

    pub fn mcfm_config(&self) -> McfmConfig {
        McfmConfig {
            factors: self.factors.clone(),
            features_per_branch: self.features_per_branch,
            kernel_size: self.kernel_size,
            gate_hidden: self.gate_hidden,
        }
    }

    pub fn model_config(&self, num_classes: usize, mcfm: bool) -> ModelConfig {
        let backbone = BackboneConfig {
            in_channels: 1,
            stage_widths: self.stage_widths.clone(),
            blocks_per_stage: self.blocks_per_stage,
            num_classes,
            stem_stride: self.stem_stride,
        };
        if mcfm {
            ModelConfig::mcfm_net(self.mcfm_config(), backbone)
        } else {
            ModelConfig::plain_net(backbone)
        }
    }

    pub fn split_spec(&self) -> SplitSpec {
        SplitSpec::new(self.train_fraction, self.seed)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::Config(m));
        if self.image_size < 8 {
            return bad(format!("image_size must be >= 8, got {}", self.image_size));
        }
        if self.per_class == 0 {
            return bad("per_class must be >= 1".into());
        }
        if self.seeds.is_empty() {
            return bad("seeds must list at least one seed".into());
        }
        self.split_spec().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.train_config().validate().map_err(|e| Error::Config(e.to_string()))?;
        self.model_config(2, self.mcfm).validate().map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load_dataset(&self) -> Result<Dataset> {
        if self.data == "synth" {
            synth_dataset(self.per_class, self.image_size, self.data_seed)
        } else {
            load_folder(&self.data, (self.image_size, self.image_size))
        }
    }
}

/// Process exit code for a failed command: 1 usage or config, 2 data, I/O or
/// checkpoint, 3 numeric failure.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonFinite { .. } | Error::Diverged { .. } => 3,
        Error::Data { .. } | Error::Io(_) | Error::Json(_) | Error::Checkpoint(_) | Error::Shape { .. } => 2,
        Error::InvalidArgument(_) | Error::Config(_) | Error::Backward(_) => 1,
    }
}

#[derive(Parser, Debug)]
#[command(name = "mcfm", version, about = "Multi-contrast fusion classifiers: synthesize, train, evaluate, ablate, inspect")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write the synthetic dataset as PGM class folders plus manifest.json into --out.
    /// Here --seed is the generator seed.
    Synth(Shared),
    /// Split, train, evaluate on the held-out part; artifacts go to <out>/<hash>-seed<seed>.
    Train(Shared),
    /// Re-evaluate a checkpoint on the held-out split recorded in it.
    Eval {
        checkpoint: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
    /// Train MCFM-Net and Plain-Net for every seed and tabulate.
    Ablate(Shared),
    /// List parameters, totals and MCFM overhead; with --data, mean attention per branch.
    Inspect {
        checkpoint: PathBuf,
        #[command(flatten)]
        shared: Shared,
    },
}

#[derive(Args, Debug, Default)]
struct Shared {
    /// key=value config file
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<String>,
    #[arg(long)]
    out: Option<String>,
    /// Comma-separated contrast factors
    #[arg(long)]
    factors: Option<String>,
    /// Train Plain-Net (no MCFM front end)
    #[arg(long)]
    no_mcfm: bool,
    #[arg(long)]
    per_class: Option<String>,
    #[arg(long)]
    image_size: Option<String>,
    #[arg(long)]
    epochs: Option<String>,
    #[arg(long)]
    batch: Option<String>,
    #[arg(long)]
    lr: Option<String>,
    /// `synth` or a folder with one subdirectory of .pgm files per class
    #[arg(long)]
    data: Option<String>,
    /// Comma-separated seeds for `ablate`
    #[arg(long)]
    seeds: Option<String>,
    /// f32 or f64
    #[arg(long)]
    precision: Option<String>,
    /// Any other setting, e.g. --set stage_widths=8,16
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Shared {
    /// Layers the config file and then the flags over `base`.
    fn resolve(&self, mut cfg: RunConfig, seed_key: &str) -> Result<RunConfig> {
        if let Some(path) = &self.config {
            let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            cfg.apply_text(&text)?;
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("--set expects KEY=VALUE, got {kv:?}")))?;
            cfg.set(k, v)?;
        }
        let flags = [
            (seed_key, &self.seed),
            ("out", &self.out),
            ("factors", &self.factors),
            ("per_class", &self.per_class),
            ("image_size", &self.image_size),
            ("epochs", &self.epochs),
            ("batch", &self.batch),
            ("lr", &self.lr),
            ("data", &self.data),
            ("seeds", &self.seeds),
            ("precision", &self.precision),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                cfg.set(k, v)?;
            }
        }
        if self.no_mcfm {
            cfg.mcfm = false;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, S>(args: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(cmd: Command) -> Result<()> {
    match cmd {
        Command::Synth(s) => cmd_synth(&s.resolve(RunConfig::default(), "data_seed")?),
        Command::Train(s) => {
            let cfg = s.resolve(RunConfig::default(), "seed")?;
            match cfg.precision {
                Precision::F32 => cmd_train::<f32>(&cfg),
                Precision::F64 => cmd_train::<f64>(&cfg),
            }
            .map(|_| ())
        }
        Command::Eval { checkpoint, shared } => cmd_eval(&checkpoint, &shared),
        Command::Ablate(s) => {
            let cfg = s.resolve(RunConfig::default(), "seed")?;
            match cfg.precision {
                Precision::F32 => cmd_ablate::<f32>(&cfg),
                Precision::F64 => cmd_ablate::<f64>(&cfg),
            }
            .map(|_| ())
        }
        Command::Inspect { checkpoint, shared } => cmd_inspect(&checkpoint, &shared),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::data(dir, e.to_string()))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::data(path, e.to_string()))
}

fn cmd_synth(cfg: &RunConfig) -> Result<()> {
    let ds = synth_dataset(cfg.per_class, cfg.image_size, cfg.data_seed)?;
    // one image per class cannot be stratified; the manifest then records a plain shuffle
    let spec = SplitSpec { stratified: cfg.per_class >= 2, ..cfg.split_spec() };
    write_folder(&ds, &cfg.out, &spec)?;
    write_text(&cfg.out.join(RESOLVED_CONFIG), &cfg.to_text())?;
    for (name, n) in ds.class_names().iter().zip(ds.class_counts()) {
        println!("{name}: {n}");
    }
    println!("wrote {} images to {}", ds.len(), cfg.out.display());
    Ok(())
}

/// Runs the `train` command for `cfg` and returns the run directory.
pub fn cmd_train<T: Real>(cfg: &RunConfig) -> Result<PathBuf> {
    let ds = cfg.load_dataset()?;
    let (train_set, test_set) = split(&ds, &cfg.split_spec())?;
    let dir = cfg.run_dir();
    create_dir(&dir)?;
    write_text(&dir.join(RESOLVED_CONFIG), &cfg.to_text())?;
    println!("run directory {}", dir.display());
    let mut model = ModelBundle::<T>::new(cfg.model_config(ds.num_classes(), cfg.mcfm), cfg.seed)?;
    let epochs = cfg.epochs;
    let history = train_with(&mut model, &train_set, &cfg.train_config(), &mut |r| {
        println!("epoch {}/{epochs} loss {:.6} accuracy {:.4}", r.epoch, r.loss, r.accuracy)
    })?;
    write_text(&dir.join("history.csv"), &history_csv(&history))?;
    let mut ckpt = model.to_checkpoint()?;
    ckpt.push_text(RUN_CONFIG_RECORD, &cfg.to_text());
    ckpt.save(dir.join(CHECKPOINT_FILE))?;
    let report = evaluate(&model, &test_set)?;
    report.write(&dir)?;
    print!("{}", report.summary());
    Ok(dir)
}

fn stored_config(ckpt: &Checkpoint) -> Result<RunConfig> {
    let mut cfg = RunConfig::default();
    if let Some(text) = ckpt.text(RUN_CONFIG_RECORD) {
        cfg.apply_text(text)?;
    }
    Ok(cfg)
}

fn cmd_eval(path: &Path, shared: &Shared) -> Result<()> {
    let ckpt = Checkpoint::load(path)?;
    let cfg = shared.resolve(stored_config(&ckpt)?, "seed")?;
    let out = match &shared.out {
        Some(o) => PathBuf::from(o),
        None => path.parent().unwrap_or(Path::new(".")).join("eval"),
    };
    match ckpt.dtype() {
        Some(DType::F32) => eval_with::<f32>(&ckpt, &cfg, &out),
        _ => eval_with::<f64>(&ckpt, &cfg, &out),
    }
}

fn eval_with<T: Real>(ckpt: &Checkpoint, cfg: &RunConfig, out: &Path) -> Result<()> {
    let model = ModelBundle::<T>::from_checkpoint(ckpt)?;
    let (_, test_set) = split(&cfg.load_dataset()?, &cfg.split_spec())?;
    let report = evaluate(&model, &test_set)?;
    create_dir(out)?;
    write_text(&out.join(RESOLVED_CONFIG), &cfg.to_text())?;
    report.write(out)?;
    print!("{}", report.summary());
    println!("wrote {}", out.display());
    Ok(())
}

/// Runs MCFM-Net and Plain-Net over `cfg.seeds` and writes `ablation.json`
/// and `ablation.txt`; returns the output directory.
pub fn cmd_ablate<T: Real>(cfg: &RunConfig) -> Result<PathBuf> {
    let ds = cfg.load_dataset()?;
    let dir = cfg.out.join(format!("{}-ablate", &cfg.hash()[..12]));
    create_dir(&dir)?;
    write_text(&dir.join(RESOLVED_CONFIG), &cfg.to_text())?;
    let c = ds.num_classes();
    let models = [
        AblationModel { name: "MCFM-Net".into(), config: cfg.model_config(c, true) },
        AblationModel { name: "Plain-Net".into(), config: cfg.model_config(c, false) },
    ];
    let report = run_ablation::<T>(&ds, &models, &cfg.train_config(), &cfg.seeds, cfg.train_fraction, &mut |l| {
        println!("{l}")
    })?;
    write_text(&dir.join("ablation.json"), &report.to_json()?)?;
    write_text(&dir.join("ablation.txt"), &report.table())?;
    print!("\n{}", report.table());
    Ok(dir)
}

/// Parameter accounting of a checkpoint.
#[derive(Clone, Debug, PartialEq)]
pub struct Inspection {
    /// `(name, shape, count)` for every tensor, in checkpoint order.
    pub tensors: Vec<(String, Vec<usize>, usize)>,
    pub total: usize,
    pub mcfm_module: usize,
    /// Parameters of the same backbone reading the raw image.
    pub plain_total: usize,
    /// `total - plain_total`: the module plus the widened stem.
    pub overhead: usize,
    /// Mean attention weight per branch over a probe batch.
    pub attention: Option<Vec<f64>>,
}

impl Inspection {
    pub fn overhead_percent(&self) -> f64 {
        100.0 * self.overhead as f64 / self.plain_total as f64
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (name, shape, n) in &self.tensors {
            let _ = writeln!(s, "{name:<36} {:<18} {n:>9}", format!("{shape:?}"));
        }
        let _ = writeln!(s, "total parameters       {}", self.total);
        let _ = writeln!(s, "mcfm module            {}", self.mcfm_module);
        let _ = writeln!(s, "plain backbone         {}", self.plain_total);
        let _ = writeln!(s, "mcfm overhead          {} ({:.3}% of plain backbone)", self.overhead, self.overhead_percent());
        if let Some(a) = &self.attention {
            let vals: Vec<String> = a.iter().map(|v| format!("{v:.6}")).collect();
            let _ = writeln!(s, "mean attention         {}", vals.join(" "));
        }
        s
    }
}

/// Accounting for `ckpt`; with `probe`, also the mean attention over its
/// first batch.
pub fn inspect(ckpt: &Checkpoint, probe: Option<&Dataset>) -> Result<Inspection> {
    let model = ModelBundle::<f64>::from_checkpoint(ckpt)?;
    let tensors = ckpt.tensor_records().map(|r| (r.name.clone(), r.shape.clone(), r.data.len())).collect();
    let plain_total = ModelConfig::plain_net(model.config.backbone.clone()).total_param_count();
    let total = ckpt.param_count();
    let attention = match (probe, &model.mcfm) {
        (Some(ds), Some(_)) => {
            let n = ds.len().min(EVAL_BATCH);
            let probe = ds.subset(&(0..n).collect::<Vec<_>>());
            let rows = predict_scores(&model, &probe)?.attention.expect("mcfm model yields attention");
            let k = rows[0].len();
            Some((0..k).map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect())
        }
        _ => None,
    };
    Ok(Inspection {
        tensors,
        total,
        mcfm_module: model.mcfm_param_count(),
        plain_total,
        overhead: total.saturating_sub(plain_total),
        attention,
    })
}

fn cmd_inspect(path: &Path, shared: &Shared) -> Result<()> {
    let ckpt = Checkpoint::load(path)?;
    let probe = match &shared.data {
        Some(_) => Some(shared.resolve(stored_config(&ckpt)?, "seed")?.load_dataset()?),
        None => None,
    };
    print!("{}", inspect(&ckpt, probe.as_ref())?.to_text());
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_round_trip() {
        let mut cfg = RunConfig { factors: vec![1.0, 1.25], stage_widths: vec![4, 8], ..Default::default() };
        cfg.precision = Precision::F64;
        let mut back = RunConfig { per_class: 1, ..Default::default() };
        back.apply_text(&cfg.to_text()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn defaults_match_training_table() {
        let c = RunConfig::default();
        assert_eq!((c.batch, c.epochs, c.lr), (64, 20, 0.001));
        assert_eq!(list(&c.factors), "1,1.3,1.6,2");
    }

    #[test]
    fn comments_and_unknown_keys() {
        let mut c = RunConfig::default();
        c.apply_text("# note\nepochs = 3  # inline\n\n").unwrap();
        assert_eq!(c.epochs, 3);
        assert!(matches!(c.apply_text("epoch=3"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("epochs"), Err(Error::Config(_))));
        assert!(matches!(c.apply_text("lr=fast"), Err(Error::Config(_))));
    }

    #[test]
    fn hash_ignores_seed_and_out_only() {
        let a = RunConfig::default();
        let b = RunConfig { seed: 9, out: "elsewhere".into(), ..Default::default() };
        let c = RunConfig { mcfm: false, ..Default::default() };
        assert_eq!(a.hash(), b.hash());
        assert_ne!(a.hash(), c.hash());
        assert!(b.run_dir().ends_with(format!("{}-seed9", &a.hash()[..12])));
    }

    #[test]
    fn flags_override_file_override_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let file = dir.path().join("c.txt");
        fs::write(&file, "epochs=5\nlr=0.01\n").unwrap();
        let s = Shared { config: Some(file), epochs: Some("7".into()), ..Default::default() };
        let c = s.resolve(RunConfig::default(), "seed").unwrap();
        assert_eq!((c.epochs, c.lr, c.batch), (7, 0.01, 64));
    }

    #[test]
    fn exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::data("p", "x")), 2);
        assert_eq!(exit_code(&Error::Diverged { epoch: 1, loss: f64::NAN }), 3);
        assert_eq!(run(["mcfm", "train", "--epochs", "zero"]), 1);
        assert_eq!(run(["mcfm", "frobnicate"]), 1);
        assert_eq!(run(["mcfm", "eval", "/nonexistent/model.ckpt"]), 2);
    }
}
