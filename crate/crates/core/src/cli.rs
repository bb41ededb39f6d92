//! Command-line front end. [`run`] parses argv, executes one subcommand and
//! returns the process exit code.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, CommandFactory, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::data::{
    load_csv, prepare_splits, split, synth_generate, write_csv, FeatureFrame, LoadOptions, SchemaConfig, SplitSpec,
    Splits, SynthPreset,
};
use crate::error::{Error, ErrorKind, Result};
use crate::importance::permutation_importance;
use crate::metrics::{self, Metric, MetricsRecord};
use crate::model::{AnyModel, Checkpoint, ModelConfig, Variant};
use crate::train::{
    ablate, predict_frame, sweep_lr, sweep_opt, train, train_baseline_logistic, EarlyStop, OptimizerKind, RunReport,
    SweepTable, TrainConfig, DEFAULT_LR_GRID,
};

/// Directory searched for `cs-training.csv` when `--data` is absent.
pub const DATA_DIR_ENV: &str = "CREDFORMER_DATA_DIR";
pub const DEFAULT_DATA_FILE: &str = "cs-training.csv";

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

pub fn exit_code(kind: ErrorKind) -> i32 {
    match kind {
        ErrorKind::Usage => EXIT_USAGE,
        ErrorKind::Data => EXIT_DATA,
        ErrorKind::Numeric => EXIT_NUMERIC,
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PrepConfig {
    /// Lower and upper clipping quantiles, fitted on the train split.
    pub winsor: Option<[f64; 2]>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct LoadConfig {
    /// Keep a seeded random subset of this many rows.
    pub subsample: Option<usize>,
}

/// Everything one experiment needs besides the data file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub schema: SchemaConfig,
    pub split: SplitSpec,
    pub prep: PrepConfig,
    pub load: LoadConfig,
}

impl ExperimentConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    pub fn validate(&self) -> Result<()> {
        self.train.validate()?;
        self.split.validate()?;
        if let Some([lo, hi]) = self.prep.winsor {
            if !(0.0..hi).contains(&lo) || hi > 1.0 {
                return Err(Error::Config(format!("winsor quantiles [{lo}, {hi}] must satisfy 0 <= lo < hi <= 1")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Parser)]
#[command(name = "credformer", version, about = "Hybrid CNN + Transformer credit-default classifier")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Train one model and write its report, curves and checkpoint.
    Train {
        #[command(flatten)]
        run: RunArgs,
        /// Train the logistic-regression baseline instead.
        #[arg(long)]
        baseline: bool,
    },
    /// Score a labelled file with a saved checkpoint.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[command(flatten)]
        io: IoArgs,
    },
    /// One run per learning rate.
    SweepLr {
        #[command(flatten)]
        run: RunArgs,
        /// Comma-separated learning rates.
        #[arg(long, value_delimiter = ',')]
        lrs: Vec<f64>,
    },
    /// Every optimizer crossed with every learning rate.
    SweepOpt {
        #[command(flatten)]
        run: RunArgs,
        #[arg(long, value_delimiter = ',')]
        lrs: Vec<f64>,
    },
    /// cnn_only, transformer_only and hybrid on the same splits.
    Ablate {
        #[command(flatten)]
        run: RunArgs,
    },
    /// Permutation importance on the test split.
    Importance {
        #[command(flatten)]
        run: RunArgs,
        /// Use this checkpoint instead of training first.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long, default_value_t = 5)]
        repeats: usize,
        #[arg(long, default_value = "auc")]
        metric: Metric,
    },
    /// Write a synthetic dataset and its Bayes-score sidecar.
    Synth {
        #[arg(long)]
        n: usize,
        #[arg(long)]
        spec: SynthPreset,
        #[arg(long, default_value_t = 10)]
        features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Collect the report.json files of earlier runs into one table.
    Report {
        /// Run directories.
        #[arg(long, num_args = 1.., required = true)]
        runs: Vec<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Args)]
struct IoArgs {
    /// Merged JSON config (model, train, schema, split, prep, load).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Input CSV. Defaults to $CREDFORMER_DATA_DIR/cs-training.csv.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Output directory, created if absent.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Args)]
struct RunArgs {
    #[command(flatten)]
    io: IoArgs,
    /// Sets the model, train and split seeds.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    subsample: Option<usize>,
    #[arg(long)]
    variant: Option<Variant>,
    #[arg(long)]
    optimizer: Option<OptimizerKind>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    batch_size: Option<usize>,
    /// Early-stopping patience on validation AUC.
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long, conflicts_with = "patience")]
    no_early_stop: bool,
    #[arg(long)]
    pos_weight: Option<f64>,
}

impl RunArgs {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.io.config {
            Some(p) => ExperimentConfig::from_file(p)?,
            None => ExperimentConfig::default(),
        };
        if let Some(s) = self.seed {
            cfg.model.seed = s;
            cfg.train.seed = s;
            cfg.split.seed = s;
        }
        if self.subsample.is_some() {
            cfg.load.subsample = self.subsample;
        }
        if let Some(v) = self.variant {
            cfg.model.variant = v;
        }
        if let Some(o) = self.optimizer {
            cfg.train.optimizer = o;
        }
        if let Some(lr) = self.lr {
            cfg.train.learning_rate = lr;
        }
        if let Some(e) = self.epochs {
            cfg.train.epochs = e;
        }
        if let Some(b) = self.batch_size {
            cfg.train.batch_size = b;
        }
        if let Some(p) = self.patience {
            let metric = cfg.train.early_stop.map_or(Metric::Auc, |e| e.metric);
            cfg.train.early_stop = Some(EarlyStop { metric, patience: p });
        }
        if self.no_early_stop {
            cfg.train.early_stop = None;
        }
        if let Some(w) = self.pos_weight {
            cfg.train.pos_weight = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Seeds {
    pub model: u64,
    pub train: u64,
    pub split: u64,
}

/// Everything needed to replay a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub args: Vec<String>,
    pub config: Option<ExperimentConfig>,
    pub seeds: Option<Seeds>,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<String>,
    pub wall_clock_secs: f64,
}

/// Result of `eval`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: String,
    pub n_rows: usize,
    pub metrics: MetricsRecord,
}

/// Sidecar written next to a synthetic CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BayesSidecar {
    pub preset: SynthPreset,
    pub n: usize,
    pub n_features: usize,
    pub seed: u64,
    /// AUC of the true generator logits on the drawn labels.
    pub bayes_auc: f64,
    pub bayes_ks: f64,
}

pub fn bayes_sidecar_path(csv: &Path) -> PathBuf {
    let mut name = csv.file_name().map(OsString::from).unwrap_or_default();
    name.push(".bayes.json");
    csv.with_file_name(name)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub run: String,
    pub label: String,
    pub test: Option<MetricsRecord>,
}

fn sha256_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn data_path(arg: &Option<PathBuf>) -> Result<PathBuf> {
    match arg {
        Some(p) => Ok(p.clone()),
        None => match std::env::var_os(DATA_DIR_ENV) {
            Some(dir) => Ok(PathBuf::from(dir).join(DEFAULT_DATA_FILE)),
            None => Err(Error::Argument(format!("--data not given and {DATA_DIR_ENV} is not set"))),
        },
    }
}

/// Accumulates the outputs and inputs of one invocation.
struct Session {
    out: PathBuf,
    command: String,
    args: Vec<String>,
    started: Instant,
    inputs: Vec<InputFile>,
    outputs: Vec<String>,
}

impl Session {
    fn new(out: &Path, command: &str, args: Vec<String>) -> Result<Self> {
        fs::create_dir_all(out).map_err(|e| Error::io(out, e))?;
        Ok(Self {
            out: out.to_path_buf(),
            command: command.into(),
            args,
            started: Instant::now(),
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(InputFile {
            path: path.display().to_string(),
            sha256: sha256_file(path)?,
        });
        Ok(())
    }

    fn write(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        self.outputs.push(name.into());
        Ok(())
    }

    fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    fn finish(mut self, config: Option<&ExperimentConfig>) -> Result<()> {
        let manifest = Manifest {
            tool: env!("CARGO_PKG_NAME").into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            args: self.args.clone(),
            config: config.cloned(),
            seeds: config.map(|c| Seeds {
                model: c.model.seed,
                train: c.train.seed,
                split: c.split.seed,
            }),
            inputs: std::mem::take(&mut self.inputs),
            outputs: std::mem::take(&mut self.outputs),
            wall_clock_secs: self.started.elapsed().as_secs_f64(),
        };
        let path = self.out.join("manifest.json");
        let text = serde_json::to_string_pretty(&manifest)? + "\n";
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Loads the data file named by `io` and resolves the schema in `cfg` against
/// its header.
fn load(io: &IoArgs, cfg: &mut ExperimentConfig, session: &mut Session) -> Result<FeatureFrame> {
    let path = data_path(&io.data)?;
    let opts = LoadOptions {
        subsample: cfg.load.subsample,
        seed: cfg.split.seed,
    };
    let (frame, schema) = load_csv(&path, &cfg.schema, opts)?;
    cfg.schema = schema;
    session.input(&path)?;
    if let Some(c) = &io.config {
        session.input(c)?;
    }
    Ok(frame)
}

fn prepared(io: &IoArgs, cfg: &mut ExperimentConfig, session: &mut Session) -> Result<(Splits, crate::data::Preprocessor)> {
    let frame = load(io, cfg, session)?;
    let winsor = cfg.prep.winsor.map(|[lo, hi]| (lo, hi));
    prepare_splits(&frame, &cfg.split, cfg.schema.imputation, winsor)
}

fn write_run(session: &mut Session, report: &RunReport, checkpoint: &Checkpoint) -> Result<()> {
    session.write_json("report.json", report)?;
    session.write("curves.csv", report.curves_csv().as_bytes())?;
    session.write("checkpoint.bin", &checkpoint.to_bytes()?)
}

fn write_table(session: &mut Session, table: &SweepTable) -> Result<()> {
    session.write_json("report.json", table)?;
    session.write(&format!("{}.csv", table.kind), table.to_csv().as_bytes())
}

fn grid(lrs: &[f64]) -> Vec<f64> {
    if lrs.is_empty() {
        DEFAULT_LR_GRID.to_vec()
    } else {
        lrs.to_vec()
    }
}

fn execute(command: Command, args: Vec<String>) -> Result<()> {
    match command {
        Command::Train { run, baseline } => {
            let mut cfg = run.resolve()?;
            let mut s = Session::new(&run.io.out, "train", args)?;
            let (splits, prep) = prepared(&run.io, &mut cfg, &mut s)?;
            let (model, report) = if baseline {
                let (m, r) = train_baseline_logistic(&cfg.train, &splits)?;
                (AnyModel::Logistic(m), r)
            } else {
                let (m, r) = train(&cfg.model, &cfg.train, &splits)?;
                (AnyModel::Hybrid(m), r)
            };
            let ckpt = Checkpoint {
                model,
                preprocessor: Some(prep),
            };
            write_run(&mut s, &report, &ckpt)?;
            log::info!("test metrics: {:?}", report.final_metrics.test);
            s.finish(Some(&cfg))
        }
        Command::Eval { checkpoint, io } => {
            let mut cfg = match &io.config {
                Some(p) => ExperimentConfig::from_file(p)?,
                None => ExperimentConfig::default(),
            };
            let mut s = Session::new(&io.out, "eval", args)?;
            let ckpt = Checkpoint::load(&checkpoint)?;
            s.input(&checkpoint)?;
            let prep = ckpt
                .preprocessor
                .as_ref()
                .ok_or_else(|| Error::Data("checkpoint carries no preprocessor".into()))?;
            let frame = prep.apply(&load(&io, &mut cfg, &mut s)?)?;
            let scores = predict_frame(&ckpt.model, &frame)?;
            let report = EvalReport {
                model: ckpt.model.kind().into(),
                n_rows: frame.n_rows(),
                metrics: metrics::evaluate(&scores, frame.labels())?,
            };
            s.write_json("report.json", &report)?;
            s.finish(Some(&cfg))
        }
        Command::SweepLr { run, lrs } => {
            let mut cfg = run.resolve()?;
            let mut s = Session::new(&run.io.out, "sweep-lr", args)?;
            let (splits, _) = prepared(&run.io, &mut cfg, &mut s)?;
            let table = sweep_lr(&cfg.model, &cfg.train, &grid(&lrs), &splits)?;
            write_table(&mut s, &table)?;
            s.finish(Some(&cfg))
        }
        Command::SweepOpt { run, lrs } => {
            let mut cfg = run.resolve()?;
            let mut s = Session::new(&run.io.out, "sweep-opt", args)?;
            let (splits, _) = prepared(&run.io, &mut cfg, &mut s)?;
            let table = sweep_opt(&cfg.model, &cfg.train, &grid(&lrs), &splits)?;
            write_table(&mut s, &table)?;
            s.finish(Some(&cfg))
        }
        Command::Ablate { run } => {
            let mut cfg = run.resolve()?;
            let mut s = Session::new(&run.io.out, "ablate", args)?;
            let (splits, _) = prepared(&run.io, &mut cfg, &mut s)?;
            let table = ablate(&cfg.model, &cfg.train, &splits)?;
            write_table(&mut s, &table)?;
            s.finish(Some(&cfg))
        }
        Command::Importance {
            run,
            checkpoint,
            repeats,
            metric,
        } => {
            let mut cfg = run.resolve()?;
            let mut s = Session::new(&run.io.out, "importance", args)?;
            let (model, test) = match checkpoint {
                Some(path) => {
                    let ckpt = Checkpoint::load(&path)?;
                    s.input(&path)?;
                    let prep = ckpt
                        .preprocessor
                        .ok_or_else(|| Error::Data("checkpoint carries no preprocessor".into()))?;
                    let raw = split(&load(&run.io, &mut cfg, &mut s)?, &cfg.split)?;
                    (ckpt.model, prep.apply(&raw.test)?)
                }
                None => {
                    let (splits, prep) = prepared(&run.io, &mut cfg, &mut s)?;
                    let (m, _) = train(&cfg.model, &cfg.train, &splits)?;
                    let ckpt = Checkpoint {
                        model: AnyModel::Hybrid(m),
                        preprocessor: Some(prep),
                    };
                    s.write("checkpoint.bin", &ckpt.to_bytes()?)?;
                    (ckpt.model, splits.test)
                }
            };
            let report = permutation_importance(&model, &test, metric, repeats, cfg.train.seed)?;
            s.write_json("report.json", &report)?;
            s.write("importance.csv", report.to_csv().as_bytes())?;
            s.finish(Some(&cfg))
        }
        Command::Synth {
            n,
            spec,
            features,
            seed,
            out,
        } => {
            let started = Instant::now();
            let (frame, logits) = synth_generate(n, features, seed, &spec.spec(features))?;
            if let Some(dir) = out.parent().filter(|d| !d.as_os_str().is_empty()) {
                fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
            }
            write_csv(&frame, &out)?;
            let sidecar = BayesSidecar {
                preset: spec,
                n,
                n_features: features,
                seed,
                bayes_auc: metrics::auc(&logits, frame.labels())?,
                bayes_ks: metrics::ks(&logits, frame.labels())?,
            };
            let side = bayes_sidecar_path(&out);
            let text = serde_json::to_string_pretty(&sidecar)? + "\n";
            fs::write(&side, text).map_err(|e| Error::io(&side, e))?;
            log::info!("wrote {} rows in {:.2}s", n, started.elapsed().as_secs_f64());
            Ok(())
        }
        Command::Report { runs, out } => {
            let mut s = Session::new(&out, "report", args)?;
            let mut rows = Vec::new();
            for dir in &runs {
                let path = dir.join("report.json");
                s.input(&path)?;
                rows.extend(summarize(dir, &path)?);
            }
            let mut csv = String::from("run,label,acc,auc,ks\n");
            for r in &rows {
                let m = r.test.as_ref();
                let cell = |f: fn(&MetricsRecord) -> f64| m.map(|m| format!("{:?}", f(m))).unwrap_or_default();
                csv.push_str(&format!(
                    "{},{},{},{},{}\n",
                    r.run,
                    r.label,
                    cell(|m| m.acc),
                    cell(|m| m.auc),
                    cell(|m| m.ks)
                ));
            }
            s.write_json("report.json", &rows)?;
            s.write("summary.csv", csv.as_bytes())?;
            s.finish(None)
        }
    }
}

/// Reads one run's report, whichever subcommand produced it.
fn summarize(dir: &Path, path: &Path) -> Result<Vec<SummaryRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let run = dir.display().to_string();
    if let Ok(r) = serde_json::from_str::<RunReport>(&text) {
        return Ok(vec![SummaryRow {
            run,
            label: r.model,
            test: Some(r.final_metrics.test),
        }]);
    }
    if let Ok(t) = serde_json::from_str::<SweepTable>(&text) {
        return Ok(t
            .rows
            .into_iter()
            .map(|r| SummaryRow {
                run: run.clone(),
                label: r.label,
                test: r.metrics.map(|m| m.test),
            })
            .collect());
    }
    if let Ok(e) = serde_json::from_str::<EvalReport>(&text) {
        return Ok(vec![SummaryRow {
            run,
            label: format!("eval:{}", e.model),
            test: Some(e.metrics),
        }]);
    }
    Err(Error::Data(format!("{} is not a train, sweep or eval report", path.display())))
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// exit code. Errors are printed to standard error.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind as K;
            if matches!(e.kind(), K::DisplayHelp | K::DisplayVersion) {
                let _ = e.print();
                return EXIT_OK;
            }
            eprintln!("{e}");
            let mut cmd = Cli::command();
            let sub = argv.get(1).and_then(|a| a.to_str()).map(str::to_owned);
            let help = match sub.and_then(|name| cmd.find_subcommand_mut(&name).cloned()) {
                Some(mut sc) => sc.render_help(),
                None => cmd.render_help(),
            };
            eprintln!("{help}");
            return EXIT_USAGE;
        }
    };
    let args = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match execute(cli.command, args) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(e.kind())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn unknown_flag_is_usage_error() {
        assert_eq!(run(["credformer", "train", "--bogus"]), EXIT_USAGE);
        assert_eq!(run(["credformer"]), EXIT_USAGE);
    }

    #[test]
    fn help_exits_zero() {
        assert_eq!(run(["credformer", "ablate", "--help"]), EXIT_OK);
    }

    #[test]
    fn flags_override_config() {
        let cli = Cli::try_parse_from([
            "credformer", "train", "--out", "x", "--seed", "9", "--lr", "0.002", "--variant", "cnn_only",
            "--no-early-stop",
        ])
        .unwrap();
        let Command::Train { run, .. } = cli.command else { panic!() };
        let cfg = run.resolve().unwrap();
        assert_eq!((cfg.model.seed, cfg.train.seed, cfg.split.seed), (9, 9, 9));
        assert_eq!(cfg.train.learning_rate, 0.002);
        assert_eq!(cfg.model.variant, Variant::CnnOnly);
        assert!(cfg.train.early_stop.is_none());
    }

    #[test]
    fn partial_config_fills_defaults_and_rejects_unknown_keys() {
        let cfg: ExperimentConfig = serde_json::from_str(r#"{"train": {"epochs": 3}}"#).unwrap();
        assert_eq!(cfg.train.epochs, 3);
        assert_eq!(cfg.model, ModelConfig::default());
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"trian": {}}"#).is_err());
    }

    #[test]
    fn bad_winsor_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.prep.winsor = Some([0.9, 0.1]);
        assert!(matches!(cfg.validate(), Err(Error::Config(_))));
    }

    #[test]
    fn sidecar_sits_next_to_csv() {
        assert_eq!(bayes_sidecar_path(Path::new("a/b.csv")), Path::new("a/b.csv.bayes.json"));
    }

    #[test]
    fn exit_codes_follow_error_kind() {
        assert_eq!(exit_code(Error::Config("x".into()).kind()), 1);
        assert_eq!(exit_code(Error::Schema("x".into()).kind()), 2);
        assert_eq!(exit_code(Error::Numeric("x".into()).kind()), 3);
    }
}
