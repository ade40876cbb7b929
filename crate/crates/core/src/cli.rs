//! The `glmos` command line: `fit`, `predict`, `cv` and `plot`.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{RunConfig, VariantConfig};
use crate::data::{read_table_path, Dataset, Family, ReadOptions};
use crate::error::{Error, Result};
use crate::eval::{classify, csv_field, cross_validate, write_cv_table, CvOptions, Metric, TableRow};
use crate::model::{fit_model, FittedModel, Method};

#[derive(Debug, Parser)]
#[command(name = "glmos", version, about = "Logistic regression with optimal scaling of predictors")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit one model and write the artifact, quantification table and fit log.
    Fit(FitArgs),
    /// Score a data file with a saved model.
    Predict(PredictArgs),
    /// Cross-validate every variant of a config.
    Cv(CvArgs),
    /// Write transformation plots and plot-data tables for a saved model.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct DataArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// Data file; overrides the path in the config.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Overrides `data.merge_min_count`.
    #[arg(long)]
    pub merge_min_count: Option<usize>,
}

#[derive(Debug, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output directory.
    #[arg(long, default_value = "glmos-out")]
    pub out: PathBuf,
    /// Fit this variant instead of the base levels.
    #[arg(long)]
    pub variant: Option<String>,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Config supplying the delimiter and missing-value tokens.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CvArgs {
    #[command(flatten)]
    pub data: DataArgs,
    /// Output file; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub metric: Option<Metric>,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[arg(long)]
    pub model: PathBuf,
    /// Output directory.
    #[arg(long, default_value = "glmos-plots")]
    pub out: PathBuf,
    /// Leave out the generation-time comment so reruns are byte-identical.
    #[arg(long)]
    pub no_timestamp: bool,
}

/// Parse the process arguments, run, and map errors to exit status 2 (configuration) or 1.
pub fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config_error() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Fit(a) => cmd_fit(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Cv(a) => cmd_cv(a),
        Command::Plot(a) => cmd_plot(a),
    }
}

struct Loaded {
    config: RunConfig,
    data: Dataset,
    merge_notes: Vec<String>,
}

fn load(args: &DataArgs) -> Result<Loaded> {
    let mut config = RunConfig::load(&args.config)?;
    let base = args.config.parent().unwrap_or(Path::new("."));
    if let Some(path) = &args.data {
        config.data.path = std::path::absolute(path).map_err(|e| Error::io(path, e))?;
    }
    if let Some(m) = args.merge_min_count {
        config.data.merge_min_count = m;
    }
    let (data, merge_notes) = config.load_data(base)?;
    Ok(Loaded {
        config,
        data,
        merge_notes,
    })
}

fn write_file(path: &Path, body: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    std::fs::write(path, body).map_err(|e| Error::io(path, e))
}

fn emit(out: Option<&Path>, body: &str) -> Result<()> {
    match out {
        Some(path) => write_file(path, body),
        None => std::io::stdout()
            .write_all(body.as_bytes())
            .map_err(|e| Error::io("<stdout>", e)),
    }
}

/// `variable,category_label,original_rank,quantification,beta`, every category of every
/// variable.
pub fn quantification_table(model: &FittedModel) -> String {
    let mut s = String::from("variable,category_label,original_rank,quantification,beta\n");
    for (q, beta) in model.quantifications.iter().zip(&model.beta) {
        for (c, (label, v)) in q.labels.iter().zip(&q.v).enumerate() {
            let _ = writeln!(s, "{},{},{},{v},{beta}", csv_field(&q.name), csv_field(label), c + 1);
        }
    }
    s
}

/// Human-readable fit summary: coefficients, trace, safeguard events, notes and warnings.
pub fn fit_log(model: &FittedModel, label: &str, n: usize, merge_notes: &[String]) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "model: {label}");
    let _ = writeln!(s, "method: {}", method_name(model.method));
    let _ = writeln!(s, "rows: {n}");
    let _ = writeln!(s, "intercept: {}", model.intercept);
    for (q, b) in model.quantifications.iter().zip(&model.beta) {
        let _ = writeln!(s, "beta {} ({}): {b}", q.name, q.spec.level.as_str());
    }
    let _ = writeln!(s, "converged: {} after {} cycle(s)", model.converged, model.cycles);
    let _ = writeln!(s, "trace:");
    for (i, f) in model.trace.iter().enumerate() {
        let _ = writeln!(s, "  {i} {f}");
    }
    let _ = writeln!(s, "events: {}", model.events.len());
    for e in &model.events {
        let _ = writeln!(s, "  {e}");
    }
    for m in merge_notes.iter().chain(&model.notes) {
        let _ = writeln!(s, "note: {m}");
    }
    for w in &model.warnings {
        let _ = writeln!(s, "warning: {w}");
    }
    s
}

fn method_name(m: Method) -> &'static str {
    match m {
        Method::GlmOs => "glm-os",
        Method::LinearOs => "linear-os",
        Method::DummyLogistic => "dummy-logistic",
    }
}

fn cmd_fit(a: &FitArgs) -> Result<()> {
    let l = load(&a.data)?;
    let variant = match &a.variant {
        Some(name) => l
            .config
            .variants
            .iter()
            .find(|v| &v.name == name)
            .cloned()
            .ok_or_else(|| Error::Config(format!("no variant named `{name}`")))?,
        None => VariantConfig {
            name: "base levels".into(),
            method: match l.config.fit.family {
                Family::Logistic => Method::GlmOs,
                Family::LinearOs => Method::LinearOs,
            },
            levels: Default::default(),
        },
    };
    let specs = l.config.variant_specs(&variant);
    let model = fit_model(&l.data, &specs, variant.method, &l.config.fit.options())?;
    std::fs::create_dir_all(&a.out).map_err(|e| Error::io(&a.out, e))?;
    model.save(&a.out.join("model.json"))?;
    write_file(&a.out.join("quantifications.csv"), &quantification_table(&model))?;
    write_file(
        &a.out.join("fit.log"),
        &fit_log(&model, &variant.name, l.data.n(), &l.merge_notes),
    )?;
    for w in &model.warnings {
        eprintln!("warning: {w}");
    }
    eprintln!(
        "{}: intercept {:.4}, {} cycle(s), written to {}",
        variant.name,
        model.intercept,
        model.cycles,
        a.out.display()
    );
    Ok(())
}

fn cmd_predict(a: &PredictArgs) -> Result<()> {
    let model = FittedModel::load(&a.model)?;
    let opts = match &a.config {
        Some(c) => RunConfig::load(c)?.read_options()?,
        None => ReadOptions::default(),
    };
    let table = read_table_path(&a.data, opts.delimiter)?;
    let pred = model.predict_table(&table, &opts)?;
    let mut s = String::from("row,probability,class,unseen\n");
    for (i, (p, u)) in pred.fitted.iter().zip(&pred.unseen).enumerate() {
        let _ = writeln!(s, "{},{p},{},{}", i + 1, classify(*p), u8::from(*u));
    }
    let flagged = pred.unseen.iter().filter(|u| **u).count();
    if flagged > 0 {
        eprintln!("warning: {flagged} row(s) had unseen or missing categories");
    }
    emit(a.out.as_deref(), &s)
}

fn cmd_cv(a: &CvArgs) -> Result<()> {
    let l = load(&a.data)?;
    let mut cv = l.config.cv;
    if let Some(seed) = a.seed {
        cv.seed = seed;
    }
    if let Some(folds) = a.folds {
        cv.folds = folds;
    }
    if let Some(metric) = a.metric {
        cv.metric = metric;
    }
    let opts = CvOptions {
        folds: cv.folds,
        seed: cv.seed,
        stratified: cv.stratified,
        metric: cv.metric,
    };
    let fit_opts = l.config.fit.options();
    let rows: Vec<TableRow> = l
        .config
        .variants_or_default()
        .iter()
        .map(|v| {
            let specs = l.config.variant_specs(v);
            let report = cross_validate(&l.data, &v.name, &opts, |d| {
                fit_model(d, &specs, v.method, &fit_opts)
            })
            .map_err(|e| e.to_string());
            if let Err(e) = &report {
                eprintln!("warning: {}: {e}", v.name);
            }
            (v.name.clone(), report)
        })
        .collect();
    let mut buf = Vec::new();
    write_cv_table(&mut buf, &rows).map_err(|e| Error::io("<table>", e))?;
    emit(a.out.as_deref(), &String::from_utf8_lossy(&buf))
}

fn cmd_plot(a: &PlotArgs) -> Result<()> {
    let model = FittedModel::load(&a.model)?;
    let stamp = (!a.no_timestamp).then(|| {
        let secs = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        format!("generated by glmos {} at unix time {secs}", env!("CARGO_PKG_VERSION"))
    });
    let written = crate::plot::write_plots(&model, &a.out, stamp.as_deref())?;
    eprintln!("{} file(s) written to {}", written.len(), a.out.display());
    Ok(())
}
