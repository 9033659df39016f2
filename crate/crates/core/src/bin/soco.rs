use std::io::{BufRead, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::mpsc;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Deserialize;

use soco::analysis::min_pairwise_hausdorff;
use soco::io::{
    build_model, canonical_digest, emit_plot_data, exit_code, read_dataset, read_maps_for, read_plot_json, run_experiment, write_dataset,
    write_maps, ExperimentConfig, ModelSource, OrderSettings, OutputFormat, PlotData,
};
use soco::metrics::{completeness_curve, order_based_curve, soundness_curve, CompletenessConfig, SoundnessConfig};
use soco::models::ExternalModelSpec;
use soco::modify::ModScheme;
use soco::synthetic::{generate_synthetic, ground_truth_maps, oracle_infos, SyntheticSpec};
use soco::{Error, Exec, MetricKind, Result, SeedStream};

#[derive(Parser)]
#[command(name = "soco", version, about = "Faithfulness evaluation of feature attribution maps")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum MetricArg {
    Soundness,
    Completeness,
    Deletion,
    Insertion,
    Road,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Csv,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum ServerKind {
    LinearStep,
    Uniform,
}

#[derive(clap::Args)]
struct ModelArgs {
    /// Weights of an MLP in JSON.
    #[arg(long, conflicts_with = "external")]
    mlp: Option<PathBuf>,
    /// Command line of an external model process (split on whitespace).
    #[arg(long)]
    external: Option<String>,
    /// Number of classes of the external model.
    #[arg(long, default_value_t = 2)]
    n_classes: usize,
    /// Per-request timeout of the external model, in milliseconds.
    #[arg(long, default_value_t = 30_000)]
    timeout_ms: u64,
}

impl ModelArgs {
    fn source(&self) -> ModelSource {
        if let Some(p) = &self.mlp {
            ModelSource::Mlp(p.clone())
        } else if let Some(cmd) = &self.external {
            let mut spec = ExternalModelSpec::new(cmd.split_whitespace().map(String::from).collect(), self.n_classes);
            spec.timeout_ms = self.timeout_ms;
            ModelSource::External(spec)
        } else {
            ModelSource::LinearStep
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Generate the synthetic Gaussian dataset.
    GenSynthetic {
        #[arg(long, default_value_t = 1000)]
        n_samples: usize,
        #[arg(long, default_value_t = 200)]
        n_features: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output file; `.json` selects JSON, anything else the binary container.
        #[arg(long)]
        out: PathBuf,
    },
    /// Write ground-truth attribution maps for a synthetic dataset.
    Attribute {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a modification scheme, given as JSON, to a map file.
    Modify {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        maps: PathBuf,
        /// e.g. '{"kind":"constant","direction":"remove","delta":0.1}'
        #[arg(long)]
        scheme: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate one metric and write its curve.
    Eval {
        #[arg(long, value_enum)]
        metric: MetricArg,
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        maps: PathBuf,
        #[command(flatten)]
        model: ModelArgs,
        /// Metric settings as a JSON file.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1)]
        workers: usize,
        #[arg(long, default_value_t = 256)]
        batch_size: usize,
        /// Output file; `.csv` writes CSV, anything else JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare curve files by normalized Hausdorff distance.
    Compare {
        /// Report the closest pair.
        #[arg(long)]
        min_hausdorff: bool,
        /// Curves as LABEL=PATH (JSON curve files).
        #[arg(required = true, num_args = 2..)]
        curves: Vec<String>,
    },
    /// Run a full experiment from a JSON config.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Convert a JSON curve or summary file to CSV or JSON.
    EmitPlot {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value = "csv")]
        format: FormatArg,
    },
    /// Reference model process speaking the line protocol on stdin/stdout.
    ModelServer {
        #[arg(long, value_enum, default_value = "linear-step")]
        kind: ServerKind,
        #[arg(long, default_value_t = 2)]
        n_classes: usize,
        /// Answer requests out of order.
        #[arg(long)]
        reorder: bool,
        /// Send rows that do not sum to one.
        #[arg(long)]
        bad_sum: bool,
        /// Answer with ids that were never requested.
        #[arg(long)]
        wrong_id: bool,
        /// Delay each answer.
        #[arg(long, default_value_t = 0)]
        sleep_ms: u64,
        /// Exit on the first request unless this file exists; creates it first.
        #[arg(long)]
        crash_once_file: Option<PathBuf>,
        /// Exit on the first request, every time.
        #[arg(long)]
        crash_always: bool,
    },
}

fn read_json<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
}

#[allow(clippy::too_many_arguments)]
fn eval(
    metric: MetricArg,
    data: &Path,
    maps: &Path,
    model: &ModelArgs,
    config: Option<&Path>,
    seed: u64,
    exec: Exec,
    out: &Path,
) -> Result<()> {
    let dataset = read_dataset(data)?;
    let maps = read_maps_for(maps, &dataset)?;
    let model = build_model(&model.source())?;
    let (curve, settings) = match metric {
        MetricArg::Soundness => {
            let mut c: SoundnessConfig = config.map(read_json).transpose()?.unwrap_or_default();
            c.seed = seed;
            c.exec = exec;
            c.validate().map_err(|e| Error::Config(e.to_string()))?;
            let rep = soundness_curve(model.as_ref(), &dataset, &maps, &c)?;
            if rep.empty_maps > 0 {
                eprintln!("skipped samples with empty maps: {}", rep.empty_maps);
            }
            (rep.curve, settings_json(&c))
        }
        MetricArg::Completeness => {
            let mut c: CompletenessConfig = config.map(read_json).transpose()?.unwrap_or_default();
            c.seed = seed;
            c.exec = exec;
            c.validate().map_err(|e| Error::Config(e.to_string()))?;
            (completeness_curve(model.as_ref(), &dataset, &maps, &c)?, settings_json(&c))
        }
        order => {
            let kind = match order {
                MetricArg::Deletion => MetricKind::Deletion,
                MetricArg::Insertion => MetricKind::Insertion,
                _ => MetricKind::Road,
            };
            let s: OrderSettings = config.map(read_json).transpose()?.unwrap_or_default();
            let mut c = s.build(kind, dataset.shape())?;
            c.seed = seed;
            c.exec = exec;
            (order_based_curve(model.as_ref(), &dataset, &maps, &c)?, settings_json(&s))
        }
    };
    let record = serde_json::json!({ "metric": curve.metric_kind(), "seed": seed, "settings": settings });
    let curve = curve.with_digest(canonical_digest(&record, &[]));
    let format = if out.extension().is_some_and(|e| e == "csv") { OutputFormat::Csv } else { OutputFormat::Json };
    emit_plot_data(PlotData::Curve(&curve), Some(seed), out, format)
}

fn settings_json<T: serde::Serialize>(settings: &T) -> serde_json::Value {
    let mut value = serde_json::to_value(settings).expect("settings serialize");
    if let Some(obj) = value.as_object_mut() {
        obj.remove("exec");
    }
    value
}

fn compare(curves: &[String]) -> Result<()> {
    let mut labelled = Vec::new();
    for arg in curves {
        let (label, path) = arg
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("expected LABEL=PATH, got {arg:?}")))?;
        labelled.push((label.to_string(), read_plot_json(Path::new(path))?.to_curve()?));
    }
    let best = min_pairwise_hausdorff(&labelled)?;
    let all: Vec<_> = labelled.iter().flat_map(|(_, c)| c.points().iter()).collect();
    let range = |f: fn(&soco::CurvePoint) -> f64| {
        all.iter().map(|p| f(p)).fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)))
    };
    let ((x0, x1), (y0, y1)) = (range(|p| p.x), range(|p| p.y));
    println!("min_hausdorff {} between {} and {}", best.distance, best.first, best.second);
    println!("union range x [{x0}, {x1}] y [{y0}, {y1}]");
    Ok(())
}

fn emit_plot(input: &Path, out: &Path, format: FormatArg) -> Result<()> {
    let file = read_plot_json(input)?;
    let text = match format {
        FormatArg::Csv => file.to_csv(),
        FormatArg::Json => file.to_json(),
    };
    soco::io::write_atomic(out, text.as_bytes())
}

#[derive(Deserialize)]
struct ServerRequest {
    id: u64,
    inputs: Vec<Vec<f64>>,
}

#[allow(clippy::too_many_arguments)]
fn model_server(
    kind: ServerKind,
    n_classes: usize,
    reorder: bool,
    bad_sum: bool,
    wrong_id: bool,
    sleep_ms: u64,
    crash_once_file: Option<&Path>,
    crash_always: bool,
) -> Result<()> {
    let (tx, rx) = mpsc::channel();
    std::thread::spawn(move || {
        for line in std::io::stdin().lock().lines() {
            let Ok(line) = line else { break };
            if tx.send(line).is_err() {
                break;
            }
        }
    });
    let answer = |req: &ServerRequest| -> String {
        let probs: Vec<Vec<f64>> = req
            .inputs
            .iter()
            .map(|x| {
                let mut p = match kind {
                    ServerKind::LinearStep => {
                        let mut p = vec![0.0; n_classes];
                        p[usize::from(x.iter().sum::<f64>() > 0.0)] = 1.0;
                        p
                    }
                    ServerKind::Uniform => vec![1.0 / n_classes as f64; n_classes],
                };
                if bad_sum {
                    p[0] += 0.25;
                }
                p
            })
            .collect();
        let id = if wrong_id { req.id + 1_000_000 } else { req.id };
        serde_json::json!({ "id": id, "probs": probs }).to_string()
    };
    let mut out = std::io::stdout().lock();
    let mut held: Option<String> = None;
    loop {
        let line = match rx.recv_timeout(Duration::from_millis(50)) {
            Ok(line) => line,
            Err(mpsc::RecvTimeoutError::Timeout) => {
                if let Some(h) = held.take() {
                    writeln!(out, "{h}").and_then(|_| out.flush()).ok();
                }
                continue;
            }
            Err(mpsc::RecvTimeoutError::Disconnected) => break,
        };
        if crash_always {
            std::process::exit(1);
        }
        if let Some(marker) = crash_once_file {
            if !marker.exists() {
                std::fs::write(marker, b"crashed\n").map_err(|e| Error::io(marker, e))?;
                std::process::exit(1);
            }
        }
        let req: ServerRequest = serde_json::from_str(&line).map_err(|e| Error::Config(e.to_string()))?;
        if sleep_ms > 0 {
            std::thread::sleep(Duration::from_millis(sleep_ms));
        }
        let resp = answer(&req);
        if reorder && held.is_none() {
            held = Some(resp);
            continue;
        }
        writeln!(out, "{resp}").map_err(|e| Error::io("stdout", e))?;
        if let Some(h) = held.take() {
            writeln!(out, "{h}").map_err(|e| Error::io("stdout", e))?;
        }
        out.flush().map_err(|e| Error::io("stdout", e))?;
    }
    if let Some(h) = held {
        writeln!(out, "{h}").ok();
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::GenSynthetic { n_samples, n_features, seed, out } => {
            let ds = generate_synthetic(&SyntheticSpec { n_samples, n_features, seed })?;
            write_dataset(&ds, &out)
        }
        Command::Attribute { data, out } => {
            let ds = read_dataset(&data)?;
            write_maps(&ds, &ground_truth_maps(&ds)?, &out)
        }
        Command::Modify { data, maps, scheme, seed, out } => {
            let ds = read_dataset(&data)?;
            let maps = read_maps_for(&maps, &ds)?;
            let scheme: ModScheme = serde_json::from_str(&scheme).map_err(|e| Error::Config(format!("scheme: {e}")))?;
            let infos = match scheme {
                ModScheme::SynthIntroduce { .. } => Some(oracle_infos(&ds)?),
                _ => None,
            };
            let stream = SeedStream::new(seed).named("modify");
            let modified = maps
                .iter()
                .zip(ds.samples())
                .enumerate()
                .map(|(i, (m, x))| scheme.apply(m, infos.as_ref().map(|v| &v[i]), stream.child(x.id())))
                .collect::<Result<Vec<_>>>()?;
            write_maps(&ds, &modified, &out)
        }
        Command::Eval { metric, data, maps, model, config, seed, workers, batch_size, out } => {
            eval(metric, &data, &maps, &model, config.as_deref(), seed, Exec::new(workers, batch_size), &out)
        }
        Command::Compare { min_hausdorff, curves } => {
            if !min_hausdorff {
                return Err(Error::Config("compare needs --min-hausdorff".into()));
            }
            compare(&curves)
        }
        Command::Run { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let manifest = run_experiment(&cfg)?;
            println!("{}", cfg.output_dir.join("manifest.json").display());
            for o in &manifest.outputs {
                println!("{}", cfg.output_dir.join(&o.path).display());
            }
            Ok(())
        }
        Command::EmitPlot { input, out, format } => emit_plot(&input, &out, format),
        Command::ModelServer { kind, n_classes, reorder, bad_sum, wrong_id, sleep_ms, crash_once_file, crash_always } => {
            model_server(kind, n_classes, reorder, bad_sum, wrong_id, sleep_ms, crash_once_file.as_deref(), crash_always)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
