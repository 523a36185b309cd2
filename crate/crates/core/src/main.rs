use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use serde_json::{json, Map, Value};

use loglens::app::{run_job, JobError, JobSpec};
use loglens::service::JobManager;

/// Log parsing, clustering and anomaly detection.
#[derive(Parser)]
#[command(name = "loglens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a job described by a YAML config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Directory for report.txt, timings.txt, metrics.csv and artifacts/.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Overrides the config's seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Template summary of a log file.
    Summarize(Common),
    /// Cluster records or partitions.
    Cluster {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        rep: Representation,
        /// kmeans or dbscan.
        #[arg(long, default_value = "kmeans")]
        algorithm: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        /// euclidean or cosine (kmeans).
        #[arg(long)]
        distance: Option<String>,
    },
    /// Detect anomalies, reporting metrics when labels exist.
    Detect {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        rep: Representation,
        /// ngram_topk, isolation_forest, lof, divergence, ewma or ets_additive.
        #[arg(long)]
        algorithm: String,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        order: Option<usize>,
        #[arg(long)]
        window: Option<usize>,
        /// event or partition (ngram_topk).
        #[arg(long)]
        flag_level: Option<String>,
        #[arg(long)]
        n_trees: Option<usize>,
        #[arg(long)]
        subsample: Option<usize>,
        #[arg(long)]
        threshold: Option<f64>,
        /// kl or js (divergence).
        #[arg(long)]
        measure: Option<String>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        z_threshold: Option<f64>,
        #[arg(long)]
        warmup: Option<usize>,
        /// Split labelled rows into train/dev/test before fitting.
        #[arg(long)]
        evaluate: bool,
        #[arg(long)]
        test_fraction: Option<f64>,
    },
    /// Serve the HTTP job API.
    Serve {
        /// Directory holding jobs/ and datasets/.
        #[arg(long, default_value = "loglens-workspace")]
        workspace: PathBuf,
        #[arg(long, default_value = "127.0.0.1:8080")]
        addr: SocketAddr,
        #[arg(long, default_value_t = 2)]
        workers: usize,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    input: PathBuf,
    /// log, csv, tsv or json.
    #[arg(long)]
    format: Option<String>,
    /// Regex with named groups for plain log lines.
    #[arg(long)]
    line_pattern: Option<String>,
    #[arg(long)]
    timestamp_format: Option<String>,
    /// `source=field`, repeatable.
    #[arg(long = "field-map", value_name = "SOURCE=FIELD")]
    field_map: Vec<String>,
    /// hdfs, bgl or generic.
    #[arg(long)]
    adapter: Option<String>,
    #[arg(long)]
    label_file: Option<PathBuf>,
    #[arg(long)]
    id_pattern: Option<String>,
    /// drain, iplom or ael. Omit to treat each distinct body as its own template.
    #[arg(long)]
    parser: Option<String>,
    #[arg(long)]
    mask_digits: bool,
    /// fixed_window, sliding_window, time_window or identifier.
    #[arg(long)]
    partition: Option<String>,
    #[arg(long)]
    window_size: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    #[arg(long)]
    duration_secs: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct Representation {
    /// sequential, quantitative, tfidf, counter or categorical.
    #[arg(long)]
    representation: Option<String>,
    #[arg(long)]
    bucket_secs: Option<i64>,
    #[arg(long)]
    per_template: bool,
    /// Comma-separated fields (categorical).
    #[arg(long)]
    fields: Option<String>,
    /// label, one_hot or ordinal (categorical).
    #[arg(long)]
    scheme: Option<String>,
    /// count or tfidf (quantitative).
    #[arg(long)]
    weighting: Option<String>,
    /// bodies or templates (tfidf).
    #[arg(long)]
    documents: Option<String>,
    #[arg(long)]
    vocab_limit: Option<usize>,
}

/// Inserts `value` under `key` when present.
fn put<T: Into<Value>>(map: &mut Map<String, Value>, key: &str, value: Option<T>) {
    if let Some(v) = value {
        map.insert(key.to_string(), v.into());
    }
}

fn common_spec(application: &str, c: &Common) -> Result<Map<String, Value>, String> {
    let mut loader = Map::new();
    loader.insert("path".into(), json!(c.input));
    put(&mut loader, "format", c.format.clone());
    put(&mut loader, "line_pattern", c.line_pattern.clone());
    put(&mut loader, "timestamp_format", c.timestamp_format.clone());
    if !c.field_map.is_empty() {
        let mut fm = Map::new();
        for pair in &c.field_map {
            let (k, v) = pair.split_once('=').ok_or_else(|| format!("--field-map `{pair}`: expected SOURCE=FIELD"))?;
            fm.insert(k.to_string(), json!(v));
        }
        loader.insert("field_map".into(), Value::Object(fm));
    }
    let mut spec = Map::new();
    spec.insert("application".into(), json!(application));
    spec.insert("loader".into(), Value::Object(loader));
    spec.insert("seed".into(), json!(c.seed));
    if let Some(name) = &c.adapter {
        let mut a = Map::new();
        a.insert("name".into(), json!(name));
        match name.as_str() {
            "hdfs" => {
                a.insert("label_source".into(), json!("sidecar_file"));
            }
            "bgl" => {
                a.insert("label_source".into(), json!("severity_prefix"));
            }
            _ => {}
        }
        put(&mut a, "label_file", c.label_file.as_ref().map(|p| json!(p)));
        put(&mut a, "id_pattern", c.id_pattern.clone());
        spec.insert("adapter".into(), Value::Object(a));
    }
    if let Some(alg) = &c.parser {
        spec.insert("parser".into(), json!({ "algorithm": alg, "mask_digits": c.mask_digits }));
    }
    if let Some(strategy) = &c.partition {
        let mut p = Map::new();
        p.insert("strategy".into(), json!(strategy));
        put(&mut p, "window_size", c.window_size);
        put(&mut p, "step", c.step);
        put(&mut p, "duration_secs", c.duration_secs);
        spec.insert("partition".into(), Value::Object(p));
    }
    Ok(spec)
}

fn representation(r: &Representation, default: &str) -> Value {
    let kind = r.representation.clone().unwrap_or_else(|| default.to_string());
    let mut m = Map::new();
    m.insert("kind".into(), json!(kind));
    match kind.as_str() {
        "counter" => {
            put(&mut m, "bucket_secs", r.bucket_secs);
            m.insert("per_template".into(), json!(r.per_template));
        }
        "categorical" => {
            let fields: Vec<String> = r
                .fields
                .as_deref()
                .unwrap_or_default()
                .split(',')
                .filter(|f| !f.is_empty())
                .map(str::to_string)
                .collect();
            m.insert("fields".into(), json!(fields));
            put(&mut m, "scheme", r.scheme.clone());
        }
        "quantitative" => put(&mut m, "weighting", r.weighting.clone()),
        "tfidf" => {
            put(&mut m, "documents", r.documents.clone());
            put(&mut m, "vocab_limit", r.vocab_limit);
        }
        _ => {}
    }
    Value::Object(m)
}

/// Builds a job spec from subcommand flags; `None` for `run` and `serve`.
fn quick_spec(cmd: &Command) -> Result<Option<(JobSpec, Option<PathBuf>)>, String> {
    let (map, out) = match cmd {
        Command::Summarize(c) => {
            let mut spec = common_spec("summarize", c)?;
            spec.entry("parser").or_insert_with(|| json!({}));
            (spec, c.out.clone())
        }
        Command::Cluster {
            common,
            rep,
            algorithm,
            k,
            eps,
            min_pts,
            distance,
        } => {
            let mut spec = common_spec("cluster", common)?;
            spec.insert("representation".into(), representation(rep, "tfidf"));
            let mut a = Map::new();
            a.insert("kind".into(), json!(algorithm));
            put(&mut a, "k", *k);
            put(&mut a, "eps", *eps);
            put(&mut a, "min_pts", *min_pts);
            put(&mut a, "distance", distance.clone());
            spec.insert("analysis".into(), Value::Object(a));
            (spec, common.out.clone())
        }
        Command::Detect {
            common,
            rep,
            algorithm,
            k,
            order,
            window,
            flag_level,
            n_trees,
            subsample,
            threshold,
            measure,
            alpha,
            z_threshold,
            warmup,
            evaluate,
            test_fraction,
        } => {
            let mut spec = common_spec("detect_anomaly", common)?;
            let default_rep = match algorithm.as_str() {
                "ngram_topk" => "sequential",
                "ewma" | "ets_additive" => "counter",
                _ => "quantitative",
            };
            spec.insert("representation".into(), representation(rep, default_rep));
            let mut a = Map::new();
            a.insert("kind".into(), json!(algorithm));
            put(&mut a, "k", *k);
            put(&mut a, "order", *order);
            put(&mut a, "window", *window);
            put(&mut a, "flag_level", flag_level.clone());
            put(&mut a, "n_trees", *n_trees);
            put(&mut a, "subsample", *subsample);
            put(&mut a, "threshold", *threshold);
            put(&mut a, "measure", measure.clone());
            put(&mut a, "alpha", *alpha);
            put(&mut a, "z_threshold", *z_threshold);
            put(&mut a, "warmup", *warmup);
            spec.insert("analysis".into(), Value::Object(a));
            if *evaluate || test_fraction.is_some() {
                let mut e = Map::new();
                put(&mut e, "test_fraction", *test_fraction);
                e.insert("seed".into(), json!(common.seed));
                spec.insert("evaluation".into(), Value::Object(e));
            }
            (spec, common.out.clone())
        }
        Command::Run { .. } | Command::Serve { .. } => return Ok(None),
    };
    let spec: JobSpec = serde_json::from_value(Value::Object(map)).map_err(|e| e.to_string())?;
    Ok(Some((spec, out)))
}

fn execute(spec: &JobSpec, out: Option<&Path>) -> ExitCode {
    match run_job(spec) {
        Ok(report) => {
            if let Some(dir) = out {
                if let Err(e) = report.write_to(dir) {
                    eprintln!("error: writing {}: {e}", dir.display());
                    return ExitCode::from(2);
                }
            }
            print!("{}", report.render());
            ExitCode::SUCCESS
        }
        Err(JobError::Validation(errors)) => {
            for e in errors {
                eprintln!("invalid: {e}");
            }
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match &cli.command {
        Command::Run { config, out, seed } => {
            let text = match std::fs::read_to_string(config) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: reading {}: {e}", config.display());
                    return ExitCode::from(2);
                }
            };
            let mut spec = match JobSpec::from_yaml(&text) {
                Ok(s) => s,
                Err(e) => {
                    eprintln!("invalid: {}: {e}", config.display());
                    return ExitCode::from(1);
                }
            };
            if let Some(seed) = seed {
                spec.seed = *seed;
            }
            spec.resolve_paths(config.parent().unwrap_or(Path::new(".")));
            execute(&spec, out.as_deref())
        }
        Command::Serve {
            workspace,
            addr,
            workers,
        } => {
            let manager = match JobManager::new(workspace, *workers) {
                Ok(m) => Arc::new(m),
                Err(e) => {
                    eprintln!("error: workspace {}: {e}", workspace.display());
                    return ExitCode::from(2);
                }
            };
            let runtime = tokio::runtime::Runtime::new().expect("tokio runtime");
            match runtime.block_on(loglens::service::serve(manager, *addr)) {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(2)
                }
            }
        }
        cmd => match quick_spec(cmd) {
            Ok(Some((spec, out))) => execute(&spec, out.as_deref()),
            Ok(None) => unreachable!("handled above"),
            Err(e) => {
                eprintln!("invalid: {e}");
                ExitCode::from(1)
            }
        },
    }
}
