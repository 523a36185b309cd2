use std::collections::BTreeMap;
use std::time::Instant;

use chrono::SecondsFormat;
use thiserror::Error;

use super::spec::{AnalysisSpec, Application, FieldError, JobSpec, RepresentationSpec, TfidfDocuments};
use super::JobReport;
use crate::cluster::{dbscan_fit, kmeans_fit, ClusterAssignment, DbscanConfig, KMeansConfig, NOISE};
use crate::detect_seq::{detect_sequence, ngram_fit, FlagLevel, TopKConfig};
use crate::detect_stat::{
    baseline_detect, divergence_detect, AnomalyResult, BaselineMode, DivergenceConfig, IForestConfig, IsolationForest,
    LocalOutlierFactor,
};
use crate::evaluate::{auroc, best_f1_threshold, confusion_and_f1, split_dataset, Split, SplitProtocol};
use crate::log_model::{adapt_dataset, load_file, LogRecordBatch};
use crate::parse::{parse, template_catalog, ParseResult};
use crate::preprocess::{clean, partition, PartitionSet};
use crate::represent::{
    encode_categorical, encode_quantitative, encode_sequential, extract_counters, vectorize_tfidf, CounterSeries,
    EventSequenceSet, FeatureMatrix,
};

#[derive(Debug, Error)]
pub enum JobError {
    #[error("invalid job spec: {}", .0.iter().map(ToString::to_string).collect::<Vec<_>>().join("; "))]
    Validation(Vec<FieldError>),
    #[error("stage `{stage}` failed: {message}")]
    Stage { stage: &'static str, message: String },
}

fn stage_err(stage: &'static str) -> impl Fn(String) -> JobError {
    move |message| JobError::Stage { stage, message }
}

/// Runs `f` as a named stage, recording its wall time.
fn timed<T>(report: &mut JobReport, stage: &'static str, f: impl FnOnce() -> Result<T, String>) -> Result<T, JobError> {
    let start = Instant::now();
    let out = f().map_err(stage_err(stage));
    report.timings.push((stage.to_string(), start.elapsed().as_millis()));
    out
}

fn csv_bytes(write: impl FnOnce(&mut Vec<u8>) -> csv::Result<()>) -> Vec<u8> {
    let mut buf = Vec::new();
    write(&mut buf).expect("csv into memory");
    buf
}

/// Records after loading, adapting and cleaning, plus their templates.
struct Prepared {
    batch: LogRecordBatch,
    parsed: ParseResult,
}

fn prepare(spec: &JobSpec, report: &mut JobReport) -> Result<Prepared, JobError> {
    let loaded = timed(report, "load", || load_file(&spec.loader).map_err(|e| e.to_string()))?;
    report.stages.insert("load.records".into(), loaded.batch.len().to_string());
    report.stages.insert("load.malformed_rows".into(), loaded.malformed_rows.len().to_string());
    report.stages.insert("load.bad_timestamps".into(), loaded.bad_timestamps.len().to_string());
    let mut batch = loaded.batch;

    if let Some(adapter) = &spec.adapter {
        let adapted = timed(report, "adapt", || adapt_dataset(&batch, adapter).map_err(|e| e.to_string()))?;
        report
            .stages
            .insert("adapt.unlabeled_entities".into(), adapted.unlabeled_entities.len().to_string());
        batch = adapted.batch;
    }

    let (cleaned, _) = timed(report, "clean", || clean(&batch, &spec.preprocessor).map_err(|e| e.to_string()))?;
    let parsed = match &spec.parser {
        Some(cfg) => timed(report, "parse", || parse(&cleaned, cfg).map_err(|e| e.to_string()))?,
        None => timed(report, "parse", || Ok(ParseResult::from_distinct_bodies(cleaned.bodies())))?,
    };
    let used = parsed.templates.iter().filter(|t| t.count > 0 && !t.tokens.is_empty()).count();
    report.stages.insert("parse.templates".into(), used.to_string());
    report.artifacts.push(("templates.csv".into(), csv_bytes(|b| parsed.write_templates_csv(b))));
    report
        .artifacts
        .push(("parsed_lines.csv".into(), csv_bytes(|b| parsed.write_parsed_lines_csv(b))));
    Ok(Prepared { batch: cleaned, parsed })
}

/// Validates and runs a job synchronously.
pub fn run_job(spec: &JobSpec) -> Result<JobReport, JobError> {
    let errors = spec.validate();
    if !errors.is_empty() {
        return Err(JobError::Validation(errors));
    }
    let mut report = JobReport::new(spec);
    let prepared = prepare(spec, &mut report)?;
    match spec.application {
        Application::Summarize => summarize(&prepared, &mut report),
        Application::Cluster => cluster(spec, &prepared, &mut report)?,
        Application::DetectAnomaly | Application::Benchmark => detect(spec, &prepared, &mut report)?,
    }
    Ok(report)
}

/// Runs a job as a benchmark: labels are required and the default split
/// protocol applies when the job has none.
pub fn run_benchmark(spec: &JobSpec) -> Result<JobReport, JobError> {
    let mut spec = spec.clone();
    spec.application = Application::Benchmark;
    if spec.evaluation.is_none() {
        spec.evaluation = Some(SplitProtocol::default());
    }
    run_job(&spec)
}

fn summarize(p: &Prepared, report: &mut JobReport) {
    let catalog = template_catalog(&p.parsed);
    let mut first: BTreeMap<u32, String> = BTreeMap::new();
    let mut last: BTreeMap<u32, String> = BTreeMap::new();
    for (i, ts) in p.batch.timestamps().iter().enumerate() {
        if let Some(ts) = ts {
            let id = p.parsed.line_template_ids[i];
            let s = ts.to_rfc3339_opts(SecondsFormat::AutoSi, true);
            first.entry(id).or_insert_with(|| s.clone());
            last.insert(id, s);
        }
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["template_id", "template", "count", "first_seen", "last_seen", "examples"])
        .expect("csv into memory");
    for e in &catalog {
        let examples = e
            .example_parameters
            .iter()
            .map(|ps| ps.join(" "))
            .collect::<Vec<_>>()
            .join(" | ");
        let id = e.template_id;
        w.write_record([
            id.to_string(),
            e.template.clone(),
            e.count.to_string(),
            first.get(&id).cloned().unwrap_or_default(),
            last.get(&id).cloned().unwrap_or_default(),
            examples,
        ])
        .expect("csv into memory");
        report
            .results
            .insert(format!("template.{id}"), format!("{} {}", e.count, e.template));
    }
    report
        .artifacts
        .push(("summary.csv".into(), w.into_inner().expect("in-memory writer")));
    report.results.insert("records".into(), p.batch.len().to_string());
    report.results.insert("templates".into(), catalog.len().to_string());
}

enum Encoded {
    Matrix(FeatureMatrix),
    Sequences(EventSequenceSet, PartitionSet),
    Counter(CounterSeries),
}

/// A representation plus the records behind each row.
struct Rows {
    encoded: Encoded,
    members: Vec<Vec<usize>>,
}

impl Rows {
    fn labels(&self, batch: &LogRecordBatch) -> Vec<Option<bool>> {
        self.members
            .iter()
            .map(|m| {
                let ls: Vec<bool> = m.iter().filter_map(|&i| batch.labels()[i]).collect();
                if ls.is_empty() {
                    None
                } else {
                    Some(ls.iter().any(|&l| l))
                }
            })
            .collect()
    }
}

fn partitioned(spec: &JobSpec, p: &Prepared, report: &mut JobReport) -> Result<PartitionSet, JobError> {
    let cfg = spec.partition.as_ref().expect("validated");
    let parts = timed(report, "partition", || partition(&p.batch, cfg).map_err(|e| e.to_string()))?;
    report.stages.insert("partition.count".into(), parts.len().to_string());
    report
        .stages
        .insert("partition.skipped_records".into(), parts.skipped_records.to_string());
    report.artifacts.push(("partitions.csv".into(), csv_bytes(|b| parts.write_csv(b))));
    Ok(parts)
}

fn encode(spec: &JobSpec, p: &Prepared, report: &mut JobReport) -> Result<Rows, JobError> {
    let rep = spec.representation.as_ref().expect("validated");
    let per_record = |n: usize| (0..n).map(|i| vec![i]).collect::<Vec<_>>();
    let rows = match rep {
        RepresentationSpec::Sequential => {
            let parts = partitioned(spec, p, report)?;
            let seqs = timed(report, "encode", || Ok(encode_sequential(&p.parsed, &parts)))?;
            report.artifacts.push(("sequences.csv".into(), csv_bytes(|b| seqs.write_csv(b))));
            let members = parts.partitions.iter().map(|x| x.members.clone()).collect();
            Rows {
                encoded: Encoded::Sequences(seqs, parts),
                members,
            }
        }
        RepresentationSpec::Quantitative { weighting } => {
            let parts = partitioned(spec, p, report)?;
            let m = timed(report, "encode", || Ok(encode_quantitative(&p.parsed, &parts, *weighting)))?;
            Rows {
                encoded: Encoded::Matrix(m),
                members: parts.partitions.into_iter().map(|x| x.members).collect(),
            }
        }
        RepresentationSpec::Tfidf { documents, vocab_limit } => {
            let docs: Vec<String> = match documents {
                TfidfDocuments::Bodies => p.batch.bodies().to_vec(),
                TfidfDocuments::Templates => (0..p.batch.len()).map(|i| p.parsed.template_of(i).render()).collect(),
            };
            let m = timed(report, "encode", || vectorize_tfidf(&docs, *vocab_limit).map_err(|e| e.to_string()))?;
            Rows {
                encoded: Encoded::Matrix(m),
                members: per_record(p.batch.len()),
            }
        }
        RepresentationSpec::Categorical { fields, scheme } => {
            let e = timed(report, "encode", || {
                encode_categorical(&p.batch, fields, *scheme).map_err(|e| e.to_string())
            })?;
            Rows {
                encoded: Encoded::Matrix(e.matrix),
                members: per_record(p.batch.len()),
            }
        }
        RepresentationSpec::Counter {
            bucket_secs,
            per_template,
        } => {
            let s = timed(report, "encode", || {
                extract_counters(&p.batch, *bucket_secs, *per_template, Some(&p.parsed)).map_err(|e| e.to_string())
            })?;
            report.artifacts.push(("counters.csv".into(), csv_bytes(|b| s.write_csv(b))));
            let members = s.members.clone();
            Rows {
                encoded: Encoded::Counter(s),
                members,
            }
        }
    };
    report.stages.insert("encode.rows".into(), rows.members.len().to_string());
    Ok(rows)
}

/// Up to three `(template id, count)` pairs, most frequent first.
fn top_templates(parsed: &ParseResult, records: impl Iterator<Item = usize>) -> Vec<(u32, usize)> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for r in records {
        *counts.entry(parsed.line_template_ids[r]).or_default() += 1;
    }
    let mut v: Vec<(u32, usize)> = counts.into_iter().collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    v.truncate(3);
    v
}

fn cluster(spec: &JobSpec, p: &Prepared, report: &mut JobReport) -> Result<(), JobError> {
    let rows = encode(spec, p, report)?;
    let Encoded::Matrix(m) = &rows.encoded else {
        unreachable!("validated: clustering takes a matrix")
    };
    let assignment: ClusterAssignment = timed(report, "fit", || {
        match spec.analysis.as_ref().expect("validated") {
            AnalysisSpec::Kmeans {
                k,
                max_iter,
                tol,
                distance,
            } => kmeans_fit(
                m,
                &KMeansConfig {
                    k: *k,
                    seed: spec.seed,
                    max_iter: *max_iter,
                    tol: *tol,
                    distance: *distance,
                },
            ),
            AnalysisSpec::Dbscan { eps, min_pts } => dbscan_fit(
                m,
                &DbscanConfig {
                    eps: *eps,
                    min_pts: *min_pts,
                },
            ),
            _ => unreachable!("validated"),
        }
        .map_err(|e| e.to_string())
    })?;

    report.results.insert("clusters".into(), assignment.cluster_count().to_string());
    let noise = assignment.labels.iter().filter(|&&l| l == NOISE).count();
    report.results.insert("noise".into(), noise.to_string());
    if let Some(inertia) = assignment.inertia {
        report.results.insert("inertia".into(), inertia.to_string());
    }
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["cluster", "size", "top_templates"]).expect("csv into memory");
    for (label, members) in assignment.members() {
        let top = top_templates(&p.parsed, members.iter().flat_map(|&r| rows.members[r].iter().copied()));
        let top = top.iter().map(|(id, c)| format!("{id}:{c}")).collect::<Vec<_>>().join(" ");
        report.results.insert(format!("cluster.{label}.size"), members.len().to_string());
        report.results.insert(format!("cluster.{label}.top_templates"), top.clone());
        w.write_record([label.to_string(), members.len().to_string(), top])
            .expect("csv into memory");
    }
    report
        .artifacts
        .push(("cluster_summary.csv".into(), w.into_inner().expect("in-memory writer")));
    report
        .artifacts
        .push(("clusters.csv".into(), csv_bytes(|b| assignment.write_csv(b))));
    Ok(())
}

/// Where a detector's threshold came from.
fn pick_threshold(
    configured: Option<f64>,
    default: f64,
    dev: Option<(Vec<f64>, Vec<bool>)>,
    report: &mut JobReport,
) -> f64 {
    if let Some(t) = configured {
        report.results.insert("threshold_source".into(), "config".into());
        return t;
    }
    if let Some((scores, labels)) = dev {
        if labels.iter().any(|&l| l) && labels.iter().any(|&l| !l) {
            if let Some((t, m)) = best_f1_threshold(&scores, &labels) {
                report.results.insert("threshold_source".into(), "dev_f1".into());
                report.results.insert("dev_f1".into(), m.f1.to_string());
                return t;
            }
        }
    }
    report.results.insert("threshold_source".into(), "default".into());
    default
}

fn detect(spec: &JobSpec, p: &Prepared, report: &mut JobReport) -> Result<(), JobError> {
    let rows = encode(spec, p, report)?;
    let labels = rows.labels(&p.batch);
    let analysis = spec.analysis.as_ref().expect("validated");
    let protocol = match spec.application {
        Application::Benchmark => Some(spec.evaluation.clone().unwrap_or_default()),
        _ => spec.evaluation.clone(),
    };

    // time-series detectors score the whole series; other detectors are split
    let split: Option<Split> = match (&protocol, &rows.encoded) {
        (Some(proto), Encoded::Matrix(_) | Encoded::Sequences(..)) => {
            if labels.iter().all(Option::is_none) {
                return Err(JobError::Stage {
                    stage: "split",
                    message: "evaluation needs labelled rows".into(),
                });
            }
            let flat: Vec<bool> = labels.iter().map(|l| l.unwrap_or(false)).collect();
            let s = timed(report, "split", || split_dataset(&flat, proto).map_err(|e| e.to_string()))?;
            report.stages.insert("split.train".into(), s.train.len().to_string());
            report.stages.insert("split.dev".into(), s.dev.len().to_string());
            report.stages.insert("split.test".into(), s.test.len().to_string());
            let unlabeled = labels.iter().filter(|l| l.is_none()).count();
            report.stages.insert("split.unlabeled_as_normal".into(), unlabeled.to_string());
            for (i, w) in s.warnings.iter().enumerate() {
                report.stages.insert(format!("split.warning.{i}"), format!("{w:?}"));
            }
            Some(s)
        }
        _ => None,
    };
    let all: Vec<usize> = (0..labels.len()).collect();
    let (train, dev, test) = match &split {
        Some(s) => (s.train.clone(), s.dev.clone(), s.test.clone()),
        None => (all.clone(), Vec::new(), all.clone()),
    };
    let pick = |idx: &[usize]| -> Vec<bool> { idx.iter().map(|&i| labels[i].unwrap_or(false)).collect() };

    // (result, label per result row or None when unknown)
    let (result, result_labels): (AnomalyResult, Vec<Option<bool>>) = match (&rows.encoded, analysis) {
        (
            Encoded::Sequences(seqs, parts),
            AnalysisSpec::NgramTopk {
                order,
                k,
                window,
                backoff,
                flag_level,
            },
        ) => {
            let model = timed(report, "fit", || {
                ngram_fit(&seqs.subset(&train), *order, *backoff).map_err(|e| e.to_string())
            })?;
            report.artifacts.push(("model.txt".into(), model.to_text().into_bytes()));
            let cfg = TopKConfig {
                k: *k,
                window: *window,
                flag_level: *flag_level,
            };
            let r = timed(report, "detect", || {
                detect_sequence(&model, &seqs.subset(&test), &cfg).map_err(|e| e.to_string())
            })?;
            let row_labels = match flag_level {
                FlagLevel::Partition => test.iter().map(|&i| labels[i]).collect(),
                FlagLevel::Event => test
                    .iter()
                    .flat_map(|&i| {
                        let members = &parts.partitions[i].members;
                        let skip = usize::from(members.len() > 1);
                        members[skip..].iter().map(|&m| p.batch.labels()[m]).collect::<Vec<_>>()
                    })
                    .collect(),
            };
            (r, row_labels)
        }
        (Encoded::Matrix(m), AnalysisSpec::IsolationForest { n_trees, subsample, threshold }) => {
            let cfg = IForestConfig {
                n_trees: *n_trees,
                subsample: *subsample,
                seed: spec.seed,
                threshold: 0.5,
            };
            let forest = timed(report, "fit", || {
                IsolationForest::fit(&m.select_rows(&train), &cfg).map_err(|e| e.to_string())
            })?;
            let dev_scores = if dev.is_empty() {
                None
            } else {
                Some((forest.score(&m.select_rows(&dev)).map_err(|e| stage_err("fit")(e.to_string()))?, pick(&dev)))
            };
            let t = pick_threshold(*threshold, cfg.threshold, dev_scores, report);
            let test_m = m.select_rows(&test);
            let scores = timed(report, "detect", || forest.score(&test_m).map_err(|e| e.to_string()))?;
            (
                AnomalyResult::from_scores(test_m.row_ids, scores, t, "isolation_forest"),
                test.iter().map(|&i| labels[i]).collect(),
            )
        }
        (Encoded::Matrix(m), AnalysisSpec::Lof { k, threshold }) => {
            let model = timed(report, "fit", || LocalOutlierFactor::fit(&m.select_rows(&train), *k).map_err(|e| e.to_string()))?;
            let score = |idx: &[usize]| -> Result<Vec<f64>, JobError> {
                if split.is_none() {
                    Ok(model.training_scores().to_vec())
                } else {
                    model.score(&m.select_rows(idx)).map_err(|e| stage_err("detect")(e.to_string()))
                }
            };
            let dev_scores = if dev.is_empty() { None } else { Some((score(&dev)?, pick(&dev))) };
            let t = pick_threshold(*threshold, 1.5, dev_scores, report);
            let start = Instant::now();
            let scores = score(&test)?;
            report.timings.push(("detect".into(), start.elapsed().as_millis()));
            (
                AnomalyResult::from_scores(m.select_rows(&test).row_ids, scores, t, "lof"),
                test.iter().map(|&i| labels[i]).collect(),
            )
        }
        (Encoded::Matrix(m), AnalysisSpec::Divergence { measure, threshold }) => {
            let reference = m.select_rows(&train);
            let cfg = DivergenceConfig {
                kind: *measure,
                threshold: threshold.unwrap_or(DivergenceConfig::default().threshold),
            };
            let dev_scores = if dev.is_empty() {
                None
            } else {
                let r = divergence_detect(&reference, &m.select_rows(&dev), &cfg).map_err(|e| stage_err("detect")(e.to_string()))?;
                Some((r.scores, pick(&dev)))
            };
            let t = pick_threshold(*threshold, cfg.threshold, dev_scores, report);
            let r = timed(report, "detect", || {
                divergence_detect(&reference, &m.select_rows(&test), &cfg).map_err(|e| e.to_string())
            })?;
            (r.with_threshold(t), test.iter().map(|&i| labels[i]).collect())
        }
        (Encoded::Counter(series), AnalysisSpec::Ewma(cfg) | AnalysisSpec::EtsAdditive(cfg)) => {
            let mode = if matches!(analysis, AnalysisSpec::Ewma(_)) {
                BaselineMode::Ewma
            } else {
                BaselineMode::EtsAdditive
            };
            let r = timed(report, "detect", || baseline_detect(series, cfg, mode).map_err(|e| e.to_string()))?;
            (r, labels.clone())
        }
        _ => unreachable!("validated representation/analysis pairing"),
    };

    report.results.insert("method".into(), result.method.clone());
    report.results.insert("rows".into(), result.len().to_string());
    report.results.insert("flagged".into(), result.flagged().len().to_string());
    report.results.insert("threshold".into(), result.threshold.to_string());
    let flagged_ids: Vec<&str> = result.flagged().into_iter().map(|i| result.row_ids[i].as_str()).collect();
    report.results.insert("flagged_rows".into(), flagged_ids.join(" "));
    report
        .artifacts
        .push(("anomalies.csv".into(), csv_bytes(|b| result.write_csv(b))));

    let known: Vec<usize> = (0..result.len()).filter(|&i| result_labels[i].is_some()).collect();
    if !known.is_empty() {
        let start = Instant::now();
        let flags: Vec<bool> = known.iter().map(|&i| result.flags[i]).collect();
        let truth: Vec<bool> = known.iter().map(|&i| result_labels[i].expect("known")).collect();
        let scores: Vec<f64> = known.iter().map(|&i| result.scores[i]).collect();
        let mut metrics = confusion_and_f1(&flags, &truth).map_err(|e| stage_err("metrics")(e.to_string()))?;
        metrics.auroc = auroc(&scores, &truth).ok();
        report.metrics = Some(metrics);
        report.timings.push(("metrics".into(), start.elapsed().as_millis()));
    }
    Ok(())
}
