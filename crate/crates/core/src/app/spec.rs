use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::cluster::Distance;
use crate::detect_seq::FlagLevel;
use crate::detect_stat::{BaselineConfig, DivergenceKind};
use crate::evaluate::SplitProtocol;
use crate::log_model::{DatasetAdapter, LoaderConfig};
use crate::parse::ParserConfig;
use crate::preprocess::{PartitionConfig, PreprocessorConfig};
use crate::represent::{CategoricalScheme, QuantWeighting};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Application {
    Summarize,
    Cluster,
    DetectAnomaly,
    Benchmark,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum TfidfDocuments {
    /// Cleaned record bodies.
    #[default]
    Bodies,
    /// Each record's template string.
    Templates,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RepresentationSpec {
    Sequential,
    Quantitative {
        #[serde(default)]
        weighting: QuantWeighting,
    },
    Tfidf {
        #[serde(default)]
        documents: TfidfDocuments,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        vocab_limit: Option<usize>,
    },
    Counter {
        bucket_secs: i64,
        #[serde(default)]
        per_template: bool,
    },
    Categorical {
        fields: Vec<String>,
        #[serde(default)]
        scheme: CategoricalScheme,
    },
}

impl RepresentationSpec {
    pub fn name(&self) -> &'static str {
        match self {
            RepresentationSpec::Sequential => "sequential",
            RepresentationSpec::Quantitative { .. } => "quantitative",
            RepresentationSpec::Tfidf { .. } => "tfidf",
            RepresentationSpec::Counter { .. } => "counter",
            RepresentationSpec::Categorical { .. } => "categorical",
        }
    }

    /// Whether the representation yields a feature matrix.
    pub fn is_matrix(&self) -> bool {
        matches!(
            self,
            RepresentationSpec::Quantitative { .. } | RepresentationSpec::Tfidf { .. } | RepresentationSpec::Categorical { .. }
        )
    }

    /// Whether rows are partitions, which needs a partition section.
    pub fn needs_partition(&self) -> bool {
        matches!(self, RepresentationSpec::Sequential | RepresentationSpec::Quantitative { .. })
    }
}

fn d_order() -> usize {
    2
}
fn d_topk() -> usize {
    10
}
fn d_true() -> bool {
    true
}
fn d_trees() -> usize {
    100
}
fn d_subsample() -> usize {
    256
}
fn d_lof_k() -> usize {
    10
}
fn d_max_iter() -> usize {
    300
}
fn d_tol() -> f64 {
    1e-6
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AnalysisSpec {
    NgramTopk {
        #[serde(default = "d_order")]
        order: usize,
        #[serde(default = "d_topk")]
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        window: Option<usize>,
        #[serde(default = "d_true")]
        backoff: bool,
        #[serde(default)]
        flag_level: FlagLevel,
    },
    IsolationForest {
        #[serde(default = "d_trees")]
        n_trees: usize,
        #[serde(default = "d_subsample")]
        subsample: usize,
        /// Fixed threshold; when absent the default is used unless a labelled
        /// dev split allows choosing one.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    Lof {
        #[serde(default = "d_lof_k")]
        k: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    Divergence {
        #[serde(default)]
        measure: DivergenceKind,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        threshold: Option<f64>,
    },
    Ewma(BaselineConfig),
    EtsAdditive(BaselineConfig),
    Kmeans {
        k: usize,
        #[serde(default = "d_max_iter")]
        max_iter: usize,
        #[serde(default = "d_tol")]
        tol: f64,
        #[serde(default)]
        distance: Distance,
    },
    Dbscan {
        eps: f64,
        min_pts: usize,
    },
}

impl AnalysisSpec {
    pub fn name(&self) -> &'static str {
        match self {
            AnalysisSpec::NgramTopk { .. } => "ngram_topk",
            AnalysisSpec::IsolationForest { .. } => "isolation_forest",
            AnalysisSpec::Lof { .. } => "lof",
            AnalysisSpec::Divergence { .. } => "divergence",
            AnalysisSpec::Ewma(_) => "ewma",
            AnalysisSpec::EtsAdditive(_) => "ets_additive",
            AnalysisSpec::Kmeans { .. } => "kmeans",
            AnalysisSpec::Dbscan { .. } => "dbscan",
        }
    }

    pub fn is_clustering(&self) -> bool {
        matches!(self, AnalysisSpec::Kmeans { .. } | AnalysisSpec::Dbscan { .. })
    }
}

/// A complete, serializable description of one job.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JobSpec {
    pub application: Application,
    pub loader: LoaderConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub adapter: Option<DatasetAdapter>,
    #[serde(default)]
    pub preprocessor: PreprocessorConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionConfig>,
    /// Absent means no template mining: each distinct body is its own event.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parser: Option<ParserConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub representation: Option<RepresentationSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub analysis: Option<AnalysisSpec>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<SplitProtocol>,
    #[serde(default)]
    pub seed: u64,
}

/// One problem found by [`JobSpec::validate`].
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FieldError {
    pub field: String,
    pub message: String,
}

impl FieldError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        FieldError {
            field: field.into(),
            message: message.into(),
        }
    }
}

impl std::fmt::Display for FieldError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.field, self.message)
    }
}

impl JobSpec {
    pub fn from_yaml(text: &str) -> Result<Self, serde_yaml::Error> {
        serde_yaml::from_str(text)
    }

    pub fn to_yaml(&self) -> String {
        serde_yaml::to_string(self).expect("job specs always serialize")
    }

    /// Makes relative file paths relative to `base` (usually the config
    /// file's directory).
    pub fn resolve_paths(&mut self, base: &Path) {
        let fix = |p: &mut PathBuf| {
            if p.is_relative() && !p.as_os_str().is_empty() && !p.to_string_lossy().starts_with("dataset:") {
                *p = base.join(&*p);
            }
        };
        fix(&mut self.loader.path);
        if let Some(file) = self.adapter.as_mut().and_then(|a| a.label_file.as_mut()) {
            fix(file);
        }
    }

    /// Every problem with the job; empty when it can run.
    pub fn validate(&self) -> Vec<FieldError> {
        let mut errs = Vec::new();
        let mut push = |field: &str, message: &str| errs.push(FieldError::new(field, message));
        if self.loader.path.as_os_str().is_empty() {
            push("loader.path", "required");
        }
        if let Some(p) = &self.parser {
            for (f, m) in p.problems() {
                push(f, &m);
            }
        }
        if let Some(p) = &self.partition {
            for (f, m) in p.problems() {
                push(&format!("partition.{f}"), &m);
            }
        }
        if let Some(e) = &self.evaluation {
            for (f, m) in e.problems() {
                push(&format!("evaluation.{f}"), &m);
            }
        }
        if let Some(r) = &self.representation {
            match r {
                RepresentationSpec::Counter { bucket_secs, .. } if *bucket_secs <= 0 => {
                    push("representation.bucket_secs", "must be positive")
                }
                RepresentationSpec::Categorical { fields, .. } if fields.is_empty() => {
                    push("representation.fields", "at least one field required")
                }
                RepresentationSpec::Tfidf {
                    vocab_limit: Some(0), ..
                } => push("representation.vocab_limit", "must be positive"),
                _ => {}
            }
            if r.needs_partition() && self.partition.is_none() {
                push("partition", &format!("required by the {} representation", r.name()));
            }
        }
        if let Some(a) = &self.analysis {
            analysis_problems(a, &mut push);
        }

        match self.application {
            Application::Summarize => {
                if self.parser.is_none() {
                    push("parser", "required by summarize");
                }
            }
            Application::Cluster => {
                self.require_pipeline(&mut push, true);
            }
            Application::DetectAnomaly | Application::Benchmark => {
                self.require_pipeline(&mut push, false);
            }
        }
        errs
    }

    fn require_pipeline(&self, push: &mut impl FnMut(&str, &str), clustering: bool) {
        let (Some(r), Some(a)) = (&self.representation, &self.analysis) else {
            if self.representation.is_none() {
                push("representation", "required by this application");
            }
            if self.analysis.is_none() {
                push("analysis", "required by this application");
            }
            return;
        };
        if clustering != a.is_clustering() {
            let what = if clustering { "a clustering algorithm" } else { "a detector" };
            push("analysis.kind", &format!("{} is not {what}", a.name()));
            return;
        }
        let fits = match a {
            AnalysisSpec::NgramTopk { .. } => matches!(r, RepresentationSpec::Sequential),
            AnalysisSpec::Ewma(_) | AnalysisSpec::EtsAdditive(_) => matches!(r, RepresentationSpec::Counter { .. }),
            _ => r.is_matrix(),
        };
        if !fits {
            push(
                "representation.kind",
                &format!("{} cannot feed {}", r.name(), a.name()),
            );
        }
        if self.application == Application::Benchmark && self.adapter.is_none() && self.evaluation.is_none() {
            push("evaluation", "benchmark needs labels: set an adapter or an evaluation section");
        }
    }
}

fn analysis_problems(a: &AnalysisSpec, push: &mut impl FnMut(&str, &str)) {
    match a {
        AnalysisSpec::NgramTopk { order, k, window, .. } => {
            if *order == 0 {
                push("analysis.order", "must be at least 1");
            }
            if *k == 0 {
                push("analysis.k", "must be at least 1");
            }
            if *window == Some(0) {
                push("analysis.window", "must be at least 1");
            }
        }
        AnalysisSpec::IsolationForest { n_trees, subsample, .. } => {
            if *n_trees == 0 {
                push("analysis.n_trees", "must be positive");
            }
            if *subsample < 2 {
                push("analysis.subsample", "must be at least 2");
            }
        }
        AnalysisSpec::Lof { k, .. } => {
            if *k == 0 {
                push("analysis.k", "must be at least 1");
            }
        }
        AnalysisSpec::Divergence { .. } => {}
        AnalysisSpec::Ewma(c) | AnalysisSpec::EtsAdditive(c) => {
            for (f, m) in c.problems() {
                push(&format!("analysis.{f}"), &m);
            }
        }
        AnalysisSpec::Kmeans { k, max_iter, tol, .. } => {
            if *k == 0 {
                push("analysis.k", "must be at least 1");
            }
            if *max_iter == 0 {
                push("analysis.max_iter", "must be positive");
            }
            if !(*tol >= 0.0) {
                push("analysis.tol", "must be non-negative");
            }
        }
        AnalysisSpec::Dbscan { eps, min_pts } => {
            if !(*eps > 0.0) {
                push("analysis.eps", "must be positive");
            }
            if *min_pts == 0 {
                push("analysis.min_pts", "must be at least 1");
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const DETECT: &str = "
application: detect_anomaly
seed: 3
loader:
  path: data/hdfs.log
  format: log
adapter:
  name: hdfs
  label_file: labels.csv
partition:
  strategy: identifier
parser:
  algorithm: drain
representation:
  kind: sequential
analysis:
  kind: ngram_topk
  k: 3
evaluation:
  test_fraction: 0.2
";

    #[test]
    fn yaml_round_trip() {
        let spec = JobSpec::from_yaml(DETECT).unwrap();
        assert!(spec.validate().is_empty(), "{:?}", spec.validate());
        assert_eq!(JobSpec::from_yaml(&spec.to_yaml()).unwrap(), spec);
        assert_eq!(
            spec.analysis,
            Some(AnalysisSpec::NgramTopk {
                order: 2,
                k: 3,
                window: None,
                backoff: true,
                flag_level: FlagLevel::Partition
            })
        );
    }

    #[test]
    fn unknown_fields_rejected() {
        let bad = DETECT.replace("  k: 3", "  k: 3\n  kk: 1");
        assert!(JobSpec::from_yaml(&bad).is_err());
        let bad = DETECT.replace("seed: 3", "seed: 3\ncolour: red");
        assert!(JobSpec::from_yaml(&bad).is_err());
    }

    #[test]
    fn baseline_analysis_is_flat() {
        let text = "application: detect_anomaly\nloader: {path: x.log}\nrepresentation: {kind: counter, bucket_secs: 60}\nanalysis: {kind: ewma, alpha: 0.5}\n";
        let spec = JobSpec::from_yaml(text).unwrap();
        assert!(matches!(spec.analysis, Some(AnalysisSpec::Ewma(BaselineConfig { alpha, .. })) if alpha == 0.5));
        assert!(spec.validate().is_empty());
    }

    #[test]
    fn validation_lists_field_errors() {
        let text = "application: cluster\nloader: {path: x.log}\nrepresentation: {kind: quantitative}\nanalysis: {kind: kmeans, k: 0}\n";
        let errs = JobSpec::from_yaml(text).unwrap().validate();
        let fields: Vec<&str> = errs.iter().map(|e| e.field.as_str()).collect();
        assert_eq!(fields, vec!["partition", "analysis.k"]);

        let text = "application: cluster\nloader: {path: x.log}\nrepresentation: {kind: sequential}\nanalysis: {kind: lof}\npartition: {strategy: identifier}\n";
        let errs = JobSpec::from_yaml(text).unwrap().validate();
        assert_eq!(errs, vec![FieldError::new("analysis.kind", "lof is not a clustering algorithm")]);

        let text = "application: summarize\nloader: {path: x.log}\n";
        assert_eq!(JobSpec::from_yaml(text).unwrap().validate()[0].field, "parser");
    }

    #[test]
    fn paths_resolve_against_base() {
        let mut spec = JobSpec::from_yaml(DETECT).unwrap();
        spec.resolve_paths(Path::new("/cfg"));
        assert_eq!(spec.loader.path, PathBuf::from("/cfg/data/hdfs.log"));
        assert_eq!(spec.adapter.unwrap().label_file.unwrap(), PathBuf::from("/cfg/labels.csv"));
    }
}
