use std::fs;
use std::path::PathBuf;

use chrono::{DateTime, NaiveDate, NaiveDateTime, TimeZone, Utc};
use indexmap::IndexMap;
use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::batch::LogRecordBatch;
use super::record::{parse_label, severity_in_range, LogRecord, RecordField};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum FileFormat {
    #[default]
    Log,
    Csv,
    Tsv,
    Json,
}

/// How to turn a file into a [`LogRecordBatch`].
///
/// `field_map` maps a source column, json key, or named capture group onto a
/// record field name (`timestamp`, `body`, `severity_text`, ...,
/// `attributes.<key>`). Sources whose name already is a field name map
/// implicitly.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct LoaderConfig {
    pub path: PathBuf,
    #[serde(default)]
    pub format: FileFormat,
    #[serde(default, skip_serializing_if = "IndexMap::is_empty")]
    pub field_map: IndexMap<String, String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp_format: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub line_pattern: Option<String>,
}

impl LoaderConfig {
    pub fn new(path: impl Into<PathBuf>, format: FileFormat) -> Self {
        LoaderConfig {
            path: path.into(),
            format,
            ..Default::default()
        }
    }
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("input file `{0}` does not exist")]
    MissingFile(PathBuf),
    #[error("reading `{path}`: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("field_map entry `{source_name}` targets {target:?}, which is not a record field")]
    InvalidFieldTarget { source_name: String, target: String },
    #[error("line_pattern does not compile: {0}")]
    BadPattern(#[from] regex::Error),
    #[error("file has no header row")]
    MissingHeader,
}

/// Result of loading a file. Malformed rows are skipped and reported; records
/// with unparseable timestamps are kept with a null timestamp.
#[derive(Debug, Clone, Default)]
pub struct LoadOutcome {
    pub batch: LogRecordBatch,
    /// Zero-based indices of non-empty source rows rejected as malformed.
    pub malformed_rows: Vec<usize>,
    /// Zero-based indices (into the batch) of records whose timestamp failed to parse.
    pub bad_timestamps: Vec<usize>,
}

struct FieldMapping {
    explicit: IndexMap<String, RecordField>,
}

impl FieldMapping {
    fn new(map: &IndexMap<String, String>) -> Result<Self, LoadError> {
        let mut explicit = IndexMap::new();
        for (src, target) in map {
            let field = target
                .parse::<RecordField>()
                .map_err(|_| LoadError::InvalidFieldTarget {
                    source_name: src.clone(),
                    target: target.clone(),
                })?;
            explicit.insert(src.clone(), field);
        }
        Ok(FieldMapping { explicit })
    }

    fn resolve(&self, source: &str) -> Option<RecordField> {
        if let Some(f) = self.explicit.get(source) {
            return Some(f.clone());
        }
        source.parse().ok()
    }
}

#[derive(Debug)]
enum RowError {
    Malformed,
}

struct RecordBuilder<'a> {
    record: LogRecord,
    leftovers: Vec<(String, String)>,
    body_set: bool,
    raw_timestamp: Option<String>,
    timestamp_format: Option<&'a str>,
}

impl<'a> RecordBuilder<'a> {
    fn new(timestamp_format: Option<&'a str>) -> Self {
        RecordBuilder {
            record: LogRecord::default(),
            leftovers: Vec::new(),
            body_set: false,
            raw_timestamp: None,
            timestamp_format,
        }
    }

    fn set(&mut self, source: &str, field: Option<RecordField>, value: String) -> Result<(), RowError> {
        let r = &mut self.record;
        match field {
            None => self.leftovers.push((source.to_string(), value)),
            Some(RecordField::Body) => {
                r.body = value;
                self.body_set = true;
            }
            Some(RecordField::Timestamp) => self.raw_timestamp = Some(value),
            Some(RecordField::TraceId) => r.trace_id = Some(value),
            Some(RecordField::SpanId) => r.span_id = Some(value),
            Some(RecordField::SeverityText) => r.severity_text = Some(value),
            Some(RecordField::SeverityNumber) => {
                if !value.trim().is_empty() {
                    let n: u8 = value.trim().parse().map_err(|_| RowError::Malformed)?;
                    if !severity_in_range(n) {
                        return Err(RowError::Malformed);
                    }
                    r.severity_number = Some(n);
                }
            }
            Some(RecordField::Resource) => r.resource = Some(value),
            Some(RecordField::InstrumentationScope) => r.instrumentation_scope = Some(value),
            Some(RecordField::Label) => r.label = parse_label(&value),
            Some(RecordField::EntityId) => r.entity_id = Some(value),
            Some(RecordField::Attribute(key)) => {
                r.attributes.insert(key, value);
            }
        }
        Ok(())
    }

    /// Returns the record and whether a present timestamp failed to parse.
    fn finish(mut self, fallback_body: Option<&str>) -> (LogRecord, bool) {
        if self.body_set {
            for (k, v) in self.leftovers {
                self.record.attributes.insert(k, v);
            }
        } else if let Some(line) = fallback_body {
            self.record.body = line.to_string();
            for (k, v) in self.leftovers {
                self.record.attributes.insert(k, v);
            }
        } else {
            let parts: Vec<String> = self.leftovers.into_iter().map(|(_, v)| v).collect();
            self.record.body = parts.join(" ");
        }
        let mut bad = false;
        if let Some(raw) = self.raw_timestamp.filter(|s| !s.trim().is_empty()) {
            match parse_timestamp(raw.trim(), self.timestamp_format) {
                Some(ts) => self.record.timestamp = Some(ts),
                None => bad = true,
            }
        }
        (self.record, bad)
    }
}

/// Parses a timestamp with a strftime-style pattern. Patterns without a zone
/// are read as UTC. `epoch` and `epoch_ms` read integer unix times. Without a
/// pattern, RFC 3339, unix seconds and `%Y-%m-%d %H:%M:%S` are tried in turn.
pub fn parse_timestamp(raw: &str, format: Option<&str>) -> Option<DateTime<Utc>> {
    match format {
        Some("epoch") => raw.parse::<i64>().ok().and_then(|s| Utc.timestamp_opt(s, 0).single()),
        Some("epoch_ms") => raw.parse::<i64>().ok().and_then(|ms| Utc.timestamp_millis_opt(ms).single()),
        Some(fmt) => {
            if let Ok(dt) = DateTime::parse_from_str(raw, fmt) {
                return Some(dt.with_timezone(&Utc));
            }
            if let Ok(naive) = NaiveDateTime::parse_from_str(raw, fmt) {
                return Some(naive.and_utc());
            }
            NaiveDate::parse_from_str(raw, fmt)
                .ok()
                .and_then(|d| d.and_hms_opt(0, 0, 0))
                .map(|n| n.and_utc())
        }
        None => {
            if let Ok(dt) = DateTime::parse_from_rfc3339(raw) {
                return Some(dt.with_timezone(&Utc));
            }
            if let Ok(secs) = raw.parse::<i64>() {
                return Utc.timestamp_opt(secs, 0).single();
            }
            NaiveDateTime::parse_from_str(raw, "%Y-%m-%d %H:%M:%S")
                .ok()
                .map(|n| n.and_utc())
        }
    }
}

/// Loads a file into a batch, one record per non-empty line or row, in file order.
pub fn load_file(config: &LoaderConfig) -> Result<LoadOutcome, LoadError> {
    if !config.path.exists() {
        return Err(LoadError::MissingFile(config.path.clone()));
    }
    let text = fs::read_to_string(&config.path).map_err(|source| LoadError::Io {
        path: config.path.clone(),
        source,
    })?;
    load_str(&text, config)
}

/// Same as [`load_file`] over in-memory content; `config.path` only names the source.
pub fn load_str(text: &str, config: &LoaderConfig) -> Result<LoadOutcome, LoadError> {
    let mapping = FieldMapping::new(&config.field_map)?;
    let mut out = LoadOutcome {
        batch: LogRecordBatch::new(config.path.display().to_string()),
        ..Default::default()
    };
    let ts_format = config.timestamp_format.as_deref();
    match config.format {
        FileFormat::Log => load_log(text, config, &mapping, ts_format, &mut out)?,
        FileFormat::Csv => load_delimited(text, b',', &mapping, ts_format, &mut out)?,
        FileFormat::Tsv => load_delimited(text, b'\t', &mapping, ts_format, &mut out)?,
        FileFormat::Json => load_json(text, &mapping, ts_format, &mut out),
    }
    Ok(out)
}

fn accept(out: &mut LoadOutcome, built: (LogRecord, bool)) {
    let (record, bad_ts) = built;
    if bad_ts {
        out.bad_timestamps.push(out.batch.len());
    }
    out.batch.push(record);
}

fn non_empty_lines(text: &str) -> impl Iterator<Item = &str> {
    text.lines()
        .map(|l| l.strip_suffix('\r').unwrap_or(l))
        .filter(|l| !l.trim().is_empty())
}

fn load_log(
    text: &str,
    config: &LoaderConfig,
    mapping: &FieldMapping,
    ts_format: Option<&str>,
    out: &mut LoadOutcome,
) -> Result<(), LoadError> {
    let pattern = config.line_pattern.as_deref().map(Regex::new).transpose()?;
    for (row, line) in non_empty_lines(text).enumerate() {
        let mut builder = RecordBuilder::new(ts_format);
        let captures = pattern.as_ref().and_then(|re| re.captures(line));
        let mut ok = true;
        if let (Some(re), Some(caps)) = (pattern.as_ref(), captures) {
            for name in re.capture_names().flatten() {
                if let Some(m) = caps.name(name) {
                    if builder
                        .set(name, mapping.resolve(name), m.as_str().to_string())
                        .is_err()
                    {
                        ok = false;
                        break;
                    }
                }
            }
        }
        if !ok {
            out.malformed_rows.push(row);
            continue;
        }
        accept(out, builder.finish(Some(line)));
    }
    Ok(())
}

fn load_delimited(
    text: &str,
    delimiter: u8,
    mapping: &FieldMapping,
    ts_format: Option<&str>,
    out: &mut LoadOutcome,
) -> Result<(), LoadError> {
    if text.trim().is_empty() {
        return Ok(());
    }
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .flexible(true)
        .has_headers(true)
        .from_reader(text.as_bytes());
    let headers: Vec<String> = reader
        .headers()
        .map_err(|_| LoadError::MissingHeader)?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    let fields: Vec<Option<RecordField>> = headers.iter().map(|h| mapping.resolve(h)).collect();
    let mut row = 0usize;
    for result in reader.records() {
        let Ok(rec) = result else {
            out.malformed_rows.push(row);
            row += 1;
            continue;
        };
        if rec.iter().all(|c| c.trim().is_empty()) {
            continue;
        }
        if rec.len() != headers.len() {
            out.malformed_rows.push(row);
            row += 1;
            continue;
        }
        let mut builder = RecordBuilder::new(ts_format);
        let mut ok = true;
        for ((name, field), value) in headers.iter().zip(&fields).zip(rec.iter()) {
            if builder.set(name, field.clone(), value.to_string()).is_err() {
                ok = false;
                break;
            }
        }
        if ok {
            accept(out, builder.finish(None));
        } else {
            out.malformed_rows.push(row);
        }
        row += 1;
    }
    Ok(())
}

fn flatten_json(prefix: &str, value: &serde_json::Value, into: &mut Vec<(String, String)>) {
    use serde_json::Value;
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                flatten_json(&key, v, into);
            }
        }
        Value::String(s) => into.push((prefix.to_string(), s.clone())),
        Value::Null => {}
        other => into.push((prefix.to_string(), other.to_string())),
    }
}

fn load_json(text: &str, mapping: &FieldMapping, ts_format: Option<&str>, out: &mut LoadOutcome) {
    for (row, line) in non_empty_lines(text).enumerate() {
        let value: serde_json::Value = match serde_json::from_str(line) {
            Ok(v @ serde_json::Value::Object(_)) => v,
            _ => {
                out.malformed_rows.push(row);
                continue;
            }
        };
        let mut flat = Vec::new();
        flatten_json("", &value, &mut flat);
        let mut builder = RecordBuilder::new(ts_format);
        let mut ok = true;
        for (k, v) in flat {
            if builder.set(&k, mapping.resolve(&k), v).is_err() {
                ok = false;
                break;
            }
        }
        if ok {
            accept(out, builder.finish(None));
        } else {
            out.malformed_rows.push(row);
        }
    }
}
