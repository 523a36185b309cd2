use chrono::{DateTime, Utc};
use indexmap::IndexMap;

use super::record::LogRecord;

/// Columnar collection of [`LogRecord`]s. Record `i` is reassembled on demand
/// from the i-th entry of every column; indices are stable identifiers for
/// every downstream stage.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LogRecordBatch {
    pub source_descriptor: String,
    timestamps: Vec<Option<DateTime<Utc>>>,
    bodies: Vec<String>,
    attributes: Vec<IndexMap<String, String>>,
    trace_ids: Vec<Option<String>>,
    span_ids: Vec<Option<String>>,
    severity_texts: Vec<Option<String>>,
    severity_numbers: Vec<Option<u8>>,
    resources: Vec<Option<String>>,
    scopes: Vec<Option<String>>,
    labels: Vec<Option<bool>>,
    entity_ids: Vec<Option<String>>,
}

fn non_empty(s: Option<String>) -> Option<String> {
    s.filter(|v| !v.is_empty())
}

impl LogRecordBatch {
    pub fn new(source_descriptor: impl Into<String>) -> Self {
        LogRecordBatch {
            source_descriptor: source_descriptor.into(),
            ..Default::default()
        }
    }

    pub fn from_records(
        source_descriptor: impl Into<String>,
        records: impl IntoIterator<Item = LogRecord>,
    ) -> Self {
        let mut batch = Self::new(source_descriptor);
        for r in records {
            batch.push(r);
        }
        batch
    }

    /// Bodies only; everything else left empty.
    pub fn from_bodies<S: AsRef<str>>(bodies: impl IntoIterator<Item = S>) -> Self {
        Self::from_records(
            "inline",
            bodies.into_iter().map(|b| LogRecord::with_body(b.as_ref())),
        )
    }

    /// Appends a record. Empty optional strings are stored as absent.
    pub fn push(&mut self, r: LogRecord) {
        self.timestamps.push(r.timestamp);
        self.bodies.push(r.body);
        self.attributes.push(r.attributes);
        self.trace_ids.push(non_empty(r.trace_id));
        self.span_ids.push(non_empty(r.span_id));
        self.severity_texts.push(non_empty(r.severity_text));
        self.severity_numbers.push(r.severity_number);
        self.resources.push(non_empty(r.resource));
        self.scopes.push(non_empty(r.instrumentation_scope));
        self.labels.push(r.label);
        self.entity_ids.push(non_empty(r.entity_id));
    }

    pub fn len(&self) -> usize {
        self.bodies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bodies.is_empty()
    }

    pub fn record(&self, i: usize) -> LogRecord {
        LogRecord {
            timestamp: self.timestamps[i],
            body: self.bodies[i].clone(),
            attributes: self.attributes[i].clone(),
            trace_id: self.trace_ids[i].clone(),
            span_id: self.span_ids[i].clone(),
            severity_text: self.severity_texts[i].clone(),
            severity_number: self.severity_numbers[i],
            resource: self.resources[i].clone(),
            instrumentation_scope: self.scopes[i].clone(),
            label: self.labels[i],
            entity_id: self.entity_ids[i].clone(),
        }
    }

    pub fn records(&self) -> impl Iterator<Item = LogRecord> + '_ {
        (0..self.len()).map(|i| self.record(i))
    }

    pub fn timestamps(&self) -> &[Option<DateTime<Utc>>] {
        &self.timestamps
    }

    pub fn bodies(&self) -> &[String] {
        &self.bodies
    }

    pub fn attributes(&self) -> &[IndexMap<String, String>] {
        &self.attributes
    }

    pub fn severity_texts(&self) -> &[Option<String>] {
        &self.severity_texts
    }

    pub fn resources(&self) -> &[Option<String>] {
        &self.resources
    }

    pub fn scopes(&self) -> &[Option<String>] {
        &self.scopes
    }

    pub fn labels(&self) -> &[Option<bool>] {
        &self.labels
    }

    pub fn entity_ids(&self) -> &[Option<String>] {
        &self.entity_ids
    }

    pub(crate) fn set_body(&mut self, i: usize, body: String) {
        self.bodies[i] = body;
    }

    pub(crate) fn set_label(&mut self, i: usize, label: Option<bool>) {
        self.labels[i] = label;
    }

    pub(crate) fn set_entity_id(&mut self, i: usize, id: Option<String>) {
        self.entity_ids[i] = non_empty(id);
    }

    /// Looks up a string-valued field by name: attribute keys first, then the
    /// named optional columns.
    pub fn field_value(&self, i: usize, name: &str) -> Option<&str> {
        if let Some(v) = self.attributes[i].get(name) {
            return Some(v.as_str());
        }
        let col = match name {
            "severity_text" => &self.severity_texts,
            "resource" => &self.resources,
            "instrumentation_scope" | "scope" => &self.scopes,
            "trace_id" => &self.trace_ids,
            "span_id" => &self.span_ids,
            "entity_id" => &self.entity_ids,
            _ => return None,
        };
        col[i].as_deref()
    }
}
