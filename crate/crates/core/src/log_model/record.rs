use chrono::{DateTime, Utc};
use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// One log event in the unified record model.
///
/// Only `body` is mandatory. Everything else is filled in by the loader's
/// field map or later by a dataset adapter (`entity_id`, `label`).
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LogRecord {
    pub timestamp: Option<DateTime<Utc>>,
    pub body: String,
    pub attributes: IndexMap<String, String>,
    pub trace_id: Option<String>,
    pub span_id: Option<String>,
    pub severity_text: Option<String>,
    /// TRACE 1-4, DEBUG 5-8, INFO 9-12, WARN 13-16, ERROR 17-20, FATAL 21-24.
    pub severity_number: Option<u8>,
    pub resource: Option<String>,
    pub instrumentation_scope: Option<String>,
    /// `Some(true)` marks an anomalous record.
    pub label: Option<bool>,
    pub entity_id: Option<String>,
}

impl LogRecord {
    pub fn with_body(body: impl Into<String>) -> Self {
        LogRecord {
            body: body.into(),
            ..Default::default()
        }
    }
}

pub const MIN_SEVERITY: u8 = 1;
pub const MAX_SEVERITY: u8 = 24;

pub fn severity_in_range(n: u8) -> bool {
    (MIN_SEVERITY..=MAX_SEVERITY).contains(&n)
}

/// A target a source column or capture group can be mapped onto.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum RecordField {
    Timestamp,
    Body,
    TraceId,
    SpanId,
    SeverityText,
    SeverityNumber,
    Resource,
    InstrumentationScope,
    Label,
    EntityId,
    Attribute(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownRecordField(pub String);

impl fmt::Display for UnknownRecordField {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "unknown record field `{}`", self.0)
    }
}

impl std::error::Error for UnknownRecordField {}

impl FromStr for RecordField {
    type Err = UnknownRecordField;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(match s {
            "timestamp" => RecordField::Timestamp,
            "body" => RecordField::Body,
            "trace_id" => RecordField::TraceId,
            "span_id" => RecordField::SpanId,
            "severity_text" => RecordField::SeverityText,
            "severity_number" => RecordField::SeverityNumber,
            "resource" => RecordField::Resource,
            "instrumentation_scope" | "scope" => RecordField::InstrumentationScope,
            "label" => RecordField::Label,
            "entity_id" => RecordField::EntityId,
            other => match other.strip_prefix("attributes.") {
                Some(key) if !key.is_empty() => RecordField::Attribute(key.to_string()),
                _ => return Err(UnknownRecordField(s.to_string())),
            },
        })
    }
}

/// Parses the label spellings found in public log datasets.
pub fn parse_label(raw: &str) -> Option<bool> {
    match raw.trim().to_ascii_lowercase().as_str() {
        "1" | "true" | "anomaly" | "abnormal" | "anomalous" => Some(true),
        "0" | "false" | "normal" | "-" => Some(false),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn field_names_parse() {
        assert_eq!("body".parse::<RecordField>(), Ok(RecordField::Body));
        assert_eq!("scope".parse::<RecordField>(), Ok(RecordField::InstrumentationScope));
        assert_eq!(
            "attributes.host".parse::<RecordField>(),
            Ok(RecordField::Attribute("host".into()))
        );
        assert!("attributes.".parse::<RecordField>().is_err());
        assert!("bogus".parse::<RecordField>().is_err());
    }

    #[test]
    fn labels() {
        assert_eq!(parse_label("Anomaly"), Some(true));
        assert_eq!(parse_label("-"), Some(false));
        assert_eq!(parse_label("?"), None);
    }
}
