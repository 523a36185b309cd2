//! Canonical on-disk form of a batch: one csv row per record under a fixed
//! header. Attributes are packed as `k1=v1;k2=v2` with `;`, `=` and `\`
//! escaped by a backslash.

use std::io::{Read, Write};

use chrono::{DateTime, SecondsFormat, Utc};
use indexmap::IndexMap;
use thiserror::Error;

use super::batch::LogRecordBatch;
use super::record::{severity_in_range, LogRecord};

pub const CANONICAL_HEADER: [&str; 12] = [
    "index",
    "timestamp",
    "body",
    "attributes",
    "trace_id",
    "span_id",
    "severity_text",
    "severity_number",
    "resource",
    "scope",
    "entity_id",
    "label",
];

#[derive(Debug, Error)]
pub enum CanonicalError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("header does not match the canonical batch header")]
    BadHeader,
    #[error("row {0}: {1}")]
    BadRow(usize, String),
}

fn escape(s: &str, out: &mut String) {
    for c in s.chars() {
        if matches!(c, '\\' | ';' | '=') {
            out.push('\\');
        }
        out.push(c);
    }
}

pub fn encode_attributes(attrs: &IndexMap<String, String>) -> String {
    let mut out = String::new();
    for (i, (k, v)) in attrs.iter().enumerate() {
        if i > 0 {
            out.push(';');
        }
        escape(k, &mut out);
        out.push('=');
        escape(v, &mut out);
    }
    out
}

pub fn decode_attributes(s: &str) -> Result<IndexMap<String, String>, String> {
    let mut attrs = IndexMap::new();
    if s.is_empty() {
        return Ok(attrs);
    }
    let mut key = String::new();
    let mut value = String::new();
    let mut in_value = false;
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        let target = if in_value { &mut value } else { &mut key };
        match c {
            '\\' => match chars.next() {
                Some(n) => target.push(n),
                None => return Err("dangling escape".into()),
            },
            '=' if !in_value => in_value = true,
            ';' => {
                if !in_value {
                    return Err(format!("attribute `{key}` has no value"));
                }
                attrs.insert(std::mem::take(&mut key), std::mem::take(&mut value));
                in_value = false;
            }
            '=' => return Err("unescaped `=` in value".into()),
            _ => target.push(c),
        }
    }
    if !in_value {
        return Err(format!("attribute `{key}` has no value"));
    }
    attrs.insert(key, value);
    Ok(attrs)
}

fn fmt_ts(ts: &Option<DateTime<Utc>>) -> String {
    ts.map(|t| t.to_rfc3339_opts(SecondsFormat::AutoSi, true))
        .unwrap_or_default()
}

pub fn write_canonical<W: Write>(batch: &LogRecordBatch, writer: W) -> Result<(), CanonicalError> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(CANONICAL_HEADER)?;
    for (i, r) in batch.records().enumerate() {
        let opt = |o: &Option<String>| o.clone().unwrap_or_default();
        w.write_record([
            i.to_string(),
            fmt_ts(&r.timestamp),
            r.body.clone(),
            encode_attributes(&r.attributes),
            opt(&r.trace_id),
            opt(&r.span_id),
            opt(&r.severity_text),
            r.severity_number.map(|n| n.to_string()).unwrap_or_default(),
            opt(&r.resource),
            opt(&r.instrumentation_scope),
            opt(&r.entity_id),
            r.label.map(|l| if l { "1" } else { "0" }.to_string()).unwrap_or_default(),
        ])?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn read_canonical<R: Read>(reader: R, source: &str) -> Result<LogRecordBatch, CanonicalError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header: Vec<String> = rdr.headers()?.iter().map(str::to_string).collect();
    if header != CANONICAL_HEADER {
        return Err(CanonicalError::BadHeader);
    }
    let mut batch = LogRecordBatch::new(source);
    for (row, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let bad = |msg: String| CanonicalError::BadRow(row, msg);
        let opt = |i: usize| Some(rec[i].to_string()).filter(|s| !s.is_empty());
        let timestamp = match &rec[1] {
            "" => None,
            s => Some(
                DateTime::parse_from_rfc3339(s)
                    .map_err(|e| bad(e.to_string()))?
                    .with_timezone(&Utc),
            ),
        };
        let severity_number = match &rec[7] {
            "" => None,
            s => {
                let n: u8 = s.parse().map_err(|_| bad(format!("severity `{s}`")))?;
                if !severity_in_range(n) {
                    return Err(bad(format!("severity {n} out of range")));
                }
                Some(n)
            }
        };
        let label = match &rec[11] {
            "" => None,
            "1" => Some(true),
            "0" => Some(false),
            s => return Err(bad(format!("label `{s}`"))),
        };
        batch.push(LogRecord {
            timestamp,
            body: rec[2].to_string(),
            attributes: decode_attributes(&rec[3]).map_err(bad)?,
            trace_id: opt(4),
            span_id: opt(5),
            severity_text: opt(6),
            severity_number,
            resource: opt(8),
            instrumentation_scope: opt(9),
            entity_id: opt(10),
            label,
        });
    }
    Ok(batch)
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::TimeZone;
    use proptest::prelude::*;

    fn opt_text() -> impl Strategy<Value = Option<String>> {
        proptest::option::of("[a-zA-Z0-9 ,;=\\\\\"\n]{1,8}")
    }

    prop_compose! {
        fn arb_record()(
            ts in proptest::option::of(0i64..4_000_000_000_000),
            body in "[ -~\n]{0,20}",
            attrs in proptest::collection::vec(("[a-z;=\\\\]{1,4}", "[a-z0-9;=\\\\ ]{0,4}"), 0..4),
            trace_id in opt_text(),
            severity_text in opt_text(),
            severity_number in proptest::option::of(1u8..=24),
            entity_id in opt_text(),
            label in proptest::option::of(any::<bool>()),
        ) -> LogRecord {
            LogRecord {
                timestamp: ts.map(|ms| Utc.timestamp_millis_opt(ms).unwrap()),
                body,
                attributes: attrs.into_iter().collect(),
                trace_id,
                span_id: None,
                severity_text,
                severity_number,
                resource: Some("svc".into()),
                instrumentation_scope: None,
                label,
                entity_id,
            }
        }
    }

    proptest! {
        #[test]
        fn canonical_round_trip(records in proptest::collection::vec(arb_record(), 0..12)) {
            let batch = LogRecordBatch::from_records("p", records);
            let mut buf = Vec::new();
            write_canonical(&batch, &mut buf).unwrap();
            let back = read_canonical(buf.as_slice(), "p").unwrap();
            prop_assert_eq!(back, batch);
        }
    }

    #[test]
    fn attribute_escaping() {
        let mut a = IndexMap::new();
        a.insert("k;1".to_string(), "v=1\\".to_string());
        a.insert("x".to_string(), String::new());
        let enc = encode_attributes(&a);
        assert_eq!(enc, "k\\;1=v\\=1\\\\;x=");
        assert_eq!(decode_attributes(&enc).unwrap(), a);
        assert!(decode_attributes("novalue").is_err());
    }

    #[test]
    fn header_is_checked() {
        let err = read_canonical("a,b\n1,2\n".as_bytes(), "x").unwrap_err();
        assert!(matches!(err, CanonicalError::BadHeader));
    }
}
