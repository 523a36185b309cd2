use std::collections::BTreeMap;
use std::io::Write;

use chrono::{DateTime, SecondsFormat, TimeZone, Utc};
use serde::{Deserialize, Serialize};

use super::RepresentError;
use crate::log_model::LogRecordBatch;
use crate::parse::ParseResult;

/// Record counts per epoch-aligned bucket, gaps filled with zeros.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CounterSeries {
    pub bucket_secs: i64,
    pub bucket_start: Vec<DateTime<Utc>>,
    pub counts: Vec<u64>,
    /// Aligned series per template id, when requested.
    pub per_template: Option<BTreeMap<u32, Vec<u64>>>,
    /// Batch indices counted in each bucket.
    #[serde(skip)]
    pub members: Vec<Vec<usize>>,
}

impl CounterSeries {
    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn values(&self) -> Vec<f64> {
        self.counts.iter().map(|&c| c as f64).collect()
    }

    pub fn bucket_labels(&self) -> Vec<String> {
        self.bucket_start
            .iter()
            .map(|t| t.to_rfc3339_opts(SecondsFormat::Secs, true))
            .collect()
    }

    /// `bucket_start,count` plus one `t<id>` column per template when present.
    pub fn write_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = vec!["bucket_start".to_string(), "count".to_string()];
        if let Some(per) = &self.per_template {
            header.extend(per.keys().map(|id| format!("t{id}")));
        }
        w.write_record(&header)?;
        for (b, label) in self.bucket_labels().into_iter().enumerate() {
            let mut rec = vec![label, self.counts[b].to_string()];
            if let Some(per) = &self.per_template {
                rec.extend(per.values().map(|s| s[b].to_string()));
            }
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Counts records per `bucket_secs` bucket aligned to the epoch.
pub fn extract_counters(
    batch: &LogRecordBatch,
    bucket_secs: i64,
    per_template: bool,
    parsed: Option<&ParseResult>,
) -> Result<CounterSeries, RepresentError> {
    if bucket_secs <= 0 {
        return Err(RepresentError::ZeroBucket);
    }
    let missing = batch.timestamps().iter().filter(|t| t.is_none()).count();
    if missing > 0 {
        return Err(RepresentError::MissingTimestamps(missing));
    }
    if per_template && parsed.is_none() {
        return Err(RepresentError::MissingParse);
    }
    let bucket_of: Vec<i64> = batch
        .timestamps()
        .iter()
        .map(|t| t.expect("checked").timestamp().div_euclid(bucket_secs))
        .collect();
    let (Some(&lo), Some(&hi)) = (bucket_of.iter().min(), bucket_of.iter().max()) else {
        return Ok(CounterSeries {
            bucket_secs,
            bucket_start: Vec::new(),
            counts: Vec::new(),
            per_template: per_template.then(BTreeMap::new),
            members: Vec::new(),
        });
    };
    let width = (hi - lo + 1) as usize;
    let mut counts = vec![0u64; width];
    let mut members = vec![Vec::new(); width];
    let mut per: BTreeMap<u32, Vec<u64>> = BTreeMap::new();
    for (i, &b) in bucket_of.iter().enumerate() {
        let slot = (b - lo) as usize;
        counts[slot] += 1;
        members[slot].push(i);
        if per_template {
            let id = parsed.expect("checked").line_template_ids[i];
            per.entry(id).or_insert_with(|| vec![0; width])[slot] += 1;
        }
    }
    let bucket_start = (lo..=hi)
        .map(|b| Utc.timestamp_opt(b * bucket_secs, 0).single().expect("in range"))
        .collect();
    Ok(CounterSeries {
        bucket_secs,
        bucket_start,
        counts,
        per_template: per_template.then_some(per),
        members,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::log_model::LogRecord;
    use crate::parse::{parse_bodies, ParserConfig};

    fn at(secs: &[i64], bodies: &[&str]) -> LogRecordBatch {
        let recs: Vec<LogRecord> = secs
            .iter()
            .zip(bodies)
            .map(|(&s, b)| {
                let mut r = LogRecord::with_body(*b);
                r.timestamp = Utc.timestamp_opt(s, 0).single();
                r
            })
            .collect();
        LogRecordBatch::from_records("t", recs)
    }

    #[test]
    fn one_bucket() {
        let s = extract_counters(&at(&[60, 61, 119], &["a", "a", "a"]), 60, false, None).unwrap();
        assert_eq!(s.counts, vec![3]);
    }

    #[test]
    fn gaps_filled() {
        let s = extract_counters(&at(&[0, 120], &["a", "a"]), 60, false, None).unwrap();
        assert_eq!(s.counts, vec![1, 0, 1]);
        let starts: Vec<i64> = s.bucket_start.iter().map(|t| t.timestamp()).collect();
        assert_eq!(starts, vec![0, 60, 120]);
    }

    #[test]
    fn per_template_sums_to_total() {
        let bodies = ["x 1", "y y", "x 2", "y y"];
        let b = at(&[0, 10, 70, 200], &bodies);
        let p = parse_bodies(&bodies, &ParserConfig::default()).unwrap();
        let s = extract_counters(&b, 60, true, Some(&p)).unwrap();
        let per = s.per_template.as_ref().unwrap();
        assert_eq!(per.len(), 2);
        for k in 0..s.len() {
            assert_eq!(per.values().map(|v| v[k]).sum::<u64>(), s.counts[k]);
        }
    }

    #[test]
    fn errors() {
        let b = LogRecordBatch::from_bodies(["a"]);
        assert_eq!(extract_counters(&b, 60, false, None), Err(RepresentError::MissingTimestamps(1)));
        let b = at(&[0], &["a"]);
        assert_eq!(extract_counters(&b, 60, true, None), Err(RepresentError::MissingParse));
    }
}
