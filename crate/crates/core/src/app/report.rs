use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::io;
use std::path::Path;

use serde_json::Value;

use super::JobSpec;
use crate::evaluate::MetricsReport;

/// Everything a job produced. `render` gives the report document, which
/// holds only deterministic content; stage timings go to a separate file.
#[derive(Debug, Clone, PartialEq)]
pub struct JobReport {
    pub config: BTreeMap<String, String>,
    pub stages: BTreeMap<String, String>,
    pub metrics: Option<MetricsReport>,
    pub results: BTreeMap<String, String>,
    /// `(stage, milliseconds)` in execution order.
    pub timings: Vec<(String, u128)>,
    /// `(file name, contents)` written under `artifacts/`.
    pub artifacts: Vec<(String, Vec<u8>)>,
}

/// Flattens a JSON value into dotted keys; list items use their index.
pub fn flatten_json(prefix: &str, value: &Value, out: &mut BTreeMap<String, String>) {
    let key = |k: &str| if prefix.is_empty() { k.to_string() } else { format!("{prefix}.{k}") };
    match value {
        Value::Object(map) => {
            for (k, v) in map {
                flatten_json(&key(k), v, out);
            }
        }
        Value::Array(items) => {
            if items.is_empty() {
                out.insert(prefix.to_string(), "[]".to_string());
            }
            for (i, v) in items.iter().enumerate() {
                flatten_json(&key(&i.to_string()), v, out);
            }
        }
        Value::Null => {
            out.insert(prefix.to_string(), "null".to_string());
        }
        Value::String(s) => {
            out.insert(prefix.to_string(), s.clone());
        }
        other => {
            out.insert(prefix.to_string(), other.to_string());
        }
    }
}

/// The job spec as sorted dotted keys.
pub fn config_echo(spec: &JobSpec) -> BTreeMap<String, String> {
    let mut out = BTreeMap::new();
    flatten_json("", &serde_json::to_value(spec).expect("specs serialize"), &mut out);
    out
}

fn escape(v: &str) -> String {
    v.replace('\\', "\\\\").replace('\n', "\\n")
}

impl JobReport {
    pub fn new(spec: &JobSpec) -> Self {
        JobReport {
            config: config_echo(spec),
            stages: BTreeMap::new(),
            metrics: None,
            results: BTreeMap::new(),
            timings: Vec::new(),
            artifacts: Vec::new(),
        }
    }

    /// `[section]` blocks of `key = value` lines, keys sorted.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let mut section = |name: &str, rows: &mut dyn Iterator<Item = (String, String)>| {
            let _ = writeln!(out, "[{name}]");
            for (k, v) in rows {
                let _ = writeln!(out, "{k} = {}", escape(&v));
            }
            out.push('\n');
        };
        section("config", &mut self.config.clone().into_iter());
        section("stages", &mut self.stages.clone().into_iter());
        if let Some(m) = &self.metrics {
            section("metrics", &mut m.rows().into_iter().map(|(k, v)| (k.to_string(), v)));
        }
        section("results", &mut self.results.clone().into_iter());
        out
    }

    pub fn render_timings(&self) -> String {
        let mut out = String::from("stage,milliseconds\n");
        for (stage, ms) in &self.timings {
            let _ = writeln!(out, "{stage},{ms}");
        }
        out
    }

    pub fn artifact(&self, name: &str) -> Option<&[u8]> {
        self.artifacts.iter().find(|(n, _)| n == name).map(|(_, b)| b.as_slice())
    }

    /// Writes `report.txt`, `timings.txt`, `metrics.csv` (when metrics
    /// exist) and `artifacts/`.
    pub fn write_to(&self, dir: &Path) -> io::Result<()> {
        fs::create_dir_all(dir.join("artifacts"))?;
        fs::write(dir.join("report.txt"), self.render())?;
        fs::write(dir.join("timings.txt"), self.render_timings())?;
        if let Some(m) = &self.metrics {
            let mut buf = Vec::new();
            m.write_csv(&mut buf).map_err(io::Error::other)?;
            fs::write(dir.join("metrics.csv"), buf)?;
        }
        for (name, bytes) in &self.artifacts {
            fs::write(dir.join("artifacts").join(name), bytes)?;
        }
        Ok(())
    }
}

/// Reads a rendered report back into `section -> key -> value`.
pub fn parse_report_text(text: &str) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut out: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current: Option<String> = None;
    for line in text.lines() {
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = Some(name.to_string());
            out.entry(name.to_string()).or_default();
        } else if let (Some(sec), Some((k, v))) = (&current, line.split_once(" = ")) {
            out.entry(sec.clone()).or_default().insert(k.to_string(), unescape(v));
        }
    }
    out
}

fn unescape(v: &str) -> String {
    let mut out = String::with_capacity(v.len());
    let mut chars = v.chars();
    while let Some(c) = chars.next() {
        if c == '\\' {
            match chars.next() {
                Some('n') => out.push('\n'),
                Some(o) => out.push(o),
                None => out.push('\\'),
            }
        } else {
            out.push(c);
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flatten_nested() {
        let mut out = BTreeMap::new();
        flatten_json("", &serde_json::json!({"a": {"b": 1, "c": [true, "x"]}, "d": []}), &mut out);
        let keys: Vec<_> = out.iter().map(|(k, v)| format!("{k}={v}")).collect();
        assert_eq!(keys, vec!["a.b=1", "a.c.0=true", "a.c.1=x", "d=[]"]);
    }

    #[test]
    fn render_sections() {
        let spec = JobSpec::from_yaml("application: summarize\nloader: {path: x.log}\nparser: {}\n").unwrap();
        let mut r = JobReport::new(&spec);
        r.results.insert("templates".into(), "2".into());
        r.timings.push(("load".into(), 5));
        let text = r.render();
        assert!(text.starts_with("[config]\napplication = summarize\n"));
        assert!(text.contains("[results]\ntemplates = 2\n"));
        assert!(!text.contains("load = "));
    }

    #[test]
    fn rendered_text_parses_back() {
        let spec = JobSpec::from_yaml("application: summarize\nloader: {path: \"a\\\\b\\nc.log\"}\nparser: {}\n").unwrap();
        let mut r = JobReport::new(&spec);
        r.results.insert("k".into(), "x = y".into());
        let back = parse_report_text(&r.render());
        assert_eq!(back["config"], r.config);
        assert_eq!(back["results"]["k"], "x = y");
        assert!(back["stages"].is_empty());
    }
}
