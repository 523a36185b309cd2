use std::io::{Read, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::WILDCARD;

/// Template id reserved for lines with no tokens.
pub const EMPTY_TEMPLATE_ID: u32 = 0;

const PARAM_SEPARATOR: char = '\u{1f}';

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Template {
    pub id: u32,
    pub tokens: Vec<String>,
    pub count: usize,
}

impl Template {
    pub fn wildcard_count(&self) -> usize {
        self.tokens.iter().filter(|t| *t == WILDCARD).count()
    }

    pub fn render(&self) -> String {
        self.tokens.join(" ")
    }
}

/// Per-line template assignment with extracted parameters. `templates` is
/// indexed by template id; id 0 is the empty template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseResult {
    pub line_template_ids: Vec<u32>,
    pub templates: Vec<Template>,
    pub parameter_lists: Vec<Vec<String>>,
}

impl ParseResult {
    pub(crate) fn empty(lines: usize) -> Self {
        ParseResult {
            line_template_ids: vec![EMPTY_TEMPLATE_ID; lines],
            templates: vec![Template {
                id: EMPTY_TEMPLATE_ID,
                tokens: Vec::new(),
                count: 0,
            }],
            parameter_lists: vec![Vec::new(); lines],
        }
    }

    pub(crate) fn push_template(&mut self, tokens: Vec<String>) -> u32 {
        let id = self.templates.len() as u32;
        self.templates.push(Template { id, tokens, count: 0 });
        id
    }

    pub(crate) fn assign(&mut self, line: usize, id: u32, tokens: &[&str]) {
        let template = &mut self.templates[id as usize];
        template.count += 1;
        self.line_template_ids[line] = id;
        self.parameter_lists[line] = template
            .tokens
            .iter()
            .zip(tokens)
            .filter(|(t, _)| *t == WILDCARD)
            .map(|(_, tok)| tok.to_string())
            .collect();
    }

    pub(crate) fn count_empty(&mut self) {
        let n = self
            .line_template_ids
            .iter()
            .filter(|&&id| id == EMPTY_TEMPLATE_ID)
            .count();
        self.templates[0].count = n;
    }

    /// Builds a result where each distinct body is its own template with no
    /// parameters; used when a pipeline skips template mining.
    pub fn from_distinct_bodies<S: AsRef<str>>(bodies: &[S]) -> Self {
        let mut result = ParseResult::empty(bodies.len());
        let mut ids: std::collections::HashMap<Vec<&str>, u32> = Default::default();
        for (i, b) in bodies.iter().enumerate() {
            let tokens: Vec<&str> = b.as_ref().split_whitespace().collect();
            if tokens.is_empty() {
                continue;
            }
            let id = match ids.get(&tokens) {
                Some(&id) => id,
                None => {
                    // literal "<*>" tokens would read as parameters
                    let owned = tokens
                        .iter()
                        .map(|t| if *t == WILDCARD { "<\\*>".to_string() } else { t.to_string() })
                        .collect();
                    let id = result.push_template(owned);
                    ids.insert(tokens.clone(), id);
                    id
                }
            };
            let t = &mut result.templates[id as usize];
            t.count += 1;
            result.line_template_ids[i] = id;
        }
        result.count_empty();
        result
    }

    pub fn len(&self) -> usize {
        self.line_template_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.line_template_ids.is_empty()
    }

    /// Number of template ids, including the reserved empty one.
    pub fn vocabulary_size(&self) -> usize {
        self.templates.len()
    }

    pub fn template_of(&self, line: usize) -> &Template {
        &self.templates[self.line_template_ids[line] as usize]
    }

    pub fn template_string(&self, id: u32) -> String {
        self.templates[id as usize].render()
    }

    /// Substitutes a line's parameters back into its template.
    pub fn reconstruct(&self, line: usize) -> Vec<String> {
        let mut params = self.parameter_lists[line].iter();
        self.template_of(line)
            .tokens
            .iter()
            .map(|t| {
                if t == WILDCARD {
                    params.next().cloned().unwrap_or_default()
                } else {
                    t.clone()
                }
            })
            .collect()
    }

    /// `templates.csv`: `template_id,template,count` for every used template.
    pub fn write_templates_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["template_id", "template", "count"])?;
        for t in self.templates.iter().filter(|t| t.count > 0) {
            w.write_record([t.id.to_string(), t.render(), t.count.to_string()])?;
        }
        w.flush()?;
        Ok(())
    }

    /// `parsed_lines.csv`: `index,template_id,parameters`, parameters joined
    /// by U+001F with `\` and U+001F backslash-escaped.
    pub fn write_parsed_lines_csv<W: Write>(&self, writer: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["index", "template_id", "parameters"])?;
        for (i, (id, params)) in self.line_template_ids.iter().zip(&self.parameter_lists).enumerate() {
            let joined = params
                .iter()
                .map(|p| escape_param(p))
                .collect::<Vec<_>>()
                .join(&PARAM_SEPARATOR.to_string());
            w.write_record([i.to_string(), id.to_string(), joined])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Both csv files concatenated; convenient for byte-level comparisons.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_templates_csv(&mut buf).expect("write to Vec");
        self.write_parsed_lines_csv(&mut buf).expect("write to Vec");
        buf
    }
}

fn escape_param(p: &str) -> String {
    let mut out = String::with_capacity(p.len());
    for c in p.chars() {
        if c == '\\' || c == PARAM_SEPARATOR {
            out.push('\\');
        }
        out.push(c);
    }
    out
}

fn split_params(s: &str) -> Vec<String> {
    if s.is_empty() {
        return Vec::new();
    }
    let mut out = vec![String::new()];
    let mut chars = s.chars();
    while let Some(c) = chars.next() {
        match c {
            '\\' => {
                if let Some(n) = chars.next() {
                    out.last_mut().expect("non-empty").push(n);
                }
            }
            PARAM_SEPARATOR => out.push(String::new()),
            _ => out.last_mut().expect("non-empty").push(c),
        }
    }
    out
}

#[derive(Debug, Error)]
pub enum ParseResultError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("row {0}: {1}")]
    BadRow(usize, String),
}

/// Reads `templates.csv` back into `(id, tokens, count)` triples.
pub fn read_templates_csv<R: Read>(reader: R) -> Result<Vec<Template>, ParseResultError> {
    let mut out = Vec::new();
    for (row, rec) in csv::Reader::from_reader(reader).records().enumerate() {
        let rec = rec?;
        let bad = |m: &str| ParseResultError::BadRow(row, m.to_string());
        out.push(Template {
            id: rec[0].parse().map_err(|_| bad("template_id"))?,
            tokens: rec[1].split(' ').filter(|t| !t.is_empty()).map(str::to_string).collect(),
            count: rec[2].parse().map_err(|_| bad("count"))?,
        });
    }
    Ok(out)
}

/// Reads `parsed_lines.csv` back into per-line `(template_id, parameters)`.
pub fn read_parsed_lines_csv<R: Read>(reader: R) -> Result<Vec<(u32, Vec<String>)>, ParseResultError> {
    let mut out = Vec::new();
    for (row, rec) in csv::Reader::from_reader(reader).records().enumerate() {
        let rec = rec?;
        let id = rec[1]
            .parse()
            .map_err(|_| ParseResultError::BadRow(row, "template_id".into()))?;
        out.push((id, split_params(&rec[2])));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CatalogEntry {
    pub template_id: u32,
    pub template: String,
    pub count: usize,
    /// Up to three distinct parameter tuples, in line order.
    pub example_parameters: Vec<Vec<String>>,
}

/// Used templates sorted by descending count, ties by ascending id.
pub fn template_catalog(result: &ParseResult) -> Vec<CatalogEntry> {
    let mut examples: Vec<Vec<Vec<String>>> = vec![Vec::new(); result.templates.len()];
    for (id, params) in result.line_template_ids.iter().zip(&result.parameter_lists) {
        let ex = &mut examples[*id as usize];
        if ex.len() < 3 && !params.is_empty() && !ex.contains(params) {
            ex.push(params.clone());
        }
    }
    let mut entries: Vec<CatalogEntry> = result
        .templates
        .iter()
        .filter(|t| t.count > 0)
        .map(|t| CatalogEntry {
            template_id: t.id,
            template: t.render(),
            count: t.count,
            example_parameters: std::mem::take(&mut examples[t.id as usize]),
        })
        .collect();
    entries.sort_by(|a, b| b.count.cmp(&a.count).then(a.template_id.cmp(&b.template_id)));
    entries
}
