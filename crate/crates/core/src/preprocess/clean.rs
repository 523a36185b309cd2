use std::collections::BTreeMap;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::log_model::LogRecordBatch;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ReplaceRule {
    pub pattern: String,
    pub placeholder: String,
}

impl ReplaceRule {
    pub fn new(pattern: impl Into<String>, placeholder: impl Into<String>) -> Self {
        ReplaceRule {
            pattern: pattern.into(),
            placeholder: placeholder.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PreprocessorConfig {
    /// Each match is replaced by a single space.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom_delimiters_regex: Vec<String>,
    /// Applied in order after delimiter normalisation.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub custom_replace_list: Vec<ReplaceRule>,
}

#[derive(Debug, Error, PartialEq)]
pub enum CleanError {
    #[error("{list}[{position}] does not compile: {message}")]
    BadPattern {
        list: &'static str,
        position: usize,
        message: String,
    },
}

/// Matched substrings removed from each body, keyed by (record index, placeholder).
pub type ExtractionTable = BTreeMap<(usize, String), Vec<String>>;

/// A compiled [`PreprocessorConfig`].
#[derive(Debug, Clone)]
pub struct Preprocessor {
    delimiters: Vec<Regex>,
    replacements: Vec<(Regex, String)>,
}

impl Preprocessor {
    pub fn new(config: &PreprocessorConfig) -> Result<Self, CleanError> {
        let delimiters = config
            .custom_delimiters_regex
            .iter()
            .enumerate()
            .map(|(position, p)| {
                Regex::new(p).map_err(|e| CleanError::BadPattern {
                    list: "custom_delimiters_regex",
                    position,
                    message: e.to_string(),
                })
            })
            .collect::<Result<_, _>>()?;
        let replacements = config
            .custom_replace_list
            .iter()
            .enumerate()
            .map(|(position, rule)| {
                Regex::new(&rule.pattern)
                    .map(|re| (re, rule.placeholder.clone()))
                    .map_err(|e| CleanError::BadPattern {
                        list: "custom_replace_list",
                        position,
                        message: e.to_string(),
                    })
            })
            .collect::<Result<_, _>>()?;
        Ok(Preprocessor {
            delimiters,
            replacements,
        })
    }

    /// Cleans one body, appending every replaced match to `extracted`.
    pub fn clean_body(&self, body: &str, mut extracted: impl FnMut(&str, &str)) -> String {
        let mut text = body.to_string();
        for re in &self.delimiters {
            text = re.replace_all(&text, " ").into_owned();
        }
        for (re, placeholder) in &self.replacements {
            if !re.is_match(&text) {
                continue;
            }
            for m in re.find_iter(&text) {
                extracted(placeholder, m.as_str());
            }
            text = re.replace_all(&text, regex::NoExpand(placeholder)).into_owned();
        }
        text
    }
}

/// Normalises delimiters and substitutes replace-list matches in every body.
/// Fields other than `body` are left untouched.
pub fn clean(batch: &LogRecordBatch, config: &PreprocessorConfig) -> Result<(LogRecordBatch, ExtractionTable), CleanError> {
    let pre = Preprocessor::new(config)?;
    let mut out = batch.clone();
    let mut table = ExtractionTable::new();
    for i in 0..batch.len() {
        let cleaned = pre.clean_body(&batch.bodies()[i], |placeholder, matched| {
            table
                .entry((i, placeholder.to_string()))
                .or_default()
                .push(matched.to_string());
        });
        out.set_body(i, cleaned);
    }
    Ok((out, table))
}
