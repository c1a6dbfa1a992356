//! Corpus loading and persistence.
//!
//! The on-disk format is one JSON object per line with a required `text`
//! field and optional `label` and `key` fields. Items are reindexed densely in
//! file order; the original key (or the 1-based line number when no key is
//! given) is kept alongside.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusItem {
    pub id: usize,
    pub text: String,
    /// Evaluation-only class label. Never inspected beyond equality.
    pub gold_label: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    items: Vec<CorpusItem>,
    keys: Vec<String>,
}

#[derive(Deserialize)]
struct RawRecord {
    text: Option<String>,
    #[serde(default)]
    label: Option<String>,
    #[serde(default)]
    key: Option<String>,
}

#[derive(Serialize)]
struct OutRecord<'a> {
    key: &'a str,
    text: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    label: Option<&'a str>,
}

impl Corpus {
    /// Builds a corpus from `(key, text, label)` triples, trimming text and
    /// assigning dense ids.
    pub fn from_records<I>(records: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, String, Option<String>)>,
    {
        let mut items = Vec::new();
        let mut keys = Vec::new();
        let mut seen = HashMap::new();
        for (idx, (key, text, label)) in records.into_iter().enumerate() {
            let text = text.trim();
            if text.is_empty() {
                return Err(Error::InvalidRecord {
                    index: idx,
                    reason: "empty text".into(),
                });
            }
            if seen.insert(key.clone(), idx).is_some() {
                return Err(Error::InvalidRecord {
                    index: idx,
                    reason: format!("duplicate key {key:?}"),
                });
            }
            items.push(CorpusItem {
                id: idx,
                text: text.to_string(),
                gold_label: label,
            });
            keys.push(key);
        }
        if items.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        Ok(Corpus { items, keys })
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn items(&self) -> &[CorpusItem] {
        &self.items
    }

    pub fn get(&self, id: usize) -> Result<&CorpusItem> {
        self.items.get(id).ok_or(Error::UnknownItem(id))
    }

    pub fn key(&self, id: usize) -> Option<&str> {
        self.keys.get(id).map(String::as_str)
    }

    pub fn ids(&self) -> Vec<usize> {
        (0..self.items.len()).collect()
    }

    pub fn has_gold_labels(&self) -> bool {
        self.items.iter().all(|it| it.gold_label.is_some())
    }

    /// Gold labels indexed by item id.
    pub fn gold_labels(&self) -> Vec<Option<String>> {
        self.items.iter().map(|it| it.gold_label.clone()).collect()
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let file = File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = BufWriter::new(file);
        for (item, key) in self.items.iter().zip(&self.keys) {
            let rec = OutRecord {
                key,
                text: &item.text,
                label: item.gold_label.as_deref(),
            };
            serde_json::to_writer(&mut w, &rec)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }
}

/// Loads a line-delimited corpus file. Blank lines are skipped; every other
/// line must be a JSON object with a non-empty `text` field.
pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut records = Vec::new();
    let mut lines_of_key: HashMap<String, usize> = HashMap::new();
    for (n, line) in reader.lines().enumerate() {
        let lineno = n + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Line {
            line: lineno,
            message: format!("malformed record: {e}"),
        })?;
        let text = raw.text.unwrap_or_default();
        if text.trim().is_empty() {
            return Err(Error::Line {
                line: lineno,
                message: "empty text".into(),
            });
        }
        let key = raw.key.unwrap_or_else(|| lineno.to_string());
        if let Some(first) = lines_of_key.insert(key.clone(), lineno) {
            return Err(Error::Line {
                line: lineno,
                message: format!("duplicate key {key:?} (first seen on line {first})"),
            });
        }
        records.push((key, text, raw.label));
    }
    Corpus::from_records(records)
}
