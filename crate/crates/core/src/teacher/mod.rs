//! Teacher clients: binary same-topic comparisons and embeddings.
//!
//! A [`Teacher`] wraps a [`TeacherBackend`] (an OpenAI-compatible HTTP service
//! or the synthetic [`OracleTeacher`]) with an on-disk cache and a request
//! counter. Cached answers are returned without touching the backend.

mod cache;
mod http;
mod oracle;

use std::collections::HashMap;
use std::path::PathBuf;
use std::sync::atomic::{AtomicUsize, Ordering};

use thiserror::Error;

pub use cache::{CacheEntry, TeacherCache};
pub use http::{compare_prompt, HttpTeacher, HttpTeacherConfig, RetryPolicy};
pub use oracle::{item_jitter, oracle_compare, OracleTeacher, OracleTeacherConfig};

use crate::digest::sha256_hex;

#[derive(Debug, Error)]
pub enum TeacherError {
    #[error("empty completion")]
    EmptyCompletion,
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: usize, message: String },
    #[error("unexpected response: {0}")]
    Response(String),
    #[error("embedding dimension drift: expected {expected}, got {found}")]
    DimensionDrift { expected: usize, found: usize },
    #[error("batch of {size} exceeds client limit {limit}")]
    BatchTooLarge { size: usize, limit: usize },
    #[error("empty text for item {0}")]
    EmptyText(usize),
    #[error("unknown item id {0}")]
    UnknownItem(usize),
    #[error("missing api key: environment variable {0} is not set")]
    MissingApiKey(String),
    #[error("cache error at {path}: {message}")]
    Cache { path: PathBuf, message: String },
    #[error("pair {index}: {source}")]
    AtPair {
        index: usize,
        #[source]
        source: Box<TeacherError>,
    },
    #[error("{0}")]
    Unsupported(String),
}

/// Maps a completion to a binary label: 1 iff the lowercased completion,
/// split on non-alphanumeric characters, contains the token `yes`.
pub fn parse_yes_no(completion: &str) -> Result<u8, TeacherError> {
    if completion.trim().is_empty() {
        return Err(TeacherError::EmptyCompletion);
    }
    let lower = completion.to_lowercase();
    let yes = lower
        .split(|c: char| !c.is_alphanumeric())
        .any(|tok| tok == "yes");
    Ok(u8::from(yes))
}

/// The item a request is about. HTTP backends use the text, the oracle the id.
#[derive(Debug, Clone, Copy)]
pub struct ItemRef<'a> {
    pub id: usize,
    pub text: &'a str,
}

/// Raw answer of a backend comparison: the completion text plus its label.
#[derive(Debug, Clone)]
pub struct CompareAnswer {
    pub raw: serde_json::Value,
    pub label: u8,
}

pub trait TeacherBackend: Send + Sync {
    /// Stable identity (backend kind, model, endpoint) used in cache keys.
    fn identity(&self) -> String;

    /// Key material identifying a comparison request for this backend.
    fn compare_key(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> String;

    /// Key material identifying an embedding request for one item.
    fn embed_key(&self, item: ItemRef<'_>) -> String;

    fn compare(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> Result<CompareAnswer, TeacherError>;

    /// One request for the whole slice; returns one vector per item.
    fn embed(&self, items: &[ItemRef<'_>]) -> Result<Vec<Vec<f64>>, TeacherError>;

    fn max_in_flight(&self) -> usize {
        1
    }

    fn max_batch(&self) -> usize {
        usize::MAX
    }
}

pub struct Teacher {
    backend: Box<dyn TeacherBackend>,
    cache: Option<TeacherCache>,
    requests: AtomicUsize,
    dim: std::sync::Mutex<Option<usize>>,
}

impl Teacher {
    pub fn new(backend: Box<dyn TeacherBackend>, cache_dir: Option<PathBuf>) -> Result<Self, TeacherError> {
        let cache = cache_dir.map(TeacherCache::open).transpose()?;
        Ok(Teacher {
            backend,
            cache,
            requests: AtomicUsize::new(0),
            dim: std::sync::Mutex::new(None),
        })
    }

    pub fn identity(&self) -> String {
        self.backend.identity()
    }

    /// Number of backend requests issued (cache hits excluded).
    pub fn requests(&self) -> usize {
        self.requests.load(Ordering::SeqCst)
    }

    fn digest(&self, kind: &str, material: &str) -> String {
        sha256_hex(format!("{}\0{kind}\0{material}", self.backend.identity()).as_bytes())
    }

    pub fn compare_binary(&self, a: ItemRef<'_>, b: ItemRef<'_>) -> Result<u8, TeacherError> {
        if a.text.trim().is_empty() {
            return Err(TeacherError::EmptyText(a.id));
        }
        if b.text.trim().is_empty() {
            return Err(TeacherError::EmptyText(b.id));
        }
        let key = self.digest("compare", &self.backend.compare_key(a, b));
        if let Some(cache) = &self.cache {
            if let Some(entry) = cache.get(&key)? {
                if let Some(label) = entry.parsed.as_u64() {
                    return Ok(label as u8);
                }
            }
        }
        self.requests.fetch_add(1, Ordering::SeqCst);
        let answer = self.backend.compare(a, b)?;
        if let Some(cache) = &self.cache {
            cache.put(&key, answer.raw, serde_json::json!(answer.label))?;
        }
        Ok(answer.label)
    }

    /// Labels many pairs, fanning out to the backend's in-flight budget.
    /// Output order equals input order.
    pub fn compare_all(&self, pairs: &[(ItemRef<'_>, ItemRef<'_>)]) -> Result<Vec<u8>, TeacherError> {
        let workers = self.backend.max_in_flight().max(1).min(pairs.len().max(1));
        let wrap = |index: usize, e: TeacherError| TeacherError::AtPair {
            index,
            source: Box::new(e),
        };
        if workers == 1 {
            return pairs
                .iter()
                .enumerate()
                .map(|(k, &(a, b))| self.compare_binary(a, b).map_err(|e| wrap(k, e)))
                .collect();
        }
        let next = AtomicUsize::new(0);
        let mut slots: Vec<Option<Result<u8, TeacherError>>> = Vec::with_capacity(pairs.len());
        slots.resize_with(pairs.len(), || None);
        let results = std::sync::Mutex::new(slots);
        std::thread::scope(|s| {
            for _ in 0..workers {
                s.spawn(|| loop {
                    let k = next.fetch_add(1, Ordering::SeqCst);
                    if k >= pairs.len() {
                        break;
                    }
                    let (a, b) = pairs[k];
                    let r = self.compare_binary(a, b);
                    let failed = r.is_err();
                    results.lock().unwrap()[k] = Some(r);
                    if failed {
                        // stop handing out work; remaining slots stay empty
                        next.store(pairs.len(), Ordering::SeqCst);
                        break;
                    }
                });
            }
        });
        let mut out = Vec::with_capacity(pairs.len());
        for (k, slot) in results.into_inner().unwrap().into_iter().enumerate() {
            match slot {
                Some(Ok(v)) => out.push(v),
                Some(Err(e)) => return Err(wrap(k, e)),
                None => {}
            }
        }
        if out.len() != pairs.len() {
            return Err(TeacherError::Response("labeling aborted".into()));
        }
        Ok(out)
    }

    /// Embeds items, normalizing every vector to unit norm. Cached per item;
    /// uncached items are sent in batches of at most the backend's limit.
    pub fn embed_batch(&self, items: &[ItemRef<'_>]) -> Result<Vec<Vec<f64>>, TeacherError> {
        let mut out: Vec<Option<Vec<f64>>> = vec![None; items.len()];
        let mut pending: Vec<(usize, String)> = Vec::new();
        let mut pending_keys: HashMap<String, usize> = HashMap::new();
        for (k, item) in items.iter().enumerate() {
            if item.text.trim().is_empty() {
                return Err(TeacherError::EmptyText(item.id));
            }
            let key = self.digest("embed", &self.backend.embed_key(*item));
            if let Some(cache) = &self.cache {
                if let Some(entry) = cache.get(&key)? {
                    let v: Vec<f64> = serde_json::from_value(entry.parsed)
                        .map_err(|e| TeacherError::Response(format!("cached vector: {e}")))?;
                    self.check_dim(v.len())?;
                    out[k] = Some(v);
                    continue;
                }
            }
            if !pending_keys.contains_key(&key) {
                pending_keys.insert(key.clone(), pending.len());
                pending.push((k, key));
            }
        }

        let limit = self.backend.max_batch().max(1);
        let chunks: Vec<&[(usize, String)]> = pending.chunks(limit).collect();
        let fetch = |chunk: &[(usize, String)]| -> Result<Vec<Vec<f64>>, TeacherError> {
            let refs: Vec<ItemRef<'_>> = chunk.iter().map(|(k, _)| items[*k]).collect();
            self.requests.fetch_add(1, Ordering::SeqCst);
            let vecs = self.backend.embed(&refs)?;
            if vecs.len() != refs.len() {
                return Err(TeacherError::Response(format!(
                    "{} vectors returned for {} inputs",
                    vecs.len(),
                    refs.len()
                )));
            }
            vecs.into_iter().map(normalize).collect()
        };
        let workers = self.backend.max_in_flight().max(1);
        let mut fetched: Vec<Vec<Vec<f64>>> = Vec::with_capacity(chunks.len());
        for group in chunks.chunks(workers) {
            let results: Vec<Result<Vec<Vec<f64>>, TeacherError>> = if group.len() == 1 {
                vec![fetch(group[0])]
            } else {
                std::thread::scope(|s| {
                    let handles: Vec<_> = group.iter().map(|c| s.spawn(move || fetch(c))).collect();
                    handles.into_iter().map(|h| h.join().expect("embed worker panicked")).collect()
                })
            };
            for r in results {
                fetched.push(r?);
            }
        }

        for (chunk, vecs) in chunks.iter().zip(fetched) {
            for ((k, key), v) in chunk.iter().zip(vecs) {
                self.check_dim(v.len())?;
                if let Some(cache) = &self.cache {
                    cache.put(key, serde_json::json!({ "embedding": v }), serde_json::json!(v))?;
                }
                out[*k] = Some(v);
            }
        }
        // duplicates within the request reuse the first occurrence
        for (k, item) in items.iter().enumerate() {
            if out[k].is_none() {
                let key = self.digest("embed", &self.backend.embed_key(*item));
                let first = pending[pending_keys[&key]].0;
                out[k] = out[first].clone();
            }
        }
        Ok(out.into_iter().map(|v| v.expect("every slot filled")).collect())
    }

    fn check_dim(&self, found: usize) -> Result<(), TeacherError> {
        let mut dim = self.dim.lock().unwrap();
        match *dim {
            None => {
                *dim = Some(found);
                Ok(())
            }
            Some(expected) if expected == found => Ok(()),
            Some(expected) => Err(TeacherError::DimensionDrift { expected, found }),
        }
    }
}

fn normalize(v: Vec<f64>) -> Result<Vec<f64>, TeacherError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(TeacherError::Response("non-finite or empty embedding".into()));
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm == 0.0 {
        return Err(TeacherError::Response("zero embedding".into()));
    }
    Ok(v.into_iter().map(|x| x / norm).collect())
}
