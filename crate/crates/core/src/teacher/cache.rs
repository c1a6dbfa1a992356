use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};

use super::TeacherError;

/// One cached teacher answer, stored as `<cache_dir>/<request_digest>.json`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CacheEntry {
    pub request_digest: String,
    pub raw_response: serde_json::Value,
    pub parsed: serde_json::Value,
    pub timestamp: u64,
}

pub struct TeacherCache {
    dir: PathBuf,
    write_lock: Mutex<()>,
}

impl TeacherCache {
    pub fn open(dir: PathBuf) -> Result<Self, TeacherError> {
        std::fs::create_dir_all(&dir).map_err(|e| cache_err(&dir, e))?;
        Ok(TeacherCache {
            dir,
            write_lock: Mutex::new(()),
        })
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, digest: &str) -> PathBuf {
        self.dir.join(format!("{digest}.json"))
    }

    pub fn get(&self, digest: &str) -> Result<Option<CacheEntry>, TeacherError> {
        let path = self.path(digest);
        match std::fs::read(&path) {
            Ok(bytes) => {
                let entry: CacheEntry = serde_json::from_slice(&bytes).map_err(|e| cache_err(&path, e))?;
                if entry.request_digest != digest {
                    return Err(cache_err(&path, "digest does not match file name"));
                }
                Ok(Some(entry))
            }
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Ok(None),
            Err(e) => Err(cache_err(&path, e)),
        }
    }

    pub fn put(
        &self,
        digest: &str,
        raw_response: serde_json::Value,
        parsed: serde_json::Value,
    ) -> Result<(), TeacherError> {
        let entry = CacheEntry {
            request_digest: digest.to_string(),
            raw_response,
            parsed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
        };
        let bytes = serde_json::to_vec(&entry).map_err(|e| cache_err(&self.dir, e))?;
        let path = self.path(digest);
        let tmp = self.dir.join(format!("{digest}.json.tmp"));
        let _guard = self.write_lock.lock().unwrap();
        std::fs::write(&tmp, bytes).map_err(|e| cache_err(&tmp, e))?;
        std::fs::rename(&tmp, &path).map_err(|e| cache_err(&path, e))
    }
}

fn cache_err(path: &Path, e: impl std::fmt::Display) -> TeacherError {
    TeacherError::Cache {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}
