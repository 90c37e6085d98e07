use std::fs;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// SHA-256 of the canonical JSON encoding of `value`.
pub fn digest<T: Serialize + ?Sized>(value: &T) -> Result<String> {
    Ok(hex::encode(Sha256::digest(serde_json::to_vec(value)?)))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_slice(&bytes)?)
}

/// Stage outputs persisted as JSON next to a `.key` file holding the digest
/// of the stage inputs. A stored output is reused only when reuse is enabled
/// and the key matches.
#[derive(Clone, Debug)]
pub struct StageStore {
    root: Option<PathBuf>,
    reuse: bool,
}

impl StageStore {
    /// Keeps nothing on disk.
    pub fn in_memory() -> Self {
        Self { root: None, reuse: false }
    }

    pub fn on_disk(root: impl Into<PathBuf>, reuse: bool) -> Self {
        Self {
            root: Some(root.into()),
            reuse,
        }
    }

    pub fn root(&self) -> Option<&Path> {
        self.root.as_deref()
    }

    pub fn path(&self, relative: &str) -> Option<PathBuf> {
        self.root.as_ref().map(|r| r.join(relative))
    }

    /// Loads `relative` when its key matches `inputs`, otherwise runs
    /// `compute` and stores the result. Errors are tagged with `stage`.
    pub fn stage<K, T, F>(&self, stage: &'static str, relative: &str, inputs: &K, compute: F) -> Result<T>
    where
        K: Serialize + ?Sized,
        T: Serialize + DeserializeOwned,
        F: FnOnce() -> Result<T>,
    {
        let run = || -> Result<T> {
            let Some(path) = self.path(relative) else {
                return compute();
            };
            let key = digest(inputs)?;
            let key_path = key_path(&path);
            if self.reuse && path.exists() && fs::read_to_string(&key_path).is_ok_and(|k| k.trim() == key) {
                if let Ok(value) = read_json(&path) {
                    return Ok(value);
                }
            }
            let value = compute()?;
            write_json(&path, &value)?;
            fs::write(&key_path, format!("{key}\n")).map_err(|e| Error::io(&key_path, e))?;
            Ok(value)
        };
        run().map_err(|e| e.in_stage(stage))
    }
}

fn key_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(".key");
    path.with_file_name(name)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::cell::Cell;

    #[test]
    fn reuses_only_matching_keys() {
        let dir = tempfile::tempdir().unwrap();
        let store = StageStore::on_disk(dir.path(), true);
        let calls = Cell::new(0);
        let compute = |v: u32| {
            calls.set(calls.get() + 1);
            Ok(v)
        };
        assert_eq!(store.stage("s", "a.json", &1, || compute(10)).unwrap(), 10);
        assert_eq!(store.stage("s", "a.json", &1, || compute(20)).unwrap(), 10);
        assert_eq!(calls.get(), 1);
        assert_eq!(store.stage("s", "a.json", &2, || compute(30)).unwrap(), 30);
        assert_eq!(calls.get(), 2);

        let forced = StageStore::on_disk(dir.path(), false);
        assert_eq!(forced.stage("s", "a.json", &2, || compute(40)).unwrap(), 40);
    }

    #[test]
    fn failures_are_stage_tagged() {
        let store = StageStore::in_memory();
        let err = store
            .stage::<_, u32, _>("train", "x.json", &0, || Err(Error::numerical("boom")))
            .unwrap_err();
        assert!(err.to_string().contains("train"));
    }
}
