//! Disk cache for per-distance solve results.
//!
//! Entries are keyed by `(scene hash, distance bits)`, so any change to the
//! geometry, offset, or solver settings invalidates them wholesale. Values
//! are small JSON files written atomically via a temp-file rename.

use crate::Result;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

/// Environment variable overriding the cache directory.
pub const CACHE_DIR_ENV: &str = "EDGECAP_CACHE_DIR";

#[derive(Debug, Clone)]
pub struct SolveCache {
    dir: PathBuf,
}

#[derive(Serialize, Deserialize)]
struct Entry {
    d: f64,
    capacitance: f64,
    version: String,
}

impl SolveCache {
    pub fn new(dir: impl AsRef<Path>) -> Result<SolveCache> {
        std::fs::create_dir_all(dir.as_ref())?;
        Ok(SolveCache { dir: dir.as_ref().to_path_buf() })
    }

    /// Cache under `default_dir`, unless `EDGECAP_CACHE_DIR` overrides it.
    pub fn at_default_or_env(default_dir: impl AsRef<Path>) -> Result<SolveCache> {
        match std::env::var_os(CACHE_DIR_ENV) {
            Some(dir) => SolveCache::new(dir),
            None => SolveCache::new(default_dir),
        }
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }

    fn path(&self, scene_hash: &str, d: f64) -> PathBuf {
        // exact f64 bits keep distinct distances distinct
        self.dir.join(format!("{scene_hash}_{:016x}.json", d.to_bits()))
    }

    pub fn get(&self, scene_hash: &str, d: f64) -> Option<f64> {
        let text = std::fs::read_to_string(self.path(scene_hash, d)).ok()?;
        let entry: Entry = serde_json::from_str(&text).ok()?;
        (entry.d == d).then_some(entry.capacitance)
    }

    pub fn put(&self, scene_hash: &str, d: f64, capacitance: f64) -> Result<()> {
        let entry = Entry {
            d,
            capacitance,
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        let target = self.path(scene_hash, d);
        let tmp = target.with_extension(format!("tmp{}", std::process::id()));
        std::fs::write(&tmp, serde_json::to_string(&entry).expect("entry serialization"))?;
        std::fs::rename(&tmp, &target)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn put_get_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SolveCache::new(dir.path()).unwrap();
        assert_eq!(cache.get("abc", 1e-6), None);
        cache.put("abc", 1e-6, 42.5e-15).unwrap();
        assert_eq!(cache.get("abc", 1e-6), Some(42.5e-15));
        // different hash or distance misses
        assert_eq!(cache.get("abd", 1e-6), None);
        assert_eq!(cache.get("abc", 2e-6), None);
    }

    #[test]
    fn corrupt_entries_are_misses() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SolveCache::new(dir.path()).unwrap();
        cache.put("k", 3e-6, 1e-15).unwrap();
        let path = dir.path().join(format!("k_{:016x}.json", 3e-6f64.to_bits()));
        std::fs::write(&path, "{ not json").unwrap();
        assert_eq!(cache.get("k", 3e-6), None);
    }

    #[test]
    fn full_precision_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let cache = SolveCache::new(dir.path()).unwrap();
        let c = 6.950_502_016_296_748e-11_f64;
        cache.put("h", 1.234_567_890_123_456e-6, c).unwrap();
        assert_eq!(cache.get("h", 1.234_567_890_123_456e-6), Some(c));
    }
}
