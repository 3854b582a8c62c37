use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use dks_core::oracles::{calibrate_xi, XiCalibration};

use crate::error::Result;

/// Calibration results keyed by `(n, k, p, trials, seed)`, optionally backed
/// by a JSON file that is rewritten after every new entry.
#[derive(Debug, Default)]
pub struct CalibrationCache {
    path: Option<PathBuf>,
    entries: Mutex<BTreeMap<String, XiCalibration>>,
}

pub const CACHE_FILE: &str = "xi_cache.json";

pub fn cache_key(n: usize, k: usize, p: f64, trials: usize, seed: u64) -> String {
    format!("n={n},k={k},p={p:?},trials={trials},seed={seed}")
}

impl CalibrationCache {
    pub fn in_memory() -> Self {
        Self::default()
    }

    /// Opens (or starts) the cache file `dir/xi_cache.json`.
    pub fn open(dir: impl AsRef<Path>) -> Result<Self> {
        let path = dir.as_ref().join(CACHE_FILE);
        let entries = if path.exists() {
            serde_json::from_str(&std::fs::read_to_string(&path)?)?
        } else {
            BTreeMap::new()
        };
        Ok(CalibrationCache {
            path: Some(path),
            entries: Mutex::new(entries),
        })
    }

    pub fn get_or_compute(&self, n: usize, k: usize, p: f64, trials: usize, seed: u64) -> Result<XiCalibration> {
        let key = cache_key(n, k, p, trials, seed);
        if let Some(hit) = self.entries.lock().expect("cache lock").get(&key) {
            return Ok(hit.clone());
        }
        let fresh = calibrate_xi(n, k, p, trials, seed)?;
        let mut entries = self.entries.lock().expect("cache lock");
        entries.insert(key, fresh.clone());
        if let Some(path) = &self.path {
            if let Some(dir) = path.parent() {
                std::fs::create_dir_all(dir)?;
            }
            std::fs::write(path, serde_json::to_string_pretty(&*entries)?)?;
        }
        Ok(fresh)
    }

    pub fn len(&self) -> usize {
        self.entries.lock().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn persists_and_reloads() {
        let dir = tempfile::tempdir().unwrap();
        let cache = CalibrationCache::open(dir.path()).unwrap();
        let a = cache.get_or_compute(60, 15, 0.2, 3, 5).unwrap();
        assert_eq!(cache.len(), 1);
        let again = CalibrationCache::open(dir.path()).unwrap();
        assert_eq!(again.len(), 1);
        assert_eq!(again.get_or_compute(60, 15, 0.2, 3, 5).unwrap(), a);
        assert!(cache.get_or_compute(60, 15, 0.0, 3, 5).is_err());
    }
}
