//! Best-known makespans of the benchmark instances.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use nwfs_core::Time;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, HarnessError, Result};

/// Registry file shipped with the crate.
pub const BUILTIN_CSV: &str = include_str!("../data/best_known.csv");
/// File name looked up under the data directory.
pub const REGISTRY_FILE: &str = "best_known.csv";
/// Environment variable naming the data directory.
pub const DATA_ENV: &str = "NWFS_DATA";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct BestKnown {
    /// Reference value for RPD.
    pub best: Time,
    /// Value known before the super-job experiments.
    pub previous_best: Time,
    pub sigma1_best: Option<Time>,
    pub sigma2_best: Option<Time>,
}

#[derive(Debug, Deserialize)]
struct CsvRow {
    instance: String,
    best: Time,
    previous_best: Time,
    sigma1_best: Option<Time>,
    sigma2_best: Option<Time>,
}

/// Read-only map from instance name to best-known values.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BestKnownRegistry {
    entries: BTreeMap<String, BestKnown>,
}

impl BestKnownRegistry {
    pub fn builtin() -> Self {
        Self::from_csv_str(BUILTIN_CSV).expect("shipped registry is valid")
    }

    pub fn from_csv_str(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut reader = csv::Reader::from_reader(text.as_bytes());
        for (idx, row) in reader.deserialize::<CsvRow>().enumerate() {
            let line = idx + 2;
            let row = row.map_err(|e| HarnessError::Parse {
                line,
                column: 1,
                message: e.to_string(),
            })?;
            let values = [Some(row.best), Some(row.previous_best), row.sigma1_best, row.sigma2_best];
            if values.iter().flatten().any(|&v| v == 0) {
                return Err(HarnessError::Parse {
                    line,
                    column: 1,
                    message: format!("{}: makespans must be positive", row.instance),
                });
            }
            let entry = BestKnown {
                best: row.best,
                previous_best: row.previous_best,
                sigma1_best: row.sigma1_best,
                sigma2_best: row.sigma2_best,
            };
            if entries.insert(row.instance.to_ascii_lowercase(), entry).is_some() {
                return Err(HarnessError::Parse {
                    line,
                    column: 1,
                    message: format!("duplicate entry {}", row.instance),
                });
            }
        }
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(io_error(path))?;
        Self::from_csv_str(&text).map_err(|e| HarnessError::Data {
            path: path.to_path_buf(),
            message: e.to_string(),
        })
    }

    /// `best_known.csv` under `dir` when present, else the shipped table.
    pub fn from_dir(dir: Option<&Path>) -> Result<Self> {
        match dir.map(|d| d.join(REGISTRY_FILE)).filter(|p| p.is_file()) {
            Some(path) => Self::load(&path),
            None => Ok(Self::builtin()),
        }
    }

    pub fn get(&self, name: &str) -> Option<&BestKnown> {
        self.entries.get(&name.to_ascii_lowercase())
    }

    pub fn best(&self, name: &str) -> Option<Time> {
        self.get(name).map(|e| e.best)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &BestKnown)> {
        self.entries.iter().map(|(k, v)| (k.as_str(), v))
    }
}

/// Data directory from `NWFS_DATA`, if set.
pub fn data_dir_from_env() -> Option<PathBuf> {
    std::env::var_os(DATA_ENV).map(PathBuf::from)
}
