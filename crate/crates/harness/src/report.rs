//! Relative percentage deviation, run records and summary tables.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use chrono::{DateTime, Utc};
use nwfs_core::igsj::PhaseRecord;
use nwfs_core::{Permutation, Time};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

/// Percentage deviation of `cmax` from `best`; negative means a new best.
pub fn rpd(cmax: Time, best: Time) -> Result<f64> {
    if best == 0 {
        return Err(HarnessError::Input("reference makespan must be positive".into()));
    }
    // scaling the integer difference first keeps round percentages exact
    Ok(100.0 * (cmax as f64 - best as f64) / best as f64)
}

/// Wall time spent in one stage of a run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageTime {
    pub stage: String,
    pub ms: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub instance: String,
    /// "20x5" style size class.
    pub size: String,
    pub algorithm: String,
    pub config: serde_json::Value,
    pub replication: usize,
    pub seed: u64,
    pub makespan: Option<Time>,
    pub best_known: Option<Time>,
    pub rpd: Option<f64>,
    pub permutation: Option<Permutation>,
    pub phases: Vec<PhaseRecord>,
    pub stages: Vec<StageTime>,
    pub total_ms: u64,
    pub timestamp: DateTime<Utc>,
    /// Solver failure; the other result fields are empty.
    pub error: Option<String>,
}

impl RunRecord {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records serialize")
    }

    /// "pool=..;60=..;inf=.." in stage order.
    pub fn stage_breakdown(&self) -> String {
        let parts: Vec<String> = self.stages.iter().map(|s| format!("{}={}", s.stage, s.ms)).collect();
        parts.join(";")
    }
}

/// Aggregate of the runs of one size class and algorithm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub size: String,
    pub algorithm: String,
    pub runs: usize,
    pub failures: usize,
    pub mean_rpd: Option<f64>,
    pub mean_total_ms: f64,
    /// Mean wall time per stage, in first-seen stage order.
    pub stage_ms: Vec<(String, f64)>,
}

/// A run that beat the registry; the registry itself is never updated.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NewBest {
    pub instance: String,
    pub makespan: Time,
    pub best_known: Time,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub rows: Vec<SummaryRow>,
    pub new_bests: Vec<NewBest>,
}

fn size_key(size: &str) -> (usize, usize) {
    let mut it = size.split('x').map(|s| s.parse().unwrap_or(usize::MAX));
    (it.next().unwrap_or(0), it.next().unwrap_or(0))
}

pub fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

pub fn summarize(records: &[RunRecord]) -> Summary {
    type Key = ((usize, usize), String, String);
    let mut groups: BTreeMap<Key, Vec<&RunRecord>> = BTreeMap::new();
    for r in records {
        groups
            .entry((size_key(&r.size), r.size.clone(), r.algorithm.clone()))
            .or_default()
            .push(r);
    }
    let rows = groups
        .into_iter()
        .map(|((_, size, algorithm), runs)| {
            let rpds: Vec<f64> = runs.iter().filter_map(|r| r.rpd).collect();
            let totals: Vec<f64> = runs.iter().map(|r| r.total_ms as f64).collect();
            let mut stage_ms: Vec<(String, Vec<f64>)> = Vec::new();
            for r in &runs {
                for s in &r.stages {
                    match stage_ms.iter_mut().find(|(name, _)| *name == s.stage) {
                        Some((_, v)) => v.push(s.ms as f64),
                        None => stage_ms.push((s.stage.clone(), vec![s.ms as f64])),
                    }
                }
            }
            SummaryRow {
                size,
                algorithm,
                runs: runs.len(),
                failures: runs.iter().filter(|r| r.error.is_some()).count(),
                mean_rpd: mean(&rpds),
                mean_total_ms: mean(&totals).unwrap_or(0.0),
                stage_ms: stage_ms
                    .into_iter()
                    .map(|(name, v)| (name, mean(&v).unwrap_or(0.0)))
                    .collect(),
            }
        })
        .collect();
    let mut new_bests: Vec<NewBest> = records
        .iter()
        .filter_map(|r| match (r.makespan, r.best_known) {
            (Some(makespan), Some(best_known)) if makespan < best_known => Some(NewBest {
                instance: r.instance.clone(),
                makespan,
                best_known,
            }),
            _ => None,
        })
        .collect();
    new_bests.sort_by(|a, b| (&a.instance, a.makespan).cmp(&(&b.instance, b.makespan)));
    new_bests.dedup();
    Summary { rows, new_bests }
}

impl Summary {
    /// Plain-text table, one line per size class and algorithm.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<8} {:<6} {:>5} {:>5} {:>9} {:>11}  stages (mean ms)",
            "size", "algo", "runs", "fail", "mean_rpd", "mean_ms"
        );
        for r in &self.rows {
            let rpd = r.mean_rpd.map_or_else(|| "-".to_string(), |v| format!("{v:.2}"));
            let stages: Vec<String> = r
                .stage_ms
                .iter()
                .map(|(name, ms)| format!("{name}={ms:.0}"))
                .collect();
            let _ = writeln!(
                out,
                "{:<8} {:<6} {:>5} {:>5} {:>9} {:>11.0}  {}",
                r.size,
                r.algorithm,
                r.runs,
                r.failures,
                rpd,
                r.mean_total_ms,
                stages.join(" ")
            );
        }
        for nb in &self.new_bests {
            let _ = writeln!(out, "new best {}: {} (registry {})", nb.instance, nb.makespan, nb.best_known);
        }
        out
    }
}
