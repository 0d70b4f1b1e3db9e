//! Exhaustive enumeration of small search spaces.

use std::collections::BinaryHeap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DelayMatrix, Instance, JobId, Permutation, Time};
use crate::neighborhood::is_local_optimum;

/// Default largest instance the enumerator accepts.
pub const DEFAULT_ENUMERATION_CAP: usize = 10;
/// Largest instance accepted with the override flag (hours of compute).
pub const MAX_ENUMERATION_CAP: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EnumerationLimits {
    pub cap: usize,
    pub allow_large: bool,
}

impl Default for EnumerationLimits {
    fn default() -> Self {
        Self {
            cap: DEFAULT_ENUMERATION_CAP,
            allow_large: false,
        }
    }
}

impl EnumerationLimits {
    fn effective_cap(&self) -> usize {
        if self.allow_large {
            self.cap.max(MAX_ENUMERATION_CAP)
        } else {
            self.cap
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RankedSolution {
    pub permutation: Permutation,
    pub makespan: Time,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalOptimaReport {
    pub global_optimum: RankedSolution,
    /// Best local optima other than the reported global optimum, by
    /// makespan then lexicographic order.
    pub local_optima: Vec<RankedSolution>,
    pub visited: u64,
    pub local_optimum_count: u64,
}

#[derive(Default)]
struct Partial {
    best: Option<(Time, Vec<JobId>)>,
    heap: BinaryHeap<(Time, Vec<JobId>)>,
    visited: u64,
    local: u64,
}

impl Partial {
    fn offer(&mut self, keep: usize, mk: Time, seq: &[JobId]) {
        if self.heap.len() == keep {
            match self.heap.peek() {
                Some(top) if (mk, seq) < (top.0, top.1.as_slice()) => {
                    self.heap.pop();
                }
                _ => return,
            }
        }
        if keep > 0 {
            self.heap.push((mk, seq.to_vec()));
        }
    }
}

/// Visits all n! permutations and reports the global optimum and the best
/// insertion local optima.
pub fn enumerate_local_optima(
    inst: &Instance,
    keep: usize,
    limits: EnumerationLimits,
) -> Result<LocalOptimaReport> {
    let n = inst.n_jobs();
    let cap = limits.effective_cap();
    if n > cap {
        return Err(Error::EnumerationRefused { n_jobs: n, cap });
    }
    let dm = DelayMatrix::new(inst);
    // one extra slot so the global optimum can be dropped from the list
    let slots = keep + 1;

    let parts: Vec<Partial> = (0..n)
        .into_par_iter()
        .map(|first| {
            let mut part = Partial::default();
            let mut seq: Vec<JobId> = std::iter::once(first)
                .chain((0..n).filter(|&j| j != first))
                .collect();
            loop {
                let mk = dm.sequence_makespan(&seq);
                part.visited += 1;
                if part.best.as_ref().is_none_or(|(b, _)| mk < *b) {
                    part.best = Some((mk, seq.clone()));
                }
                if is_local_optimum(&dm, &seq) {
                    part.local += 1;
                    part.offer(slots, mk, &seq);
                }
                if !next_permutation(&mut seq[1..]) {
                    break;
                }
            }
            part
        })
        .collect();

    let mut visited = 0;
    let mut local_optimum_count = 0;
    let mut best: Option<(Time, Vec<JobId>)> = None;
    let mut pooled = Vec::new();
    for part in parts {
        visited += part.visited;
        local_optimum_count += part.local;
        if let Some(b) = part.best {
            if best.as_ref().is_none_or(|cur| b < *cur) {
                best = Some(b);
            }
        }
        pooled.extend(part.heap.into_vec());
    }
    pooled.sort();
    let (global_mk, global_seq) = best.expect("at least one permutation");
    let local_optima = pooled
        .into_iter()
        .filter(|(_, seq)| *seq != global_seq)
        .take(keep)
        .map(|(makespan, seq)| RankedSolution {
            permutation: Permutation::from_vec_unchecked(seq),
            makespan,
        })
        .collect();
    Ok(LocalOptimaReport {
        global_optimum: RankedSolution {
            permutation: Permutation::from_vec_unchecked(global_seq),
            makespan: global_mk,
        },
        local_optima,
        visited,
        local_optimum_count,
    })
}

/// Advances to the next lexicographic permutation; false after the last one.
pub fn next_permutation<T: Ord>(seq: &mut [T]) -> bool {
    if seq.len() < 2 {
        return false;
    }
    let mut i = seq.len() - 1;
    while i > 0 && seq[i - 1] >= seq[i] {
        i -= 1;
    }
    if i == 0 {
        return false;
    }
    let mut j = seq.len() - 1;
    while seq[j] <= seq[i - 1] {
        j -= 1;
    }
    seq.swap(i - 1, j);
    seq[i..].reverse();
    true
}
