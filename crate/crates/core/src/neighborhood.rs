//! Insertion moves, constant-time move evaluation and the insertion local search.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DelayMatrix, JobId, Permutation, Time};

/// Take the job at `from` and reinsert it so that it ends at index `to`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct InsertionMove {
    pub from: usize,
    pub to: usize,
}

impl InsertionMove {
    pub fn new(from: usize, to: usize, len: usize) -> Result<Self> {
        let mv = Self { from, to };
        mv.check(len)?;
        Ok(mv)
    }

    fn check(&self, len: usize) -> Result<()> {
        if self.from == self.to || self.from >= len || self.to >= len {
            return Err(Error::InvalidMove {
                from: self.from,
                to: self.to,
                len,
            });
        }
        Ok(())
    }
}

/// Relocates `seq[from]` to index `to`, shifting the jobs in between.
#[inline]
pub fn shift_in_place<T>(seq: &mut [T], from: usize, to: usize) {
    if from < to {
        seq[from..=to].rotate_left(1);
    } else if to < from {
        seq[to..=from].rotate_right(1);
    }
}

pub fn apply_insertion(perm: &Permutation, mv: InsertionMove) -> Result<Permutation> {
    mv.check(perm.len())?;
    let mut seq = perm.as_slice().to_vec();
    shift_in_place(&mut seq, mv.from, mv.to);
    Ok(Permutation::from_vec_unchecked(seq))
}

/// Change in cost when the job at `pos` is taken out of `seq`.
#[inline]
pub fn removal_delta(dm: &DelayMatrix, seq: &[JobId], pos: usize) -> i64 {
    let n = seq.len();
    let job = seq[pos];
    if n == 1 {
        return -(dm.job_total(job) as i64);
    }
    if pos == 0 {
        -(dm.get(job, seq[1]) as i64)
    } else if pos == n - 1 {
        let prev = seq[n - 2];
        dm.job_total(prev) as i64 - dm.get(prev, job) as i64 - dm.job_total(job) as i64
    } else {
        let (prev, next) = (seq[pos - 1], seq[pos + 1]);
        dm.get(prev, next) as i64 - dm.get(prev, job) as i64 - dm.get(job, next) as i64
    }
}

/// Change in cost when `job` is inserted into `seq` so that it lands at `pos`.
#[inline]
pub fn insertion_delta(dm: &DelayMatrix, seq: &[JobId], job: JobId, pos: usize) -> i64 {
    let prev = if pos > 0 { Some(seq[pos - 1]) } else { None };
    let next = seq.get(pos).copied();
    link_delta(dm, prev, next, job)
}

#[inline(always)]
fn link_delta(dm: &DelayMatrix, prev: Option<JobId>, next: Option<JobId>, job: JobId) -> i64 {
    match (prev, next) {
        (None, None) => dm.job_total(job) as i64,
        (None, Some(b)) => dm.get(job, b) as i64,
        (Some(a), None) => {
            dm.get(a, job) as i64 + dm.job_total(job) as i64 - dm.job_total(a) as i64
        }
        (Some(a), Some(b)) => {
            dm.get(a, job) as i64 + dm.get(job, b) as i64 - dm.get(a, b) as i64
        }
    }
}

/// O(1) cost change of an insertion move on a raw sequence. Unchecked.
#[inline]
pub fn move_delta(dm: &DelayMatrix, seq: &[JobId], from: usize, to: usize) -> i64 {
    let job = seq[from];
    // neighbours of position `to` in the sequence with `from` removed
    let reduced = |t: usize| if t < from { seq[t] } else { seq[t + 1] };
    let prev = if to > 0 { Some(reduced(to - 1)) } else { None };
    let next = if to + 1 < seq.len() { Some(reduced(to)) } else { None };
    removal_delta(dm, seq, from) + link_delta(dm, prev, next, job)
}

/// `makespan(apply_insertion(perm, mv)) - makespan(perm)` in constant time.
pub fn delta_makespan(dm: &DelayMatrix, perm: &Permutation, mv: InsertionMove) -> Result<i64> {
    dm.check_permutation(perm)?;
    mv.check(perm.len())?;
    Ok(move_delta(dm, perm.as_slice(), mv.from, mv.to))
}

/// Lowest-cost position for inserting `job` into `seq`, smallest index on ties.
#[inline]
pub fn best_position(dm: &DelayMatrix, seq: &[JobId], job: JobId) -> (usize, i64) {
    let mut best = (0, insertion_delta(dm, seq, job, 0));
    for pos in 1..=seq.len() {
        let delta = insertion_delta(dm, seq, job, pos);
        if delta < best.1 {
            best = (pos, delta);
        }
    }
    best
}

/// Result of a best insertion into a partial sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Insertion {
    pub position: usize,
    pub sequence: Vec<JobId>,
    pub makespan: Time,
}

/// Inserts `job` where it minimises the partial makespan of the sequence.
pub fn best_insertion(dm: &DelayMatrix, partial: &[JobId], job: JobId) -> Result<Insertion> {
    if job >= dm.n_jobs() {
        return Err(Error::InvalidJob {
            job,
            n_jobs: dm.n_jobs(),
        });
    }
    if partial.contains(&job) {
        return Err(Error::DuplicateJob(job));
    }
    let (position, delta) = best_position(dm, partial, job);
    let mut sequence = Vec::with_capacity(partial.len() + 1);
    sequence.extend_from_slice(partial);
    sequence.insert(position, job);
    let makespan = (dm.sequence_makespan(partial) as i64 + delta) as Time;
    Ok(Insertion {
        position,
        sequence,
        makespan,
    })
}

/// Counters from one local search call.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SearchStats {
    pub passes: usize,
    pub improvements: usize,
}

/// Insertion local search on a raw sequence.
///
/// Each pass visits every job in a freshly shuffled order, pulls it out and
/// puts it back at its best position; the job only moves when that is a
/// strict improvement. A pass without improvement leaves the sequence
/// unchanged, which certifies an insertion local optimum.
pub fn local_search_in_place<R: Rng + ?Sized>(
    dm: &DelayMatrix,
    seq: &mut Vec<JobId>,
    rng: &mut R,
) -> SearchStats {
    let mut stats = SearchStats::default();
    if seq.len() < 2 {
        return stats;
    }
    let mut order = seq.clone();
    loop {
        stats.passes += 1;
        order.shuffle(rng);
        let mut improved = false;
        for &job in &order {
            let pos = seq.iter().position(|&j| j == job).expect("job in sequence");
            let removal = removal_delta(dm, seq, pos);
            seq.remove(pos);
            let (best, insertion) = best_position(dm, seq, job);
            if removal + insertion < 0 {
                seq.insert(best, job);
                improved = true;
                stats.improvements += 1;
            } else {
                seq.insert(pos, job);
            }
        }
        if !improved {
            return stats;
        }
    }
}

/// Returns an insertion local optimum no worse than `perm`.
pub fn local_search<R: Rng + ?Sized>(dm: &DelayMatrix, perm: &Permutation, rng: &mut R) -> Permutation {
    let mut seq = perm.as_slice().to_vec();
    local_search_in_place(dm, &mut seq, rng);
    Permutation::from_vec_unchecked(seq)
}

/// First strictly improving insertion move in (from, to) scan order.
pub fn improving_move(dm: &DelayMatrix, seq: &[JobId]) -> Option<InsertionMove> {
    let n = seq.len();
    for from in 0..n {
        for to in 0..n {
            if from != to && move_delta(dm, seq, from, to) < 0 {
                return Some(InsertionMove { from, to });
            }
        }
    }
    None
}

pub fn is_local_optimum(dm: &DelayMatrix, seq: &[JobId]) -> bool {
    improving_move(dm, seq).is_none()
}
