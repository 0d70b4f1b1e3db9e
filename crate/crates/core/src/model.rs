//! Problem data and the delay-based makespan kernel.
//!
//! Under the no-wait constraint the start-up gap on the first machine between
//! two consecutive jobs depends only on the pair, so a sequence costs the sum
//! of its consecutive delays plus the total processing time of its last job.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Processing times, delays and makespans.
pub type Time = u64;

/// Job identifier in `0..n_jobs`.
pub type JobId = usize;

/// Job-major processing time matrix.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Instance {
    n_jobs: usize,
    n_machines: usize,
    proc: Vec<Time>,
}

impl Instance {
    /// Builds an instance from one row of processing times per job.
    pub fn new(rows: Vec<Vec<Time>>) -> Result<Self> {
        let n_jobs = rows.len();
        let n_machines = rows.first().map_or(0, Vec::len);
        let mut proc = Vec::with_capacity(n_jobs * n_machines);
        for row in &rows {
            if row.len() != n_machines {
                return Err(Error::DimensionMismatch {
                    expected: n_jobs * n_machines,
                    found: rows.iter().map(Vec::len).sum(),
                });
            }
            proc.extend_from_slice(row);
        }
        Self::from_flat(n_jobs, n_machines, proc)
    }

    /// Builds an instance from a flat job-major buffer.
    pub fn from_flat(n_jobs: usize, n_machines: usize, proc: Vec<Time>) -> Result<Self> {
        if n_jobs == 0 || n_machines == 0 {
            return Err(Error::EmptyInstance { n_jobs, n_machines });
        }
        if proc.len() != n_jobs * n_machines {
            return Err(Error::DimensionMismatch {
                expected: n_jobs * n_machines,
                found: proc.len(),
            });
        }
        if let Some(idx) = proc.iter().position(|&p| p == 0) {
            return Err(Error::ZeroProcessingTime {
                job: idx / n_machines,
                machine: idx % n_machines,
            });
        }
        Ok(Self {
            n_jobs,
            n_machines,
            proc,
        })
    }

    pub fn n_jobs(&self) -> usize {
        self.n_jobs
    }

    pub fn n_machines(&self) -> usize {
        self.n_machines
    }

    #[inline]
    pub fn proc(&self, job: JobId, machine: usize) -> Time {
        self.proc[job * self.n_machines + machine]
    }

    /// Processing times of `job` on every machine, in machine order.
    pub fn job_row(&self, job: JobId) -> &[Time] {
        &self.proc[job * self.n_machines..(job + 1) * self.n_machines]
    }

    pub fn job_total(&self, job: JobId) -> Time {
        self.job_row(job).iter().sum()
    }

    /// Sum of all processing times.
    pub fn total_work(&self) -> Time {
        self.proc.iter().sum()
    }

    fn check_job(&self, job: JobId) -> Result<()> {
        if job >= self.n_jobs {
            return Err(Error::InvalidJob {
                job,
                n_jobs: self.n_jobs,
            });
        }
        Ok(())
    }
}

/// Start-up gap on the first machine when `next` directly follows `job`.
pub fn delay(inst: &Instance, job: JobId, next: JobId) -> Result<Time> {
    inst.check_job(job)?;
    inst.check_job(next)?;
    if job == next {
        return Err(Error::SameJob(job));
    }
    Ok(pair_delay(inst.job_row(job), inst.job_row(next)))
}

// p_first[0] + max over r of (sum_{1..r} p_first - sum_{0..r-1} p_next, 0)
fn pair_delay(first: &[Time], next: &[Time]) -> Time {
    let mut ahead: i64 = 0;
    let mut slack: i64 = 0;
    for r in 1..first.len() {
        ahead += first[r] as i64;
        ahead -= next[r - 1] as i64;
        slack = slack.max(ahead);
    }
    first[0] + slack as Time
}

/// A job ordering covering every job exactly once.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<JobId>", into = "Vec<JobId>")]
pub struct Permutation(Vec<JobId>);

impl Permutation {
    /// Validates that `order` is a bijection on `0..order.len()`.
    pub fn new(order: Vec<JobId>) -> Result<Self> {
        let n = order.len();
        let mut seen = vec![false; n];
        for &job in &order {
            if job >= n {
                return Err(Error::InvalidJob { job, n_jobs: n });
            }
            if std::mem::replace(&mut seen[job], true) {
                return Err(Error::DuplicateJob(job));
            }
        }
        Ok(Self(order))
    }

    /// Validates `order` and checks it covers exactly `n_jobs` jobs.
    pub fn for_jobs(order: Vec<JobId>, n_jobs: usize) -> Result<Self> {
        if order.len() != n_jobs {
            return Err(Error::LengthMismatch {
                expected: n_jobs,
                found: order.len(),
            });
        }
        Self::new(order)
    }

    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<JobId>) -> Self {
        debug_assert!(Self::new(order.clone()).is_ok());
        Self(order)
    }

    pub fn as_slice(&self) -> &[JobId] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<JobId> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl TryFrom<Vec<JobId>> for Permutation {
    type Error = Error;

    fn try_from(order: Vec<JobId>) -> Result<Self> {
        Self::new(order)
    }
}

impl From<Permutation> for Vec<JobId> {
    fn from(perm: Permutation) -> Self {
        perm.0
    }
}

impl AsRef<[JobId]> for Permutation {
    fn as_ref(&self) -> &[JobId] {
        &self.0
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, job) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{job}")?;
        }
        Ok(())
    }
}

/// Makespan of a schedule, optionally with the completion time of each position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Evaluation {
    pub makespan: Time,
    pub completion: Option<Vec<Time>>,
}

/// Dense pairwise delays plus per-job totals.
///
/// The same structure serves the meta-problem over super-jobs, where a
/// "job" is a block, its delay to the next block is the delay between the
/// boundary jobs and its tail is the total of its last job.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DelayMatrix {
    n: usize,
    d: Vec<Time>,
    job_total: Vec<Time>,
}

impl DelayMatrix {
    /// Precomputes every pairwise delay, O(n^2 m).
    pub fn new(inst: &Instance) -> Self {
        let n = inst.n_jobs();
        let mut d = vec![0; n * n];
        for i in 0..n {
            for k in 0..n {
                if i != k {
                    d[i * n + k] = pair_delay(inst.job_row(i), inst.job_row(k));
                }
            }
        }
        let job_total = (0..n).map(|i| inst.job_total(i)).collect();
        Self { n, d, job_total }
    }

    /// Assembles a matrix from raw parts; the diagonal is ignored.
    pub fn from_parts(n: usize, mut d: Vec<Time>, job_total: Vec<Time>) -> Result<Self> {
        if d.len() != n * n || job_total.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n * n + n,
                found: d.len() + job_total.len(),
            });
        }
        for i in 0..n {
            d[i * n + i] = 0;
        }
        Ok(Self { n, d, job_total })
    }

    pub fn n_jobs(&self) -> usize {
        self.n
    }

    #[inline(always)]
    pub fn get(&self, from: JobId, to: JobId) -> Time {
        self.d[from * self.n + to]
    }

    #[inline(always)]
    pub fn job_total(&self, job: JobId) -> Time {
        self.job_total[job]
    }

    /// Cost of an arbitrary sequence of distinct jobs; zero when empty.
    #[inline]
    pub fn sequence_makespan(&self, seq: &[JobId]) -> Time {
        match seq.last() {
            None => 0,
            Some(&last) => {
                seq.windows(2).map(|w| self.get(w[0], w[1])).sum::<Time>() + self.job_total(last)
            }
        }
    }

    /// Completion time of every position of `seq`.
    pub fn completion_times(&self, seq: &[JobId]) -> Vec<Time> {
        let mut start = 0;
        let mut out = Vec::with_capacity(seq.len());
        for (k, &job) in seq.iter().enumerate() {
            if k > 0 {
                start += self.get(seq[k - 1], job);
            }
            out.push(start + self.job_total(job));
        }
        out
    }

    pub(crate) fn check_permutation(&self, perm: &Permutation) -> Result<()> {
        if perm.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                found: perm.len(),
            });
        }
        Ok(())
    }
}

/// Makespan of a full permutation via the delay matrix, O(n).
pub fn makespan(dm: &DelayMatrix, perm: &Permutation) -> Result<Evaluation> {
    dm.check_permutation(perm)?;
    let completion = dm.completion_times(perm.as_slice());
    Ok(Evaluation {
        makespan: completion.last().copied().unwrap_or(0),
        completion: Some(completion),
    })
}

/// Makespan by building the no-wait Gantt chart machine by machine.
///
/// Each job starts at the earliest time at which every one of its operations
/// finds its machine free, given that operations follow each other without
/// waiting. Independent of the delay matrix.
pub fn makespan_simulate(inst: &Instance, perm: &Permutation) -> Result<Evaluation> {
    if perm.len() != inst.n_jobs() {
        return Err(Error::LengthMismatch {
            expected: inst.n_jobs(),
            found: perm.len(),
        });
    }
    let m = inst.n_machines();
    let mut machine_free = vec![0 as Time; m];
    let mut offsets = vec![0 as Time; m + 1];
    let mut completion = Vec::with_capacity(perm.len());
    let mut overall = 0;
    for &job in perm.as_slice() {
        for j in 0..m {
            offsets[j + 1] = offsets[j] + inst.proc(job, j);
        }
        let start = (0..m)
            .map(|j| machine_free[j].saturating_sub(offsets[j]))
            .max()
            .unwrap_or(0);
        for j in 0..m {
            debug_assert!(start + offsets[j] >= machine_free[j]);
            machine_free[j] = start + offsets[j + 1];
        }
        let done = start + offsets[m];
        overall = overall.max(done);
        completion.push(done);
    }
    Ok(Evaluation {
        makespan: overall,
        completion: Some(completion),
    })
}
