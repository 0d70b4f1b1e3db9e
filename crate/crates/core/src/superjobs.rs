//! Super-jobs: runs of consecutive jobs shared by most solutions of a pool,
//! and the meta-problem that treats each run as a single job.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DelayMatrix, JobId, Permutation, Time};

/// Confidence level of a super-job: a percentage in (0, 100], or infinity
/// meaning no super-job at all.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Confidence {
    Percent(f64),
    Infinite,
}

impl Confidence {
    pub fn percent(value: f64) -> Result<Self> {
        if value > 0.0 && value <= 100.0 {
            Ok(Self::Percent(value))
        } else {
            Err(Error::InvalidConfidence(format!("{value} is outside (0, 100]")))
        }
    }

    /// Minimum number of pool solutions a pair must appear in.
    pub fn threshold(&self, pool_size: usize) -> Option<usize> {
        match *self {
            Self::Infinite => None,
            Self::Percent(p) => {
                // "at least p percent": ceiling, with slack for binary fractions
                let raw = p * pool_size as f64 / 100.0;
                Some(((raw - 1e-9).ceil() as usize).max(1))
            }
        }
    }
}

impl fmt::Display for Confidence {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Infinite => f.write_str("inf"),
            Self::Percent(p) => write!(f, "{p}"),
        }
    }
}

impl FromStr for Confidence {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim().trim_end_matches('%');
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Self::Infinite),
            _ => {
                let v: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidConfidence(format!("cannot parse `{s}`")))?;
                Self::percent(v)
            }
        }
    }
}

impl TryFrom<String> for Confidence {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Confidence> for String {
    fn from(c: Confidence) -> Self {
        c.to_string()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PoolSource {
    IgRun,
    Iteration(usize),
    File,
}

/// Good-quality solutions over one job set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Pool {
    solutions: Vec<Permutation>,
    source: PoolSource,
}

impl Pool {
    pub fn new(solutions: Vec<Permutation>, source: PoolSource) -> Result<Self> {
        let Some(first) = solutions.first() else {
            return Err(Error::InvalidPool("pool is empty".into()));
        };
        let n = first.len();
        if let Some(bad) = solutions.iter().position(|s| s.len() != n) {
            return Err(Error::InvalidPool(format!(
                "solution {bad} has {} jobs, expected {n}",
                solutions[bad].len()
            )));
        }
        Ok(Self { solutions, source })
    }

    pub fn solutions(&self) -> &[Permutation] {
        &self.solutions
    }

    pub fn source(&self) -> PoolSource {
        self.source
    }

    pub fn len(&self) -> usize {
        self.solutions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.solutions.is_empty()
    }

    pub fn n_jobs(&self) -> usize {
        self.solutions[0].len()
    }
}

/// Ordered run of original jobs treated as one meta-job.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SuperJob(Vec<JobId>);

impl SuperJob {
    pub fn new(jobs: Vec<JobId>) -> Result<Self> {
        if jobs.is_empty() {
            return Err(Error::NotAPartition("empty super-job".into()));
        }
        Ok(Self(jobs))
    }

    pub fn jobs(&self) -> &[JobId] {
        &self.0
    }

    pub fn first(&self) -> JobId {
        self.0[0]
    }

    pub fn last(&self) -> JobId {
        self.0[self.0.len() - 1]
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl fmt::Display for SuperJob {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("[")?;
        for (i, job) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{job}")?;
        }
        f.write_str("]")
    }
}

/// Partition of the job set into super-jobs, ordered by first job id.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuperJobSet {
    blocks: Vec<SuperJob>,
    sigma: Confidence,
    #[serde(skip)]
    block_of: Vec<usize>,
}

impl SuperJobSet {
    /// Checks that `blocks` partition `0..n_jobs` and orders them by first job.
    pub fn new(mut blocks: Vec<SuperJob>, sigma: Confidence, n_jobs: usize) -> Result<Self> {
        blocks.sort_by_key(SuperJob::first);
        let mut block_of = vec![usize::MAX; n_jobs];
        for (b, block) in blocks.iter().enumerate() {
            for &job in block.jobs() {
                if job >= n_jobs {
                    return Err(Error::NotAPartition(format!("job {job} out of range")));
                }
                if block_of[job] != usize::MAX {
                    return Err(Error::NotAPartition(format!("job {job} in two blocks")));
                }
                block_of[job] = b;
            }
        }
        if let Some(job) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::NotAPartition(format!("job {job} is not covered")));
        }
        Ok(Self {
            blocks,
            sigma,
            block_of,
        })
    }

    pub fn singletons(n_jobs: usize) -> Self {
        let blocks = (0..n_jobs).map(|j| SuperJob(vec![j])).collect();
        Self {
            blocks,
            sigma: Confidence::Infinite,
            block_of: (0..n_jobs).collect(),
        }
    }

    pub fn blocks(&self) -> &[SuperJob] {
        &self.blocks
    }

    pub fn sigma(&self) -> Confidence {
        self.sigma
    }

    /// Number of meta-jobs.
    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn n_jobs(&self) -> usize {
        self.block_of.len()
    }

    pub fn block_of(&self, job: JobId) -> usize {
        self.block_of[job]
    }

    /// Blocks with more than one job.
    pub fn non_trivial(&self) -> impl Iterator<Item = &SuperJob> {
        self.blocks.iter().filter(|b| b.len() > 1)
    }

    /// Concatenates the blocks in meta-permutation order.
    pub fn expand(&self, meta: &[usize]) -> Result<Permutation> {
        let b = self.blocks.len();
        if meta.len() != b {
            return Err(Error::LengthMismatch {
                expected: b,
                found: meta.len(),
            });
        }
        let mut seen = vec![false; b];
        let mut seq = Vec::with_capacity(self.n_jobs());
        for &idx in meta {
            if idx >= b {
                return Err(Error::InvalidJob { job: idx, n_jobs: b });
            }
            if std::mem::replace(&mut seen[idx], true) {
                return Err(Error::DuplicateJob(idx));
            }
            seq.extend_from_slice(self.blocks[idx].jobs());
        }
        Ok(Permutation::from_vec_unchecked(seq))
    }

    /// The meta-permutation whose expansion is `perm`.
    pub fn project(&self, perm: &Permutation) -> Result<Vec<usize>> {
        if perm.len() != self.n_jobs() {
            return Err(Error::LengthMismatch {
                expected: self.n_jobs(),
                found: perm.len(),
            });
        }
        let seq = perm.as_slice();
        let mut meta = Vec::with_capacity(self.blocks.len());
        let mut pos = 0;
        while pos < seq.len() {
            let b = self.block_of[seq[pos]];
            let block = self.blocks[b].jobs();
            if seq.get(pos..pos + block.len()) != Some(block) {
                return Err(Error::Projection {
                    block: self.blocks[b].to_string(),
                });
            }
            meta.push(b);
            pos += block.len();
        }
        Ok(meta)
    }
}

impl fmt::Display for SuperJobSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, block) in self.blocks.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{block}")?;
        }
        Ok(())
    }
}

/// Concatenation of an explicit block sequence; must cover every job once.
pub fn expand(meta: &[SuperJob]) -> Result<Permutation> {
    let seq: Vec<JobId> = meta.iter().flat_map(|b| b.jobs().iter().copied()).collect();
    Permutation::new(seq)
}

/// Number of pool solutions in which `b` immediately follows `a`.
pub fn adjacency_frequency(pool: &Pool) -> BTreeMap<(JobId, JobId), usize> {
    let mut counts = BTreeMap::new();
    for sol in pool.solutions() {
        for w in sol.as_slice().windows(2) {
            *counts.entry((w[0], w[1])).or_insert(0) += 1;
        }
    }
    counts
}

/// Mines the super-jobs of `pool` at confidence `sigma`.
///
/// Pairs meeting the threshold are accepted greedily by decreasing count
/// (then source id, then target id): a pair is dropped when its source
/// already has a successor, its target already has a predecessor, or it
/// would close a cycle. Surviving pairs are chained into maximal runs.
/// The order only depends on counts, so raising `sigma` keeps a prefix of
/// the accepted pairs and every block splits into contiguous pieces.
pub fn identify(pool: &Pool, sigma: Confidence) -> Result<SuperJobSet> {
    let n = pool.n_jobs();
    let Some(threshold) = sigma.threshold(pool.len()) else {
        return Ok(SuperJobSet::singletons(n));
    };
    let mut edges: Vec<((JobId, JobId), usize)> = adjacency_frequency(pool)
        .into_iter()
        .filter(|&(_, c)| c >= threshold)
        .collect();
    edges.sort_by(|(pa, ca), (pb, cb)| cb.cmp(ca).then(pa.cmp(pb)));

    let mut succ = vec![None; n];
    let mut pred = vec![None; n];
    let mut component: Vec<usize> = (0..n).collect();
    fn root(component: &mut [usize], mut x: usize) -> usize {
        while component[x] != x {
            component[x] = component[component[x]];
            x = component[x];
        }
        x
    }
    for ((a, b), _) in edges {
        if succ[a].is_some() || pred[b].is_some() {
            continue;
        }
        let (ra, rb) = (root(&mut component, a), root(&mut component, b));
        if ra == rb {
            continue;
        }
        component[ra] = rb;
        succ[a] = Some(b);
        pred[b] = Some(a);
    }

    let blocks = (0..n)
        .filter(|&j| pred[j].is_none())
        .map(|head| {
            let mut chain = vec![head];
            let mut cur = head;
            while let Some(next) = succ[cur] {
                chain.push(next);
                cur = next;
            }
            SuperJob(chain)
        })
        .collect();
    SuperJobSet::new(blocks, sigma, n)
}

/// Meta-problem over super-jobs.
///
/// A meta-permutation costs the delays inside every block (a constant),
/// plus the delays across block boundaries, plus the total of the last job.
#[derive(Debug, Clone)]
pub struct ReducedProblem {
    blocks: SuperJobSet,
    matrix: DelayMatrix,
    internal: Vec<Time>,
    internal_sum: Time,
}

impl ReducedProblem {
    pub fn blocks(&self) -> &SuperJobSet {
        &self.blocks
    }

    /// Boundary delays between blocks and per-block tails.
    pub fn matrix(&self) -> &DelayMatrix {
        &self.matrix
    }

    pub fn meta_delay(&self, from: usize, to: usize) -> Time {
        self.matrix.get(from, to)
    }

    pub fn tail(&self, block: usize) -> Time {
        self.matrix.job_total(block)
    }

    pub fn internal(&self, block: usize) -> Time {
        self.internal[block]
    }

    pub fn internal_sum(&self) -> Time {
        self.internal_sum
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    /// Makespan of the expansion of `meta`.
    pub fn evaluate(&self, meta: &[usize]) -> Time {
        self.internal_sum + self.matrix.sequence_makespan(meta)
    }
}

pub fn reduce(dm: &DelayMatrix, sjs: &SuperJobSet) -> Result<ReducedProblem> {
    if sjs.n_jobs() != dm.n_jobs() {
        return Err(Error::NotAPartition(format!(
            "blocks cover {} jobs, matrix has {}",
            sjs.n_jobs(),
            dm.n_jobs()
        )));
    }
    let b = sjs.len();
    let blocks = sjs.blocks();
    let mut meta = vec![0; b * b];
    for (i, from) in blocks.iter().enumerate() {
        for (k, to) in blocks.iter().enumerate() {
            if i != k {
                meta[i * b + k] = dm.get(from.last(), to.first());
            }
        }
    }
    let tail = blocks.iter().map(|s| dm.job_total(s.last())).collect();
    let internal: Vec<Time> = blocks
        .iter()
        .map(|s| s.jobs().windows(2).map(|w| dm.get(w[0], w[1])).sum())
        .collect();
    Ok(ReducedProblem {
        blocks: sjs.clone(),
        matrix: DelayMatrix::from_parts(b, meta, tail)?,
        internal_sum: internal.iter().sum(),
        internal,
    })
}
