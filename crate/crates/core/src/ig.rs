//! Iterated greedy: destruction-construction perturbation, insertion local
//! search and a constant-temperature acceptance rule.

use std::time::Instant;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{DelayMatrix, Instance, JobId, Permutation, Time};
use crate::neighborhood::{best_position, local_search_in_place};

pub const DEFAULT_DESTRUCTION_SIZE: usize = 4;
pub const DEFAULT_TEMPERATURE_FACTOR: f64 = 0.4;

/// What a worse candidate is compared against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Acceptance {
    /// Current incumbent of the walk.
    #[default]
    Incumbent,
    /// Best solution found so far in the run.
    BestEver,
}

impl std::str::FromStr for Acceptance {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "incumbent" => Ok(Self::Incumbent),
            "best-ever" => Ok(Self::BestEver),
            other => Err(Error::InvalidConfig(format!("unknown acceptance rule `{other}`"))),
        }
    }
}

/// Which improvements reset the no-improvement counter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StallCounter {
    /// Any accepted candidate strictly better than the current solution.
    #[default]
    Walk,
    /// Only a new best solution of the run.
    Best,
}

impl std::str::FromStr for StallCounter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "walk" => Ok(Self::Walk),
            "best" => Ok(Self::Best),
            other => Err(Error::InvalidConfig(format!("unknown stall counter `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgConfig {
    pub destruction_size: usize,
    pub temperature: f64,
    /// Wall-clock budget; `None` disables the rule.
    pub max_time_ms: Option<u64>,
    /// Iterations without improving the best solution; `None` disables the rule.
    pub max_no_improve: Option<u64>,
    pub seed: u64,
    pub acceptance: Acceptance,
    #[serde(default)]
    pub stall: StallCounter,
}

impl IgConfig {
    /// Defaults for `inst`: d = 4, temperature factor 0.4, no stop rule set.
    pub fn for_instance(inst: &Instance) -> Self {
        Self {
            destruction_size: DEFAULT_DESTRUCTION_SIZE,
            temperature: default_temperature(inst, DEFAULT_TEMPERATURE_FACTOR),
            max_time_ms: None,
            max_no_improve: None,
            seed: 0,
            acceptance: Acceptance::Incumbent,
            stall: StallCounter::Walk,
        }
    }

    pub fn validate(&self, n_jobs: usize) -> Result<()> {
        if self.max_time_ms.is_none() && self.max_no_improve.is_none() {
            return Err(Error::InvalidConfig("no stopping rule is active".into()));
        }
        if self.temperature.is_nan() || self.temperature < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "temperature must be non-negative, got {}",
                self.temperature
            )));
        }
        if n_jobs >= 2 && (self.destruction_size == 0 || self.destruction_size >= n_jobs) {
            return Err(Error::InvalidDestructionSize {
                size: self.destruction_size,
                max: n_jobs - 1,
            });
        }
        Ok(())
    }
}

/// Constant temperature `factor * total work / (n * m * 10)`.
pub fn default_temperature(inst: &Instance, factor: f64) -> f64 {
    let cells = (inst.n_jobs() * inst.n_machines()) as f64;
    factor * inst.total_work() as f64 / (cells * 10.0)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IgResult {
    pub best: Permutation,
    pub best_makespan: Time,
    pub iterations: u64,
    pub elapsed_ms: u64,
    /// (iteration, makespan) each time the best solution improved.
    pub improvement_trace: Vec<(u64, Time)>,
}

/// Removes `d` distinct uniformly drawn positions; removed jobs are listed
/// in draw order and the survivors keep their relative order.
pub fn destruct<R: Rng + ?Sized>(
    seq: &[JobId],
    d: usize,
    rng: &mut R,
) -> Result<(Vec<JobId>, Vec<JobId>)> {
    let n = seq.len();
    if d == 0 || d >= n {
        return Err(Error::InvalidDestructionSize {
            size: d,
            max: n.saturating_sub(1),
        });
    }
    let mut partial = seq.to_vec();
    let mut removed = Vec::with_capacity(d);
    destruct_into(&mut partial, d, rng, &mut removed);
    Ok((partial, removed))
}

fn destruct_into<R: Rng + ?Sized>(
    seq: &mut Vec<JobId>,
    d: usize,
    rng: &mut R,
    removed: &mut Vec<JobId>,
) {
    removed.clear();
    let picks = index::sample(rng, seq.len(), d);
    removed.extend(picks.iter().map(|pos| seq[pos]));
    let mut drop = vec![false; seq.len()];
    for pos in picks.iter() {
        drop[pos] = true;
    }
    let mut k = 0;
    seq.retain(|_| {
        let keep = !drop[k];
        k += 1;
        keep
    });
}

fn construct_in_place(dm: &DelayMatrix, seq: &mut Vec<JobId>, removed: &[JobId]) {
    for &job in removed {
        let (pos, _) = best_position(dm, seq, job);
        seq.insert(pos, job);
    }
}

/// Greedily reinserts `removed` into `partial`, one job at a time at its
/// best position.
pub fn construct(dm: &DelayMatrix, partial: &[JobId], removed: &[JobId]) -> Result<Permutation> {
    let n = dm.n_jobs();
    let mut seen = vec![false; n];
    for &job in partial.iter().chain(removed) {
        if job >= n {
            return Err(Error::InvalidJob { job, n_jobs: n });
        }
        if std::mem::replace(&mut seen[job], true) {
            return Err(Error::DuplicateJob(job));
        }
    }
    if partial.len() + removed.len() != n {
        return Err(Error::LengthMismatch {
            expected: n,
            found: partial.len() + removed.len(),
        });
    }
    let mut seq = partial.to_vec();
    construct_in_place(dm, &mut seq, removed);
    Ok(Permutation::from_vec_unchecked(seq))
}

/// Simulated-annealing-like acceptance at constant temperature.
pub fn accept<R: Rng + ?Sized>(candidate: Time, current: Time, temperature: f64, rng: &mut R) -> bool {
    if candidate <= current {
        return true;
    }
    if temperature <= 0.0 {
        return false;
    }
    let worse = (candidate - current) as f64;
    rng.gen::<f64>() < (-worse / temperature).exp()
}

/// Jobs sorted by decreasing total time, each inserted at its best position.
pub fn neh(dm: &DelayMatrix) -> Permutation {
    let mut order: Vec<JobId> = (0..dm.n_jobs()).collect();
    order.sort_by_key(|&j| std::cmp::Reverse(dm.job_total(j)));
    let mut seq = Vec::with_capacity(order.len());
    construct_in_place(dm, &mut seq, &order);
    Permutation::from_vec_unchecked(seq)
}

/// Best-insertion construction over a random job order.
pub fn random_greedy<R: Rng + ?Sized>(dm: &DelayMatrix, rng: &mut R) -> Permutation {
    let mut order: Vec<JobId> = (0..dm.n_jobs()).collect();
    order.shuffle(rng);
    let mut seq = Vec::with_capacity(order.len());
    construct_in_place(dm, &mut seq, &order);
    Permutation::from_vec_unchecked(seq)
}

/// Runs iterated greedy from `init` until a stopping rule fires and returns
/// the best solution of the run.
pub fn iterated_greedy(dm: &DelayMatrix, init: &Permutation, cfg: &IgConfig) -> Result<IgResult> {
    dm.check_permutation(init)?;
    let n = dm.n_jobs();
    cfg.validate(n)?;
    let started = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut current = init.as_slice().to_vec();
    local_search_in_place(dm, &mut current, &mut rng);
    let mut current_mk = dm.sequence_makespan(&current);
    let mut best = current.clone();
    let mut best_mk = current_mk;
    let mut trace = vec![(0, best_mk)];
    let mut iterations = 0u64;
    let mut since_improvement = 0u64;

    let mut candidate = Vec::with_capacity(n);
    let mut removed = Vec::with_capacity(cfg.destruction_size);
    if n >= 2 {
        loop {
            if cfg.max_no_improve.is_some_and(|limit| since_improvement >= limit) {
                break;
            }
            if cfg
                .max_time_ms
                .is_some_and(|limit| started.elapsed().as_millis() >= limit as u128)
            {
                break;
            }
            iterations += 1;
            candidate.clear();
            candidate.extend_from_slice(&current);
            destruct_into(&mut candidate, cfg.destruction_size, &mut rng, &mut removed);
            construct_in_place(dm, &mut candidate, &removed);
            local_search_in_place(dm, &mut candidate, &mut rng);
            let candidate_mk = dm.sequence_makespan(&candidate);

            let reference = match cfg.acceptance {
                Acceptance::Incumbent => current_mk,
                Acceptance::BestEver => best_mk,
            };
            let accepted = accept(candidate_mk, reference, cfg.temperature, &mut rng);
            let improved = match cfg.stall {
                StallCounter::Walk => candidate_mk < current_mk,
                StallCounter::Best => candidate_mk < best_mk,
            };
            if improved {
                since_improvement = 0;
            } else {
                since_improvement += 1;
            }
            if candidate_mk < best_mk {
                best.clone_from(&candidate);
                best_mk = candidate_mk;
                trace.push((iterations, best_mk));
            }
            if accepted {
                std::mem::swap(&mut current, &mut candidate);
                current_mk = candidate_mk;
            }
        }
    }

    Ok(IgResult {
        best: Permutation::from_vec_unchecked(best),
        best_makespan: best_mk,
        iterations,
        elapsed_ms: started.elapsed().as_millis() as u64,
        improvement_trace: trace,
    })
}
