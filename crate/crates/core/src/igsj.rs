//! Iterated greedy over super-jobs, and its iterated pool-refining wrapper.
//!
//! `igsj` mines super-jobs from a fixed pool at increasing confidence levels.
//! Each phase solves the reduced problem with iterated greedy, starting from
//! the incumbent re-expressed over the phase's blocks. Higher confidence only
//! splits blocks, so the incumbent always projects.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ig::{iterated_greedy, random_greedy, IgConfig};
use crate::model::{DelayMatrix, Permutation, Time};
use crate::neighborhood::{best_position, move_delta, shift_in_place};
use crate::rng::{derive_seed, seeded};
use crate::superjobs::{identify, reduce, Confidence, Pool, PoolSource, ReducedProblem};

/// Strictly increasing confidence levels; only the last may be infinite.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Confidence>", into = "Vec<Confidence>")]
pub struct ConfidenceSchedule(Vec<Confidence>);

impl ConfidenceSchedule {
    pub fn new(levels: Vec<Confidence>) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::InvalidSchedule("no confidence level".into()));
        }
        for w in levels.windows(2) {
            let increasing = match (w[0], w[1]) {
                (Confidence::Percent(a), Confidence::Percent(b)) => a < b,
                (Confidence::Percent(_), Confidence::Infinite) => true,
                (Confidence::Infinite, _) => false,
            };
            if !increasing {
                return Err(Error::InvalidSchedule(format!(
                    "levels must be strictly increasing ({} then {})",
                    w[0], w[1]
                )));
            }
        }
        Ok(Self(levels))
    }

    /// {60%, 80%, inf}
    pub fn sigma1() -> Self {
        Self(vec![
            Confidence::Percent(60.0),
            Confidence::Percent(80.0),
            Confidence::Infinite,
        ])
    }

    /// {60%, 70%, 80%, 90%, inf}
    pub fn sigma2() -> Self {
        Self(vec![
            Confidence::Percent(60.0),
            Confidence::Percent(70.0),
            Confidence::Percent(80.0),
            Confidence::Percent(90.0),
            Confidence::Infinite,
        ])
    }

    pub fn levels(&self) -> &[Confidence] {
        &self.0
    }
}

impl FromStr for ConfidenceSchedule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let levels = s
            .split(',')
            .map(str::parse)
            .collect::<Result<Vec<Confidence>>>()?;
        Self::new(levels)
    }
}

impl fmt::Display for ConfidenceSchedule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(ToString::to_string).collect();
        f.write_str(&parts.join(","))
    }
}

impl TryFrom<Vec<Confidence>> for ConfidenceSchedule {
    type Error = Error;

    fn try_from(levels: Vec<Confidence>) -> Result<Self> {
        Self::new(levels)
    }
}

impl From<ConfidenceSchedule> for Vec<Confidence> {
    fn from(s: ConfidenceSchedule) -> Self {
        s.0
    }
}

/// Quantity the no-improvement budget is proportional to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BudgetScale {
    /// Meta-jobs of the current phase.
    #[default]
    SuperJobs,
    /// Original jobs of the instance.
    Jobs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgsjConfig {
    pub schedule: ConfidenceSchedule,
    /// Destruction size, temperature and acceptance rule of every phase.
    /// Stop rules and seed are derived per phase.
    pub ig: IgConfig,
    /// Phase time limit is `time_factor * n_sj^2` ms; 0 disables it.
    pub time_factor: u64,
    /// Phase no-improvement limit is `noimprove_factor * scale`; 0 disables it.
    pub noimprove_factor: u64,
    pub noimprove_scale: BudgetScale,
    pub seed: u64,
}

impl IgsjConfig {
    /// Pool-learning protocol defaults: 10 n_sj^2 ms and 50 n_sj iterations.
    pub fn new(schedule: ConfidenceSchedule, ig: IgConfig) -> Self {
        Self {
            schedule,
            ig,
            time_factor: 10,
            noimprove_factor: 50,
            noimprove_scale: BudgetScale::SuperJobs,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.time_factor == 0 && self.noimprove_factor == 0 {
            return Err(Error::InvalidConfig(
                "time_factor and noimprove_factor are both zero".into(),
            ));
        }
        Ok(())
    }

    fn phase_config(&self, n_sj: usize, n_jobs: usize, seed: u64) -> IgConfig {
        let scale = match self.noimprove_scale {
            BudgetScale::SuperJobs => n_sj,
            BudgetScale::Jobs => n_jobs,
        } as u64;
        IgConfig {
            destruction_size: self.ig.destruction_size.clamp(1, n_sj.saturating_sub(1).max(1)),
            max_time_ms: (self.time_factor > 0).then(|| self.time_factor * (n_sj * n_sj) as u64),
            max_no_improve: (self.noimprove_factor > 0).then(|| self.noimprove_factor * scale),
            seed,
            ..self.ig.clone()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PhaseLabel {
    Init,
    Ig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseRecord {
    pub label: PhaseLabel,
    pub sigma: Confidence,
    /// Meta-jobs in the phase.
    pub n_sj: usize,
    /// Makespan of the expanded phase result.
    pub makespan: Time,
    /// The same solution evaluated on the reduced problem.
    pub reduced_makespan: Time,
    pub best_makespan: Time,
    pub ig_iterations: u64,
    pub elapsed_ms: u64,
    /// Super-jobs of the phase in bracket notation.
    pub superjobs: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PhaseTrace {
    pub phases: Vec<PhaseRecord>,
}

impl PhaseTrace {
    pub fn best_makespan(&self) -> Option<Time> {
        self.phases.last().map(|p| p.best_makespan)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IgsjOutcome {
    pub best: Permutation,
    pub best_makespan: Time,
    pub trace: PhaseTrace,
}

/// Pool time budget `factor * n^2` ms (10 in the pool-learning protocol).
pub fn pool_budget_ms(n_jobs: usize, factor: u64) -> u64 {
    factor * (n_jobs * n_jobs) as u64
}

/// `count` independent iterated greedy runs from random greedy starts.
///
/// `budget_per_run_ms` replaces the template's time limit; the template's
/// no-improvement limit is kept. Runs execute on the rayon pool with seeds
/// derived from `seed`, so results do not depend on scheduling.
pub fn generate_pool(
    dm: &DelayMatrix,
    count: usize,
    budget_per_run_ms: Option<u64>,
    template: &IgConfig,
    seed: u64,
) -> Result<Pool> {
    if count == 0 {
        return Err(Error::InvalidPool("pool size must be at least 1".into()));
    }
    let runs = (0..count)
        .into_par_iter()
        .map(|k| {
            let run_seed = derive_seed(seed, k as u64);
            let mut rng = seeded(run_seed);
            let start = random_greedy(dm, &mut rng);
            let cfg = IgConfig {
                max_time_ms: budget_per_run_ms,
                seed: derive_seed(run_seed, 1),
                destruction_size: template
                    .destruction_size
                    .clamp(1, dm.n_jobs().saturating_sub(1).max(1)),
                ..template.clone()
            };
            iterated_greedy(dm, &start, &cfg).map(|r| r.best)
        })
        .collect::<Result<Vec<_>>>()?;
    Pool::new(runs, PoolSource::IgRun)
}

/// Constructive start over meta-jobs followed by first-improvement hill
/// climbing with insertion moves.
///
/// Blocks are inserted by decreasing (internal delays + tail), each at its
/// best position. The climb visits blocks in shuffled order, applies the
/// first improving target position, and stops after a sweep without change.
pub fn initial_solution<R: Rng + ?Sized>(reduced: &ReducedProblem, rng: &mut R) -> Vec<usize> {
    let b = reduced.n_blocks();
    let dm = reduced.matrix();
    let mut order: Vec<usize> = (0..b).collect();
    order.sort_by_key(|&s| std::cmp::Reverse(reduced.internal(s) + reduced.tail(s)));
    let mut seq = Vec::with_capacity(b);
    for &s in &order {
        let (pos, _) = best_position(dm, &seq, s);
        seq.insert(pos, s);
    }
    if b < 2 {
        return seq;
    }
    loop {
        order.shuffle(rng);
        let mut improved = false;
        for &s in &order {
            let from = seq.iter().position(|&x| x == s).expect("block in sequence");
            if let Some(to) = (0..b).find(|&to| to != from && move_delta(dm, &seq, from, to) < 0) {
                shift_in_place(&mut seq, from, to);
                improved = true;
            }
        }
        if !improved {
            return seq;
        }
    }
}

/// Super-job guided iterated greedy over a fixed pool.
pub fn igsj(dm: &DelayMatrix, pool: &Pool, cfg: &IgsjConfig) -> Result<IgsjOutcome> {
    cfg.validate()?;
    let n = dm.n_jobs();
    if pool.n_jobs() != n {
        return Err(Error::InvalidPool(format!(
            "pool solutions have {} jobs, instance has {n}",
            pool.n_jobs()
        )));
    }
    let levels = cfg.schedule.levels();
    let mut trace = PhaseTrace::default();

    let started = Instant::now();
    let first = identify(pool, levels[0])?;
    let reduced = reduce(dm, &first)?;
    let meta = initial_solution(&reduced, &mut seeded(derive_seed(cfg.seed, 0)));
    let mut incumbent = first.expand(&meta)?;
    let mut best_mk = dm.sequence_makespan(incumbent.as_slice());
    trace.phases.push(PhaseRecord {
        label: PhaseLabel::Init,
        sigma: levels[0],
        n_sj: first.len(),
        makespan: best_mk,
        reduced_makespan: reduced.evaluate(&meta),
        best_makespan: best_mk,
        ig_iterations: 0,
        elapsed_ms: started.elapsed().as_millis() as u64,
        superjobs: first.to_string(),
    });

    let mut cached = Some((first, reduced));
    for (phase, &sigma) in levels.iter().enumerate() {
        let started = Instant::now();
        let (sjs, reduced) = match cached.take() {
            Some(pair) => pair,
            None => {
                let sjs = identify(pool, sigma)?;
                let reduced = reduce(dm, &sjs)?;
                (sjs, reduced)
            }
        };
        let start = sjs.project(&incumbent)?;
        let n_sj = sjs.len();
        let (meta, iterations) = if n_sj >= 2 {
            let ig_cfg = cfg.phase_config(n_sj, n, derive_seed(cfg.seed, phase as u64 + 1));
            let start = Permutation::from_vec_unchecked(start);
            let res = iterated_greedy(reduced.matrix(), &start, &ig_cfg)?;
            (res.best.into_inner(), res.iterations)
        } else {
            (start, 0)
        };
        let expanded = sjs.expand(&meta)?;
        let makespan = dm.sequence_makespan(expanded.as_slice());
        if makespan <= best_mk {
            best_mk = makespan;
            incumbent = expanded;
        }
        trace.phases.push(PhaseRecord {
            label: PhaseLabel::Ig,
            sigma,
            n_sj,
            makespan,
            reduced_makespan: reduced.evaluate(&meta),
            best_makespan: best_mk,
            ig_iterations: iterations,
            elapsed_ms: started.elapsed().as_millis() as u64,
            superjobs: sjs.to_string(),
        });
    }

    Ok(IgsjOutcome {
        best: incumbent,
        best_makespan: best_mk,
        trace,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IigsjConfig {
    pub iterations: usize,
    /// Solutions built per iteration (R).
    pub pool_width: usize,
    /// Solutions sampled for learning (rho).
    pub sample_size: usize,
    pub inner: IgsjConfig,
}

impl IigsjConfig {
    /// I = 5, R = 20, rho = 10, schedule {60,70,80,90,inf}, n_sj^2 ms and
    /// 25 n iterations without improvement per phase.
    pub fn new(ig: IgConfig) -> Self {
        Self {
            iterations: 5,
            pool_width: 20,
            sample_size: 10,
            inner: IgsjConfig {
                time_factor: 1,
                noimprove_factor: 25,
                noimprove_scale: BudgetScale::Jobs,
                ..IgsjConfig::new(ConfidenceSchedule::sigma2(), ig)
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be at least 1".into()));
        }
        if self.sample_size == 0 || self.sample_size > self.pool_width {
            return Err(Error::InvalidConfig(format!(
                "sample size {} must be in [1, {}]",
                self.sample_size, self.pool_width
            )));
        }
        self.inner.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IigsjOutcome {
    pub best: Permutation,
    pub best_makespan: Time,
    /// Pools built at iterations 1..=I.
    pub pools: Vec<Pool>,
    /// Best makespan after iteration 0 (the initial pool) and each iteration.
    pub best_by_iteration: Vec<Time>,
}

/// Repeats `igsj` on random subsets of the previous iteration's results.
pub fn iigsj(dm: &DelayMatrix, p0: &Pool, cfg: &IigsjConfig) -> Result<IigsjOutcome> {
    cfg.validate()?;
    if p0.len() < cfg.sample_size {
        return Err(Error::InvalidPool(format!(
            "initial pool has {} solutions, need at least {}",
            p0.len(),
            cfg.sample_size
        )));
    }
    let (mut best, mut best_mk) = p0
        .solutions()
        .iter()
        .map(|p| (p, dm.sequence_makespan(p.as_slice())))
        .min_by_key(|&(_, mk)| mk)
        .map(|(p, mk)| (p.clone(), mk))
        .expect("non-empty pool");
    let mut best_by_iteration = vec![best_mk];
    let mut pools = Vec::with_capacity(cfg.iterations);
    let mut previous = p0.clone();

    for iteration in 1..=cfg.iterations {
        let iter_seed = derive_seed(cfg.inner.seed, iteration as u64);
        let outcomes = (0..cfg.pool_width)
            .into_par_iter()
            .map(|slot| {
                let slot_seed = derive_seed(iter_seed, slot as u64);
                let mut rng = seeded(slot_seed);
                let picked = index::sample(&mut rng, previous.len(), cfg.sample_size)
                    .iter()
                    .map(|i| previous.solutions()[i].clone())
                    .collect();
                let sample = Pool::new(picked, PoolSource::Iteration(iteration - 1))?;
                let inner = IgsjConfig {
                    seed: derive_seed(slot_seed, 1),
                    ..cfg.inner.clone()
                };
                igsj(dm, &sample, &inner)
            })
            .collect::<Result<Vec<_>>>()?;
        let mut built = Vec::with_capacity(outcomes.len());
        for outcome in outcomes {
            if outcome.best_makespan < best_mk {
                best_mk = outcome.best_makespan;
                best = outcome.best.clone();
            }
            built.push(outcome.best);
        }
        previous = Pool::new(built, PoolSource::Iteration(iteration))?;
        pools.push(previous.clone());
        best_by_iteration.push(best_mk);
    }

    Ok(IigsjOutcome {
        best,
        best_makespan: best_mk,
        pools,
        best_by_iteration,
    })
}
