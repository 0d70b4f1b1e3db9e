//! Solver runs, replication batches and their persistence.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::mpsc;
use std::time::Instant;

use chrono::Utc;
use nwfs_core::ig::{default_temperature, neh, DEFAULT_DESTRUCTION_SIZE, DEFAULT_TEMPERATURE_FACTOR};
use nwfs_core::igsj::{generate_pool, igsj, iigsj, ConfidenceSchedule, IgsjConfig, IigsjConfig, PhaseRecord};
use nwfs_core::rng::derive_seed;
use nwfs_core::{iterated_greedy, Acceptance, StallCounter, DelayMatrix, IgConfig, Instance, Permutation, Pool, PoolSource, Time};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{io_error, HarnessError, Result};
use crate::registry::BestKnownRegistry;
use crate::report::{rpd, summarize, RunRecord, StageTime, Summary};
use crate::taillard::NamedInstance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Algorithm {
    Ig,
    Igsj,
    Iigsj,
}

impl FromStr for Algorithm {
    type Err = HarnessError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ig" => Ok(Self::Ig),
            "igsj" | "ig_sj" => Ok(Self::Igsj),
            "iigsj" | "iig_sj" => Ok(Self::Iigsj),
            other => Err(HarnessError::Input(format!("unknown algorithm `{other}`"))),
        }
    }
}

impl std::fmt::Display for Algorithm {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Self::Ig => "ig",
            Self::Igsj => "igsj",
            Self::Iigsj => "iigsj",
        })
    }
}

/// Every knob of a solver run. Budget factors multiply n^2 (ms) or n
/// (iterations); 0 disables the corresponding rule.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    pub algorithm: Algorithm,
    pub destruction_size: usize,
    pub temperature_factor: f64,
    pub acceptance: Acceptance,
    pub stall: StallCounter,
    /// Plain IG time budget, ms per n^2.
    pub ig_time_factor: u64,
    /// Plain IG no-improvement budget, iterations per job.
    pub ig_noimprove_factor: u64,
    /// Explicit plain IG limits, overriding the factors.
    pub ig_max_time_ms: Option<u64>,
    pub ig_max_no_improve: Option<u64>,
    pub pool_size: usize,
    /// Time budget of each pool run, ms per n^2.
    pub pool_time_factor: u64,
    /// No-improvement budget of each pool run, iterations per job.
    pub pool_noimprove_factor: u64,
    pub schedule: ConfidenceSchedule,
    pub time_factor: u64,
    pub noimprove_factor: u64,
    pub iterations: usize,
    pub pool_width: usize,
    pub sample_size: usize,
    pub inner_schedule: ConfidenceSchedule,
    pub inner_time_factor: u64,
    pub inner_noimprove_factor: u64,
}

impl SolverSettings {
    pub fn new(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            destruction_size: DEFAULT_DESTRUCTION_SIZE,
            temperature_factor: DEFAULT_TEMPERATURE_FACTOR,
            acceptance: Acceptance::Incumbent,
            stall: StallCounter::Walk,
            ig_time_factor: 10,
            ig_noimprove_factor: 50,
            ig_max_time_ms: None,
            ig_max_no_improve: None,
            pool_size: 10,
            pool_time_factor: 10,
            pool_noimprove_factor: 0,
            schedule: ConfidenceSchedule::sigma1(),
            time_factor: 10,
            noimprove_factor: 50,
            iterations: 5,
            pool_width: 20,
            sample_size: 10,
            inner_schedule: ConfidenceSchedule::sigma2(),
            inner_time_factor: 1,
            inner_noimprove_factor: 25,
        }
    }

    fn ig_template(&self, inst: &Instance, seed: u64) -> IgConfig {
        let n = inst.n_jobs();
        IgConfig {
            destruction_size: self.destruction_size.clamp(1, n.saturating_sub(1).max(1)),
            temperature: default_temperature(inst, self.temperature_factor),
            max_time_ms: None,
            max_no_improve: None,
            seed,
            acceptance: self.acceptance,
            stall: self.stall,
        }
    }

    fn n2(n: usize, factor: u64) -> Option<u64> {
        (factor > 0).then(|| factor * (n * n) as u64)
    }

    fn n1(n: usize, factor: u64) -> Option<u64> {
        (factor > 0).then(|| factor * n as u64)
    }

    /// Configuration of a plain IG run.
    pub fn ig_config(&self, inst: &Instance, seed: u64) -> IgConfig {
        let n = inst.n_jobs();
        IgConfig {
            max_time_ms: self.ig_max_time_ms.or(Self::n2(n, self.ig_time_factor)),
            max_no_improve: self.ig_max_no_improve.or(Self::n1(n, self.ig_noimprove_factor)),
            ..self.ig_template(inst, seed)
        }
    }

    /// Configuration of one pool run (time limit is passed separately).
    pub fn pool_template(&self, inst: &Instance) -> IgConfig {
        IgConfig {
            max_no_improve: Self::n1(inst.n_jobs(), self.pool_noimprove_factor),
            ..self.ig_template(inst, 0)
        }
    }

    pub fn pool_budget_ms(&self, n_jobs: usize) -> Option<u64> {
        Self::n2(n_jobs, self.pool_time_factor)
    }

    pub fn igsj_config(&self, inst: &Instance, seed: u64) -> IgsjConfig {
        IgsjConfig {
            time_factor: self.time_factor,
            noimprove_factor: self.noimprove_factor,
            seed,
            ..IgsjConfig::new(self.schedule.clone(), self.ig_template(inst, seed))
        }
    }

    pub fn iigsj_config(&self, inst: &Instance, seed: u64) -> IigsjConfig {
        let mut cfg = IigsjConfig::new(self.ig_template(inst, seed));
        cfg.iterations = self.iterations;
        cfg.pool_width = self.pool_width;
        cfg.sample_size = self.sample_size;
        cfg.inner.schedule = self.inner_schedule.clone();
        cfg.inner.time_factor = self.inner_time_factor;
        cfg.inner.noimprove_factor = self.inner_noimprove_factor;
        cfg.inner.seed = seed;
        cfg
    }

    /// Solutions in the initial pool of the chosen algorithm.
    pub fn initial_pool_size(&self) -> usize {
        match self.algorithm {
            Algorithm::Ig => 0,
            Algorithm::Igsj => self.pool_size,
            Algorithm::Iigsj => self.pool_width,
        }
    }
}

/// Result of one solver run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolveOutput {
    pub best: Permutation,
    pub makespan: Time,
    pub phases: Vec<PhaseRecord>,
    pub stages: Vec<StageTime>,
    pub pool: Option<Pool>,
}

/// Builds the initial pool of `settings` for `inst`.
pub fn build_pool(inst: &Instance, settings: &SolverSettings, seed: u64) -> Result<Pool> {
    let dm = DelayMatrix::new(inst);
    let template = settings.pool_template(inst);
    Ok(generate_pool(
        &dm,
        settings.initial_pool_size().max(1),
        settings.pool_budget_ms(inst.n_jobs()),
        &template,
        derive_seed(seed, 0x706f_6f6c),
    )?)
}

/// Runs the configured algorithm once. `pool` replaces pool generation.
pub fn solve(
    inst: &Instance,
    settings: &SolverSettings,
    seed: u64,
    pool: Option<&Pool>,
) -> Result<SolveOutput> {
    let dm = DelayMatrix::new(inst);
    let mut stages = Vec::new();
    if settings.algorithm == Algorithm::Ig {
        let cfg = settings.ig_config(inst, seed);
        let res = iterated_greedy(&dm, &neh(&dm), &cfg)?;
        stages.push(StageTime {
            stage: "ig".into(),
            ms: res.elapsed_ms,
        });
        return Ok(SolveOutput {
            best: res.best,
            makespan: res.best_makespan,
            phases: Vec::new(),
            stages,
            pool: None,
        });
    }

    let pool = match pool {
        Some(p) => p.clone(),
        None => {
            let started = Instant::now();
            let p = build_pool(inst, settings, seed)?;
            stages.push(StageTime {
                stage: "pool".into(),
                ms: started.elapsed().as_millis() as u64,
            });
            p
        }
    };
    match settings.algorithm {
        Algorithm::Igsj => {
            let out = igsj(&dm, &pool, &settings.igsj_config(inst, seed))?;
            for p in &out.trace.phases {
                let stage = match p.label {
                    nwfs_core::PhaseLabel::Init => "init".to_string(),
                    nwfs_core::PhaseLabel::Ig => p.sigma.to_string(),
                };
                stages.push(StageTime { stage, ms: p.elapsed_ms });
            }
            Ok(SolveOutput {
                best: out.best,
                makespan: out.best_makespan,
                phases: out.trace.phases,
                stages,
                pool: Some(pool),
            })
        }
        Algorithm::Iigsj => {
            let started = Instant::now();
            let out = iigsj(&dm, &pool, &settings.iigsj_config(inst, seed))?;
            stages.push(StageTime {
                stage: "iigsj".into(),
                ms: started.elapsed().as_millis() as u64,
            });
            Ok(SolveOutput {
                best: out.best,
                makespan: out.best_makespan,
                phases: Vec::new(),
                stages,
                pool: out.pools.last().cloned().or(Some(pool)),
            })
        }
        Algorithm::Ig => unreachable!(),
    }
}

/// Writes one permutation per line.
pub fn write_pool(path: &Path, pool: &Pool) -> Result<()> {
    let mut text = String::new();
    for sol in pool.solutions() {
        text.push_str(&sol.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(io_error(path))
}

/// Reads a pool written by [`write_pool`]; blank lines and `#` comments are skipped.
pub fn parse_pool(text: &str) -> Result<Pool> {
    let mut sols = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let jobs = line
            .split_whitespace()
            .map(|t| {
                t.parse::<usize>().map_err(|_| HarnessError::Parse {
                    line: idx + 1,
                    column: raw.find(t).map_or(1, |c| c + 1),
                    message: format!("`{t}` is not a job index"),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let perm = Permutation::new(jobs).map_err(|e| HarnessError::Parse {
            line: idx + 1,
            column: 1,
            message: e.to_string(),
        })?;
        sols.push(perm);
    }
    Ok(Pool::new(sols, PoolSource::File)?)
}

pub fn read_pool(path: &Path) -> Result<Pool> {
    let text = std::fs::read_to_string(path).map_err(io_error(path))?;
    parse_pool(&text).map_err(|e| HarnessError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// A replication batch.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub instances: Vec<NamedInstance>,
    pub settings: SolverSettings,
    pub replications: usize,
    pub seed: u64,
    /// Generate one pool per instance and reuse it in every replication.
    pub share_pool: bool,
    /// Concurrent replications; `None` uses the global rayon pool.
    pub threads: Option<usize>,
    /// Directory receiving `runs.jsonl` and `summary.csv`.
    pub out_dir: Option<PathBuf>,
}

pub const RUNS_FILE: &str = "runs.jsonl";
pub const SUMMARY_FILE: &str = "summary.csv";
const CSV_HEADER: [&str; 8] = ["instance", "size", "algo", "replication", "makespan", "rpd", "total_ms", "phases"];

/// Stable 64-bit FNV-1a hash, used to give every instance its own seed stream.
fn name_hash(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

/// Seed of replication `rep` on instance `name`.
pub fn run_seed(base: u64, name: &str, rep: usize) -> u64 {
    derive_seed(derive_seed(base, name_hash(name)), rep as u64)
}

struct Sink {
    jsonl: File,
    csv: csv::Writer<File>,
    jsonl_path: PathBuf,
    csv_path: PathBuf,
}

impl Sink {
    fn open(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(io_error(dir))?;
        let jsonl_path = dir.join(RUNS_FILE);
        let csv_path = dir.join(SUMMARY_FILE);
        let append = |p: &Path| OpenOptions::new().create(true).append(true).open(p).map_err(io_error(p));
        let jsonl = append(&jsonl_path)?;
        let csv_file = append(&csv_path)?;
        let fresh = csv_file.metadata().map_err(io_error(&csv_path))?.len() == 0;
        let mut csv = csv::WriterBuilder::new().has_headers(false).from_writer(csv_file);
        if fresh {
            csv.write_record(CSV_HEADER).map_err(|e| csv_error(&csv_path, e))?;
            csv.flush().map_err(io_error(&csv_path))?;
        }
        Ok(Self {
            jsonl,
            csv,
            jsonl_path,
            csv_path,
        })
    }

    fn write(&mut self, r: &RunRecord) -> Result<()> {
        writeln!(self.jsonl, "{}", r.to_json_line()).map_err(io_error(&self.jsonl_path))?;
        self.jsonl.flush().map_err(io_error(&self.jsonl_path))?;
        let opt = |v: Option<String>| v.unwrap_or_default();
        self.csv
            .write_record([
                r.instance.clone(),
                r.size.clone(),
                r.algorithm.clone(),
                r.replication.to_string(),
                opt(r.makespan.map(|v| v.to_string())),
                opt(r.rpd.map(|v| format!("{v:.4}"))),
                r.total_ms.to_string(),
                r.stage_breakdown(),
            ])
            .map_err(|e| csv_error(&self.csv_path, e))?;
        self.csv.flush().map_err(io_error(&self.csv_path))
    }
}

fn csv_error(path: &Path, e: csv::Error) -> HarnessError {
    HarnessError::Data {
        path: path.to_path_buf(),
        message: e.to_string(),
    }
}

fn run_one(
    named: &NamedInstance,
    spec: &ExperimentSpec,
    registry: &BestKnownRegistry,
    rep: usize,
    shared: Option<&(Pool, u64)>,
) -> RunRecord {
    let seed = run_seed(spec.seed, &named.name, rep);
    let started = Instant::now();
    let outcome = solve(&named.instance, &spec.settings, seed, shared.map(|(p, _)| p));
    let total_ms = started.elapsed().as_millis() as u64 + shared.map_or(0, |s| s.1);
    let best_known = registry.best(&named.name);
    let mut record = RunRecord {
        instance: named.name.clone(),
        size: format!("{}x{}", named.instance.n_jobs(), named.instance.n_machines()),
        algorithm: spec.settings.algorithm.to_string(),
        config: serde_json::to_value(&spec.settings).expect("settings serialize"),
        replication: rep,
        seed,
        makespan: None,
        best_known,
        rpd: None,
        permutation: None,
        phases: Vec::new(),
        stages: Vec::new(),
        total_ms,
        timestamp: Utc::now(),
        error: None,
    };
    match outcome {
        Ok(out) => {
            record.makespan = Some(out.makespan);
            record.rpd = best_known.and_then(|b| rpd(out.makespan, b).ok());
            record.permutation = Some(out.best);
            record.phases = out.phases;
            if let Some((_, ms)) = shared {
                record.stages.push(StageTime {
                    stage: "pool".into(),
                    ms: *ms,
                });
            }
            record.stages.extend(out.stages);
        }
        Err(e) => record.error = Some(e.to_string()),
    }
    record
}

/// Runs every replication, streams records to the output directory through
/// a single writer, and summarizes after all runs finish.
pub fn run_experiment(spec: &ExperimentSpec, registry: &BestKnownRegistry) -> Result<(Vec<RunRecord>, Summary)> {
    let mut sink = spec.out_dir.as_deref().map(Sink::open).transpose()?;
    let workers = match spec.threads {
        Some(t) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(t.max(1))
                .build()
                .map_err(|e| HarnessError::Input(e.to_string()))?,
        ),
        None => None,
    };
    let mut execute = || -> Vec<RunRecord> {
        let (tx, rx) = mpsc::channel::<RunRecord>();
        let jobs: Vec<(usize, usize)> = (0..spec.instances.len())
            .flat_map(|i| (0..spec.replications).map(move |r| (i, r)))
            .collect();
        let shared: Vec<Option<(Pool, u64)>> = if spec.share_pool && spec.replications > 0 {
            spec.instances
                .par_iter()
                .map(|named| {
                    let started = Instant::now();
                    let seed = derive_seed(spec.seed, name_hash(&named.name));
                    build_pool(&named.instance, &spec.settings, seed)
                        .ok()
                        .map(|p| (p, started.elapsed().as_millis() as u64))
                })
                .collect()
        } else {
            vec![None; spec.instances.len()]
        };
        let mut records = Vec::with_capacity(jobs.len());
        std::thread::scope(|scope| {
            let writer = scope.spawn(|| {
                let mut io_errors = Vec::new();
                let mut got = Vec::new();
                for record in rx {
                    if let Some(s) = sink.as_mut() {
                        if let Err(e) = s.write(&record) {
                            io_errors.push(e);
                        }
                    }
                    got.push(record);
                }
                (got, io_errors)
            });
            jobs.par_iter().for_each_with(tx, |tx, &(i, rep)| {
                let record = run_one(&spec.instances[i], spec, registry, rep, shared[i].as_ref());
                let _ = tx.send(record);
            });
            let (got, io_errors) = writer.join().expect("writer thread");
            for e in io_errors {
                eprintln!("warning: {e}");
            }
            records = got;
        });
        records
    };
    let mut records = match &workers {
        Some(pool) => pool.install(execute),
        None => execute(),
    };
    let order = |r: &RunRecord| {
        (
            spec.instances.iter().position(|n| n.name == r.instance),
            r.replication,
        )
    };
    records.sort_by_key(order);
    let summary = summarize(&records);
    Ok((records, summary))
}

/// Records previously appended to `runs.jsonl`.
pub fn read_records(path: &Path) -> Result<Vec<RunRecord>> {
    let file = File::open(path).map_err(io_error(path))?;
    BufReader::new(file)
        .lines()
        .enumerate()
        .filter(|(_, l)| l.as_ref().map_or(true, |l| !l.trim().is_empty()))
        .map(|(idx, line)| {
            let line = line.map_err(io_error(path))?;
            serde_json::from_str(&line).map_err(|e| HarnessError::Data {
                path: path.to_path_buf(),
                message: format!("line {}: {e}", idx + 1),
            })
        })
        .collect()
}
