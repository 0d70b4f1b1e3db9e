//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any
//! failure. `NWFS_ACCEPTANCE=1,4,9` restricts the run to some criteria.

use std::process::ExitCode;
use std::time::{Duration, Instant};

use nwfs_core::igsj::{generate_pool, igsj, ConfidenceSchedule, IgsjConfig};
use nwfs_core::landscape::next_permutation;
use nwfs_core::neighborhood::move_delta;
use nwfs_core::rng::{derive_seed, seeded};
use nwfs_core::superjobs::{identify, reduce, Confidence, Pool, PoolSource, SuperJob, SuperJobSet};
use nwfs_core::{makespan, makespan_simulate, DelayMatrix, IgConfig, Instance, Permutation};
use nwfs_harness::experiment::{run_experiment, run_seed, solve, Algorithm, ExperimentSpec, SolverSettings};
use nwfs_harness::registry::BestKnownRegistry;
use nwfs_harness::report::rpd;
use nwfs_harness::taillard::{benchmark_instance, NamedInstance};
use rand::seq::SliceRandom;
use rand::Rng;

type Check = Result<String, String>;
type Criterion<'a> = (usize, &'static str, Box<dyn Fn() -> Check + 'a>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || format!("took {elapsed:.1?}, limit {limit:?}"))
}

fn random_instance<R: Rng>(rng: &mut R, n: usize, m: usize, max_p: u64) -> Instance {
    let rows = (0..n).map(|_| (0..m).map(|_| rng.gen_range(1..=max_p)).collect()).collect();
    Instance::new(rows).unwrap()
}

fn perm(seq: Vec<usize>) -> Permutation {
    Permutation::new(seq).unwrap()
}

fn named(index: usize) -> NamedInstance {
    let ta = benchmark_instance(index).unwrap();
    NamedInstance {
        name: format!("ta{index:03}"),
        header: ta.header,
        instance: ta.instance,
    }
}

/// Delay-matrix makespan against the timetable simulation.
fn oracle_equivalence() -> Check {
    let started = Instant::now();
    let mut rng = seeded(1);
    let mut checked = 0u64;
    for _ in 0..1000 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(1..=5);
        let inst = random_instance(&mut rng, n, m, 9);
        let dm = DelayMatrix::new(&inst);
        let mut check = |seq: &[usize]| -> Result<(), String> {
            let p = perm(seq.to_vec());
            let fast = makespan(&dm, &p).unwrap().makespan;
            let slow = makespan_simulate(&inst, &p).unwrap().makespan;
            checked += 1;
            ensure(fast == slow, || format!("{n}x{m} {p}: {fast} vs {slow}"))
        };
        if n <= 6 {
            let mut seq: Vec<usize> = (0..n).collect();
            loop {
                check(&seq)?;
                if !next_permutation(&mut seq) {
                    break;
                }
            }
        } else {
            for _ in 0..200 {
                let mut seq: Vec<usize> = (0..n).collect();
                seq.shuffle(&mut rng);
                check(&seq)?;
            }
        }
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{checked} permutations, {:.1?}", started.elapsed()))
}

fn moved(seq: &[usize], from: usize, to: usize) -> Vec<usize> {
    let mut out = seq.to_vec();
    let job = out.remove(from);
    out.insert(to, job);
    out
}

/// Checks all (n-1)^2 distinct insertion moves of `seq`.
fn check_deltas(dm: &DelayMatrix, seq: &[usize]) -> Result<u64, String> {
    let n = seq.len();
    let base = dm.sequence_makespan(seq) as i64;
    let mut count = 0;
    for from in 0..n {
        for to in 0..n {
            // moving to from-1 equals moving the left neighbour right
            if from == to || to + 1 == from {
                continue;
            }
            count += 1;
            let full = dm.sequence_makespan(&moved(seq, from, to)) as i64 - base;
            let delta = move_delta(dm, seq, from, to);
            ensure(delta == full, || format!("move {from}->{to}: delta {delta}, recompute {full}"))?;
        }
    }
    ensure(count == ((n - 1) * (n - 1)) as u64, || format!("{count} moves for n={n}"))?;
    Ok(count)
}

fn delta_exactness() -> Check {
    let started = Instant::now();
    let mut rng = seeded(2);
    let mut moves = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=30);
        let m = rng.gen_range(1..=20);
        let inst = random_instance(&mut rng, n, m, 99);
        let dm = DelayMatrix::new(&inst);
        for _ in 0..100 {
            let mut seq: Vec<usize> = (0..n).collect();
            seq.shuffle(&mut rng);
            moves += check_deltas(&dm, &seq)?;
        }
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{moves} moves, {:.1?}", started.elapsed()))
}

fn random_partition<R: Rng>(rng: &mut R, n: usize) -> SuperJobSet {
    let mut jobs: Vec<usize> = (0..n).collect();
    jobs.shuffle(rng);
    let mut blocks = Vec::new();
    let parts = rng.gen_range(1..=n);
    let mut cuts = rand::seq::index::sample(rng, n - 1, parts - 1).into_vec();
    cuts.iter_mut().for_each(|c| *c += 1);
    cuts.sort_unstable();
    let mut start = 0;
    for end in cuts.into_iter().chain(std::iter::once(n)) {
        blocks.push(SuperJob::new(jobs[start..end].to_vec()).unwrap());
        start = end;
    }
    SuperJobSet::new(blocks, Confidence::Percent(50.0), n).unwrap()
}

/// Every meta-permutation of `sjs`: reduced value against the expansion.
fn check_reduction(inst: &Instance, sjs: &SuperJobSet) -> Result<u64, String> {
    let dm = DelayMatrix::new(inst);
    let reduced = reduce(&dm, sjs).map_err(|e| e.to_string())?;
    let mut meta: Vec<usize> = (0..sjs.len()).collect();
    let mut count = 0;
    loop {
        let expanded = sjs.expand(&meta).unwrap();
        let direct = makespan(&dm, &expanded).unwrap().makespan;
        let value = reduced.evaluate(&meta);
        ensure(value == direct, || format!("{meta:?}: reduced {value}, expanded {direct}"))?;
        count += 1;
        if !next_permutation(&mut meta) {
            return Ok(count);
        }
    }
}

fn reduction_exactness() -> Check {
    let started = Instant::now();
    let mut rng = seeded(3);
    let mut count = 0;
    for _ in 0..50 {
        let n = rng.gen_range(2..=8);
        let m = rng.gen_range(1..=5);
        let inst = random_instance(&mut rng, n, m, 99);
        let sjs = random_partition(&mut rng, n);
        count += check_reduction(&inst, &sjs)?;
    }
    within(started.elapsed(), Duration::from_secs(60))?;
    Ok(format!("{count} meta-permutations, {:.1?}", started.elapsed()))
}

const FIXTURE_POOL: [[usize; 12]; 11] = [
    [8, 3, 7, 5, 10, 9, 1, 0, 4, 6, 11, 2],
    [8, 3, 7, 11, 2, 5, 10, 9, 1, 0, 4, 6],
    [8, 10, 9, 1, 0, 4, 7, 5, 3, 11, 2, 6],
    [8, 3, 5, 10, 6, 0, 4, 7, 11, 2, 9, 1],
    [8, 3, 5, 10, 6, 0, 4, 7, 9, 1, 11, 2],
    [8, 10, 6, 0, 4, 7, 5, 3, 9, 1, 11, 2],
    [8, 3, 7, 11, 2, 5, 10, 9, 6, 0, 4, 1],
    [8, 3, 5, 10, 9, 1, 11, 2, 7, 6, 0, 4],
    [8, 10, 6, 0, 4, 7, 5, 3, 11, 2, 9, 1],
    [8, 10, 9, 1, 0, 4, 7, 3, 5, 6, 11, 2],
    [8, 3, 7, 10, 9, 1, 11, 2, 5, 6, 0, 4],
];

fn block_set(sjs: &SuperJobSet) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = sjs.blocks().iter().map(|b| b.jobs().to_vec()).collect();
    blocks.sort();
    blocks
}

fn expected_blocks(multi: &[&[usize]], n: usize) -> Vec<Vec<usize>> {
    let mut blocks: Vec<Vec<usize>> = multi.iter().map(|b| b.to_vec()).collect();
    blocks.extend((0..n).filter(|j| !multi.iter().any(|b| b.contains(j))).map(|j| vec![j]));
    blocks.sort();
    blocks
}

fn fixture_pool_blocks() -> Check {
    let started = Instant::now();
    let pool = Pool::new(
        FIXTURE_POOL.iter().map(|s| perm(s.to_vec())).collect(),
        PoolSource::File,
    )
    .unwrap();
    let at90 = identify(&pool, Confidence::percent(90.0).unwrap()).unwrap();
    let want90 = expected_blocks(&[&[11, 2], &[0, 4], &[9, 1]], 12);
    ensure(block_set(&at90) == want90, || format!("sigma 90 gave {at90}"))?;
    let at100 = identify(&pool, Confidence::percent(100.0).unwrap()).unwrap();
    let want100 = expected_blocks(&[&[11, 2], &[0, 4]], 12);
    ensure(block_set(&at100) == want100, || format!("sigma 100 gave {at100}"))?;
    within(started.elapsed(), Duration::from_secs(1))?;
    Ok(format!("sigma 90: {at90}; sigma 100: {at100}"))
}

fn ta023_end_to_end() -> Check {
    let ta = named(23);
    let settings = SolverSettings::new(Algorithm::Igsj);
    let mut found = Vec::new();
    for run in 0..5 {
        let started = Instant::now();
        let out = solve(&ta.instance, &settings, run_seed(23, &ta.name, run), None).map_err(|e| e.to_string())?;
        found.push(out.makespan);
        println!("    ta023 run {run}: {} ({:.1?})", out.makespan, started.elapsed());
        if out.makespan == 3013 {
            return Ok(format!("3013 reached on run {run}; makespans {found:?}"));
        }
    }
    Err(format!("3013 not reached in 5 runs: {found:?}"))
}

fn small_optimality(registry: &BestKnownRegistry) -> Check {
    let settings = SolverSettings::new(Algorithm::Ig);
    let mut hits = 0;
    let mut misses = Vec::new();
    for index in 1..=10 {
        let ta = named(index);
        let target = registry.best(&ta.name).unwrap();
        let best = (0..3)
            .map(|rep| {
                solve(&ta.instance, &settings, run_seed(6, &ta.name, rep), None)
                    .map(|o| o.makespan)
                    .map_err(|e| e.to_string())
            })
            .collect::<Result<Vec<_>, _>>()?
            .into_iter()
            .min()
            .unwrap();
        if best == target {
            hits += 1;
        } else {
            misses.push(format!("{} {best}/{target}", ta.name));
        }
    }
    let detail = format!("{hits}/10 matched; misses: {misses:?}");
    ensure(hits >= 8, || detail.clone())?;
    Ok(detail)
}

fn medium_quality(registry: &BestKnownRegistry) -> Check {
    let spec = ExperimentSpec {
        instances: (31..=40).map(named).collect(),
        settings: SolverSettings::new(Algorithm::Igsj),
        replications: 3,
        seed: 7,
        share_pool: true,
        threads: Some(1),
        out_dir: None,
    };
    let (records, summary) = run_experiment(&spec, registry).map_err(|e| e.to_string())?;
    for r in &records {
        println!(
            "    {} rep {}: {:?} rpd {:?} ({} ms)",
            r.instance, r.replication, r.makespan, r.rpd, r.total_ms
        );
    }
    if let Some(e) = records.iter().find_map(|r| r.error.clone()) {
        return Err(e);
    }
    ensure(records.len() == 30, || format!("{} records", records.len()))?;
    let rpds: Vec<f64> = records.iter().filter_map(|r| r.rpd).collect();
    ensure(rpds.len() == 30, || "missing registry entries".into())?;
    let mean = rpds.iter().sum::<f64>() / rpds.len() as f64;
    let row = &summary.rows[0];
    ensure(row.mean_rpd.is_some_and(|v| (v - mean).abs() < 1e-12), || "summary mean differs".into())?;
    let detail = format!("mean RPD {mean:.4}% over 30 runs (limit 0.3%)");
    ensure(mean <= 0.3, || detail.clone())?;
    Ok(detail)
}

/// Suites of criteria 1-4 and the solver invariants on 100-job instances.
fn large_instances() -> Check {
    let started = Instant::now();
    let mut rng = seeded(8);
    let mut notes = Vec::new();
    for index in [61, 81] {
        let ta = named(index);
        let inst = &ta.instance;
        let n = inst.n_jobs();
        let dm = DelayMatrix::new(inst);

        for _ in 0..200 {
            let mut seq: Vec<usize> = (0..n).collect();
            seq.shuffle(&mut rng);
            let p = perm(seq);
            let (a, b) = (makespan(&dm, &p).unwrap().makespan, makespan_simulate(inst, &p).unwrap().makespan);
            ensure(a == b, || format!("{}: oracle {a} vs {b}", ta.name))?;
        }
        for _ in 0..5 {
            let mut seq: Vec<usize> = (0..n).collect();
            seq.shuffle(&mut rng);
            check_deltas(&dm, &seq).map_err(|e| format!("{}: {e}", ta.name))?;
        }

        // pool at a tenth of the usual budget: n^2 ms per run
        let ig = IgConfig::for_instance(inst);
        let pool = generate_pool(&dm, 10, Some((n * n) as u64), &ig, derive_seed(8, index as u64))
            .map_err(|e| e.to_string())?;
        let schedule = ConfidenceSchedule::sigma2();
        let mut previous: Option<SuperJobSet> = None;
        for &sigma in schedule.levels() {
            let sjs = identify(&pool, sigma).map_err(|e| e.to_string())?;
            let reduced = reduce(&dm, &sjs).map_err(|e| e.to_string())?;
            for _ in 0..200 {
                let mut meta: Vec<usize> = (0..sjs.len()).collect();
                meta.shuffle(&mut rng);
                let expanded = sjs.expand(&meta).unwrap();
                let direct = makespan_simulate(inst, &expanded).unwrap().makespan;
                ensure(reduced.evaluate(&meta) == direct, || format!("{}: reduction at {sigma}", ta.name))?;
            }
            if let Some(coarse) = &previous {
                let mut meta: Vec<usize> = (0..coarse.len()).collect();
                meta.shuffle(&mut rng);
                let sol = coarse.expand(&meta).unwrap();
                ensure(sjs.project(&sol).is_ok(), || format!("{}: projection fails at {sigma}", ta.name))?;
            }
            previous = Some(sjs);
        }
        let at60 = identify(&pool, Confidence::Percent(60.0)).unwrap();
        ensure(at60.len() < n, || format!("{}: no super-job at 60%", ta.name))?;

        // phases never lose the incumbent; reduced and expanded values agree
        let mut cfg = IgsjConfig::new(schedule.clone(), ig.clone());
        cfg.time_factor = 1;
        cfg.seed = 11;
        let out = igsj(&dm, &pool, &cfg).map_err(|e| e.to_string())?;
        for w in out.trace.phases.windows(2) {
            ensure(w[1].best_makespan <= w[0].best_makespan, || format!("{}: phase got worse", ta.name))?;
        }
        for p in &out.trace.phases {
            ensure(p.makespan == p.reduced_makespan, || format!("{}: phase value mismatch", ta.name))?;
        }
        let pool_best = pool.solutions().iter().map(|s| dm.sequence_makespan(s.as_slice())).min().unwrap();

        // iteration-count budgets only, so the runs are reproducible
        cfg.time_factor = 0;
        cfg.noimprove_factor = 5;
        let a = igsj(&dm, &pool, &cfg).map_err(|e| e.to_string())?;
        let b = igsj(&dm, &pool, &cfg).map_err(|e| e.to_string())?;
        let key = |o: &nwfs_core::IgsjOutcome| {
            let phases: Vec<_> = o.trace.phases.iter().map(|p| (p.makespan, p.n_sj, p.ig_iterations)).collect();
            (o.best.clone(), phases)
        };
        ensure(key(&a) == key(&b), || format!("{}: igsj not reproducible", ta.name))?;
        let small_ig = IgConfig {
            max_no_improve: Some(n as u64),
            ..ig.clone()
        };
        let p1 = generate_pool(&dm, 2, None, &small_ig, 5).map_err(|e| e.to_string())?;
        let p2 = generate_pool(&dm, 2, None, &small_ig, 5).map_err(|e| e.to_string())?;
        ensure(p1.solutions() == p2.solutions(), || format!("{}: pool not reproducible", ta.name))?;

        notes.push(format!(
            "{} n_sj@60={} pool best {pool_best} igsj {}",
            ta.name,
            at60.len(),
            out.best_makespan
        ));
    }
    within(started.elapsed(), Duration::from_secs(15 * 60))?;
    Ok(format!("{} ({:.1?})", notes.join("; "), started.elapsed()))
}

fn rpd_arithmetic() -> Check {
    for (cmax, best, want) in [(1000, 1000, 0.0), (1030, 1000, 3.0), (995, 1000, -0.5)] {
        let got = rpd(cmax, best).map_err(|e| e.to_string())?;
        ensure(got == want, || format!("rpd({cmax}, {best}) = {got}, expected {want}"))?;
    }
    Ok("0.0, 3.0, -0.5".into())
}

fn main() -> ExitCode {
    let selected: Option<Vec<usize>> = std::env::var("NWFS_ACCEPTANCE")
        .ok()
        .map(|v| v.split(',').filter_map(|s| s.trim().parse().ok()).collect());
    let registry = BestKnownRegistry::builtin();
    let criteria: Vec<Criterion> = vec![
        (1, "makespan equals timetable simulation", Box::new(oracle_equivalence)),
        (2, "insertion deltas equal full recompute", Box::new(delta_exactness)),
        (3, "reduced evaluation equals expanded makespan", Box::new(reduction_exactness)),
        (4, "super-jobs of the 11-solution fixture pool", Box::new(fixture_pool_blocks)),
        (5, "ta023 reaches 3013 with IG_SJ", Box::new(ta023_end_to_end)),
        (6, "plain IG matches best known on ta001-ta010", Box::new(|| small_optimality(&registry))),
        (7, "IG_SJ mean RPD on ta031-ta040", Box::new(|| medium_quality(&registry))),
        (8, "invariant suites on 100-job instances", Box::new(large_instances)),
        (9, "RPD arithmetic", Box::new(rpd_arithmetic)),
    ];
    let mut failed = 0;
    for (id, name, run) in &criteria {
        if selected.as_ref().is_some_and(|s| !s.contains(id)) {
            continue;
        }
        let started = Instant::now();
        let outcome = std::panic::catch_unwind(std::panic::AssertUnwindSafe(run))
            .unwrap_or_else(|_| Err("panicked".into()));
        let secs = started.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {id}: {name} [{secs:.1}s] {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL criterion {id}: {name} [{secs:.1}s] {detail}");
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
