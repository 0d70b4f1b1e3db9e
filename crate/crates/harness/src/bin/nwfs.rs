use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use nwfs_core::igsj::ConfidenceSchedule;
use nwfs_core::landscape::{enumerate_local_optima, EnumerationLimits, DEFAULT_ENUMERATION_CAP};
use nwfs_core::superjobs::{adjacency_frequency, identify};
use nwfs_core::{Acceptance, Confidence, DelayMatrix, StallCounter};
use nwfs_harness::experiment::{
    build_pool, read_pool, run_experiment, run_seed, solve, write_pool, Algorithm, ExperimentSpec,
    SolverSettings, RUNS_FILE,
};
use nwfs_harness::registry::{data_dir_from_env, BestKnownRegistry};
use nwfs_harness::report::{rpd, RunRecord};
use nwfs_harness::taillard::{
    benchmark_index, benchmark_name, generate_instance, resolve_instance, serialize_taillard,
    NamedInstance, TaillardHeader,
};

/// No-wait flow shop solvers and benchmark tools.
#[derive(Parser)]
#[command(name = "nwfs", version)]
struct Cli {
    /// Instance file or benchmark name (ta001..ta120).
    #[arg(long, global = true)]
    instance: Option<String>,
    /// Output directory for records, pools and summaries.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Worker threads (defaults to the number of cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one instance; prints one JSON line per phase and a final record.
    Solve(SolveArgs),
    /// Build a pool of independent IG solutions.
    Pool(PoolArgs),
    /// Enumerate all permutations of a small instance.
    Enumerate(EnumerateArgs),
    /// Report the super-jobs of a saved pool.
    Analyze(AnalyzeArgs),
    /// Replication batch over several instances with a summary table.
    Bench(BenchArgs),
    /// Write an instance in benchmark text format.
    Gen(GenArgs),
}

#[derive(Args, Clone)]
struct SolverArgs {
    #[arg(long, default_value = "igsj")]
    algo: Algorithm,
    /// Confidence schedule, e.g. "60,80,inf".
    #[arg(long)]
    sigma: Option<String>,
    #[arg(long, default_value_t = 10)]
    pool_size: usize,
    /// Pool run budget in ms per n^2.
    #[arg(long, default_value_t = 10)]
    pool_time_factor: u64,
    /// Pool size R of the iterated variant.
    #[arg(long = "R", default_value_t = 20)]
    r: usize,
    /// Sample size rho of the iterated variant.
    #[arg(long, default_value_t = 10)]
    rho: usize,
    #[arg(long, default_value_t = 5)]
    iterations: usize,
    /// Phase budget in ms per n_sj^2 (0 disables).
    #[arg(long)]
    time_factor: Option<u64>,
    /// Phase no-improvement budget per meta-job (0 disables).
    #[arg(long)]
    noimprove_factor: Option<u64>,
    #[arg(long, default_value_t = 4)]
    destruction_size: usize,
    #[arg(long, default_value_t = 0.4)]
    temperature_factor: f64,
    /// Plain IG time limit (default 10 n^2 ms).
    #[arg(long)]
    max_time_ms: Option<u64>,
    /// Plain IG no-improvement limit (default 50 n).
    #[arg(long)]
    max_no_improve: Option<u64>,
    /// incumbent or best-ever
    #[arg(long, default_value = "incumbent")]
    acceptance: Acceptance,
    /// Improvements that reset the no-improvement counter: walk or best
    #[arg(long, default_value = "walk")]
    stall: StallCounter,
}

impl SolverArgs {
    fn settings(&self) -> Result<SolverSettings> {
        let mut s = SolverSettings::new(self.algo);
        s.destruction_size = self.destruction_size;
        s.temperature_factor = self.temperature_factor;
        s.acceptance = self.acceptance;
        s.stall = self.stall;
        s.ig_max_time_ms = self.max_time_ms;
        s.ig_max_no_improve = self.max_no_improve;
        s.pool_size = self.pool_size;
        s.pool_time_factor = self.pool_time_factor;
        s.pool_width = self.r;
        s.sample_size = self.rho;
        s.iterations = self.iterations;
        match self.algo {
            Algorithm::Iigsj => {
                if let Some(sigma) = &self.sigma {
                    s.inner_schedule = sigma.parse::<ConfidenceSchedule>()?;
                }
                s.inner_time_factor = self.time_factor.unwrap_or(s.inner_time_factor);
                s.inner_noimprove_factor = self.noimprove_factor.unwrap_or(s.inner_noimprove_factor);
            }
            _ => {
                if let Some(sigma) = &self.sigma {
                    s.schedule = sigma.parse::<ConfidenceSchedule>()?;
                }
                s.time_factor = self.time_factor.unwrap_or(s.time_factor);
                s.noimprove_factor = self.noimprove_factor.unwrap_or(s.noimprove_factor);
            }
        }
        Ok(s)
    }
}

#[derive(Args)]
struct SolveArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Use a saved pool instead of generating one.
    #[arg(long)]
    pool: Option<PathBuf>,
}

#[derive(Args)]
struct PoolArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Pool file (defaults to OUT/<instance>.pool, else stdout).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EnumerateArgs {
    /// Local optima to report besides the global optimum.
    #[arg(long, default_value_t = 10)]
    keep: usize,
    /// Accept up to 12 jobs (hours of compute).
    #[arg(long)]
    allow_large: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    #[arg(long)]
    pool: PathBuf,
    /// Confidence levels to report.
    #[arg(long, default_value = "60,70,80,90,100,inf")]
    sigma: String,
    /// Most frequent adjacent pairs to list.
    #[arg(long, default_value_t = 10)]
    top: usize,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    solver: SolverArgs,
    /// Instances: names, files or ranges like ta031-ta040 (comma separated).
    #[arg(long)]
    instances: Option<String>,
    #[arg(long, default_value_t = 30)]
    replications: usize,
    /// One pool per instance shared by its replications.
    #[arg(long)]
    share_pool: bool,
}

#[derive(Args)]
struct GenArgs {
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    machines: Option<usize>,
    /// Output file (stdout when absent).
    #[arg(long)]
    output: Option<PathBuf>,
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .context("configuring worker threads")?;
    }
    let data_dir = data_dir_from_env();
    match &cli.command {
        Command::Solve(args) => cmd_solve(&cli, args, data_dir.as_deref()),
        Command::Pool(args) => cmd_pool(&cli, args, data_dir.as_deref()),
        Command::Enumerate(args) => cmd_enumerate(&cli, args, data_dir.as_deref()),
        Command::Analyze(args) => cmd_analyze(args),
        Command::Bench(args) => cmd_bench(&cli, args, data_dir.as_deref()),
        Command::Gen(args) => cmd_gen(&cli, args, data_dir.as_deref()),
    }
}

fn instance(cli: &Cli, data_dir: Option<&Path>) -> Result<NamedInstance> {
    let spec = cli.instance.as_deref().context("--instance is required")?;
    Ok(resolve_instance(spec, data_dir)?)
}

fn cmd_solve(cli: &Cli, args: &SolveArgs, data_dir: Option<&Path>) -> Result<()> {
    let named = instance(cli, data_dir)?;
    let settings = args.solver.settings()?;
    let registry = BestKnownRegistry::from_dir(data_dir)?;
    let pool = args.pool.as_deref().map(read_pool).transpose()?;
    let seed = cli.seed;
    let started = std::time::Instant::now();
    let out = solve(&named.instance, &settings, seed, pool.as_ref())?;
    let total_ms = started.elapsed().as_millis() as u64;

    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    for phase in &out.phases {
        writeln!(lock, "{}", serde_json::to_string(phase)?)?;
    }
    let best_known = registry.best(&named.name);
    let record = RunRecord {
        instance: named.name.clone(),
        size: format!("{}x{}", named.instance.n_jobs(), named.instance.n_machines()),
        algorithm: settings.algorithm.to_string(),
        config: serde_json::to_value(&settings)?,
        replication: 0,
        seed,
        makespan: Some(out.makespan),
        best_known,
        rpd: best_known.map(|b| rpd(out.makespan, b)).transpose()?,
        permutation: Some(out.best),
        phases: out.phases,
        stages: out.stages,
        total_ms,
        timestamp: chrono::Utc::now(),
        error: None,
    };
    writeln!(lock, "{}", record.to_json_line())?;
    if let Some(dir) = &cli.out {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        let path = dir.join(RUNS_FILE);
        let mut file = std::fs::OpenOptions::new()
            .create(true)
            .append(true)
            .open(&path)
            .with_context(|| format!("opening {}", path.display()))?;
        writeln!(file, "{}", record.to_json_line()).with_context(|| format!("writing {}", path.display()))?;
    }
    Ok(())
}

fn cmd_pool(cli: &Cli, args: &PoolArgs, data_dir: Option<&Path>) -> Result<()> {
    let named = instance(cli, data_dir)?;
    let settings = args.solver.settings()?;
    let pool = build_pool(&named.instance, &settings, run_seed(cli.seed, &named.name, 0))?;
    let dm = DelayMatrix::new(&named.instance);
    for sol in pool.solutions() {
        eprintln!("{} ({})", sol, dm.sequence_makespan(sol.as_slice()));
    }
    let target = args
        .output
        .clone()
        .or_else(|| cli.out.as_ref().map(|d| d.join(format!("{}.pool", named.name))));
    match target {
        Some(path) => {
            if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
            }
            write_pool(&path, &pool)?;
            eprintln!("wrote {}", path.display());
        }
        None => {
            for sol in pool.solutions() {
                println!("{sol}");
            }
        }
    }
    Ok(())
}

fn cmd_enumerate(cli: &Cli, args: &EnumerateArgs, data_dir: Option<&Path>) -> Result<()> {
    let named = instance(cli, data_dir)?;
    let limits = EnumerationLimits {
        cap: DEFAULT_ENUMERATION_CAP,
        allow_large: args.allow_large,
    };
    let report = enumerate_local_optima(&named.instance, args.keep, limits)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    Ok(())
}

fn cmd_analyze(args: &AnalyzeArgs) -> Result<()> {
    let pool = read_pool(&args.pool)?;
    println!("pool: {} solutions of {} jobs", pool.len(), pool.n_jobs());
    let mut pairs: Vec<_> = adjacency_frequency(&pool).into_iter().collect();
    pairs.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
    println!("most frequent adjacent pairs:");
    for ((a, b), count) in pairs.iter().take(args.top) {
        println!("  {a} -> {b}: {count}");
    }
    for level in args.sigma.split(',') {
        let sigma: Confidence = level.parse()?;
        let sjs = identify(&pool, sigma)?;
        let blocks: Vec<String> = sjs.non_trivial().map(ToString::to_string).collect();
        println!("sigma {sigma}: {} meta-jobs; super-jobs {}", sjs.len(), blocks.join(" "));
    }
    Ok(())
}

/// Expands "ta031-ta040,ta023,file.txt".
fn instance_list(spec: &str) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        if let Some((a, b)) = part.split_once('-') {
            if let (Some(lo), Some(hi)) = (benchmark_index(a), benchmark_index(b)) {
                if lo > hi {
                    bail!("empty range {part}");
                }
                out.extend((lo..=hi).map(benchmark_name));
                continue;
            }
        }
        out.push(part.to_string());
    }
    Ok(out)
}

fn cmd_bench(cli: &Cli, args: &BenchArgs, data_dir: Option<&Path>) -> Result<()> {
    let names = match (&args.instances, &cli.instance) {
        (Some(list), _) => instance_list(list)?,
        (None, Some(one)) => vec![one.clone()],
        (None, None) => bail!("--instances or --instance is required"),
    };
    let instances = names
        .iter()
        .map(|n| resolve_instance(n, data_dir))
        .collect::<Result<Vec<_>, _>>()?;
    let spec = ExperimentSpec {
        instances,
        settings: args.solver.settings()?,
        replications: args.replications,
        seed: cli.seed,
        share_pool: args.share_pool,
        threads: cli.threads,
        out_dir: cli.out.clone(),
    };
    let registry = BestKnownRegistry::from_dir(data_dir)?;
    let (records, summary) = run_experiment(&spec, &registry)?;
    for r in &records {
        match (&r.error, r.makespan) {
            (Some(e), _) => eprintln!("{} rep {}: error: {e}", r.instance, r.replication),
            (None, Some(mk)) => eprintln!(
                "{} rep {}: {mk} rpd {}",
                r.instance,
                r.replication,
                r.rpd.map_or_else(|| "-".into(), |v| format!("{v:.3}"))
            ),
            _ => {}
        }
    }
    print!("{}", summary.render());
    Ok(())
}

fn cmd_gen(cli: &Cli, args: &GenArgs, data_dir: Option<&Path>) -> Result<()> {
    let (header, inst) = match (&cli.instance, args.jobs, args.machines) {
        (Some(_), None, None) => {
            let named = instance(cli, data_dir)?;
            (named.header, named.instance)
        }
        (None, Some(n), Some(m)) => {
            let inst = generate_instance(n, m, cli.seed)?;
            let header = TaillardHeader {
                seed: Some(cli.seed),
                ..TaillardHeader::new(n, m)
            };
            (header, inst)
        }
        _ => bail!("use either --instance or both --jobs and --machines"),
    };
    let text = serialize_taillard(&header, &inst);
    match &args.output {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}
