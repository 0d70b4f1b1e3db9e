use std::process::Command;

use nwfs_core::igsj::{PhaseLabel, PhaseRecord};
use nwfs_core::{Confidence, Instance, Permutation};
use nwfs_harness::experiment::{
    read_records, run_experiment, Algorithm, ExperimentSpec, SolverSettings, RUNS_FILE, SUMMARY_FILE,
};
use nwfs_harness::registry::BestKnownRegistry;
use nwfs_harness::report::{summarize, RunRecord, StageTime};
use nwfs_harness::taillard::{
    generate_instance, parse_taillard, serialize_taillard, NamedInstance, TaillardHeader,
};
use proptest::prelude::*;

fn small(name: &str, n: usize, m: usize, seed: u64) -> NamedInstance {
    NamedInstance {
        name: name.into(),
        header: TaillardHeader::new(n, m),
        instance: generate_instance(n, m, seed).unwrap(),
    }
}

fn quick_ig() -> SolverSettings {
    let mut s = SolverSettings::new(Algorithm::Ig);
    s.ig_time_factor = 0;
    s.ig_noimprove_factor = 2;
    s
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn generated_instances_round_trip(n in 1usize..40, m in 1usize..12, seed in 1u64..2_147_483_647) {
        let inst = generate_instance(n, m, seed).unwrap();
        for j in 0..n {
            for k in 0..m {
                prop_assert!((1..=99).contains(&inst.proc(j, k)));
            }
        }
        prop_assert_eq!(&generate_instance(n, m, seed).unwrap(), &inst);
        let header = TaillardHeader { seed: Some(seed), ..TaillardHeader::new(n, m) };
        let parsed = parse_taillard(&serialize_taillard(&header, &inst)).unwrap();
        prop_assert_eq!(parsed.instance, inst);
        prop_assert_eq!(parsed.header, header);
    }

    #[test]
    fn run_records_round_trip(
        makespan in proptest::option::of(1u64..100_000),
        best in proptest::option::of(1u64..100_000),
        rpd in proptest::option::of(-50.0f64..50.0),
        sigma in 1.0f64..=100.0,
        seed in any::<u64>(),
    ) {
        let record = RunRecord {
            instance: "ta031".into(),
            size: "50x5".into(),
            algorithm: "igsj".into(),
            config: serde_json::to_value(SolverSettings::new(Algorithm::Igsj)).unwrap(),
            replication: 2,
            seed,
            makespan,
            best_known: best,
            rpd,
            permutation: Some(Permutation::new(vec![2, 0, 1]).unwrap()),
            phases: vec![PhaseRecord {
                label: PhaseLabel::Ig,
                sigma: Confidence::Percent(sigma),
                n_sj: 3,
                makespan: 10,
                reduced_makespan: 10,
                best_makespan: 10,
                ig_iterations: 4,
                elapsed_ms: 5,
                superjobs: "[0 1] [2]".into(),
            }],
            stages: vec![StageTime { stage: "pool".into(), ms: 7 }],
            total_ms: 12,
            timestamp: chrono::Utc::now(),
            error: None,
        };
        let back: RunRecord = serde_json::from_str(&record.to_json_line()).unwrap();
        prop_assert_eq!(back, record);
    }
}

#[test]
fn zero_replications_give_empty_summary() {
    let dir = tempfile::tempdir().unwrap();
    let spec = ExperimentSpec {
        instances: vec![small("a", 6, 3, 5)],
        settings: quick_ig(),
        replications: 0,
        seed: 1,
        share_pool: true,
        threads: Some(1),
        out_dir: Some(dir.path().to_path_buf()),
    };
    let (records, summary) = run_experiment(&spec, &BestKnownRegistry::builtin()).unwrap();
    assert!(records.is_empty());
    assert!(summary.rows.is_empty());
    let csv = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1);
}

#[test]
fn batch_persists_and_summarizes() {
    let dir = tempfile::tempdir().unwrap();
    let registry = BestKnownRegistry::builtin();
    let before = registry.clone();
    let spec = ExperimentSpec {
        instances: vec![small("ta001", 20, 5, 873654221), small("tiny", 7, 3, 9)],
        settings: quick_ig(),
        replications: 3,
        seed: 4,
        share_pool: false,
        threads: Some(2),
        out_dir: Some(dir.path().to_path_buf()),
    };
    let (records, summary) = run_experiment(&spec, &registry).unwrap();
    assert_eq!(records.len(), 6);
    assert_eq!(registry, before);
    assert!(records.iter().all(|r| r.error.is_none()));
    assert_eq!(records[0].instance, "ta001");
    assert_eq!(records[3].instance, "tiny");
    assert!(records[3].rpd.is_none());

    let rpds: Vec<f64> = records.iter().filter_map(|r| r.rpd).collect();
    assert_eq!(rpds.len(), 3);
    let row = summary.rows.iter().find(|r| r.size == "20x5").unwrap();
    let mean = rpds.iter().sum::<f64>() / 3.0;
    assert!((row.mean_rpd.unwrap() - mean).abs() < 1e-12);

    // append-only: a second batch adds lines, the header is written once
    run_experiment(&spec, &registry).unwrap();
    let mut stored = read_records(&dir.path().join(RUNS_FILE)).unwrap();
    assert_eq!(stored.len(), 12);
    stored.truncate(6);
    stored.sort_by_key(|r| (r.instance != "ta001", r.replication));
    assert_eq!(stored, records);
    let csv = std::fs::read_to_string(dir.path().join(SUMMARY_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.starts_with("instance,size,algo,replication,makespan,rpd,total_ms,phases"));
    assert_eq!(summarize(&records), summary);
}

#[test]
fn igsj_batch_with_shared_pool() {
    let mut settings = SolverSettings::new(Algorithm::Igsj);
    settings.pool_size = 4;
    settings.pool_time_factor = 0;
    settings.pool_noimprove_factor = 2;
    settings.time_factor = 0;
    settings.noimprove_factor = 2;
    let spec = ExperimentSpec {
        instances: vec![small("x", 12, 4, 77)],
        settings,
        replications: 2,
        seed: 3,
        share_pool: true,
        threads: Some(1),
        out_dir: None,
    };
    let (records, _) = run_experiment(&spec, &BestKnownRegistry::builtin()).unwrap();
    for r in &records {
        assert!(r.error.is_none(), "{:?}", r.error);
        assert_eq!(r.stages[0].stage, "pool");
        assert_eq!(r.phases.len(), 4);
        let perm = r.permutation.as_ref().unwrap();
        let dm = nwfs_core::DelayMatrix::new(&spec.instances[0].instance);
        assert_eq!(dm.sequence_makespan(perm.as_slice()), r.makespan.unwrap());
    }
}

#[test]
fn solver_errors_are_recorded_per_run() {
    let mut settings = quick_ig();
    settings.ig_noimprove_factor = 0;
    let spec = ExperimentSpec {
        instances: vec![small("a", 5, 2, 3)],
        settings,
        replications: 2,
        seed: 1,
        share_pool: false,
        threads: Some(1),
        out_dir: None,
    };
    let (records, summary) = run_experiment(&spec, &BestKnownRegistry::builtin()).unwrap();
    assert_eq!(records.len(), 2);
    assert!(records.iter().all(|r| r.error.is_some() && r.makespan.is_none()));
    assert_eq!(summary.rows[0].failures, 2);
}

fn nwfs(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_nwfs")).args(args).output().unwrap()
}

#[test]
fn cli_gen_solve_and_analyze() {
    let dir = tempfile::tempdir().unwrap();
    let inst_path = dir.path().join("small.txt");
    let out = nwfs(&["gen", "--jobs", "9", "--machines", "3", "--seed", "12", "--output", inst_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let parsed = parse_taillard(&std::fs::read_to_string(&inst_path).unwrap()).unwrap();
    assert_eq!(parsed.instance, generate_instance(9, 3, 12).unwrap());

    let pool_path = dir.path().join("small.pool");
    let inst = inst_path.to_str().unwrap();
    let out = nwfs(&[
        "pool", "--instance", inst, "--pool-size", "4", "--pool-time-factor", "1", "--output",
        pool_path.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let out = nwfs(&[
        "solve", "--instance", inst, "--pool", pool_path.to_str().unwrap(), "--time-factor", "0",
        "--noimprove-factor", "3", "--out", dir.path().to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = stdout.lines().collect();
    // init + one line per confidence level + the final record
    assert_eq!(lines.len(), 5);
    let phase: PhaseRecord = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(phase.label, PhaseLabel::Init);
    let record: RunRecord = serde_json::from_str(lines[4]).unwrap();
    let inst_value: Instance = parsed.instance;
    let dm = nwfs_core::DelayMatrix::new(&inst_value);
    assert_eq!(
        dm.sequence_makespan(record.permutation.unwrap().as_slice()),
        record.makespan.unwrap()
    );
    assert_eq!(read_records(&dir.path().join(RUNS_FILE)).unwrap().len(), 1);

    let out = nwfs(&["analyze", "--pool", pool_path.to_str().unwrap()]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stdout).contains("sigma inf: 9 meta-jobs"));

    let out = nwfs(&["enumerate", "--instance", inst, "--keep", "3"]);
    assert!(out.status.success());
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(report["visited"], 362880);
}

#[test]
fn cli_reports_bad_input() {
    let out = nwfs(&["solve", "--instance", "ta999"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown instance"));
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.txt");
    std::fs::write(&bad, "2 2\n1 2\n3 x\n").unwrap();
    let out = nwfs(&["solve", "--instance", bad.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3, column 3"));
}
