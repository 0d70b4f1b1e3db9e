#![allow(dead_code)]

use nwfs_core::{Instance, Time};
use proptest::prelude::*;

/// Machine-by-machine timetable: each job starts as early as possible such
/// that no operation waits and no machine is double booked.
pub fn gantt_makespan(inst: &Instance, seq: &[usize]) -> Time {
    let m = inst.n_machines();
    let mut free = vec![0u64; m];
    let mut end = 0;
    for &job in seq {
        let mut start = 0u64;
        let mut offset = 0u64;
        for (j, &f) in free.iter().enumerate() {
            start = start.max(f.saturating_sub(offset));
            offset += inst.proc(job, j);
        }
        let mut t = start;
        for (j, slot) in free.iter_mut().enumerate() {
            t += inst.proc(job, j);
            *slot = t;
        }
        end = t;
    }
    end
}

/// Delay between consecutive starts found by trying every start offset.
pub fn brute_delay(inst: &Instance, a: usize, b: usize) -> Time {
    let m = inst.n_machines();
    let total_a: Time = inst.job_row(a).iter().sum();
    (0..=total_a)
        .find(|&s| {
            let (mut ea, mut sb) = (0, s);
            (0..m).all(|j| {
                ea += inst.proc(a, j);
                let ok = sb >= ea;
                sb += inst.proc(b, j);
                ok
            })
        })
        .expect("offset of the full first job always works")
}

pub fn instance_strategy(
    jobs: std::ops::RangeInclusive<usize>,
    machines: std::ops::RangeInclusive<usize>,
    max_p: u64,
) -> impl Strategy<Value = Instance> {
    (jobs, machines).prop_flat_map(move |(n, m)| {
        proptest::collection::vec(proptest::collection::vec(1..=max_p, m), n)
            .prop_map(|rows| Instance::new(rows).unwrap())
    })
}

pub fn with_permutation(inst: Instance) -> impl Strategy<Value = (Instance, Vec<usize>)> {
    let n = inst.n_jobs();
    Just((0..n).collect::<Vec<_>>())
        .prop_shuffle()
        .prop_map(move |p| (inst.clone(), p))
}

/// Fixture pool of 12 jobs and 11 solutions.
pub const FIXTURE_POOL: [[usize; 12]; 11] = [
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
