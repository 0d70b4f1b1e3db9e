//! No-wait permutation flow shop: delay-matrix evaluation, insertion
//! neighbourhood, iterated greedy and super-job problem reduction.

pub mod error;
pub mod ig;
pub mod igsj;
pub mod landscape;
pub mod model;
pub mod neighborhood;
pub mod rng;
pub mod superjobs;

pub use error::{Error, Result};
pub use ig::{iterated_greedy, Acceptance, IgConfig, IgResult, StallCounter};
pub use igsj::{
    generate_pool, igsj, iigsj, ConfidenceSchedule, IgsjConfig, IgsjOutcome, IigsjConfig,
    IigsjOutcome, PhaseLabel, PhaseRecord, PhaseTrace,
};
pub use model::{
    delay, makespan, makespan_simulate, DelayMatrix, Evaluation, Instance, JobId, Permutation, Time,
};
pub use neighborhood::{delta_makespan, InsertionMove};
pub use superjobs::{identify, reduce, Confidence, Pool, PoolSource, ReducedProblem, SuperJob, SuperJobSet};
