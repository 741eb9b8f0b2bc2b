//! Experiment specs, seeded Monte Carlo runs and result files.
//!
//! Drop `d` of an experiment with seed `s` always uses channel seed
//! `drop_seed(s, d)`, at every sweep point and for every scheme, so results do
//! not depend on the number of workers and schemes see common channels.
//! The pool size comes from `COORDBEAM_WORKERS` (default: all cores).

mod experiments;
mod results;
mod run;
mod selftest;
mod spec;

pub use experiments::{
    bound_experiment, count_interference_free, fig1_experiment, rate_samples, theorem1_experiment, BoundRow, Fig1Row,
    Summary, Theorem1Row,
};
pub use results::{
    build_id, emit_results, read_results, validate_record, write_results, RecordMetadata, ResultFormat, ResultRecord,
    ResultRow,
};
pub use run::{generate_drop, run_experiment, run_experiment_with, run_scheme, DropOutcome};
pub use selftest::{selftest, Check};
pub use spec::{ExperimentSpec, NetworkShape, PathlossSpec, ProtocolKind, Scenario, SchemeSpec, SPEC_VERSION};

use crate::{Error, Result};

pub const WORKERS_ENV: &str = "COORDBEAM_WORKERS";

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Derives an independent stream seed from `seed` and a label.
pub fn mix(seed: u64, label: u64) -> u64 {
    splitmix64(seed ^ splitmix64(label))
}

pub fn drop_seed(seed: u64, drop: u64) -> u64 {
    mix(seed, drop.wrapping_add(0x5eed))
}

pub(crate) fn worker_pool() -> Result<rayon::ThreadPool> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(WORKERS_ENV) {
        let n: usize = v
            .trim()
            .parse()
            .map_err(|_| Error::InvalidConfig(format!("{WORKERS_ENV}={v:?} is not a worker count")))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| Error::InvalidConfig(e.to_string()))
}
