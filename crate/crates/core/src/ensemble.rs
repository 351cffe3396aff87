//! Replica-parallel execution with results kept in replica order, so every
//! reduction is independent of the worker count.

use rayon::prelude::*;

use crate::error::{Error, Result};

/// Largest tolerated fraction of failed replicas.
pub const FAILURE_BUDGET: f64 = 0.01;

/// Replicas that succeeded, plus the ids and errors of those that did not.
#[derive(Debug, Clone, PartialEq)]
pub struct ReplicaOutcome<T> {
    pub ok: Vec<(u64, T)>,
    pub failed: Vec<(u64, Error)>,
}

impl<T> ReplicaOutcome<T> {
    pub fn values(&self) -> impl Iterator<Item = &T> {
        self.ok.iter().map(|(_, v)| v)
    }
}

/// Run `job(replica_id)` for every id in `0..replicas` on a pool of
/// `workers` threads. Results come back ordered by replica id.
pub fn run_replicas<T, F>(replicas: usize, workers: usize, job: F) -> Result<Vec<Result<T>>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    Ok(pool.install(|| (0..replicas as u64).into_par_iter().map(&job).collect()))
}

/// Split results into successes and failures, aborting when more than
/// [`FAILURE_BUDGET`] of the replicas failed.
pub fn within_budget<T>(results: Vec<Result<T>>) -> Result<ReplicaOutcome<T>> {
    let total = results.len();
    let mut out = ReplicaOutcome { ok: Vec::with_capacity(total), failed: Vec::new() };
    for (id, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => out.ok.push((id as u64, v)),
            Err(e) => out.failed.push((id as u64, e)),
        }
    }
    let failed = out.failed.len();
    if failed as f64 > FAILURE_BUDGET * total as f64 {
        return Err(Error::TooManyFailures { failed, total });
    }
    for (id, e) in &out.failed {
        log::warn!("replica {id} failed: {e}");
    }
    Ok(out)
}

/// [`run_replicas`] followed by [`within_budget`].
pub fn run_ensemble<T, F>(replicas: usize, workers: usize, job: F) -> Result<ReplicaOutcome<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync,
{
    within_budget(run_replicas(replicas, workers, job)?)
}

/// Pairwise (tree) summation in index order.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    match xs.len() {
        0 => 0.0,
        1 => xs[0],
        n if n <= 8 => xs.iter().sum(),
        n => {
            let (a, b) = xs.split_at(n / 2);
            pairwise_sum(a) + pairwise_sum(b)
        }
    }
}

/// Sample mean and standard error of the mean.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = pairwise_sum(xs) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean).powi(2)).collect();
    let var = pairwise_sum(&dev) / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}
