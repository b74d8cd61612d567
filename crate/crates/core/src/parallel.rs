//! Deterministic P-worker execution.
//!
//! Work is split into `P` contiguous blocks, each rank reduces its own block
//! with the selected strategy, and the per-rank results are combined by naive
//! addition in a fixed rank order. Threads only change who computes a block,
//! never the arithmetic, so results are schedule-independent.

use std::collections::HashMap;
use std::ops::Range;
use std::sync::{Arc, Mutex, OnceLock};

use rayon::prelude::*;
use rayon::{ThreadPool, ThreadPoolBuilder};
use thiserror::Error;

use crate::float_core::WorkingFloat;
use crate::summation::{SumError, SummationStrategy};

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "EXSUM_THREADS";

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct WorkPartition {
    pub n: usize,
    pub procs: usize,
    pub blocks: Vec<Range<usize>>,
}

/// Block partition with `ceil(n / procs)` items per rank; trailing ranks may be
/// short or empty.
pub fn partition(n: usize, procs: usize) -> WorkPartition {
    assert!(procs >= 1, "at least one worker is required");
    let chunk = n.div_ceil(procs);
    let blocks = (0..procs)
        .map(|r| (r * chunk).min(n)..((r + 1) * chunk).min(n))
        .collect();
    WorkPartition { n, procs, blocks }
}

impl WorkPartition {
    /// Same partition shifted to start at `offset`.
    pub fn offset(mut self, offset: usize) -> Self {
        for b in &mut self.blocks {
            *b = (b.start + offset)..(b.end + offset);
        }
        self
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("reduction order {0:?} is not a permutation of the ranks")]
pub struct InvalidReductionOrder(pub Vec<usize>);

/// Order in which per-rank results are added.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionPlan {
    order: Vec<usize>,
}

impl ReductionPlan {
    pub fn ascending(procs: usize) -> Self {
        Self {
            order: (0..procs).collect(),
        }
    }

    pub fn with_order(order: Vec<usize>) -> Result<Self, InvalidReductionOrder> {
        let mut seen = vec![false; order.len()];
        for &r in &order {
            match seen.get_mut(r) {
                Some(s) if !*s => *s = true,
                _ => return Err(InvalidReductionOrder(order)),
            }
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> &[usize] {
        &self.order
    }

    /// Left fold of `locals` in plan order, seeded with the first rank's value.
    pub fn reduce<T: WorkingFloat>(&self, locals: &[T]) -> T {
        assert_eq!(locals.len(), self.order.len(), "one local result per rank");
        let mut ranks = self.order.iter();
        match ranks.next() {
            None => T::ZERO,
            Some(&first) => ranks.fold(locals[first], |acc, &r| acc + locals[r]),
        }
    }
}

/// Strategy, logical worker count `P`, and a cap on real threads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ExecPlan {
    pub strategy: SummationStrategy,
    pub procs: usize,
    pub threads: usize,
}

impl ExecPlan {
    /// Thread cap taken from `EXSUM_THREADS`.
    pub fn new(strategy: SummationStrategy, procs: usize) -> Self {
        Self {
            strategy,
            procs,
            threads: thread_cap_from_env(),
        }
    }

    pub fn with_threads(mut self, threads: usize) -> Self {
        self.threads = threads.max(1);
        self
    }

    pub fn sequential(strategy: SummationStrategy) -> Self {
        Self {
            strategy,
            procs: 1,
            threads: 1,
        }
    }
}

/// `EXSUM_THREADS` if set to a positive integer, else the available parallelism.
pub fn thread_cap_from_env() -> usize {
    std::env::var(THREADS_ENV)
        .ok()
        .and_then(|v| v.trim().parse::<usize>().ok())
        .filter(|&n| n > 0)
        .unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()))
}

fn pool(threads: usize) -> Arc<ThreadPool> {
    static POOLS: OnceLock<Mutex<HashMap<usize, Arc<ThreadPool>>>> = OnceLock::new();
    let mut pools = POOLS.get_or_init(Default::default).lock().unwrap();
    pools
        .entry(threads)
        .or_insert_with(|| {
            Arc::new(
                ThreadPoolBuilder::new()
                    .num_threads(threads)
                    .thread_name(|i| format!("exsum-worker-{i}"))
                    .build()
                    .expect("failed to build worker pool"),
            )
        })
        .clone()
}

/// Runs independent tasks on up to `threads` threads. Results come back
/// indexed by rank; if several tasks fail, the lowest rank's error wins.
pub fn run_workers<R, E, F>(threads: usize, tasks: Vec<F>) -> Result<Vec<R>, E>
where
    F: FnOnce() -> Result<R, E> + Send,
    R: Send,
    E: Send,
{
    let results: Vec<Result<R, E>> = if threads <= 1 || tasks.len() <= 1 {
        tasks.into_iter().map(|t| t()).collect()
    } else {
        pool(threads.min(tasks.len())).install(|| tasks.into_par_iter().map(|t| t()).collect())
    };
    results.into_iter().collect()
}

/// Evaluates `f(rank)` for every rank of `plan`.
pub fn map_ranks<R, E, F>(plan: &ExecPlan, f: F) -> Result<Vec<R>, E>
where
    F: Fn(usize) -> Result<R, E> + Sync,
    R: Send,
    E: Send,
{
    let f = &f;
    let tasks: Vec<_> = (0..plan.procs).map(|r| move || f(r)).collect();
    run_workers(plan.threads, tasks)
}

pub fn parallel_sum<T: WorkingFloat>(xs: &[T], plan: &ExecPlan) -> Result<T, SumError> {
    parallel_sum_with(xs, plan, &ReductionPlan::ascending(plan.procs))
}

pub fn parallel_sum_with<T: WorkingFloat>(
    xs: &[T],
    plan: &ExecPlan,
    reduction: &ReductionPlan,
) -> Result<T, SumError> {
    let parts = partition(xs.len(), plan.procs);
    let locals = map_ranks(plan, |rank| {
        let block = parts.blocks[rank].clone();
        let offset = block.start;
        plan.strategy.sum(&xs[block]).map_err(|e| match e {
            SumError::NonFiniteInput { index } => SumError::NonFiniteInput {
                index: index + offset,
            },
            other => other,
        })
    })?;
    let total = reduction.reduce(&locals);
    if total.is_finite() {
        Ok(total)
    } else {
        Err(SumError::Overflow)
    }
}
