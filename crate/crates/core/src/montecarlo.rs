//! Seeded samplers for the tree statistics and a parallel batch runner.
//!
//! Every sampler walks the tree depth-first in pre-order, children in index
//! order, drawing each vertex's label from the replicate's stream the
//! first time the walk reaches it. With the stream fixed by
//! `(base_seed, replicate_index)` (see [`crate::model::rng_stream`]) a
//! replicate's value is a pure function of those two numbers. Memory is
//! `O(n)` per replicate: one frame per level of the current branch.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exact::path_count_u128;
use crate::model::{rng_stream, validate, ModelParams, PathQuery, ReplicateRng, RngSpec};
use crate::pmf::NO_PATH;

/// Largest leaf count `N^n` walked by the full-tree samplers.
pub const MAX_FULL_TREE_LEAVES: u64 = 1 << 24;
/// Largest path count `M` for [`sample_increasing_count`].
pub const MAX_INCREASING_PATHS: u64 = 10_000_000;
/// Default cap on vertex draws per replicate for the open-cluster samplers.
pub const DEFAULT_WORK_CAP: u64 = 100_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Statistic {
    /// `Theta_n`, open root-to-leaf paths.
    Theta,
    /// `1{Theta_n >= 1}`; stops at the first open root-to-leaf path.
    Spanning,
    /// `L_{N,n}`, [`NO_PATH`] if every vertex is closed.
    LongestOpen,
    /// Longest increasing descending path.
    LongestIncreasing,
    /// Increasing descending paths of length exactly `k`.
    IncreasingCount,
}

impl Statistic {
    pub fn name(self) -> &'static str {
        match self {
            Statistic::Theta => "theta",
            Statistic::Spanning => "spanning",
            Statistic::LongestOpen => "longest-open",
            Statistic::LongestIncreasing => "longest-increasing",
            Statistic::IncreasingCount => "increasing-count",
        }
    }

    pub fn needs_prob(self) -> bool {
        matches!(self, Statistic::Theta | Statistic::Spanning | Statistic::LongestOpen)
    }
}

fn full_tree_guard(params: &ModelParams) -> Result<()> {
    let leaves = params.level_size(params.depth).unwrap_or(u64::MAX);
    if leaves > MAX_FULL_TREE_LEAVES {
        return Err(Error::ScaleGuard {
            what: "leaves N^n for a full-tree walk",
            limit: MAX_FULL_TREE_LEAVES,
            actual: leaves,
        });
    }
    Ok(())
}

struct Budget {
    used: u64,
    cap: u64,
}

impl Budget {
    #[inline]
    fn spend(&mut self) -> Result<()> {
        self.used += 1;
        if self.used > self.cap {
            Err(Error::WorkCapExceeded { cap: self.cap })
        } else {
            Ok(())
        }
    }
}

/// Walks the open cluster of the root. With `stop_at_first` the walk ends
/// at the first open leaf and the result is 0 or 1.
fn open_cluster_leaves(
    params: &ModelParams,
    rng: &mut ReplicateRng,
    work_cap: u64,
    stop_at_first: bool,
) -> Result<i64> {
    validate(params, None)?;
    let p = params.prob()?;
    let (nb, n) = (params.branching, params.depth as usize);
    let mut budget = Budget { used: 0, cap: work_cap };
    budget.spend()?;
    if !rng.bernoulli(p) {
        return Ok(0);
    }
    if n == 0 {
        return Ok(1);
    }
    // stack[i] = children of the open level-i vertex visited so far
    let mut stack: Vec<u32> = Vec::with_capacity(n);
    stack.push(0);
    let mut count = 0i64;
    while let Some(top) = stack.last_mut() {
        if *top == nb {
            stack.pop();
            continue;
        }
        *top += 1;
        budget.spend()?;
        if rng.bernoulli(p) {
            if stack.len() == n {
                count += 1;
                if stop_at_first {
                    return Ok(1);
                }
            } else {
                stack.push(0);
            }
        }
    }
    Ok(count)
}

/// One realization of `Theta_n`. Cost is the size of the root's open
/// cluster, which grows like `(Np)^n` above criticality; exceeding
/// `work_cap` draws aborts the replicate.
pub fn sample_theta(params: &ModelParams, rng: &mut ReplicateRng, work_cap: u64) -> Result<i64> {
    open_cluster_leaves(params, rng, work_cap, false)
}

/// One realization of `1{Theta_n >= 1}`.
pub fn sample_spanning(params: &ModelParams, rng: &mut ReplicateRng, work_cap: u64) -> Result<i64> {
    open_cluster_leaves(params, rng, work_cap, true)
}

struct RunFrame {
    open: bool,
    best_child: i64,
    next: u32,
}

/// One realization of `L_{N,n}`: the longest open run starting at `v` is
/// `1 + max_child` when `v` is open (children contribute -1 when closed)
/// and -1 otherwise; the result is its maximum over all vertices.
pub fn sample_longest_open(params: &ModelParams, rng: &mut ReplicateRng) -> Result<i64> {
    validate(params, None)?;
    full_tree_guard(params)?;
    let p = params.prob()?;
    let (nb, n) = (params.branching, params.depth as usize);
    let mut stack = Vec::with_capacity(n + 1);
    stack.push(RunFrame {
        open: rng.bernoulli(p),
        best_child: -1,
        next: 0,
    });
    let mut longest = NO_PATH;
    loop {
        let level = stack.len() - 1;
        let top = stack.last_mut().unwrap();
        if level < n && top.next < nb {
            top.next += 1;
            stack.push(RunFrame {
                open: rng.bernoulli(p),
                best_child: -1,
                next: 0,
            });
            continue;
        }
        let frame = stack.pop().unwrap();
        let run = if frame.open { frame.best_child + 1 } else { -1 };
        longest = longest.max(run);
        match stack.last_mut() {
            Some(parent) => parent.best_child = parent.best_child.max(run),
            None => return Ok(longest),
        }
    }
}

struct FitnessFrame {
    x: f64,
    best: i64,
    next: u32,
}

/// One realization of the longest increasing path under i.i.d. uniform
/// fitnesses. `S(v) = 1 + max{S(c) : X_c > X_v}`, or 0 if no child beats
/// `v`; the result is the maximum of `S`. Ties have probability zero and
/// are not special-cased.
pub fn sample_longest_increasing(params: &ModelParams, rng: &mut ReplicateRng) -> Result<i64> {
    validate(params, None)?;
    full_tree_guard(params)?;
    let (nb, n) = (params.branching, params.depth as usize);
    let mut stack = Vec::with_capacity(n + 1);
    stack.push(FitnessFrame {
        x: rng.uniform(),
        best: -1,
        next: 0,
    });
    let mut longest = 0;
    loop {
        let level = stack.len() - 1;
        let top = stack.last_mut().unwrap();
        if level < n && top.next < nb {
            top.next += 1;
            stack.push(FitnessFrame {
                x: rng.uniform(),
                best: -1,
                next: 0,
            });
            continue;
        }
        let frame = stack.pop().unwrap();
        let s = frame.best + 1;
        longest = longest.max(s);
        match stack.last_mut() {
            Some(parent) => {
                if frame.x > parent.x {
                    parent.best = parent.best.max(s);
                }
            }
            None => return Ok(longest),
        }
    }
}

/// One realization of `T~_{n,k}`: a vertex ends an increasing path of
/// length `k` exactly when the increasing run ending at it has length at
/// least `k`, so the count is the number of such vertices.
pub fn sample_increasing_count(params: &ModelParams, k: u32, rng: &mut ReplicateRng) -> Result<i64> {
    validate(params, Some(&PathQuery::length(k)))?;
    let m = path_count_u128(params.branching, params.depth, k).unwrap_or(u128::MAX);
    if m > MAX_INCREASING_PATHS as u128 {
        return Err(Error::ScaleGuard {
            what: "length-k paths M",
            limit: MAX_INCREASING_PATHS,
            actual: m.min(u64::MAX as u128) as u64,
        });
    }
    let (nb, n) = (params.branching, params.depth as usize);
    let k = k as i64;
    // (fitness, increasing run length ending here, children visited)
    let mut stack: Vec<(f64, i64, u32)> = Vec::with_capacity(n + 1);
    stack.push((rng.uniform(), 0, 0));
    let mut count = i64::from(k == 0);
    while let Some(&(px, prun, visited)) = stack.last() {
        if stack.len() - 1 == n || visited == nb {
            stack.pop();
            continue;
        }
        stack.last_mut().unwrap().2 += 1;
        let x = rng.uniform();
        let run = if x > px { prun + 1 } else { 0 };
        if run >= k {
            count += 1;
        }
        stack.push((x, run, 0));
    }
    Ok(count)
}

/// Draws one replicate of `statistic`.
pub fn sample_one(
    params: &ModelParams,
    statistic: Statistic,
    k: Option<u32>,
    rng: &mut ReplicateRng,
    work_cap: u64,
) -> Result<i64> {
    match statistic {
        Statistic::Theta => sample_theta(params, rng, work_cap),
        Statistic::Spanning => sample_spanning(params, rng, work_cap),
        Statistic::LongestOpen => sample_longest_open(params, rng),
        Statistic::LongestIncreasing => sample_longest_increasing(params, rng),
        Statistic::IncreasingCount => {
            let k = k.ok_or_else(|| Error::param("k", "required for increasing-count"))?;
            sample_increasing_count(params, k, rng)
        }
    }
}

/// A seeded set of replicates with everything needed to regenerate it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleBatch {
    pub params: ModelParams,
    pub statistic: Statistic,
    pub k: Option<u32>,
    pub base_seed: u64,
    pub replicates: u64,
    pub samples: Vec<i64>,
}

impl SampleBatch {
    pub fn mean(&self) -> f64 {
        self.samples.iter().map(|&s| s as f64).sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len() as f64;
        let mu = self.mean();
        self.samples.iter().map(|&s| (s as f64 - mu).powi(2)).sum::<f64>() / (n - 1.0)
    }
}

pub type ProgressFn = Arc<dyn Fn(u64, u64) + Send + Sync>;

#[derive(Clone)]
pub struct BatchConfig {
    /// Worker threads; 0 picks the machine's parallelism. Never affects results.
    pub workers: usize,
    pub work_cap: u64,
    /// Called with `(completed, total)` as replicates finish.
    pub progress: Option<ProgressFn>,
}

impl Default for BatchConfig {
    fn default() -> Self {
        BatchConfig {
            workers: 0,
            work_cap: DEFAULT_WORK_CAP,
            progress: None,
        }
    }
}

impl std::fmt::Debug for BatchConfig {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("BatchConfig")
            .field("workers", &self.workers)
            .field("work_cap", &self.work_cap)
            .field("progress", &self.progress.is_some())
            .finish()
    }
}

/// Runs `replicates` independent draws; replicate `i` uses
/// `rng_stream(base_seed, i)`. Samples are stored by replicate index, so
/// the batch is identical for every worker count.
pub fn run_batch(
    params: &ModelParams,
    statistic: Statistic,
    k: Option<u32>,
    replicates: u64,
    base_seed: u64,
    config: &BatchConfig,
) -> Result<SampleBatch> {
    validate(params, k.map(PathQuery::length).as_ref())?;
    if statistic.needs_prob() {
        params.prob()?;
    }
    if statistic == Statistic::IncreasingCount && k.is_none() {
        return Err(Error::param("k", "required for increasing-count"));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .map_err(|e| Error::Numerical(format!("worker pool: {e}")))?;
    let done = AtomicU64::new(0);
    let results: Vec<Result<i64>> = pool.install(|| {
        (0..replicates)
            .into_par_iter()
            .map(|i| {
                let mut rng = rng_stream(RngSpec {
                    base_seed,
                    replicate_index: i,
                });
                let out = sample_one(params, statistic, k, &mut rng, config.work_cap);
                if let Some(progress) = &config.progress {
                    progress(done.fetch_add(1, Ordering::Relaxed) + 1, replicates);
                }
                out
            })
            .collect()
    });

    let mut samples = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for (i, r) in results.into_iter().enumerate() {
        match r {
            Ok(v) => samples.push(v),
            Err(e) => failures.push((i as u64, e)),
        }
    }
    // A guard that trips on every replicate is a property of the
    // parameters, not of the draws; report it as such.
    let structural = |e: &Error| !matches!(e, Error::WorkCapExceeded { .. });
    if samples.is_empty()
        && failures.first().is_some_and(|(_, e)| structural(e))
        && failures.iter().all(|(_, e)| *e == failures[0].1)
    {
        return Err(failures.swap_remove(0).1);
    }
    if !failures.is_empty() {
        return Err(Error::Batch { failures });
    }
    Ok(SampleBatch {
        params: *params,
        statistic,
        k,
        base_seed,
        replicates,
        samples,
    })
}
