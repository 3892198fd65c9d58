//! Deterministic in-process MapReduce runtime.
//!
//! A job runs in four stages:
//!
//! 1. inputs are cut into `num_map_tasks` contiguous splits, in input order;
//! 2. each map task maps its split and, if enabled, combines its own output
//!    per key; the result is encoded and only published when the attempt
//!    commits (a killed attempt publishes nothing);
//! 3. every published pair goes to reduce partition `key % num_reduce_tasks`,
//!    where values are grouped by key in `(map task, emission index)` order
//!    and then stably sorted by the job's canonical order;
//! 4. reducers run once per key and the outputs are concatenated by key.
//!
//! Tasks may run on a worker pool. Nothing a task reads is mutated after it
//! is published, and every result is assembled in task order, so the output
//! does not depend on scheduling.

mod chain;
mod codec;
mod fault;

pub use chain::{
    checkpoint_path, run_chained, ChainError, ChainOptions, ChainOutcome, Checkpoint, Persistence,
    Retention,
};
pub use codec::{put_f64, put_i64, put_u64, Codec, CodecError, Reader};
pub use fault::{FaultPolicy, DEFAULT_MAX_RETRIES, MAX_KILL_PROBABILITY};

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

pub type BoxError = Box<dyn std::error::Error + Send + Sync + 'static>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Phase {
    Map,
    Reduce,
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Phase::Map => "map",
            Phase::Reduce => "reduce",
        })
    }
}

#[derive(Debug, Error)]
pub enum EngineError {
    #[error("invalid job spec: {0}")]
    InvalidSpec(String),
    #[error("{phase} task {task} failed: {source}")]
    TaskFailed {
        phase: Phase,
        task: usize,
        #[source]
        source: BoxError,
    },
    #[error("{phase} task {task} killed on all {attempts} attempts")]
    RetriesExhausted {
        phase: Phase,
        task: usize,
        attempts: u32,
    },
    #[error("{phase} task {task}: {source}")]
    Codec {
        phase: Phase,
        task: usize,
        #[source]
        source: CodecError,
    },
}

/// One encoded intermediate pair as it crosses the shuffle.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KeyValue {
    pub key: u64,
    pub payload: Vec<u8>,
}

/// Collects what one map attempt emits.
pub struct MapContext<M, S> {
    emitted: Vec<(u64, M)>,
    side: Vec<S>,
}

impl<M, S> MapContext<M, S> {
    fn new() -> Self {
        Self {
            emitted: Vec::new(),
            side: Vec::new(),
        }
    }

    pub fn emit(&mut self, key: u64, value: M) {
        self.emitted.push((key, value));
    }

    /// Record a side output; it is kept only if this attempt commits.
    pub fn side_output(&mut self, value: S) {
        self.side.push(value);
    }
}

/// User logic for one job.
///
/// `map` and `reduce` must be pure: a task may be executed several times and
/// only one attempt's output is kept.
pub trait MapReduce: Sync {
    type In: Sync;
    type Mid: Codec + Send;
    type Out: Send;
    type Side: Send;
    type Error: std::error::Error + Send + Sync + 'static;

    fn map(
        &self,
        key: u64,
        value: &Self::In,
        ctx: &mut MapContext<Self::Mid, Self::Side>,
    ) -> Result<(), Self::Error>;

    /// Local pre-aggregation of one map task's values for `key`. Only called
    /// when the job spec enables combining.
    fn combine(&self, _key: u64, values: Vec<Self::Mid>) -> Vec<Self::Mid> {
        values
    }

    /// Order applied (stably) to each reduce group before `reduce`.
    fn canonical_order(&self, _a: &Self::Mid, _b: &Self::Mid) -> Ordering {
        Ordering::Equal
    }

    fn reduce(&self, key: u64, values: Vec<Self::Mid>) -> Result<Self::Out, Self::Error>;
}

/// Where tasks run.
#[derive(Clone, Default)]
pub enum Execution {
    /// One task at a time on the calling thread, in task order.
    #[default]
    Sequential,
    Pool(Arc<rayon::ThreadPool>),
}

impl Execution {
    pub fn with_workers(workers: usize) -> Result<Self, EngineError> {
        if workers <= 1 {
            return Ok(Execution::Sequential);
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .thread_name(|i| format!("mr-worker-{i}"))
            .build()
            .map(|pool| Execution::Pool(Arc::new(pool)))
            .map_err(|e| EngineError::InvalidSpec(format!("worker pool: {e}")))
    }

    fn run<T, F>(&self, n: usize, task: F) -> Vec<T>
    where
        T: Send,
        F: Fn(usize) -> T + Sync + Send,
    {
        match self {
            Execution::Sequential => (0..n).map(task).collect(),
            Execution::Pool(pool) => pool.install(|| (0..n).into_par_iter().map(task).collect()),
        }
    }
}

impl fmt::Debug for Execution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Execution::Sequential => f.write_str("Sequential"),
            Execution::Pool(pool) => write!(f, "Pool({} workers)", pool.current_num_threads()),
        }
    }
}

#[derive(Debug, Clone)]
pub struct JobSpec<J> {
    pub job: J,
    pub num_map_tasks: usize,
    pub num_reduce_tasks: usize,
    pub combine: bool,
    pub faults: FaultPolicy,
    pub execution: Execution,
}

impl<J> JobSpec<J> {
    /// Single map task, single reduce task, no combiner, no faults.
    pub fn new(job: J) -> Self {
        Self {
            job,
            num_map_tasks: 1,
            num_reduce_tasks: 1,
            combine: false,
            faults: FaultPolicy::none(),
            execution: Execution::Sequential,
        }
    }

    pub fn tasks(mut self, map: usize, reduce: usize) -> Self {
        self.num_map_tasks = map;
        self.num_reduce_tasks = reduce;
        self
    }

    pub fn combine(mut self, on: bool) -> Self {
        self.combine = on;
        self
    }

    pub fn faults(mut self, policy: FaultPolicy) -> Self {
        self.faults = policy;
        self
    }

    pub fn execution(mut self, execution: Execution) -> Self {
        self.execution = execution;
        self
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if self.num_map_tasks < 1 || self.num_reduce_tasks < 1 {
            return Err(EngineError::InvalidSpec(format!(
                "need at least one map and one reduce task, got {} and {}",
                self.num_map_tasks, self.num_reduce_tasks
            )));
        }
        self.faults.validate()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskStatus {
    Succeeded,
    KilledInjected,
}

/// Final record of one task.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaskOutcome {
    pub phase: Phase,
    pub task: usize,
    pub attempts: u32,
    pub status: TaskStatus,
    pub records_in: usize,
    pub records_out: usize,
}

/// Per-job counters, written as a JSON report.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct JobMetrics {
    pub map_tasks: usize,
    pub reduce_tasks: usize,
    pub task_attempts: u64,
    pub retries: u64,
    pub input_records: usize,
    pub map_emissions: usize,
    pub shuffled_records: usize,
    pub bytes_shuffled: u64,
    pub reduce_groups: usize,
    pub output_records: usize,
    pub tasks: Vec<TaskOutcome>,
}

impl JobMetrics {
    pub fn write_report(&self, path: &Path) -> std::io::Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        std::fs::write(path, text)
    }
}

#[derive(Debug)]
pub struct JobOutput<O, S> {
    /// One output per key, ascending.
    pub records: Vec<(u64, O)>,
    /// Side outputs of committed map attempts, in map task order.
    pub side: Vec<S>,
    pub metrics: JobMetrics,
}

struct MapCommit<S> {
    shuffle: Vec<KeyValue>,
    side: Vec<S>,
    emissions: usize,
}

/// Run `attempt` until one attempt is not killed.
fn with_retries<T>(
    faults: &FaultPolicy,
    phase: Phase,
    task: usize,
    mut attempt: impl FnMut() -> Result<T, EngineError>,
) -> Result<(T, u32), EngineError> {
    for k in 0..faults.max_attempts() {
        // The attempt does its full work before the kill decision so that
        // re-execution is genuinely exercised; its output is then dropped.
        let result = attempt()?;
        if faults.kills(phase, task, k) {
            drop(result);
            continue;
        }
        return Ok((result, k + 1));
    }
    Err(EngineError::RetriesExhausted {
        phase,
        task,
        attempts: faults.max_attempts(),
    })
}

fn split_bounds(len: usize, parts: usize, i: usize) -> (usize, usize) {
    let base = len / parts;
    let extra = len % parts;
    let start = i * base + i.min(extra);
    let end = start + base + usize::from(i < extra);
    (start, end)
}

fn map_attempt<J: MapReduce>(
    spec: &JobSpec<J>,
    task: usize,
    split: &[(u64, J::In)],
) -> Result<MapCommit<J::Side>, EngineError> {
    let mut ctx = MapContext::new();
    for (key, value) in split {
        spec.job
            .map(*key, value, &mut ctx)
            .map_err(|e| EngineError::TaskFailed {
                phase: Phase::Map,
                task,
                source: Box::new(e),
            })?;
    }
    let MapContext { emitted, side } = ctx;
    let emissions = emitted.len();
    let pairs = if spec.combine {
        let mut groups: BTreeMap<u64, Vec<J::Mid>> = BTreeMap::new();
        for (key, value) in emitted {
            groups.entry(key).or_default().push(value);
        }
        groups
            .into_iter()
            .flat_map(|(key, values)| {
                spec.job
                    .combine(key, values)
                    .into_iter()
                    .map(move |v| (key, v))
            })
            .collect()
    } else {
        emitted
    };
    let shuffle = pairs
        .into_iter()
        .map(|(key, value)| {
            let mut payload = Vec::new();
            value.encode(&mut payload);
            KeyValue { key, payload }
        })
        .collect();
    Ok(MapCommit {
        shuffle,
        side,
        emissions,
    })
}

fn reduce_attempt<J: MapReduce>(
    spec: &JobSpec<J>,
    task: usize,
    groups: &BTreeMap<u64, Vec<&[u8]>>,
) -> Result<Vec<(u64, J::Out)>, EngineError> {
    let mut out = Vec::with_capacity(groups.len());
    for (&key, payloads) in groups {
        let mut values = payloads
            .iter()
            .map(|p| J::Mid::decode(p))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|source| EngineError::Codec {
                phase: Phase::Reduce,
                task,
                source,
            })?;
        values.sort_by(|a, b| spec.job.canonical_order(a, b));
        let reduced = spec
            .job
            .reduce(key, values)
            .map_err(|e| EngineError::TaskFailed {
                phase: Phase::Reduce,
                task,
                source: Box::new(e),
            })?;
        out.push((key, reduced));
    }
    Ok(out)
}

/// Run one MapReduce job over `inputs`.
pub fn run_job<J: MapReduce>(
    inputs: &[(u64, J::In)],
    spec: &JobSpec<J>,
) -> Result<JobOutput<J::Out, J::Side>, EngineError> {
    spec.validate()?;
    let maps = spec.num_map_tasks;
    let reduces = spec.num_reduce_tasks;
    let mut metrics = JobMetrics {
        map_tasks: maps,
        reduce_tasks: reduces,
        input_records: inputs.len(),
        ..JobMetrics::default()
    };

    let map_results = spec.execution.run(maps, |task| {
        let (start, end) = split_bounds(inputs.len(), maps, task);
        let split = &inputs[start..end];
        with_retries(&spec.faults, Phase::Map, task, || map_attempt(spec, task, split))
            .map(|(commit, attempts)| (commit, attempts, split.len()))
    });

    let mut commits = Vec::with_capacity(maps);
    for (task, result) in map_results.into_iter().enumerate() {
        let (commit, attempts, records_in) = result?;
        metrics.task_attempts += u64::from(attempts);
        metrics.retries += u64::from(attempts - 1);
        metrics.map_emissions += commit.emissions;
        metrics.tasks.push(TaskOutcome {
            phase: Phase::Map,
            task,
            attempts,
            status: TaskStatus::Succeeded,
            records_in,
            records_out: commit.shuffle.len(),
        });
        commits.push(commit);
    }

    // Shuffle: route by key, keeping (map task, emission index) order.
    let mut partitions: Vec<BTreeMap<u64, Vec<&[u8]>>> = vec![BTreeMap::new(); reduces];
    for commit in &commits {
        for kv in &commit.shuffle {
            metrics.shuffled_records += 1;
            metrics.bytes_shuffled += 8 + kv.payload.len() as u64;
            partitions[(kv.key % reduces as u64) as usize]
                .entry(kv.key)
                .or_default()
                .push(&kv.payload);
        }
    }
    metrics.reduce_groups = partitions.iter().map(BTreeMap::len).sum();

    let reduce_results = spec.execution.run(reduces, |task| {
        let groups = &partitions[task];
        with_retries(&spec.faults, Phase::Reduce, task, || {
            reduce_attempt(spec, task, groups)
        })
        .map(|(out, attempts)| (out, attempts, groups.values().map(Vec::len).sum::<usize>()))
    });

    let mut records = Vec::with_capacity(metrics.reduce_groups);
    for (task, result) in reduce_results.into_iter().enumerate() {
        let (out, attempts, records_in) = result?;
        metrics.task_attempts += u64::from(attempts);
        metrics.retries += u64::from(attempts - 1);
        metrics.tasks.push(TaskOutcome {
            phase: Phase::Reduce,
            task,
            attempts,
            status: TaskStatus::Succeeded,
            records_in,
            records_out: out.len(),
        });
        records.extend(out);
    }
    records.sort_by_key(|(key, _)| *key);
    metrics.output_records = records.len();

    let side = commits.into_iter().flat_map(|c| c.side).collect();
    Ok(JobOutput {
        records,
        side,
        metrics,
    })
}
