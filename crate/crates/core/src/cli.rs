//! Command-line driver: `run`, `compare` and `analyze`.
//!
//! Exit codes: 0 success, 1 usage error, 2 runtime failure, 3 comparison
//! mismatch.

use std::collections::BTreeSet;
use std::ffi::OsString;
use std::fmt;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::analysis::{self, RateSummary};
use crate::engine::{
    checkpoint_path, ChainOptions, Execution, FaultPolicy, Persistence, Retention,
    MAX_KILL_PROBABILITY,
};
use crate::network::{initial_snapshot, PopulationSpec};
use crate::oracle::{Simulator, TraceVar};
use crate::simjob::{run_engine, EngineRunOptions, RoundConfig, METRICS_DIR, SPIKE_LOG_FILE};
use crate::spikes::{read_spike_log, write_spike_log};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_RUNTIME: i32 = 2;
pub const EXIT_MISMATCH: i32 = 3;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Runtime(String),
    Mismatch(String),
}

impl CliError {
    fn code(&self) -> i32 {
        match self {
            CliError::Usage(_) => EXIT_USAGE,
            CliError::Runtime(_) => EXIT_RUNTIME,
            CliError::Mismatch(_) => EXIT_MISMATCH,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Runtime(m) => write!(f, "error: {m}"),
            CliError::Mismatch(m) => write!(f, "mismatch: {m}"),
        }
    }
}

fn runtime(e: impl fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

#[derive(Parser, Debug)]
#[command(name = "brainmr", version, about = "Spiking cortical network on a deterministic MapReduce engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Simulate the network through the engine or the sequential oracle.
    Run(RunArgs),
    /// Compare two run directories bit for bit.
    Compare { dir_a: PathBuf, dir_b: PathBuf },
    /// Emit raster, rate, spectrum and trace data for a run.
    Analyze {
        run_dir: PathBuf,
        /// Output directory (default: <run_dir>/analysis).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Engine,
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Toggle {
    On,
    Off,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Keep {
    /// Every snapshot.
    All,
    /// Initial and final snapshot only.
    Last,
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Excitatory neurons.
    #[arg(long)]
    exc: Option<usize>,
    /// Inhibitory neurons.
    #[arg(long)]
    inh: Option<usize>,
    /// Milliseconds to simulate.
    #[arg(long)]
    ms: Option<u64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Map tasks per round (engine mode).
    #[arg(long)]
    partitions: Option<usize>,
    /// Reduce tasks per round (engine mode; default: same as --partitions).
    #[arg(long = "reduce-tasks")]
    reduce_tasks: Option<usize>,
    #[arg(long, value_enum)]
    combiner: Option<Toggle>,
    /// Probability that a task attempt is killed (engine mode).
    #[arg(long = "kill-prob")]
    kill_prob: Option<f64>,
    #[arg(long = "max-retries")]
    max_retries: Option<u32>,
    #[arg(long = "fault-seed")]
    fault_seed: Option<u64>,
    /// Neuron ids whose v and u are recorded every millisecond.
    #[arg(long, value_delimiter = ',')]
    trace: Option<Vec<usize>>,
    /// Which snapshots to keep on disk.
    #[arg(long, value_enum)]
    keep: Option<Keep>,
    /// Pass state between rounds in memory instead of through snapshot files
    /// (engine mode).
    #[arg(long = "in-memory")]
    in_memory: bool,
    /// Worker threads for map and reduce tasks (engine mode; 1 = sequential).
    #[arg(long)]
    workers: Option<usize>,
    /// Run directory (default: runs/<timestamp>-<mode>-seed<seed>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Repeat the run described by an existing manifest.
    #[arg(long, conflicts_with_all = ["mode", "exc", "inh", "ms", "seed", "partitions", "reduce_tasks",
        "combiner", "kill_prob", "max_retries", "fault_seed", "trace", "keep", "in_memory", "workers"])]
    manifest: Option<PathBuf>,
}

/// Everything that determines a run's artifacts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub mode: Mode,
    pub exc: usize,
    pub inh: usize,
    pub ms: u64,
    pub seed: u64,
    pub partitions: usize,
    pub reduce_tasks: usize,
    pub combiner: bool,
    pub kill_prob: f64,
    pub max_retries: u32,
    pub fault_seed: u64,
    pub trace: Vec<usize>,
    pub keep: Keep,
    pub in_memory: bool,
    pub workers: usize,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::Engine,
            exc: 800,
            inh: 200,
            ms: 500,
            seed: 42,
            partitions: 4,
            reduce_tasks: 4,
            combiner: false,
            kill_prob: 0.0,
            max_retries: crate::engine::DEFAULT_MAX_RETRIES,
            fault_seed: 0,
            trace: Vec::new(),
            keep: Keep::All,
            in_memory: false,
            workers: 1,
        }
    }
}

impl RunConfig {
    fn from_args(args: &RunArgs) -> Result<Self, CliError> {
        let mode = args.mode.unwrap_or(Mode::Engine);
        if mode == Mode::Oracle {
            let engine_only = [
                ("--partitions", args.partitions.is_some()),
                ("--reduce-tasks", args.reduce_tasks.is_some()),
                ("--combiner", args.combiner.is_some()),
                ("--kill-prob", args.kill_prob.is_some()),
                ("--max-retries", args.max_retries.is_some()),
                ("--fault-seed", args.fault_seed.is_some()),
                ("--in-memory", args.in_memory),
                ("--workers", args.workers.is_some()),
            ];
            if let Some((flag, _)) = engine_only.iter().find(|(_, set)| *set) {
                return Err(CliError::Usage(format!("{flag} only applies to --mode engine")));
            }
        }
        let d = RunConfig::default();
        let partitions = args.partitions.unwrap_or(d.partitions);
        let config = RunConfig {
            mode,
            exc: args.exc.unwrap_or(d.exc),
            inh: args.inh.unwrap_or(d.inh),
            ms: args.ms.unwrap_or(d.ms),
            seed: args.seed.unwrap_or(d.seed),
            partitions,
            reduce_tasks: args.reduce_tasks.unwrap_or(partitions),
            combiner: args.combiner == Some(Toggle::On),
            kill_prob: args.kill_prob.unwrap_or(d.kill_prob),
            max_retries: args.max_retries.unwrap_or(d.max_retries),
            fault_seed: args.fault_seed.unwrap_or(d.fault_seed),
            trace: args.trace.clone().unwrap_or_default(),
            keep: args.keep.unwrap_or(d.keep),
            in_memory: args.in_memory,
            workers: args.workers.unwrap_or(d.workers),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        let usage = |m: String| Err(CliError::Usage(m));
        let n = self.exc + self.inh;
        if n == 0 {
            return usage("the network needs at least one neuron".into());
        }
        if self.partitions == 0 || self.reduce_tasks == 0 {
            return usage("--partitions and --reduce-tasks must be at least 1".into());
        }
        if !(0.0..=MAX_KILL_PROBABILITY).contains(&self.kill_prob) {
            return usage(format!("--kill-prob must lie in [0, {MAX_KILL_PROBABILITY}]"));
        }
        if self.max_retries == 0 {
            return usage("--max-retries must be at least 1".into());
        }
        if self.workers == 0 {
            return usage("--workers must be at least 1".into());
        }
        if let Some(id) = self.trace.iter().find(|id| **id >= n) {
            return usage(format!("--trace {id} is out of range for {n} neurons"));
        }
        if self.in_memory && self.keep == Keep::All && self.ms > 0 {
            return usage("--in-memory cannot keep every snapshot; add --keep last".into());
        }
        Ok(())
    }

    pub fn population(&self) -> PopulationSpec {
        PopulationSpec::new(self.exc, self.inh, self.seed)
    }

    fn round_config(&self) -> Result<RoundConfig, CliError> {
        Ok(RoundConfig {
            num_map_tasks: self.partitions,
            num_reduce_tasks: self.reduce_tasks,
            combine: self.combiner,
            faults: FaultPolicy::new(self.kill_prob, self.max_retries, self.fault_seed)
                .map_err(|e| CliError::Usage(e.to_string()))?,
            execution: Execution::with_workers(self.workers).map_err(runtime)?,
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    /// Wall-clock creation time; the only field that differs between reruns.
    pub created: String,
    pub config: RunConfig,
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))?;
        serde_json::from_str(&text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
    }
}

/// Deterministic per-run totals.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub mode: Option<Mode>,
    pub iterations: u64,
    pub final_snapshot: String,
    pub total_spikes: u64,
    pub task_attempts: u64,
    pub retries: u64,
    pub bytes_shuffled: u64,
}

/// Parse `args` (including the program name) and run; returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let result = match cli.command {
        Command::Run(args) => cmd_run(&args).map(|dir| println!("{}", dir.display())),
        Command::Compare { dir_a, dir_b } => cmd_compare(&dir_a, &dir_b).map(|report| println!("{report}")),
        Command::Analyze { run_dir, out } => cmd_analyze(&run_dir, out.as_deref()).map(|s| {
            println!("{}", serde_json::to_string_pretty(&s).expect("summary serializes"))
        }),
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("{e}");
            e.code()
        }
    }
}

fn default_run_dir(config: &RunConfig) -> PathBuf {
    let stamp = chrono::Local::now().format("%Y%m%d-%H%M%S");
    let mode = match config.mode {
        Mode::Engine => "engine",
        Mode::Oracle => "oracle",
    };
    PathBuf::from("runs").join(format!("{stamp}-{mode}-seed{}", config.seed))
}

fn cmd_run(args: &RunArgs) -> Result<PathBuf, CliError> {
    let config = match &args.manifest {
        Some(path) => {
            let m = Manifest::read(path)?;
            m.config.validate()?;
            m.config
        }
        None => RunConfig::from_args(args)?,
    };
    let dir = args.out.clone().unwrap_or_else(|| default_run_dir(&config));
    execute_run(&config, &dir)?;
    Ok(dir)
}

/// Execute `config` into `dir`, which must be absent or empty.
pub fn execute_run(config: &RunConfig, dir: &Path) -> Result<RunSummary, CliError> {
    config.validate()?;
    if dir.exists() && std::fs::read_dir(dir).map_err(runtime)?.next().is_some() {
        return Err(CliError::Usage(format!("run directory {} is not empty", dir.display())));
    }
    std::fs::create_dir_all(dir).map_err(runtime)?;
    let manifest = Manifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        created: chrono::Local::now().to_rfc3339(),
        config: config.clone(),
    };
    write_json(&dir.join(MANIFEST_FILE), &manifest)?;

    let started = Instant::now();
    let (summary, traces) = match config.mode {
        Mode::Engine => run_engine_mode(config, dir)?,
        Mode::Oracle => run_oracle_mode(config, dir)?,
    };
    for (id, v, u) in &traces {
        write_trace(&dir.join(format!("trace_v_{id}.csv")), v)?;
        write_trace(&dir.join(format!("trace_u_{id}.csv")), u)?;
    }
    write_json(&dir.join(SUMMARY_FILE), &summary)?;
    eprintln!(
        "{} ms simulated, {} spikes, {:.1}s",
        summary.iterations,
        summary.total_spikes,
        started.elapsed().as_secs_f64()
    );
    Ok(summary)
}

type Traces = Vec<(usize, Vec<f64>, Vec<f64>)>;

fn run_engine_mode(config: &RunConfig, dir: &Path) -> Result<(RunSummary, Traces), CliError> {
    let round = config.round_config()?;
    let options = EngineRunOptions {
        chain: ChainOptions {
            persistence: if config.in_memory {
                Persistence::InMemory
            } else {
                Persistence::Files
            },
            retention: match config.keep {
                Keep::All => Retention::All,
                Keep::Last => Retention::Latest,
            },
        },
        write_metrics: true,
    };
    let mut traces: Traces = config.trace.iter().map(|id| (*id, Vec::new(), Vec::new())).collect();
    let mut total_spikes = 0u64;
    let outcome = run_engine(
        dir,
        initial_snapshot(&config.population()),
        config.ms,
        &round,
        options,
        |snap, spikes| {
            total_spikes += spikes.len() as u64;
            for (id, v, u) in &mut traces {
                v.push(snap.records[*id].state.v);
                u.push(snap.records[*id].state.u);
            }
        },
    )
    .map_err(runtime)?;

    let mut summary = RunSummary {
        mode: Some(Mode::Engine),
        iterations: config.ms,
        final_snapshot: file_name(&outcome.final_path),
        total_spikes,
        ..RunSummary::default()
    };
    for k in 0..config.ms {
        let path = dir.join(METRICS_DIR).join(format!("iter_{k}.json"));
        let text = std::fs::read_to_string(&path).map_err(runtime)?;
        let m: serde_json::Value = serde_json::from_str(&text).map_err(runtime)?;
        summary.task_attempts += m["task_attempts"].as_u64().unwrap_or(0);
        summary.retries += m["retries"].as_u64().unwrap_or(0);
        summary.bytes_shuffled += m["bytes_shuffled"].as_u64().unwrap_or(0);
    }
    Ok((summary, traces))
}

fn run_oracle_mode(config: &RunConfig, dir: &Path) -> Result<(RunSummary, Traces), CliError> {
    let mut sim = Simulator::new(&config.population());
    sim.trace_neurons(&config.trace).map_err(runtime)?;
    sim.snapshot()
        .write_file(&checkpoint_path(dir, 0))
        .map_err(runtime)?;
    let keep_all = config.keep == Keep::All;
    let mut io_error = None;
    sim.run(config.ms, |s, _| {
        if io_error.is_none() && (keep_all || s.iter() == config.ms) {
            if let Err(e) = s.snapshot().write_file(&checkpoint_path(dir, s.iter())) {
                io_error = Some(e);
            }
        }
    })
    .map_err(runtime)?;
    if let Some(e) = io_error {
        return Err(runtime(e));
    }
    write_spike_log(&dir.join(SPIKE_LOG_FILE), sim.spikes()).map_err(runtime)?;
    let traces = config
        .trace
        .iter()
        .map(|id| {
            let v = sim.trace(*id, TraceVar::V).map_err(runtime)?.to_vec();
            let u = sim.trace(*id, TraceVar::U).map_err(runtime)?.to_vec();
            Ok((*id, v, u))
        })
        .collect::<Result<Traces, CliError>>()?;
    let summary = RunSummary {
        mode: Some(Mode::Oracle),
        iterations: config.ms,
        final_snapshot: file_name(&checkpoint_path(dir, config.ms)),
        total_spikes: sim.spikes().len() as u64,
        ..RunSummary::default()
    };
    Ok((summary, traces))
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).map_err(runtime)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Runtime(format!("{}: {e}", path.display())))
}

/// `iter,value` with `iter` starting at 1.
fn write_trace(path: &Path, samples: &[f64]) -> Result<(), CliError> {
    let mut text = String::from("iter,value\n");
    for (k, x) in samples.iter().enumerate() {
        text.push_str(&format!("{},{}\n", k + 1, ryu::Buffer::new().format(*x)));
    }
    std::fs::write(path, text).map_err(runtime)
}

fn snapshot_iterations(dir: &Path) -> Result<BTreeSet<u64>, CliError> {
    let entries = std::fs::read_dir(dir).map_err(|e| CliError::Runtime(format!("{}: {e}", dir.display())))?;
    let mut iters = BTreeSet::new();
    for entry in entries {
        let name = entry.map_err(runtime)?.file_name();
        let name = name.to_string_lossy();
        if let Some(k) = name
            .strip_prefix("iter_")
            .and_then(|s| s.strip_suffix(".snap"))
            .and_then(|s| s.parse().ok())
        {
            iters.insert(k);
        }
    }
    Ok(iters)
}

/// Compare snapshots and spike logs of two run directories.
///
/// Returns a report when identical and `CliError::Mismatch` naming the first
/// divergence otherwise.
pub fn cmd_compare(a: &Path, b: &Path) -> Result<String, CliError> {
    let iters_a = snapshot_iterations(a)?;
    let iters_b = snapshot_iterations(b)?;
    if iters_a.is_empty() && iters_b.is_empty() {
        return Err(CliError::Runtime("no snapshots in either directory".into()));
    }
    if iters_a != iters_b {
        let only_a: Vec<_> = iters_a.difference(&iters_b).collect();
        let only_b: Vec<_> = iters_b.difference(&iters_a).collect();
        return Err(CliError::Mismatch(format!(
            "snapshot sets differ: only in A {only_a:?}, only in B {only_b:?}"
        )));
    }
    for &k in &iters_a {
        let (pa, pb) = (checkpoint_path(a, k), checkpoint_path(b, k));
        let bytes_a = std::fs::read(&pa).map_err(runtime)?;
        let bytes_b = std::fs::read(&pb).map_err(runtime)?;
        if bytes_a != bytes_b {
            let detail = match (
                crate::network::parse_snapshot(&bytes_a[..]),
                crate::network::parse_snapshot(&bytes_b[..]),
            ) {
                (Ok(sa), Ok(sb)) => sa
                    .first_difference(&sb)
                    .unwrap_or_else(|| "byte-level difference".into()),
                (Err(e), _) | (_, Err(e)) => format!("unreadable snapshot: {e}"),
            };
            return Err(CliError::Mismatch(format!("first divergence at iteration {k}: {detail}")));
        }
    }
    let log_a = std::fs::read_to_string(a.join(SPIKE_LOG_FILE)).map_err(runtime)?;
    let log_b = std::fs::read_to_string(b.join(SPIKE_LOG_FILE)).map_err(runtime)?;
    if log_a != log_b {
        let mut la = log_a.lines();
        let mut lb = log_b.lines();
        let mut line = 1;
        loop {
            match (la.next(), lb.next()) {
                (x, y) if x != y => {
                    return Err(CliError::Mismatch(format!(
                        "spike logs differ at line {line}: {:?} vs {:?}",
                        x.unwrap_or("<end>"),
                        y.unwrap_or("<end>")
                    )))
                }
                (None, None) => {
                    return Err(CliError::Mismatch("spike logs differ in line endings".into()))
                }
                _ => line += 1,
            }
        }
    }
    Ok(format!(
        "identical: {} snapshots (iterations {}..={}), {} spike log lines",
        iters_a.len(),
        iters_a.first().unwrap(),
        iters_a.last().unwrap(),
        log_a.lines().count().saturating_sub(1)
    ))
}

/// Write analysis CSVs for `run_dir` into `out` (default `run_dir/analysis`).
/// Nothing in the run directory itself is modified.
pub fn cmd_analyze(run_dir: &Path, out: Option<&Path>) -> Result<RateSummary, CliError> {
    let manifest = Manifest::read(&run_dir.join(MANIFEST_FILE))?;
    let spike_path = run_dir.join(SPIKE_LOG_FILE);
    if !spike_path.exists() {
        return Err(CliError::Runtime(format!("missing spike log {}", spike_path.display())));
    }
    let spikes = read_spike_log(&spike_path).map_err(runtime)?;
    let config = &manifest.config;
    let (rate, spectrum, summary) = analysis::summarize(&spikes, config.ms, config.exc + config.inh);

    let out = out.map(Path::to_path_buf).unwrap_or_else(|| run_dir.join("analysis"));
    std::fs::create_dir_all(&out).map_err(runtime)?;
    write_spike_log(&out.join("raster.csv"), &spikes).map_err(runtime)?;
    let mut text = String::from("iter,spikes\n");
    for (k, r) in rate.iter().enumerate() {
        text.push_str(&format!("{},{}\n", k + 1, *r as u64));
    }
    std::fs::write(out.join("rate.csv"), text).map_err(runtime)?;
    let mut fmt = ryu::Buffer::new();
    let mut text = String::from("freq_hz,magnitude\n");
    for (f, m) in spectrum.freqs_hz.iter().zip(&spectrum.magnitude) {
        text.push_str(&format!("{f},{}\n", fmt.format(*m)));
    }
    std::fs::write(out.join("spectrum.csv"), text).map_err(runtime)?;
    for id in &config.trace {
        for var in ["v", "u"] {
            let name = format!("trace_{var}_{id}.csv");
            let src = run_dir.join(&name);
            if src.exists() {
                std::fs::copy(&src, out.join(&name)).map_err(runtime)?;
            }
        }
    }
    write_json(&out.join(SUMMARY_FILE), &summary)?;
    Ok(summary)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> Result<RunConfig, CliError> {
        let cli = Cli::try_parse_from(std::iter::once("brainmr").chain(args.iter().copied()))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        match cli.command {
            Command::Run(a) => RunConfig::from_args(&a),
            _ => unreachable!(),
        }
    }

    #[test]
    fn defaults_follow_partitions() {
        let c = parse(&["run", "--partitions", "3"]).unwrap();
        assert_eq!((c.partitions, c.reduce_tasks), (3, 3));
        assert_eq!((c.exc, c.inh, c.ms, c.seed), (800, 200, 500, 42));
        assert_eq!(c.mode, Mode::Engine);
    }

    #[test]
    fn oracle_rejects_engine_flags() {
        assert!(matches!(parse(&["run", "--mode", "oracle", "--partitions", "2"]), Err(CliError::Usage(_))));
        assert!(matches!(parse(&["run", "--mode", "oracle", "--kill-prob", "0.1"]), Err(CliError::Usage(_))));
        assert!(parse(&["run", "--mode", "oracle", "--trace", "1,2"]).is_ok());
    }

    #[test]
    fn invalid_values_are_usage_errors() {
        for args in [
            &["run", "--exc", "0", "--inh", "0"][..],
            &["run", "--kill-prob", "0.95"],
            &["run", "--max-retries", "0"],
            &["run", "--partitions", "0"],
            &["run", "--exc", "5", "--inh", "0", "--trace", "5"],
            &["run", "--in-memory"],
        ] {
            assert!(matches!(parse(args), Err(CliError::Usage(_))), "{args:?}");
        }
    }

    #[test]
    fn trace_list_parses() {
        let c = parse(&["run", "--trace", "1,7,3"]).unwrap();
        assert_eq!(c.trace, vec![1, 7, 3]);
    }
}
