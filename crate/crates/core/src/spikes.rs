//! Spike log: CSV with header `iter,neuron_id`, one spike per line, sorted
//! by `(iter, neuron_id)`. `iter` is the millisecond (1-based) in which the
//! neuron crossed threshold.

use std::fs::OpenOptions;
use std::io::{self, BufRead, BufWriter, Write};
use std::path::Path;

pub const SPIKE_LOG_HEADER: &str = "iter,neuron_id";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SpikeEvent {
    pub iter: u64,
    pub neuron: usize,
}

/// Append `events` to the log at `path`, creating it (with header) if needed.
pub fn append_spike_log(path: &Path, events: &[SpikeEvent]) -> io::Result<()> {
    let fresh = !path.exists();
    let file = OpenOptions::new().create(true).append(true).open(path)?;
    let mut w = BufWriter::new(file);
    if fresh {
        writeln!(w, "{SPIKE_LOG_HEADER}")?;
    }
    for e in events {
        writeln!(w, "{},{}", e.iter, e.neuron)?;
    }
    w.flush()
}

pub fn write_spike_log(path: &Path, events: &[SpikeEvent]) -> io::Result<()> {
    if path.exists() {
        std::fs::remove_file(path)?;
    }
    append_spike_log(path, events)
}

pub fn read_spike_log(path: &Path) -> io::Result<Vec<SpikeEvent>> {
    let file = std::fs::File::open(path)?;
    let invalid = |line: usize, msg: &str| {
        io::Error::new(io::ErrorKind::InvalidData, format!("spike log line {line}: {msg}"))
    };
    let mut events = Vec::new();
    for (i, line) in io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if i == 0 && line == SPIKE_LOG_HEADER {
            continue;
        }
        if line.is_empty() {
            continue;
        }
        let (iter, neuron) = line
            .split_once(',')
            .ok_or_else(|| invalid(i + 1, "expected iter,neuron_id"))?;
        events.push(SpikeEvent {
            iter: iter.parse().map_err(|_| invalid(i + 1, "bad iter"))?,
            neuron: neuron.parse().map_err(|_| invalid(i + 1, "bad neuron id"))?,
        });
    }
    Ok(events)
}
