//! Single-loop reference simulator.
//!
//! Consumes exactly the same random draws as the MapReduce job and sums
//! incoming charges in the same order (ascending source id), so its state at
//! every millisecond is bitwise equal to the engine's.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::network::{initial_snapshot, NeuronRecord, PopulationSpec, Snapshot, SnapshotHeader};
use crate::neuron::{self, NeuronError, SynapticInput};
use crate::simjob::thalamic_input;
use crate::spikes::SpikeEvent;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OracleError {
    #[error(transparent)]
    Neuron(#[from] NeuronError),
    #[error("neuron {0} was not traced")]
    NotTraced(usize),
    #[error("neuron {id} does not exist in a network of {n}")]
    UnknownNeuron { id: usize, n: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceVar {
    V,
    U,
}

#[derive(Debug, Clone, Default, PartialEq)]
struct Trace {
    v: Vec<f64>,
    u: Vec<f64>,
}

#[derive(Debug, Clone)]
pub struct Simulator {
    header: SnapshotHeader,
    records: Vec<NeuronRecord>,
    spikes: Vec<SpikeEvent>,
    traces: BTreeMap<usize, Trace>,
    sums: Vec<f64>,
}

impl Simulator {
    pub fn new(spec: &PopulationSpec) -> Self {
        Self::resume(initial_snapshot(spec))
    }

    /// Continue from a snapshot; its `iter` is the next millisecond to run.
    pub fn resume(snapshot: Snapshot) -> Self {
        let n = snapshot.records.len();
        Self {
            header: snapshot.header,
            records: snapshot.records,
            spikes: Vec::new(),
            traces: BTreeMap::new(),
            sums: vec![0.0; n],
        }
    }

    /// Record `v` and `u` of these neurons at every following millisecond.
    pub fn trace_neurons(&mut self, ids: &[usize]) -> Result<(), OracleError> {
        for &id in ids {
            if id >= self.records.len() {
                return Err(OracleError::UnknownNeuron {
                    id,
                    n: self.records.len(),
                });
            }
            self.traces.entry(id).or_default();
        }
        Ok(())
    }

    pub fn iter(&self) -> u64 {
        self.header.iter
    }

    pub fn records(&self) -> &[NeuronRecord] {
        &self.records
    }

    /// All spikes since construction, sorted by `(iter, neuron)`.
    pub fn spikes(&self) -> &[SpikeEvent] {
        &self.spikes
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            header: self.header,
            records: self.records.clone(),
        }
    }

    pub fn into_snapshot(self) -> Snapshot {
        Snapshot {
            header: self.header,
            records: self.records,
        }
    }

    /// Samples after reset handling, one per simulated millisecond.
    pub fn trace(&self, id: usize, var: TraceVar) -> Result<&[f64], OracleError> {
        let trace = self.traces.get(&id).ok_or(OracleError::NotTraced(id))?;
        Ok(match var {
            TraceVar::V => &trace.v,
            TraceVar::U => &trace.u,
        })
    }

    /// Advance one millisecond; returns the spikes it produced.
    pub fn step_ms(&mut self) -> Result<&[SpikeEvent], OracleError> {
        let iter = self.header.iter;
        let seed = self.header.seed;
        let first_new = self.spikes.len();
        for r in &mut self.records {
            let input = thalamic_input(seed, r.kind, r.id, iter) + r.sum;
            let out = neuron::advance(r.id, iter, r.state, &r.params, SynapticInput(input))?;
            r.state = out.state;
            if out.fired {
                self.spikes.push(SpikeEvent {
                    iter: iter + 1,
                    neuron: r.id,
                });
            }
        }
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        for spike in &self.spikes[first_new..] {
            for (m, w) in self.records[spike.neuron].out_weights.iter().enumerate() {
                if *w != 0.0 {
                    self.sums[m] += w;
                }
            }
        }
        for r in &mut self.records {
            r.sum = self.sums[r.id];
            r.iter += 1;
        }
        self.header.iter += 1;
        for (id, trace) in &mut self.traces {
            let state = self.records[*id].state;
            trace.v.push(state.v);
            trace.u.push(state.u);
        }
        Ok(&self.spikes[first_new..])
    }

    /// Run `num_ms` milliseconds, calling `observe` after each one.
    pub fn run<F>(&mut self, num_ms: u64, mut observe: F) -> Result<(), OracleError>
    where
        F: FnMut(&Simulator, &[SpikeEvent]),
    {
        for _ in 0..num_ms {
            let first_new = self.spikes.len();
            self.step_ms()?;
            observe(self, &self.spikes[first_new..]);
        }
        Ok(())
    }
}

/// Build the population for `spec` and run it for `num_ms`, tracing `traced`.
pub fn simulate(spec: &PopulationSpec, num_ms: u64, traced: &[usize]) -> Result<Simulator, OracleError> {
    let mut sim = Simulator::new(spec);
    sim.trace_neurons(traced)?;
    sim.run(num_ms, |_, _| {})?;
    Ok(sim)
}
