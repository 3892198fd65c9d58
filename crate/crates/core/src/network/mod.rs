//! Heterogeneous excitatory/inhibitory population and the per-neuron record
//! that travels through every MapReduce round.

mod snapshot;

pub use snapshot::{parse_snapshot, render_snapshot, Snapshot, SnapshotError, SnapshotHeader};

use crate::neuron::{NeuronParams, NeuronState};
use crate::rng::{uniform01, RandomKey, Stream};

/// Membrane potential every neuron starts from (mV).
pub const INITIAL_V: f64 = -65.0;

/// Scale of excitatory outgoing weights: `0.5 * U[0,1)`.
pub const EXCITATORY_WEIGHT_SCALE: f64 = 0.5;
/// Scale of inhibitory outgoing weights: `-1.0 * U[0,1)`.
pub const INHIBITORY_WEIGHT_SCALE: f64 = -1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum NeuronKind {
    Excitatory,
    Inhibitory,
}

impl NeuronKind {
    pub fn code(self) -> char {
        match self {
            NeuronKind::Excitatory => 'E',
            NeuronKind::Inhibitory => 'I',
        }
    }
}

/// Everything the mapper needs to advance one neuron by one millisecond.
#[derive(Debug, Clone, PartialEq)]
pub struct NeuronRecord {
    pub id: usize,
    pub kind: NeuronKind,
    pub params: NeuronParams,
    pub state: NeuronState,
    /// Entry `m` is the charge delivered to neuron `m` when this neuron fires.
    pub out_weights: Vec<f64>,
    /// Incoming synaptic charge accumulated for the next step.
    pub sum: f64,
    /// Completed milliseconds.
    pub iter: u64,
}

impl NeuronRecord {
    /// Bitwise equality on every field, treating `-0.0 != 0.0`.
    pub fn bit_eq(&self, other: &Self) -> bool {
        fn same(a: f64, b: f64) -> bool {
            a.to_bits() == b.to_bits()
        }
        self.id == other.id
            && self.kind == other.kind
            && self.iter == other.iter
            && same(self.params.a, other.params.a)
            && same(self.params.b, other.params.b)
            && same(self.params.c, other.params.c)
            && same(self.params.d, other.params.d)
            && same(self.state.v, other.state.v)
            && same(self.state.u, other.state.u)
            && same(self.sum, other.sum)
            && self.out_weights.len() == other.out_weights.len()
            && self
                .out_weights
                .iter()
                .zip(&other.out_weights)
                .all(|(a, b)| same(*a, *b))
    }
}

/// Population size and seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PopulationSpec {
    pub n_exc: usize,
    pub n_inh: usize,
    pub seed: u64,
}

impl PopulationSpec {
    pub fn new(n_exc: usize, n_inh: usize, seed: u64) -> Self {
        Self { n_exc, n_inh, seed }
    }

    pub fn len(&self) -> usize {
        self.n_exc + self.n_inh
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn kind_of(&self, id: usize) -> NeuronKind {
        if id < self.n_exc {
            NeuronKind::Excitatory
        } else {
            NeuronKind::Inhibitory
        }
    }

    pub fn header(&self, iter: u64) -> SnapshotHeader {
        SnapshotHeader {
            n: self.len(),
            n_exc: self.n_exc,
            n_inh: self.n_inh,
            iter,
            seed: self.seed,
        }
    }
}

/// Parameters for a neuron of `kind` given its jitter draw `r` in `[0, 1)`.
///
/// Excitatory: `(a, b) = (0.02, 0.2)`, `(c, d) = (-65, 8) + (15, -6) r^2`.
/// Inhibitory: `(a, b) = (0.02, 0.25) + (0.08, -0.05) r`, `(c, d) = (-65, 2)`.
pub fn params_for(kind: NeuronKind, r: f64) -> NeuronParams {
    match kind {
        NeuronKind::Excitatory => {
            let r2 = r * r;
            NeuronParams {
                a: 0.02,
                b: 0.2,
                c: -65.0 + 15.0 * r2,
                d: 8.0 - 6.0 * r2,
            }
        }
        NeuronKind::Inhibitory => NeuronParams {
            a: 0.02 + 0.08 * r,
            b: 0.25 - 0.05 * r,
            c: -65.0,
            d: 2.0,
        },
    }
}

fn build_key(spec: &PopulationSpec, id: usize, draw: u64) -> RandomKey {
    RandomKey::new(spec.seed, Stream::Build, id as u32, 0, draw)
}

/// Outgoing weight row of neuron `id`; entry `m` uses Build draw `m + 1`.
pub fn build_weights(spec: &PopulationSpec, id: usize) -> Vec<f64> {
    let scale = match spec.kind_of(id) {
        NeuronKind::Excitatory => EXCITATORY_WEIGHT_SCALE,
        NeuronKind::Inhibitory => INHIBITORY_WEIGHT_SCALE,
    };
    (0..spec.len())
        .map(|m| scale * uniform01(build_key(spec, id, m as u64 + 1)))
        .collect()
}

/// Build the initial population: ids `0..n_exc` excitatory, the rest
/// inhibitory, all at rest (`v = -65`, `u = b v`) with nothing accumulated.
pub fn build_population(spec: &PopulationSpec) -> Vec<NeuronRecord> {
    (0..spec.len())
        .map(|id| {
            let kind = spec.kind_of(id);
            let params = params_for(kind, uniform01(build_key(spec, id, 0)));
            NeuronRecord {
                id,
                kind,
                params,
                state: NeuronState::resting(INITIAL_V, &params),
                out_weights: build_weights(spec, id),
                sum: 0.0,
                iter: 0,
            }
        })
        .collect()
}

/// Initial snapshot for `spec`.
pub fn initial_snapshot(spec: &PopulationSpec) -> Snapshot {
    Snapshot {
        header: spec.header(0),
        records: build_population(spec),
    }
}
