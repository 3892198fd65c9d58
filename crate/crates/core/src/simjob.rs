//! The network simulation as a MapReduce job: one job per simulated
//! millisecond.
//!
//! The mapper advances a single neuron and, if it fired, emits one charge to
//! every neuron it has a nonzero synapse onto; it always emits its own
//! updated record. The reducer for neuron `m` recovers `m`'s record and sets
//! its accumulated input to the sum of the charges it received.

use std::cmp::Ordering;
use std::io;
use std::path::Path;

use thiserror::Error;

use crate::engine::{
    self, put_f64, put_i64, put_u64, BoxError, ChainError, ChainOptions, ChainOutcome, Checkpoint,
    Codec, CodecError, EngineError, Execution, FaultPolicy, JobMetrics, JobSpec, MapContext,
    MapReduce, Reader,
};
use crate::network::{NeuronKind, NeuronRecord, Snapshot, SnapshotError};
use crate::neuron::{self, NeuronError, NeuronParams, NeuronState, SynapticInput};
use crate::rng::{uniform01, RandomKey, Stream};
use crate::spikes::{append_spike_log, SpikeEvent};

/// Peak thalamic drive for excitatory neurons: `5 * U[0,1)`.
pub const EXCITATORY_DRIVE: f64 = 5.0;
/// Peak thalamic drive for inhibitory neurons: `2 * U[0,1)`.
pub const INHIBITORY_DRIVE: f64 = 2.0;

/// Synthetic source id of a combined charge.
pub const COMBINED_SOURCE: i64 = -1;

pub const SPIKE_LOG_FILE: &str = "spikes.csv";
pub const METRICS_DIR: &str = "metrics";

#[derive(Debug, Error)]
pub enum SimError {
    #[error(transparent)]
    Neuron(#[from] NeuronError),
    #[error("neuron {neuron} is at iteration {found}, round expects {expected}")]
    IterMismatch {
        neuron: usize,
        expected: u64,
        found: u64,
    },
    #[error("reduce group {key}: {msg}")]
    Integrity { key: u64, msg: String },
    #[error("round output: {0}")]
    Incomplete(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Chain(#[from] ChainError),
    #[error(transparent)]
    Snapshot(#[from] SnapshotError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// What flows through the shuffle.
#[derive(Debug, Clone, PartialEq)]
pub enum MessageValue {
    /// A neuron's own full record.
    Record(NeuronRecord),
    /// Synaptic charge from a firing neuron (or a combined sum, with
    /// `source == COMBINED_SOURCE`).
    Charge { amount: f64, source: i64 },
}

const TAG_RECORD: u8 = 0;
const TAG_CHARGE: u8 = 1;

impl Codec for MessageValue {
    fn encode(&self, out: &mut Vec<u8>) {
        match self {
            MessageValue::Record(r) => {
                out.reserve(2 + 8 * (11 + r.out_weights.len()));
                out.push(TAG_RECORD);
                put_u64(out, r.id as u64);
                out.push(r.kind.code() as u8);
                for x in [r.params.a, r.params.b, r.params.c, r.params.d, r.state.v, r.state.u, r.sum] {
                    put_f64(out, x);
                }
                put_u64(out, r.iter);
                put_u64(out, r.out_weights.len() as u64);
                for w in &r.out_weights {
                    put_f64(out, *w);
                }
            }
            MessageValue::Charge { amount, source } => {
                out.push(TAG_CHARGE);
                put_f64(out, *amount);
                put_i64(out, *source);
            }
        }
    }

    fn decode_from(r: &mut Reader<'_>) -> Result<Self, CodecError> {
        match r.u8()? {
            TAG_RECORD => {
                let id = r.u64()? as usize;
                let kind = match r.u8()? {
                    b'E' => NeuronKind::Excitatory,
                    b'I' => NeuronKind::Inhibitory,
                    k => return Err(CodecError::Invalid(format!("neuron kind byte {k}"))),
                };
                let params = NeuronParams {
                    a: r.f64()?,
                    b: r.f64()?,
                    c: r.f64()?,
                    d: r.f64()?,
                };
                let state = NeuronState {
                    v: r.f64()?,
                    u: r.f64()?,
                };
                let sum = r.f64()?;
                let iter = r.u64()?;
                let n = r.u64()? as usize;
                let raw = r.take(n * 8)?;
                let out_weights = raw
                    .chunks_exact(8)
                    .map(|c| f64::from_bits(u64::from_le_bytes(c.try_into().unwrap())))
                    .collect();
                Ok(MessageValue::Record(NeuronRecord {
                    id,
                    kind,
                    params,
                    state,
                    out_weights,
                    sum,
                    iter,
                }))
            }
            TAG_CHARGE => Ok(MessageValue::Charge {
                amount: r.f64()?,
                source: r.i64()?,
            }),
            tag => Err(CodecError::UnknownTag(tag)),
        }
    }
}

/// Record first, then charges by ascending source id.
pub fn canonical_order(a: &MessageValue, b: &MessageValue) -> Ordering {
    match (a, b) {
        (MessageValue::Record(_), MessageValue::Record(_)) => Ordering::Equal,
        (MessageValue::Record(_), MessageValue::Charge { .. }) => Ordering::Less,
        (MessageValue::Charge { .. }, MessageValue::Record(_)) => Ordering::Greater,
        (MessageValue::Charge { source: x, .. }, MessageValue::Charge { source: y, .. }) => x.cmp(y),
    }
}

/// External drive for neuron `id` during millisecond `iter`.
///
/// Keys use the low 32 bits of `iter`.
pub fn thalamic_input(seed: u64, kind: NeuronKind, id: usize, iter: u64) -> f64 {
    let scale = match kind {
        NeuronKind::Excitatory => EXCITATORY_DRIVE,
        NeuronKind::Inhibitory => INHIBITORY_DRIVE,
    };
    scale * uniform01(RandomKey::new(seed, Stream::Thalamic, id as u32, iter as u32, 0))
}

/// Everything one mapper invocation produces.
#[derive(Debug, Clone, PartialEq)]
pub struct MapEmission {
    pub emissions: Vec<(u64, MessageValue)>,
    pub spike: Option<SpikeEvent>,
}

/// Advance one neuron by one millisecond.
pub fn map_neuron(record: &NeuronRecord, seed: u64, iter: u64) -> Result<MapEmission, SimError> {
    if record.iter != iter {
        return Err(SimError::IterMismatch {
            neuron: record.id,
            expected: iter,
            found: record.iter,
        });
    }
    let input = thalamic_input(seed, record.kind, record.id, iter) + record.sum;
    let advanced = neuron::advance(record.id, iter, record.state, &record.params, SynapticInput(input))?;
    let mut next = record.clone();
    next.state = advanced.state;
    next.sum = 0.0;
    next.iter += 1;

    let mut emissions = Vec::new();
    let mut spike = None;
    if advanced.fired {
        emissions.reserve(record.out_weights.len() + 1);
        let source = record.id as i64;
        for (m, w) in record.out_weights.iter().enumerate() {
            // Inhibitory synapses are negative; only true zeros carry nothing.
            if *w != 0.0 {
                emissions.push((m as u64, MessageValue::Charge { amount: *w, source }));
            }
        }
        spike = Some(SpikeEvent {
            iter: next.iter,
            neuron: record.id,
        });
    }
    emissions.push((record.id as u64, MessageValue::Record(next)));
    Ok(MapEmission { emissions, spike })
}

/// Sum a map task's charges for one key into a single combined charge.
pub fn combine_charges(values: Vec<MessageValue>) -> Vec<MessageValue> {
    let mut out = Vec::with_capacity(2);
    let mut charges = Vec::new();
    for v in values {
        match v {
            MessageValue::Record(_) => out.push(v),
            MessageValue::Charge { amount, source } => charges.push((source, amount)),
        }
    }
    if !charges.is_empty() {
        charges.sort_by_key(|(source, _)| *source);
        let amount = charges.iter().fold(0.0, |acc, (_, a)| acc + a);
        out.push(MessageValue::Charge {
            amount,
            source: COMBINED_SOURCE,
        });
    }
    out
}

/// Recover neuron `key`'s record and set `sum` to its incoming charge.
pub fn reduce_neuron(key: u64, values: Vec<MessageValue>) -> Result<NeuronRecord, SimError> {
    let mut record = None;
    let mut charges = Vec::new();
    for v in values {
        match v {
            MessageValue::Record(r) => {
                if record.replace(r).is_some() {
                    return Err(SimError::Integrity {
                        key,
                        msg: "more than one neuron record".into(),
                    });
                }
            }
            MessageValue::Charge { amount, source } => charges.push((source, amount)),
        }
    }
    let mut record = record.ok_or_else(|| SimError::Integrity {
        key,
        msg: "no neuron record".into(),
    })?;
    if record.id as u64 != key {
        return Err(SimError::Integrity {
            key,
            msg: format!("holds the record of neuron {}", record.id),
        });
    }
    charges.sort_by_key(|(source, _)| *source);
    record.sum = charges.iter().fold(0.0, |acc, (_, a)| acc + a);
    Ok(record)
}

/// One millisecond of the network as a MapReduce job.
#[derive(Debug, Clone, Copy)]
pub struct NeuronJob {
    pub seed: u64,
    pub iter: u64,
}

impl MapReduce for NeuronJob {
    type In = NeuronRecord;
    type Mid = MessageValue;
    type Out = NeuronRecord;
    type Side = SpikeEvent;
    type Error = SimError;

    fn map(
        &self,
        key: u64,
        record: &NeuronRecord,
        ctx: &mut MapContext<MessageValue, SpikeEvent>,
    ) -> Result<(), SimError> {
        if record.id as u64 != key {
            return Err(SimError::Integrity {
                key,
                msg: format!("input holds neuron {}", record.id),
            });
        }
        let out = map_neuron(record, self.seed, self.iter)?;
        for (k, v) in out.emissions {
            ctx.emit(k, v);
        }
        if let Some(spike) = out.spike {
            ctx.side_output(spike);
        }
        Ok(())
    }

    fn combine(&self, _key: u64, values: Vec<MessageValue>) -> Vec<MessageValue> {
        combine_charges(values)
    }

    fn canonical_order(&self, a: &MessageValue, b: &MessageValue) -> Ordering {
        canonical_order(a, b)
    }

    fn reduce(&self, key: u64, values: Vec<MessageValue>) -> Result<NeuronRecord, SimError> {
        reduce_neuron(key, values)
    }
}

/// How each round's job is laid out.
#[derive(Debug, Clone)]
pub struct RoundConfig {
    pub num_map_tasks: usize,
    pub num_reduce_tasks: usize,
    pub combine: bool,
    /// Salted with the round's iteration so each job sees its own kills.
    pub faults: FaultPolicy,
    pub execution: Execution,
}

impl Default for RoundConfig {
    fn default() -> Self {
        Self {
            num_map_tasks: 1,
            num_reduce_tasks: 1,
            combine: false,
            faults: FaultPolicy::none(),
            execution: Execution::Sequential,
        }
    }
}

impl RoundConfig {
    pub fn tasks(map: usize, reduce: usize) -> Self {
        Self {
            num_map_tasks: map,
            num_reduce_tasks: reduce,
            ..Self::default()
        }
    }
}

#[derive(Debug)]
pub struct RoundOutput {
    pub snapshot: Snapshot,
    /// Sorted by neuron id.
    pub spikes: Vec<SpikeEvent>,
    pub metrics: JobMetrics,
}

/// Advance the whole network by one millisecond through the engine.
pub fn run_round(snapshot: Snapshot, config: &RoundConfig) -> Result<RoundOutput, SimError> {
    let header = snapshot.header;
    let job = NeuronJob {
        seed: header.seed,
        iter: header.iter,
    };
    let spec = JobSpec {
        job,
        num_map_tasks: config.num_map_tasks,
        num_reduce_tasks: config.num_reduce_tasks,
        combine: config.combine,
        faults: config.faults.salted(header.iter),
        execution: config.execution.clone(),
    };
    let inputs: Vec<(u64, NeuronRecord)> = snapshot
        .records
        .into_iter()
        .map(|r| (r.id as u64, r))
        .collect();
    let output = engine::run_job(&inputs, &spec)?;

    if output.records.len() != header.n {
        return Err(SimError::Incomplete(format!(
            "{} records for {} neurons",
            output.records.len(),
            header.n
        )));
    }
    let records: Vec<NeuronRecord> = output.records.into_iter().map(|(_, r)| r).collect();
    if let Some((i, r)) = records.iter().enumerate().find(|(i, r)| r.id != *i) {
        return Err(SimError::Incomplete(format!("slot {i} holds neuron {}", r.id)));
    }
    let mut spikes = output.side;
    spikes.sort();
    let mut next_header = header;
    next_header.iter += 1;
    Ok(RoundOutput {
        snapshot: Snapshot {
            header: next_header,
            records,
        },
        spikes,
        metrics: output.metrics,
    })
}

impl Checkpoint for Snapshot {
    fn iteration(&self) -> u64 {
        self.header.iter
    }

    fn save(&self, path: &Path) -> io::Result<()> {
        self.write_file(path)
    }

    fn load(path: &Path) -> Result<Self, BoxError> {
        Ok(Snapshot::read_file(path)?)
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct EngineRunOptions {
    pub chain: ChainOptions,
    /// Write `metrics/iter_<k>.json` for every round.
    pub write_metrics: bool,
}

/// Chain `num_ms` rounds in `dir`, appending spikes to `dir/spikes.csv`.
///
/// `observe` sees every new snapshot and its round's spikes before the
/// snapshot is written.
pub fn run_engine<F>(
    dir: &Path,
    initial: Snapshot,
    num_ms: u64,
    config: &RoundConfig,
    options: EngineRunOptions,
    mut observe: F,
) -> Result<ChainOutcome<Snapshot>, SimError>
where
    F: FnMut(&Snapshot, &[SpikeEvent]),
{
    std::fs::create_dir_all(dir)?;
    let spike_log = dir.join(SPIKE_LOG_FILE);
    append_spike_log(&spike_log, &[])?;
    let metrics_dir = dir.join(METRICS_DIR);
    if options.write_metrics {
        std::fs::create_dir_all(&metrics_dir)?;
    }
    let outcome = engine::run_chained(dir, initial, num_ms, options.chain, |snapshot| {
        let iter = snapshot.iter();
        let round = run_round(snapshot, config)?;
        append_spike_log(&spike_log, &round.spikes)?;
        if options.write_metrics {
            round
                .metrics
                .write_report(&metrics_dir.join(format!("iter_{iter}.json")))?;
        }
        observe(&round.snapshot, &round.spikes);
        Ok::<_, BoxError>(round.snapshot)
    })?;
    Ok(outcome)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::{build_population, initial_snapshot, PopulationSpec};

    fn record(id: usize, n: usize) -> NeuronRecord {
        let spec = PopulationSpec::new(n, 0, 1);
        build_population(&spec).swap_remove(id)
    }

    #[test]
    fn quiet_neuron_emits_only_itself() {
        let r = record(0, 10);
        let out = map_neuron(&r, 1, 0).unwrap();
        assert_eq!(out.emissions.len(), 1);
        assert!(out.spike.is_none());
        match &out.emissions[0] {
            (0, MessageValue::Record(next)) => {
                assert_eq!(next.iter, 1);
                assert_eq!(next.sum, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn firing_neuron_in_dense_network_emits_n_plus_one() {
        let spec = PopulationSpec::new(800, 200, 42);
        let mut pop = build_population(&spec);
        let mut r = pop.swap_remove(5);
        r.sum = 1000.0;
        let before_u = neuron::step(
            r.state,
            &r.params,
            SynapticInput(thalamic_input(42, r.kind, 5, 0) + r.sum),
        )
        .u;
        let out = map_neuron(&r, 42, 0).unwrap();
        assert_eq!(out.emissions.len(), 1001);
        assert_eq!(out.spike, Some(SpikeEvent { iter: 1, neuron: 5 }));
        let charges = out.emissions.iter().filter(|(_, v)| matches!(v, MessageValue::Charge { .. })).count();
        assert_eq!(charges, 1000);
        let Some((5, MessageValue::Record(next))) = out.emissions.last() else {
            panic!("record must be emitted last under its own key");
        };
        assert_eq!(next.state.v, r.params.c);
        assert_eq!(next.state.u, before_u + r.params.d);
    }

    #[test]
    fn inhibitory_charges_are_emitted() {
        let spec = PopulationSpec::new(3, 2, 4);
        let mut r = build_population(&spec).swap_remove(4);
        r.sum = 1000.0;
        let out = map_neuron(&r, 4, 0).unwrap();
        let amounts: Vec<f64> = out
            .emissions
            .iter()
            .filter_map(|(_, v)| match v {
                MessageValue::Charge { amount, .. } => Some(*amount),
                _ => None,
            })
            .collect();
        assert_eq!(amounts.len(), 5);
        assert!(amounts.iter().all(|a| *a < 0.0));
    }

    #[test]
    fn iteration_mismatch_rejected() {
        let r = record(0, 3);
        assert!(matches!(map_neuron(&r, 1, 5), Err(SimError::IterMismatch { .. })));
    }

    #[test]
    fn combine_examples() {
        let out = combine_charges(vec![
            MessageValue::Charge { amount: 0.5, source: 2 },
            MessageValue::Charge { amount: -0.3, source: 7 },
        ]);
        assert_eq!(out, vec![MessageValue::Charge { amount: 0.5 + -0.3, source: -1 }]);

        let r = record(1, 3);
        assert_eq!(combine_charges(vec![MessageValue::Record(r.clone())]), vec![MessageValue::Record(r.clone())]);

        let mixed = combine_charges(vec![
            MessageValue::Charge { amount: 0.25, source: 9 },
            MessageValue::Record(r.clone()),
            MessageValue::Charge { amount: 0.5, source: 1 },
        ]);
        assert_eq!(
            mixed,
            vec![MessageValue::Record(r), MessageValue::Charge { amount: 0.75, source: -1 }]
        );
    }

    #[test]
    fn reduce_examples() {
        let r = record(2, 4);
        let charges = [0.5, -0.3, 0.2];
        let mut values: Vec<MessageValue> = charges
            .iter()
            .enumerate()
            .map(|(i, a)| MessageValue::Charge { amount: *a, source: i as i64 })
            .collect();
        values.insert(1, MessageValue::Record(r.clone()));
        let out = reduce_neuron(2, values).unwrap();
        assert!((out.sum - 0.4).abs() < 1e-15);
        assert_eq!(out.sum, ((0.0 + 0.5) + -0.3) + 0.2);

        let alone = reduce_neuron(2, vec![MessageValue::Record(r.clone())]).unwrap();
        assert_eq!(alone.sum, 0.0);
        assert!(alone.bit_eq(&NeuronRecord { sum: 0.0, ..r.clone() }));
    }

    #[test]
    fn reduce_sums_in_source_order() {
        let r = record(0, 1);
        let a = reduce_neuron(
            0,
            vec![
                MessageValue::Record(r.clone()),
                MessageValue::Charge { amount: 1e16, source: 0 },
                MessageValue::Charge { amount: 1.0, source: 1 },
                MessageValue::Charge { amount: -1e16, source: 2 },
            ],
        )
        .unwrap();
        let b = reduce_neuron(
            0,
            vec![
                MessageValue::Charge { amount: -1e16, source: 2 },
                MessageValue::Charge { amount: 1.0, source: 1 },
                MessageValue::Record(r),
                MessageValue::Charge { amount: 1e16, source: 0 },
            ],
        )
        .unwrap();
        assert_eq!(a.sum.to_bits(), b.sum.to_bits());
    }

    #[test]
    fn reduce_integrity_errors() {
        let err = reduce_neuron(3, vec![MessageValue::Charge { amount: 1.0, source: 0 }]).unwrap_err();
        assert!(matches!(err, SimError::Integrity { key: 3, .. }));
        let r = record(0, 2);
        let err = reduce_neuron(0, vec![MessageValue::Record(r.clone()), MessageValue::Record(r)]).unwrap_err();
        assert!(matches!(err, SimError::Integrity { key: 0, .. }));
    }

    #[test]
    fn message_codec_round_trip() {
        let r = record(1, 6);
        for v in [
            MessageValue::Record(r),
            MessageValue::Charge { amount: -0.0, source: -1 },
            MessageValue::Charge { amount: 0.123, source: 77 },
        ] {
            let mut buf = Vec::new();
            v.encode(&mut buf);
            let back = MessageValue::decode(&buf).unwrap();
            match (&v, &back) {
                (MessageValue::Record(a), MessageValue::Record(b)) => assert!(a.bit_eq(b)),
                (
                    MessageValue::Charge { amount: a, source: s },
                    MessageValue::Charge { amount: b, source: t },
                ) => {
                    assert_eq!(a.to_bits(), b.to_bits());
                    assert_eq!(s, t);
                }
                _ => panic!("tag changed"),
            }
        }
        assert_eq!(MessageValue::decode(&[9]).unwrap_err(), CodecError::UnknownTag(9));
    }

    #[test]
    fn round_increments_every_iter() {
        let snap = initial_snapshot(&PopulationSpec::new(16, 4, 3));
        let out = run_round(snap, &RoundConfig::tasks(3, 2)).unwrap();
        assert_eq!(out.snapshot.header.iter, 1);
        assert!(out.snapshot.records.iter().all(|r| r.iter == 1));
    }
}
