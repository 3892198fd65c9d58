//! Line-oriented snapshot of the whole network between rounds.
//!
//! ```text
//! brainmr-snapshot<TAB>v1<TAB>n=<N><TAB>exc=<Ne><TAB>inh=<Ni><TAB>iter=<k><TAB>seed=<s>
//! <id><TAB><E|I><TAB>a<TAB>b<TAB>c<TAB>d<TAB>v<TAB>u<TAB>sum<TAB>iter<TAB>w0,w1,...,w{N-1}
//! ```
//!
//! One record line per neuron, sorted by id, each line ending in `\n`. Floats
//! are written as the shortest decimal string that parses back to the same
//! binary64, so a render/parse cycle is the identity.

use std::fmt;
use std::io::{self, BufRead, Read, Write};

use thiserror::Error;

use super::{NeuronKind, NeuronRecord};
use crate::neuron::{NeuronParams, NeuronState};

const MAGIC: &str = "brainmr-snapshot";
const VERSION: &str = "v1";
const RECORD_FIELDS: usize = 11;

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("snapshot line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("snapshot integrity: {0}")]
    Integrity(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn parse_err(line: usize, msg: impl Into<String>) -> SnapshotError {
    SnapshotError::Parse {
        line,
        msg: msg.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SnapshotHeader {
    pub n: usize,
    pub n_exc: usize,
    pub n_inh: usize,
    pub iter: u64,
    pub seed: u64,
}

impl fmt::Display for SnapshotHeader {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{MAGIC}\t{VERSION}\tn={}\texc={}\tinh={}\titer={}\tseed={}",
            self.n, self.n_exc, self.n_inh, self.iter, self.seed
        )
    }
}

/// Network state at a round boundary.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub header: SnapshotHeader,
    pub records: Vec<NeuronRecord>,
}

impl Snapshot {
    pub fn iter(&self) -> u64 {
        self.header.iter
    }

    pub fn bit_eq(&self, other: &Self) -> bool {
        self.header == other.header
            && self.records.len() == other.records.len()
            && self
                .records
                .iter()
                .zip(&other.records)
                .all(|(a, b)| a.bit_eq(b))
    }

    /// Human-readable location of the first field that differs, if any.
    pub fn first_difference(&self, other: &Self) -> Option<String> {
        if self.header != other.header {
            return Some(format!("header: {} vs {}", self.header, other.header));
        }
        if self.records.len() != other.records.len() {
            return Some(format!(
                "record count: {} vs {}",
                self.records.len(),
                other.records.len()
            ));
        }
        self.records
            .iter()
            .zip(&other.records)
            .find_map(|(a, b)| record_difference(a, b))
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        render_snapshot(self, &mut out).expect("writing to a Vec cannot fail");
        out
    }

    pub fn write_file(&self, path: &std::path::Path) -> io::Result<()> {
        let file = std::fs::File::create(path)?;
        let mut w = io::BufWriter::with_capacity(1 << 20, file);
        render_snapshot(self, &mut w)?;
        w.flush()
    }

    pub fn read_file(path: &std::path::Path) -> Result<Self, SnapshotError> {
        let file = std::fs::File::open(path)?;
        parse_snapshot(io::BufReader::with_capacity(1 << 20, file))
    }
}

fn record_difference(a: &NeuronRecord, b: &NeuronRecord) -> Option<String> {
    let id = a.id;
    if a.id != b.id {
        return Some(format!("record id: {} vs {}", a.id, b.id));
    }
    if a.kind != b.kind {
        return Some(format!("neuron {id} kind: {:?} vs {:?}", a.kind, b.kind));
    }
    if a.iter != b.iter {
        return Some(format!("neuron {id} iter: {} vs {}", a.iter, b.iter));
    }
    let scalars = [
        ("a", a.params.a, b.params.a),
        ("b", a.params.b, b.params.b),
        ("c", a.params.c, b.params.c),
        ("d", a.params.d, b.params.d),
        ("v", a.state.v, b.state.v),
        ("u", a.state.u, b.state.u),
        ("sum", a.sum, b.sum),
    ];
    for (name, x, y) in scalars {
        if x.to_bits() != y.to_bits() {
            return Some(format!("neuron {id} field {name}: {x:?} vs {y:?}"));
        }
    }
    if a.out_weights.len() != b.out_weights.len() {
        return Some(format!(
            "neuron {id} weight count: {} vs {}",
            a.out_weights.len(),
            b.out_weights.len()
        ));
    }
    a.out_weights
        .iter()
        .zip(&b.out_weights)
        .position(|(x, y)| x.to_bits() != y.to_bits())
        .map(|m| {
            format!(
                "neuron {id} weight {m}: {:?} vs {:?}",
                a.out_weights[m], b.out_weights[m]
            )
        })
}

fn push_f64(buf: &mut Vec<u8>, fmt: &mut ryu::Buffer, x: f64) {
    buf.extend_from_slice(fmt.format(x).as_bytes());
}

fn render_record(buf: &mut Vec<u8>, fmt: &mut ryu::Buffer, r: &NeuronRecord) {
    buf.extend_from_slice(r.id.to_string().as_bytes());
    buf.push(b'\t');
    buf.push(r.kind.code() as u8);
    for x in [
        r.params.a, r.params.b, r.params.c, r.params.d, r.state.v, r.state.u, r.sum,
    ] {
        buf.push(b'\t');
        push_f64(buf, fmt, x);
    }
    buf.push(b'\t');
    buf.extend_from_slice(r.iter.to_string().as_bytes());
    buf.push(b'\t');
    for (m, w) in r.out_weights.iter().enumerate() {
        if m > 0 {
            buf.push(b',');
        }
        push_f64(buf, fmt, *w);
    }
    buf.push(b'\n');
}

/// Write `snapshot` in the line format described at the top of this module.
pub fn render_snapshot<W: Write>(snapshot: &Snapshot, mut w: W) -> io::Result<()> {
    writeln!(w, "{}", snapshot.header)?;
    let mut fmt = ryu::Buffer::new();
    let mut line = Vec::with_capacity(snapshot.header.n * 24 + 256);
    for r in &snapshot.records {
        line.clear();
        render_record(&mut line, &mut fmt, r);
        w.write_all(&line)?;
    }
    Ok(())
}

fn parse_header(line: &str) -> Result<SnapshotHeader, SnapshotError> {
    let mut parts = line.split('\t');
    if parts.next() != Some(MAGIC) {
        return Err(parse_err(1, "missing snapshot magic"));
    }
    match parts.next() {
        Some(VERSION) => {}
        other => return Err(parse_err(1, format!("unsupported version {other:?}"))),
    }
    let mut field = |name: &str| -> Result<u64, SnapshotError> {
        let part = parts
            .next()
            .ok_or_else(|| parse_err(1, format!("missing header field {name}")))?;
        let value = part
            .strip_prefix(name)
            .and_then(|p| p.strip_prefix('='))
            .ok_or_else(|| parse_err(1, format!("expected {name}=..., got {part:?}")))?;
        value
            .parse()
            .map_err(|e| parse_err(1, format!("header field {name}: {e}")))
    };
    let n = field("n")? as usize;
    let n_exc = field("exc")? as usize;
    let n_inh = field("inh")? as usize;
    let iter = field("iter")?;
    let seed = field("seed")?;
    if parts.next().is_some() {
        return Err(parse_err(1, "trailing header fields"));
    }
    if n_exc + n_inh != n {
        return Err(SnapshotError::Integrity(format!(
            "header n={n} but exc+inh={}",
            n_exc + n_inh
        )));
    }
    Ok(SnapshotHeader {
        n,
        n_exc,
        n_inh,
        iter,
        seed,
    })
}

fn parse_f64(s: &str, line: usize, what: &str) -> Result<f64, SnapshotError> {
    let x: f64 = s
        .parse()
        .map_err(|_| parse_err(line, format!("{what}: not a number: {s:?}")))?;
    if !x.is_finite() {
        return Err(parse_err(line, format!("{what}: non-finite value {s:?}")));
    }
    Ok(x)
}

fn parse_record(
    text: &str,
    line: usize,
    header: &SnapshotHeader,
) -> Result<NeuronRecord, SnapshotError> {
    let fields: Vec<&str> = text.split('\t').collect();
    if fields.len() != RECORD_FIELDS {
        return Err(parse_err(
            line,
            format!("expected {RECORD_FIELDS} fields, found {}", fields.len()),
        ));
    }
    let id: usize = fields[0]
        .parse()
        .map_err(|e| parse_err(line, format!("id: {e}")))?;
    let kind = match fields[1] {
        "E" => NeuronKind::Excitatory,
        "I" => NeuronKind::Inhibitory,
        other => return Err(parse_err(line, format!("unknown neuron kind {other:?}"))),
    };
    let num = |i: usize, what: &str| parse_f64(fields[i], line, what);
    let params = NeuronParams {
        a: num(2, "a")?,
        b: num(3, "b")?,
        c: num(4, "c")?,
        d: num(5, "d")?,
    };
    let state = NeuronState {
        v: num(6, "v")?,
        u: num(7, "u")?,
    };
    let sum = num(8, "sum")?;
    let iter: u64 = fields[9]
        .parse()
        .map_err(|e| parse_err(line, format!("iter: {e}")))?;
    let mut out_weights = Vec::with_capacity(header.n);
    if !fields[10].is_empty() {
        for w in fields[10].split(',') {
            out_weights.push(parse_f64(w, line, "weight")?);
        }
    }
    Ok(NeuronRecord {
        id,
        kind,
        params,
        state,
        out_weights,
        sum,
        iter,
    })
}

fn check_record(
    r: &NeuronRecord,
    expected_id: usize,
    header: &SnapshotHeader,
    line: usize,
) -> Result<(), SnapshotError> {
    let integrity = |msg: String| SnapshotError::Integrity(format!("line {line}: {msg}"));
    if r.id != expected_id {
        return Err(integrity(format!("expected neuron {expected_id}, found {}", r.id)));
    }
    let kind = if r.id < header.n_exc {
        NeuronKind::Excitatory
    } else {
        NeuronKind::Inhibitory
    };
    if r.kind != kind {
        return Err(integrity(format!("neuron {} should be {kind:?}", r.id)));
    }
    if r.iter != header.iter {
        return Err(integrity(format!(
            "neuron {} at iter {} but header says {}",
            r.id, r.iter, header.iter
        )));
    }
    if r.out_weights.len() != header.n {
        return Err(integrity(format!(
            "neuron {} has {} weights, expected {}",
            r.id,
            r.out_weights.len(),
            header.n
        )));
    }
    Ok(())
}

/// Parse a snapshot, checking record order, count and per-record consistency
/// with the header.
pub fn parse_snapshot<R: Read>(reader: R) -> Result<Snapshot, SnapshotError> {
    let mut reader = io::BufReader::new(reader);
    let mut text = String::new();
    if reader.read_line(&mut text)? == 0 {
        return Err(SnapshotError::Integrity("empty snapshot".into()));
    }
    let header = parse_header(text.trim_end_matches('\n'))?;
    let mut records = Vec::with_capacity(header.n);
    let mut line_no = 1;
    loop {
        text.clear();
        if reader.read_line(&mut text)? == 0 {
            break;
        }
        line_no += 1;
        let Some(body) = text.strip_suffix('\n') else {
            return Err(SnapshotError::Integrity(format!(
                "line {line_no}: truncated record (no line terminator)"
            )));
        };
        if records.len() == header.n {
            return Err(SnapshotError::Integrity(format!(
                "more than the {} records declared in the header",
                header.n
            )));
        }
        let record = parse_record(body, line_no, &header)?;
        check_record(&record, records.len(), &header, line_no)?;
        records.push(record);
    }
    if records.len() != header.n {
        return Err(SnapshotError::Integrity(format!(
            "header declares {} records, found {}",
            header.n,
            records.len()
        )));
    }
    Ok(Snapshot { header, records })
}
