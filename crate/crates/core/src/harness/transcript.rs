//! Session transcripts and their binary layout.
//!
//! Layout (all integers little-endian): the magic `CENZ1`, a protocol byte,
//! the parameter block, then three counted sections (messages, verdicts,
//! measurements). Strings and payloads are `u32` length-prefixed; bit strings
//! carry a `u64` bit length followed by the packed bytes.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 5] = b"CENZ1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ProtocolId {
    /// Shared-EPR construction.
    Epr,
    /// CRS-model construction.
    Crs,
    Strawman,
}

impl ProtocolId {
    pub const ALL: [ProtocolId; 3] = [ProtocolId::Epr, ProtocolId::Crs, ProtocolId::Strawman];

    fn tag(self) -> u8 {
        match self {
            ProtocolId::Epr => 1,
            ProtocolId::Crs => 2,
            ProtocolId::Strawman => 3,
        }
    }

    fn from_tag(t: u8) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.tag() == t).ok_or_else(|| Error::Transcript(format!("unknown protocol tag {t}")))
    }

    pub fn name(self) -> &'static str {
        match self {
            ProtocolId::Epr => "epr",
            ProtocolId::Crs => "crs",
            ProtocolId::Strawman => "strawman",
        }
    }
}

impl std::str::FromStr for ProtocolId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|p| p.name() == s).ok_or_else(|| Error::Usage(format!("unknown protocol {s:?}; expected epr, crs or strawman")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Party {
    Setup,
    Prover,
    Verifier,
}

impl Party {
    const ALL: [Party; 3] = [Party::Setup, Party::Prover, Party::Verifier];

    fn tag(self) -> u8 {
        self as u8
    }

    pub fn name(self) -> &'static str {
        match self {
            Party::Setup => "setup",
            Party::Prover => "prover",
            Party::Verifier => "verifier",
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TranscriptParams {
    pub lambda: u32,
    pub ell: u64,
    pub k: u32,
    pub n: u32,
    pub reps: u32,
    pub mode: String,
    pub seed: u64,
}

/// A quantum register passed between parties. Only its identity and size are
/// recorded; the state itself stays inside the process.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuantumHandle {
    pub id: u32,
    pub qubits: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Message {
    pub from: Party,
    pub step: String,
    pub payload: Vec<u8>,
    pub handle: Option<QuantumHandle>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verdict {
    pub step: String,
    pub accepted: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    pub party: Party,
    pub label: String,
    pub outcome: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transcript {
    pub protocol: ProtocolId,
    pub params: TranscriptParams,
    pub messages: Vec<Message>,
    pub verdicts: Vec<Verdict>,
    pub measurements: Vec<MeasurementRecord>,
}

impl Transcript {
    pub fn new(protocol: ProtocolId, params: TranscriptParams) -> Self {
        Self { protocol, params, messages: Vec::new(), verdicts: Vec::new(), measurements: Vec::new() }
    }

    pub fn send(&mut self, from: Party, step: &str, payload: Vec<u8>, handle: Option<QuantumHandle>) {
        self.messages.push(Message { from, step: step.to_owned(), payload, handle });
    }

    pub fn verdict(&mut self, step: &str, accepted: bool) {
        self.verdicts.push(Verdict { step: step.to_owned(), accepted });
    }

    pub fn measured(&mut self, party: Party, label: &str, outcome: BitString) {
        self.measurements.push(MeasurementRecord { party, label: label.to_owned(), outcome });
    }

    pub fn verdict_for(&self, step: &str) -> Option<bool> {
        self.verdicts.iter().find(|v| v.step == step).map(|v| v.accepted)
    }

    pub fn all_accepted(&self) -> bool {
        !self.verdicts.is_empty() && self.verdicts.iter().all(|v| v.accepted)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut w = Writer::default();
        w.buf.extend_from_slice(MAGIC);
        w.u8(self.protocol.tag());
        let p = &self.params;
        w.u32(p.lambda);
        w.u64(p.ell);
        w.u32(p.k);
        w.u32(p.n);
        w.u32(p.reps);
        w.str(&p.mode);
        w.u64(p.seed);
        w.u32(self.messages.len() as u32);
        for m in &self.messages {
            w.u8(m.from.tag());
            w.str(&m.step);
            w.bytes(&m.payload);
            match m.handle {
                None => w.u8(0),
                Some(h) => {
                    w.u8(1);
                    w.u32(h.id);
                    w.u32(h.qubits);
                }
            }
        }
        w.u32(self.verdicts.len() as u32);
        for v in &self.verdicts {
            w.str(&v.step);
            w.u8(v.accepted as u8);
        }
        w.u32(self.measurements.len() as u32);
        for m in &self.measurements {
            w.u8(m.party.tag());
            w.str(&m.label);
            w.bits(&m.outcome);
        }
        w.buf
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { buf: bytes, pos: 0 };
        if r.take(MAGIC.len(), "magic")? != MAGIC {
            return Err(Error::Transcript("missing CENZ1 header".into()));
        }
        let protocol = ProtocolId::from_tag(r.u8("protocol")?)?;
        let params = TranscriptParams {
            lambda: r.u32("lambda")?,
            ell: r.u64("ell")?,
            k: r.u32("k")?,
            n: r.u32("n")?,
            reps: r.u32("reps")?,
            mode: r.str("mode")?,
            seed: r.u64("seed")?,
        };
        let mut t = Transcript::new(protocol, params);
        for _ in 0..r.count("message count", 10)? {
            let from = r.party()?;
            let step = r.str("step")?;
            let payload = r.bytes("payload")?.to_vec();
            let handle = match r.u8("handle flag")? {
                0 => None,
                1 => Some(QuantumHandle { id: r.u32("handle id")?, qubits: r.u32("handle size")? }),
                f => return Err(Error::Transcript(format!("bad handle flag {f}"))),
            };
            t.messages.push(Message { from, step, payload, handle });
        }
        for _ in 0..r.count("verdict count", 5)? {
            let step = r.str("verdict step")?;
            let accepted = match r.u8("verdict")? {
                0 => false,
                1 => true,
                v => return Err(Error::Transcript(format!("bad verdict byte {v}"))),
            };
            t.verdicts.push(Verdict { step, accepted });
        }
        for _ in 0..r.count("measurement count", 13)? {
            let party = r.party()?;
            let label = r.str("label")?;
            let outcome = r.bits("outcome")?;
            t.measurements.push(MeasurementRecord { party, label, outcome });
        }
        if r.pos != bytes.len() {
            return Err(Error::Transcript(format!("{} trailing bytes", bytes.len() - r.pos)));
        }
        Ok(t)
    }

    /// Line-oriented dump for inspection. Not parsed back.
    pub fn to_text(&self) -> String {
        let p = &self.params;
        let mut s = String::new();
        let _ = writeln!(s, "CENZ1 protocol={}", self.protocol.name());
        let _ = writeln!(s, "params lambda={} ell={} k={} n={} reps={} mode={} seed={}", p.lambda, p.ell, p.k, p.n, p.reps, p.mode, p.seed);
        for (i, m) in self.messages.iter().enumerate() {
            let _ = write!(s, "message {i} {} {} bytes={}", m.from.name(), m.step, m.payload.len());
            if let Some(h) = m.handle {
                let _ = write!(s, " handle={}:{}q", h.id, h.qubits);
            }
            let shown = m.payload.len().min(32);
            let hex: String = m.payload[..shown].iter().map(|b| format!("{b:02x}")).collect();
            let _ = writeln!(s, " {hex}{}", if shown < m.payload.len() { "…" } else { "" });
        }
        for v in &self.verdicts {
            let _ = writeln!(s, "verdict {} {}", v.step, if v.accepted { "accept" } else { "reject" });
        }
        for m in &self.measurements {
            let bits: String = m.outcome.iter().take(64).map(|b| if b { '1' } else { '0' }).collect();
            let more = if m.outcome.len() > 64 { format!("… ({} bits)", m.outcome.len()) } else { String::new() };
            let _ = writeln!(s, "measurement {} {} {bits}{more}", m.party.name(), m.label);
        }
        s
    }
}

#[derive(Default)]
struct Writer {
    buf: Vec<u8>,
}

impl Writer {
    fn u8(&mut self, v: u8) {
        self.buf.push(v);
    }
    fn u32(&mut self, v: u32) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn u64(&mut self, v: u64) {
        self.buf.extend_from_slice(&v.to_le_bytes());
    }
    fn bytes(&mut self, b: &[u8]) {
        self.u32(b.len() as u32);
        self.buf.extend_from_slice(b);
    }
    fn str(&mut self, s: &str) {
        self.bytes(s.as_bytes());
    }
    fn bits(&mut self, b: &BitString) {
        self.u64(b.len() as u64);
        self.buf.extend_from_slice(&b.to_bytes());
    }
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn remaining(&self) -> usize {
        self.buf.len() - self.pos
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        if n > self.remaining() {
            return Err(Error::Transcript(format!("{what}: need {n} bytes at offset {}, {} left", self.pos, self.remaining())));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }
    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }
    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    /// A record count, sanity-checked against the smallest record size.
    fn count(&mut self, what: &str, min_record: usize) -> Result<usize> {
        let c = self.u32(what)? as usize;
        if c.saturating_mul(min_record) > self.remaining() {
            return Err(Error::Transcript(format!("{what} {c} exceeds the remaining {} bytes", self.remaining())));
        }
        Ok(c)
    }

    fn bytes(&mut self, what: &str) -> Result<&'a [u8]> {
        let n = self.u32(what)? as usize;
        self.take(n, what)
    }

    fn str(&mut self, what: &str) -> Result<String> {
        String::from_utf8(self.bytes(what)?.to_vec()).map_err(|_| Error::Transcript(format!("{what} is not UTF-8")))
    }

    fn bits(&mut self, what: &str) -> Result<BitString> {
        let len = self.u64(what)?;
        let nbytes = usize::try_from(len.div_ceil(8)).map_err(|_| Error::Transcript(format!("{what}: bit length {len} too large")))?;
        let raw = self.take(nbytes, what)?;
        BitString::from_bytes(raw, len as usize).ok_or_else(|| Error::Transcript(format!("{what}: padding bits set")))
    }

    fn party(&mut self) -> Result<Party> {
        let t = self.u8("party")?;
        Party::ALL.into_iter().find(|p| p.tag() == t).ok_or_else(|| Error::Transcript(format!("unknown party tag {t}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Transcript {
        let mut t = Transcript::new(ProtocolId::Crs, TranscriptParams { lambda: 2, ell: 4, mode: "toy".into(), seed: 9, ..Default::default() });
        t.send(Party::Prover, "prove", vec![1, 2, 3], Some(QuantumHandle { id: 0, qubits: 304 }));
        t.verdict("verify", true);
        t.measured(Party::Prover, "prove/y", BitString::from_u64(0b1011, 13));
        t
    }

    #[test]
    fn round_trip_and_text() {
        let t = sample();
        let bytes = t.to_bytes();
        assert_eq!(&bytes[..5], MAGIC);
        assert_eq!(Transcript::from_bytes(&bytes).unwrap(), t);
        let text = t.to_text();
        assert!(text.contains("handle=0:304q") && text.contains("verdict verify accept"));
    }

    #[test]
    fn truncation_and_trailing_bytes_are_errors() {
        let bytes = sample().to_bytes();
        for cut in 0..bytes.len() {
            assert!(matches!(Transcript::from_bytes(&bytes[..cut]), Err(Error::Transcript(_))), "cut at {cut}");
        }
        let mut long = bytes.clone();
        long.push(0);
        assert!(Transcript::from_bytes(&long).is_err());
    }
}
