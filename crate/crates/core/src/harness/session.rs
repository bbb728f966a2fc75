//! Honest end-to-end sessions with a recorded transcript.
//!
//! Parties run in one process. Classical messages are serialised into the
//! transcript; quantum registers move between parties by ownership transfer
//! and appear in the transcript only as [`QuantumHandle`]s.

use serde::{Deserialize, Serialize};

use super::transcript::{Party, ProtocolId, QuantumHandle, Transcript, TranscriptParams};
use crate::attacks::strawman::{strawman_cert, strawman_delete, strawman_prove, strawman_verify, StrawmanParams};
use crate::bits::BitString;
use crate::crs_nizk::{CrsNizkCrs, CrsScheme};
use crate::epr_nizk::{epr_cert, epr_del, epr_prove, epr_setup, epr_verify, EprParams};
use crate::error::{usage, Result};
use crate::hbg::HbgMode;
use crate::hidden_bits::{HbInstance, HbParams, HbWitness};
use crate::nizk::{toy_encode, ToyNizk};
use crate::rng::stream;

/// Parameters of one session. Fields a protocol does not use are ignored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionParams {
    pub protocol: ProtocolId,
    /// Graph size (EPR, strawman).
    pub n: usize,
    /// EPR block width, or qubits per strawman block.
    pub k: usize,
    /// Hidden-bits repetitions ρ (EPR) or rounds (strawman).
    pub reps: usize,
    /// Security parameter of the CRS construction.
    pub lambda: usize,
    pub hbg: HbgMode,
    /// Statement graph; defaults to the directed n-cycle.
    pub graph: Option<HbInstance>,
}

impl SessionParams {
    pub fn defaults(protocol: ProtocolId) -> Self {
        match protocol {
            ProtocolId::Epr => Self { protocol, n: 4, k: 6, reps: 20, lambda: 0, hbg: HbgMode::Dealer, graph: None },
            ProtocolId::Crs => Self { protocol, n: 0, k: 0, reps: 0, lambda: 2, hbg: HbgMode::Dealer, graph: None },
            ProtocolId::Strawman => Self { protocol, n: 3, k: 4, reps: 16, lambda: 0, hbg: HbgMode::Dealer, graph: None },
        }
    }

    pub fn epr_params(&self) -> Result<EprParams> {
        EprParams::new(HbParams::fls_defaults(self.statement()?.0.n(), self.reps), self.k, self.hbg)
    }

    pub fn strawman_params(&self) -> Result<StrawmanParams> {
        StrawmanParams::new(self.reps, self.k)
    }

    /// The statement graph and a Hamiltonian cycle of it.
    pub fn statement(&self) -> Result<(HbInstance, HbWitness)> {
        let x = match &self.graph {
            Some(g) => g.clone(),
            None => {
                if self.n < 2 {
                    return Err(usage(format!("graph size must be at least 2, got {}", self.n)));
                }
                HbInstance::cycle(self.n)
            }
        };
        let w = x.find_hamiltonian_cycle().ok_or_else(|| usage("statement graph is not Hamiltonian"))?;
        Ok((x, w))
    }

    fn mode_label(&self) -> String {
        match (self.protocol, self.hbg) {
            (ProtocolId::Epr, HbgMode::Dealer) => "dealer".into(),
            (ProtocolId::Epr, HbgMode::Naor { seed_len, .. }) => format!("naor-{seed_len}"),
            (ProtocolId::Crs, _) => "toy".into(),
            (ProtocolId::Strawman, _) => "fiat-shamir".into(),
        }
    }

    fn transcript_params(&self, ell: usize, seed: u64) -> TranscriptParams {
        TranscriptParams {
            lambda: self.lambda as u32,
            ell: ell as u64,
            k: self.k as u32,
            n: self.graph.as_ref().map_or(self.n, HbInstance::n) as u32,
            reps: self.reps as u32,
            mode: self.mode_label(),
            seed,
        }
    }
}

/// Runs honest setup, prove, verify, delete and certify under `seed`.
pub fn run_session(params: &SessionParams, seed: u64) -> Result<Transcript> {
    run_session_against(params, seed, None)
}

/// Like [`run_session`], but the verifier checks the proof against `claimed`
/// instead of the statement it was produced for. Graph protocols only.
pub fn run_session_against(params: &SessionParams, seed: u64, claimed: Option<&HbInstance>) -> Result<Transcript> {
    match params.protocol {
        ProtocolId::Epr => epr_session(params, seed, claimed),
        ProtocolId::Crs if claimed.is_some() => Err(usage("the CRS protocol has no graph statement to substitute")),
        ProtocolId::Crs => crs_session(params, seed),
        ProtocolId::Strawman => strawman_session(params, seed, claimed),
    }
}

fn json<T: Serialize>(v: &T) -> Vec<u8> {
    serde_json::to_vec(v).expect("protocol messages serialise")
}

fn epr_session(params: &SessionParams, seed: u64, claimed: Option<&HbInstance>) -> Result<Transcript> {
    let ep = params.epr_params()?;
    let (x, w) = params.statement()?;
    let mut rng = stream(seed, "session/epr");
    let mut t = Transcript::new(ProtocolId::Epr, params.transcript_params(ep.ell(), seed));
    let (crs, mut net) = epr_setup(ep, &mut rng)?;
    let half = (ep.ell() * ep.k) as u32;
    t.send(Party::Setup, "crs/prover-halves", crs.s.to_bytes(), Some(QuantumHandle { id: 0, qubits: half }));
    t.send(Party::Setup, "crs/verifier-halves", Vec::new(), Some(QuantumHandle { id: 1, qubits: half }));

    let (proof, state) = epr_prove(&crs, &mut net, &x, &w, &mut rng)?;
    t.measured(Party::Prover, "prove/y", state.y.clone());
    t.send(Party::Prover, "prove", json(&proof), None);

    let (ok, residual) = epr_verify(&crs, &mut net, claimed.unwrap_or(&x), &proof, &mut rng)?;
    t.verdict("verify", ok);

    let cert = epr_del(&mut net, &residual, &mut rng)?;
    let mut packed = BitString::with_capacity(cert.blocks.len() * ep.k);
    for &(_, v) in &cert.blocks {
        packed.push_bits(ep.k, v);
    }
    t.measured(Party::Verifier, "delete/cert", packed.clone());
    t.send(Party::Verifier, "delete", packed.to_bytes(), None);
    t.verdict("cert", epr_cert(&cert, &state));
    Ok(t)
}

fn crs_session(params: &SessionParams, seed: u64) -> Result<Transcript> {
    let scheme = CrsScheme::new(ToyNizk, params.lambda);
    let mut rng = stream(seed, "session/crs");
    let mut t = Transcript::new(ProtocolId::Crs, params.transcript_params(scheme.ell(), seed));
    let crs: CrsNizkCrs<()> = scheme.setup(&mut rng)?;
    t.send(Party::Setup, "crs", Vec::new(), None);

    let w = BitString::random(4, &mut rng);
    let x = toy_encode(&w)?;
    let (sigma, key) = scheme.prove(&crs, &x, &w, &mut rng)?;
    t.measured(Party::Prover, "prove/y", key.y.clone());
    let handle = QuantumHandle { id: 0, qubits: sigma.state.num_qubits() as u32 };
    t.send(Party::Prover, "prove", sigma.ct0.concat(&sigma.ct1).to_bytes(), Some(handle));

    let (ok, back) = scheme.verify(&crs, &x, sigma, &mut rng)?;
    t.verdict("verify", ok);
    t.send(Party::Verifier, "delete", Vec::new(), Some(handle));
    t.verdict("cert", scheme.cert(&key, back, &mut rng)?);
    Ok(t)
}

fn strawman_session(params: &SessionParams, seed: u64, claimed: Option<&HbInstance>) -> Result<Transcript> {
    let sp = params.strawman_params()?;
    let (x, w) = params.statement()?;
    let mut rng = stream(seed, "session/strawman");
    let blocks = sp.rounds * x.n() * x.n();
    let mut t = Transcript::new(ProtocolId::Strawman, params.transcript_params(blocks, seed));
    let (mut proof, key) = strawman_prove(sp, &x, &w, &mut rng)?;
    let y = key.y.iter().fold(BitString::new(), |acc, b| acc.concat(b));
    t.measured(Party::Prover, "prove/y", y);
    let handle = QuantumHandle { id: 0, qubits: (blocks * sp.block_len) as u32 };
    t.send(Party::Prover, "prove", json(&proof.classical), Some(handle));

    t.verdict("verify", strawman_verify(sp, claimed.unwrap_or(&x), &mut proof, &mut rng)?);
    let cert = strawman_delete(&mut proof, &mut rng)?;
    t.send(Party::Verifier, "delete", json(&cert), None);
    t.verdict("cert", strawman_cert(&key, &cert));
    Ok(t)
}
