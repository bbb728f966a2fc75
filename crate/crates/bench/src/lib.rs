//! Fixtures shared by the benchmarks.

use cenizk::epr_nizk::EprParams;
use cenizk::harness::{ProtocolId, SessionParams};
use cenizk::hbg::HbgMode;
use cenizk::hidden_bits::{HbInstance, HbParams, HbWitness};

/// K3 with one of its Hamiltonian cycles.
pub fn triangle() -> (HbInstance, HbWitness) {
    let x = HbInstance::complete(3);
    let w = x.find_hamiltonian_cycle().expect("K3 is Hamiltonian");
    (x, w)
}

/// A small EPR configuration (ℓ = 9 blocks) that runs in microseconds.
pub fn small_epr(k: usize) -> EprParams {
    EprParams::new(HbParams::new(3, 1, 1, 3).expect("valid hidden-bits parameters"), k, HbgMode::Dealer).expect("valid EPR parameters")
}

/// Session parameters at acceptance scale for `protocol`.
pub fn acceptance_session(protocol: ProtocolId) -> SessionParams {
    SessionParams::defaults(protocol)
}
