//! Statistically sound NIZKs used as inner proof systems.
//!
//! [`toy`] is a tiny code-membership proof used where proofs live in
//! superposition; [`compiled`] is the hidden-bits NIZK compiled to the CRS model
//! through an HBG.

pub mod compiled;
pub mod toy;

use rand::RngCore;

use crate::bits::BitString;
use crate::error::Result;

pub use compiled::{compiled_prove, compiled_setup, compiled_sim, compiled_verify, CompiledCrs, CompiledNizk, CompiledProof};
pub use toy::{toy_encode, toy_prove, toy_verify, ToyNizk};

/// A NIZK whose proofs are bitstrings of a fixed length.
pub trait InnerNizk {
    type Crs: Clone;
    type Statement: Clone;
    type Witness: Clone;

    fn proof_len(&self) -> usize;
    fn setup(&self, rng: &mut dyn RngCore) -> Result<Self::Crs>;
    fn prove(&self, crs: &Self::Crs, x: &Self::Statement, w: &Self::Witness, rng: &mut dyn RngCore) -> Result<BitString>;
    /// Must return false (not panic) on proofs of the wrong length.
    fn verify(&self, crs: &Self::Crs, x: &Self::Statement, proof: &BitString) -> bool;
    /// Canonical bytes of a crs, for hashing and transcripts.
    fn crs_bytes(&self, crs: &Self::Crs) -> Vec<u8>;
}

/// Adaptive zero-knowledge simulator with a trapdoored crs.
///
/// This property is assumed by the CRS-model construction and is not
/// desk-testable; implementations are interface stubs without tests.
pub trait AdaptiveZkSimulator: InnerNizk {
    type Trapdoor;

    fn sim_setup(&self, rng: &mut dyn RngCore) -> Result<(Self::Crs, Self::Trapdoor)>;
    fn sim_prove(&self, crs: &Self::Crs, td: &Self::Trapdoor, x: &Self::Statement, rng: &mut dyn RngCore) -> Result<BitString>;
}
