//! Extended Hamming [8,4] code-membership "NIZK".
//!
//! The statement is an 8-bit word, the witness and proof are the 4-bit message.
//! Verification re-encodes the proof. Complete and perfectly sound because the
//! code is injective; it offers no zero-knowledge at all.

use rand::RngCore;

use super::InnerNizk;
use crate::bits::BitString;
use crate::error::{check_len, Result};

pub const TOY_STATEMENT_LEN: usize = 8;
pub const TOY_PROOF_LEN: usize = 4;

/// Generator rows: message bit i contributes row i to the codeword.
const GENERATOR: [u8; 4] = [0b1110_0001, 0b1101_0010, 0b1011_0100, 0b0111_1000];

pub fn toy_encode(w: &BitString) -> Result<BitString> {
    check_len("toy witness", TOY_PROOF_LEN, w.len())?;
    let mut x = 0u8;
    for (i, row) in GENERATOR.iter().enumerate() {
        if w.get(i) {
            x ^= row;
        }
    }
    Ok(BitString::from_u64(x as u64, TOY_STATEMENT_LEN))
}

pub fn toy_prove(x: &BitString, w: &BitString) -> Result<BitString> {
    check_len("toy statement", TOY_STATEMENT_LEN, x.len())?;
    if &toy_encode(w)? != x {
        return Err(crate::Error::InvalidWitness("witness does not encode to the statement".into()));
    }
    Ok(w.clone())
}

pub fn toy_verify(x: &BitString, proof: &BitString) -> bool {
    x.len() == TOY_STATEMENT_LEN && proof.len() == TOY_PROOF_LEN && toy_encode(proof).is_ok_and(|c| &c == x)
}

pub fn is_codeword(x: &BitString) -> bool {
    x.len() == TOY_STATEMENT_LEN && (0..16).any(|w| toy_verify(x, &BitString::from_u64(w, TOY_PROOF_LEN)))
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ToyNizk;

impl InnerNizk for ToyNizk {
    type Crs = ();
    type Statement = BitString;
    type Witness = BitString;

    fn proof_len(&self) -> usize {
        TOY_PROOF_LEN
    }

    fn setup(&self, _rng: &mut dyn RngCore) -> Result<()> {
        Ok(())
    }

    fn prove(&self, _crs: &(), x: &BitString, w: &BitString, _rng: &mut dyn RngCore) -> Result<BitString> {
        toy_prove(x, w)
    }

    fn verify(&self, _crs: &(), x: &BitString, proof: &BitString) -> bool {
        toy_verify(x, proof)
    }

    fn crs_bytes(&self, _crs: &()) -> Vec<u8> {
        Vec::new()
    }
}
