//! Hidden-bits NIZK compiled to the CRS model.
//!
//! The crs is `(crs_bg, s)`. The prover draws `(com, r_bg, openings)` from the
//! HBG and runs the hidden-bits prover on `r = r_bg ⊕ s`; the verifier checks
//! the HBG openings of `r_bg,I` and runs the hidden-bits verifier on
//! `r_bg,I ⊕ s_I`.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};

use super::{AdaptiveZkSimulator, InnerNizk};
use crate::bits::BitString;
use crate::error::{check_len, usage, Result};
use crate::hbg::{dealer_program, hbg_genbits, hbg_setup, hbg_verify_set, HbgCommitment, HbgCrs, HbgMode, HbgOpenings};
use crate::hidden_bits::{hb_prove, hb_simulate, hb_verify, HbInstance, HbParams, HbProof, HbWitness, RepProof, RevealedBits};

#[derive(Debug, Clone, PartialEq)]
pub struct CompiledCrs {
    pub params: HbParams,
    pub crs_bg: HbgCrs,
    pub s: BitString,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CompiledProof {
    pub com: HbgCommitment,
    /// The opened index set I as a mask over the k hidden bits.
    pub mask: BitString,
    /// r_bg restricted to I (zero elsewhere).
    pub values: BitString,
    pub openings: HbgOpenings,
    pub hb: HbProof,
}

pub fn compiled_setup<R: Rng + ?Sized>(params: HbParams, mode: HbgMode, rng: &mut R) -> Result<CompiledCrs> {
    let k = params.total_bits();
    let crs_bg = hbg_setup(k, mode, rng)?;
    let s = BitString::random(k, rng);
    Ok(CompiledCrs { params, crs_bg, s })
}

pub fn compiled_prove<R: Rng + ?Sized>(crs: &CompiledCrs, x: &HbInstance, w: &HbWitness, rng: &mut R) -> Result<CompiledProof> {
    let (com, r_bg, ops) = hbg_genbits(&crs.crs_bg, rng);
    let r = r_bg.xor(&crs.s);
    let (mask, hb) = hb_prove(&r, x, w, &crs.params)?;
    let values = r_bg.and(&mask);
    let openings = ops.restrict(&mask);
    Ok(CompiledProof { com, mask, values, openings, hb })
}

pub fn compiled_verify(crs: &CompiledCrs, x: &HbInstance, proof: &CompiledProof) -> bool {
    let k = crs.params.total_bits();
    if proof.mask.len() != k || proof.values.len() != k {
        return false;
    }
    if !hbg_verify_set(&crs.crs_bg, &proof.com, &proof.mask, &proof.values, &proof.openings) {
        return false;
    }
    let r_i = proof.values.xor(&crs.s).and(&proof.mask);
    let Ok(revealed) = RevealedBits::from_parts(proof.mask.clone(), r_i) else {
        return false;
    };
    hb_verify(&revealed, x, &proof.hb, &crs.params)
}

/// Witness-free simulation of (crs, π): honest HBG, simulated hidden-bits
/// proof, and `s_I := r_bg,I ⊕ r_I` with the rest of `s` uniform.
pub fn compiled_sim<R: Rng + ?Sized>(x: &HbInstance, params: HbParams, mode: HbgMode, rng: &mut R) -> Result<(CompiledCrs, CompiledProof)> {
    let k = params.total_bits();
    let crs_bg = hbg_setup(k, mode, rng)?;
    let (com, r_bg, ops) = hbg_genbits(&crs_bg, rng);
    let (mask, revealed, hb) = hb_simulate(x, &params, rng)?;
    let fill = BitString::random(k, rng).and(&mask.not());
    let s = r_bg.xor(revealed.values()).and(&mask).xor(&fill);
    let proof = CompiledProof { com, values: r_bg.and(&mask), openings: ops.restrict(&mask), mask, hb };
    Ok((CompiledCrs { params, crs_bg, s }, proof))
}

/// The compiled NIZK as an [`InnerNizk`] with fixed-length proof encoding.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompiledNizk {
    pub params: HbParams,
    pub mode: HbgMode,
}

fn index_width(side: usize) -> usize {
    (usize::BITS - (side.max(2) - 1).leading_zeros()) as usize
}

impl CompiledNizk {
    pub fn new(params: HbParams, mode: HbgMode) -> Self {
        Self { params, mode }
    }

    fn com_len(&self) -> usize {
        match self.mode {
            HbgMode::Dealer => 64,
            HbgMode::Naor { seed_len, .. } => self.params.total_bits() * 3 * seed_len as usize,
        }
    }

    fn seeds_len(&self) -> usize {
        match self.mode {
            HbgMode::Dealer => 0,
            HbgMode::Naor { seed_len, .. } => self.params.total_bits() * seed_len as usize,
        }
    }

    fn rep_len(&self) -> usize {
        1 + 2 * self.params.n * index_width(self.params.side)
    }

    /// Layout: com ∥ mask ∥ values ∥ seeds (zero at unopened positions) ∥ per-repetition proofs.
    pub fn encode(&self, p: &CompiledProof) -> Result<BitString> {
        let k = self.params.total_bits();
        check_len("proof mask", k, p.mask.len())?;
        check_len("proof values", k, p.values.len())?;
        let mut out = BitString::with_capacity(self.proof_len());
        match (&p.com, self.mode) {
            (HbgCommitment::Dealer { handle }, HbgMode::Dealer) => out.push_bits(64, *handle),
            (HbgCommitment::Naor(cs), HbgMode::Naor { seed_len, .. }) => {
                check_len("commitment", k, cs.len())?;
                for c in cs {
                    check_len("commitment entry", 3 * seed_len as usize, c.len())?;
                    out.extend_from(c);
                }
            }
            _ => return Err(usage("commitment does not match the HBG mode")),
        }
        out.extend_from(&p.mask);
        out.extend_from(&p.values);
        if let HbgMode::Naor { seed_len, .. } = self.mode {
            let HbgOpenings::Naor(seeds) = &p.openings else {
                return Err(usage("openings do not match the HBG mode"));
            };
            check_len("openings", p.mask.count_ones(), seeds.len())?;
            let mut it = seeds.iter();
            for i in 0..k {
                let seed = if p.mask.get(i) { *it.next().unwrap() } else { 0 };
                out.extend_from(&BitString::from_u128(seed, seed_len as usize));
            }
        }
        check_len("hidden-bits repetitions", self.params.reps, p.hb.reps.len())?;
        let iw = index_width(self.params.side);
        for rp in &p.hb.reps {
            match rp {
                RepProof::RevealAll => out.extend_from(&BitString::zeros(self.rep_len())),
                RepProof::Useful { rows, cols } => {
                    out.push(true);
                    for &v in rows.iter().chain(cols) {
                        out.push_bits(iw, v as u64);
                    }
                }
            }
        }
        debug_assert_eq!(out.len(), self.proof_len());
        Ok(out)
    }

    pub fn decode(&self, bits: &BitString) -> Option<CompiledProof> {
        if bits.len() != self.proof_len() {
            return None;
        }
        let k = self.params.total_bits();
        let mut off = 0;
        let mut take = |len: usize| {
            let s = bits.slice(off, off + len);
            off += len;
            s
        };
        let com = match self.mode {
            HbgMode::Dealer => HbgCommitment::Dealer { handle: take(64).to_u64() },
            HbgMode::Naor { seed_len, .. } => {
                let w = 3 * seed_len as usize;
                HbgCommitment::Naor((0..k).map(|_| take(w)).collect())
            }
        };
        let mask = take(k);
        let values = take(k);
        let openings = match self.mode {
            HbgMode::Dealer => HbgOpenings::Dealer { count: mask.count_ones() },
            HbgMode::Naor { seed_len, .. } => {
                let mut seeds = Vec::new();
                for i in 0..k {
                    let seed = take(seed_len as usize).to_u128();
                    if mask.get(i) {
                        seeds.push(seed);
                    }
                }
                HbgOpenings::Naor(seeds)
            }
        };
        let iw = index_width(self.params.side);
        let n = self.params.n;
        let mut reps = Vec::with_capacity(self.params.reps);
        for _ in 0..self.params.reps {
            let r = take(self.rep_len());
            if !r.get(0) {
                reps.push(RepProof::RevealAll);
            } else {
                let v: Vec<usize> = (0..2 * n).map(|j| r.get_bits(1 + j * iw, iw) as usize).collect();
                reps.push(RepProof::Useful { rows: v[..n].to_vec(), cols: v[n..].to_vec() });
            }
        }
        Some(CompiledProof { com, mask, values, openings, hb: HbProof { reps } })
    }
}

impl InnerNizk for CompiledNizk {
    type Crs = CompiledCrs;
    type Statement = HbInstance;
    type Witness = HbWitness;

    fn proof_len(&self) -> usize {
        let k = self.params.total_bits();
        self.com_len() + 2 * k + self.seeds_len() + self.params.reps * self.rep_len()
    }

    fn setup(&self, mut rng: &mut dyn RngCore) -> Result<CompiledCrs> {
        compiled_setup(self.params, self.mode, &mut rng)
    }

    fn prove(&self, crs: &CompiledCrs, x: &HbInstance, w: &HbWitness, mut rng: &mut dyn RngCore) -> Result<BitString> {
        self.encode(&compiled_prove(crs, x, w, &mut rng)?)
    }

    fn verify(&self, crs: &CompiledCrs, x: &HbInstance, proof: &BitString) -> bool {
        self.decode(proof).is_some_and(|p| compiled_verify(crs, x, &p))
    }

    fn crs_bytes(&self, crs: &CompiledCrs) -> Vec<u8> {
        let mut out = crs.crs_bg.to_bytes();
        out.extend(crs.s.to_bytes());
        out
    }
}

impl AdaptiveZkSimulator for CompiledNizk {
    /// In dealer mode the simulator may program the dealer after seeing x.
    type Trapdoor = ();

    fn sim_setup(&self, rng: &mut dyn RngCore) -> Result<(CompiledCrs, ())> {
        if self.mode != HbgMode::Dealer {
            return Err(usage("the adaptive simulator stub exists only for the dealer HBG"));
        }
        Ok((self.setup(rng)?, ()))
    }

    fn sim_prove(&self, crs: &CompiledCrs, _td: &(), x: &HbInstance, mut rng: &mut dyn RngCore) -> Result<BitString> {
        let (mask, revealed, hb) = hb_simulate(x, &crs.params, &mut rng)?;
        let fill = BitString::random(crs.params.total_bits(), &mut rng).and(&mask.not());
        let r_bg = revealed.values().xor(&crs.s).and(&mask).xor(&fill);
        let (com, ops) = dealer_program(&crs.crs_bg, r_bg.clone())?;
        let proof = CompiledProof { com, values: r_bg.and(&mask), openings: ops.restrict(&mask), mask, hb };
        self.encode(&proof)
    }
}
