//! A deletion-resistant commit-and-open protocol and its splitting attack.
//!
//! The strawman is Fiat–Shamir Blum Hamiltonicity where every committed
//! adjacency bit is a BB84 block |y⟩^θ whose Z-position parity is the bit,
//! and θ is bound by a hash commitment. A hash of all commitments selects
//! per round which blocks get opened; the rest must be deleted. Because
//! opened and unopened blocks are unentangled, a verifier can hand the opened
//! ones to one party and delete the others, passing both checks at once.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::crs_nizk::{clone_attack, CrsNizkCrs, CrsProofState, CrsScheme};
use crate::error::{usage, Result};
use crate::hidden_bits::{HbInstance, HbWitness};
use crate::nizk::InnerNizk;
use crate::quantum::{Basis, Bb84Descriptor, SparseState};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanParams {
    pub rounds: usize,
    /// Qubits per committed bit.
    pub block_len: usize,
}

impl StrawmanParams {
    pub fn new(rounds: usize, block_len: usize) -> Result<Self> {
        if rounds == 0 || rounds > 256 || block_len == 0 || block_len > 12 {
            return Err(usage(format!("strawman needs 1..=256 rounds and 1..=12 qubits per block, got {rounds}, {block_len}")));
        }
        Ok(Self { rounds, block_len })
    }
}

pub type Digest32 = [u8; 32];

/// Per-round response, determined by the round's challenge bit.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RoundOpening {
    /// Challenge 0: the permutation; every entry is opened.
    Permutation(Vec<usize>),
    /// Challenge 1: a Hamiltonian cycle of the committed graph, as a vertex sequence.
    Cycle(Vec<usize>),
}

/// Opening of one block: its basis string and the commitment nonce.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct BlockOpening {
    pub block: usize,
    pub theta: BitString,
    pub nonce: [u8; 16],
}

/// Classical part of the strawman proof.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanClassical {
    pub commitments: Vec<Digest32>,
    pub rounds: Vec<RoundOpening>,
    pub openings: Vec<BlockOpening>,
}

/// A proof as held by some party: the classical part plus whichever BB84
/// blocks that party holds (indexed by block number).
#[derive(Debug, Clone)]
pub struct StrawmanProof {
    pub classical: StrawmanClassical,
    pub blocks: Vec<Option<SparseState>>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanKey {
    pub y: Vec<BitString>,
    pub theta: Vec<BitString>,
    /// Blocks opened by the proof; all others must be certified.
    pub opened: BitString,
}

/// Certificate: X-basis outcomes for each unopened block.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrawmanCert {
    pub blocks: Vec<(usize, BitString)>,
}

fn commit_hash(theta: &BitString, nonce: &[u8; 16]) -> Digest32 {
    let mut h = Sha256::new();
    h.update(b"cenizk/strawman/com/v1");
    h.update((theta.len() as u64).to_le_bytes());
    h.update(theta.to_bytes());
    h.update(nonce);
    h.finalize().into()
}

/// Fiat–Shamir challenge bits from the statement and all commitments.
pub fn challenges(x: &HbInstance, commitments: &[Digest32], rounds: usize) -> BitString {
    let mut h = Sha256::new();
    h.update(b"cenizk/strawman/fs/v1");
    h.update(x.to_bytes());
    for c in commitments {
        h.update(c);
    }
    let d: [u8; 32] = h.finalize().into();
    BitString::from_bytes(&d, 256).expect("256-bit digest").slice(0, rounds)
}

fn block_id(n: usize, round: usize, u: usize, v: usize) -> usize {
    round * n * n + u * n + v
}

/// Samples (y, θ) with Z-position parity equal to `bit`.
fn encode_bit<R: Rng + ?Sized>(bit: bool, len: usize, rng: &mut R) -> Bb84Descriptor {
    loop {
        let d = Bb84Descriptor::random(len, rng);
        if d.y.and(&d.theta.not()).parity() == bit {
            return d;
        }
    }
}

/// Which blocks a round opens, given the round's response.
fn opened_blocks(n: usize, round: usize, op: &RoundOpening) -> Option<Vec<usize>> {
    match op {
        RoundOpening::Permutation(p) => (p.len() == n).then(|| (0..n * n).map(|e| round * n * n + e).collect()),
        RoundOpening::Cycle(c) => {
            if c.len() != n {
                return None;
            }
            Some((0..n).map(|j| block_id(n, round, c[j], c[(j + 1) % n])).collect())
        }
    }
}

fn permuted(x: &HbInstance, perm: &[usize]) -> Vec<bool> {
    let n = x.n();
    let mut m = vec![false; n * n];
    for (u, v) in x.edges() {
        m[perm[u] * n + perm[v]] = true;
    }
    m
}

/// Commits to per-round matrices and answers the Fiat–Shamir challenges.
///
/// `responder(round, challenge)` returns the round opening; the matrices are
/// given as flattened n×n bit vectors.
fn build_proof<R: Rng + ?Sized>(
    params: StrawmanParams,
    x: &HbInstance,
    matrices: &[Vec<bool>],
    mut responder: impl FnMut(usize, bool) -> RoundOpening,
    rng: &mut R,
) -> (StrawmanProof, StrawmanKey) {
    let n = x.n();
    let total = params.rounds * n * n;
    let (mut ys, mut thetas, mut nonces, mut commitments, mut blocks) =
        (Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total), Vec::with_capacity(total));
    for m in matrices {
        for &bit in m {
            let d = encode_bit(bit, params.block_len, rng);
            let nonce: [u8; 16] = rng.gen();
            commitments.push(commit_hash(&d.theta, &nonce));
            blocks.push(Some(SparseState::prep_bb84(&d)));
            ys.push(d.y);
            thetas.push(d.theta);
            nonces.push(nonce);
        }
    }
    let ch = challenges(x, &commitments, params.rounds);
    let mut opened = BitString::zeros(total);
    let mut rounds = Vec::with_capacity(params.rounds);
    let mut openings = Vec::new();
    for t in 0..params.rounds {
        let op = responder(t, ch.get(t));
        for b in opened_blocks(n, t, &op).unwrap_or_default() {
            if !opened.get(b) {
                opened.set(b, true);
                openings.push(BlockOpening { block: b, theta: thetas[b].clone(), nonce: nonces[b] });
            }
        }
        rounds.push(op);
    }
    openings.sort_by_key(|o| o.block);
    (
        StrawmanProof { classical: StrawmanClassical { commitments, rounds, openings }, blocks },
        StrawmanKey { y: ys, theta: thetas, opened },
    )
}

pub fn strawman_prove<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, w: &HbWitness, rng: &mut R) -> Result<(StrawmanProof, StrawmanKey)> {
    w.validate(x)?;
    let n = x.n();
    let perms: Vec<Vec<usize>> = (0..params.rounds)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let matrices: Vec<Vec<bool>> = perms.iter().map(|p| permuted(x, p)).collect();
    let cyc = w.cycle.clone();
    Ok(build_proof(
        params,
        x,
        &matrices,
        |t, c| if c { RoundOpening::Cycle(cyc.iter().map(|&v| perms[t][v]).collect()) } else { RoundOpening::Permutation(perms[t].clone()) },
        rng,
    ))
}

/// Prover for false statements: guesses each challenge, committing to π(x)
/// for a guessed 0 and to the complete digraph for a guessed 1.
pub fn strawman_cheat<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, rng: &mut R) -> (StrawmanProof, StrawmanKey) {
    let n = x.n();
    let guesses = BitString::random(params.rounds, rng);
    let perms: Vec<Vec<usize>> = (0..params.rounds)
        .map(|_| {
            let mut p: Vec<usize> = (0..n).collect();
            p.shuffle(rng);
            p
        })
        .collect();
    let complete: Vec<bool> = (0..n * n).map(|e| e / n != e % n).collect();
    let matrices: Vec<Vec<bool>> = (0..params.rounds).map(|t| if guesses.get(t) { complete.clone() } else { permuted(x, &perms[t]) }).collect();
    let seq: Vec<usize> = (0..n).collect();
    build_proof(params, x, &matrices, |t, c| if c { RoundOpening::Cycle(seq.clone()) } else { RoundOpening::Permutation(perms[t].clone()) }, rng)
}

/// Verifier on whatever blocks it holds; measures each opened block in its
/// opened basis. Rejects if any needed block is missing.
pub fn strawman_verify<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, proof: &mut StrawmanProof, rng: &mut R) -> Result<bool> {
    let n = x.n();
    let total = params.rounds * n * n;
    let c = &proof.classical;
    if c.commitments.len() != total || c.rounds.len() != params.rounds || proof.blocks.len() != total {
        return Ok(false);
    }
    let ch = challenges(x, &c.commitments, params.rounds);
    let mut theta_of = vec![None; total];
    for o in &c.openings {
        if o.block >= total || o.theta.len() != params.block_len || commit_hash(&o.theta, &o.nonce) != c.commitments[o.block] {
            return Ok(false);
        }
        theta_of[o.block] = Some(o.theta.clone());
    }
    let mut decode = |b: usize, blocks: &mut Vec<Option<SparseState>>| -> Result<Option<bool>> {
        let (Some(theta), Some(st)) = (theta_of[b].clone(), blocks[b].as_mut()) else {
            return Ok(None);
        };
        let idx: Vec<usize> = (0..params.block_len).collect();
        let y = st.measure(&idx, &Basis::all(&theta), rng)?;
        Ok(Some(y.and(&theta.not()).parity()))
    };
    for t in 0..params.rounds {
        let op = c.rounds[t].clone();
        match (&op, ch.get(t)) {
            (RoundOpening::Permutation(p), false) => {
                let mut sorted = p.clone();
                sorted.sort_unstable();
                if sorted != (0..n).collect::<Vec<_>>() {
                    return Ok(false);
                }
                let want = permuted(x, p);
                for e in 0..n * n {
                    match decode(t * n * n + e, &mut proof.blocks)? {
                        Some(bit) if bit == want[e] => {}
                        _ => return Ok(false),
                    }
                }
            }
            (RoundOpening::Cycle(cyc), true) => {
                let mut sorted = cyc.clone();
                sorted.sort_unstable();
                if sorted != (0..n).collect::<Vec<_>>() {
                    return Ok(false);
                }
                for b in opened_blocks(n, t, &op).expect("length checked") {
                    if decode(b, &mut proof.blocks)? != Some(true) {
                        return Ok(false);
                    }
                }
            }
            _ => return Ok(false),
        }
    }
    Ok(true)
}

/// Honest deletion: X-measures every held block that was not opened.
pub fn strawman_delete<R: Rng + ?Sized>(proof: &mut StrawmanProof, rng: &mut R) -> Result<StrawmanCert> {
    let opened: std::collections::HashSet<usize> = proof.classical.openings.iter().map(|o| o.block).collect();
    let mut cert = StrawmanCert::default();
    for (b, st) in proof.blocks.iter_mut().enumerate() {
        if opened.contains(&b) {
            continue;
        }
        if let Some(st) = st.as_mut() {
            let len = st.num_qubits();
            let idx: Vec<usize> = (0..len).collect();
            cert.blocks.push((b, st.measure(&idx, &vec![Basis::X; len], rng)?));
        }
    }
    Ok(cert)
}

/// ⊤ iff every unopened block is certified and matches y at Hadamard positions.
pub fn strawman_cert(key: &StrawmanKey, cert: &StrawmanCert) -> bool {
    let total = key.y.len();
    let mut seen = BitString::zeros(total);
    for (b, c) in &cert.blocks {
        if *b >= total || key.opened.get(*b) || seen.get(*b) || c.len() != key.y[*b].len() {
            return false;
        }
        seen.set(*b, true);
        if !c.xor(&key.y[*b]).and(&key.theta[*b]).is_zero() {
            return false;
        }
    }
    seen.xor(&key.opened).count_ones() == total
}

/// Registers after the split: A holds the unopened blocks, B the opened
/// blocks plus a copy of the classical message.
#[derive(Debug, Clone)]
pub struct Split {
    pub a: StrawmanProof,
    pub b: StrawmanProof,
}

pub fn split(proof: StrawmanProof) -> Split {
    let StrawmanProof { classical, blocks } = proof;
    let opened: std::collections::HashSet<usize> = classical.openings.iter().map(|o| o.block).collect();
    let (mut a, mut b) = (Vec::with_capacity(blocks.len()), Vec::with_capacity(blocks.len()));
    for (i, st) in blocks.into_iter().enumerate() {
        if opened.contains(&i) {
            a.push(None);
            b.push(st);
        } else {
            a.push(st);
            b.push(None);
        }
    }
    Split { a: StrawmanProof { classical: classical.clone(), blocks: a }, b: StrawmanProof { classical, blocks: b } }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitVerdicts {
    pub cert: bool,
    pub verify: bool,
}

impl SplitVerdicts {
    pub fn both(&self) -> bool {
        self.cert && self.verify
    }
}

/// The splitting attack on the strawman: certify from A, verify from B.
pub fn split_attack<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, w: &HbWitness, rng: &mut R) -> Result<SplitVerdicts> {
    let (proof, key) = strawman_prove(params, x, w, rng)?;
    let Split { mut a, mut b } = split(proof);
    let cert = strawman_delete(&mut a, rng)?;
    Ok(SplitVerdicts { cert: strawman_cert(&key, &cert), verify: strawman_verify(params, x, &mut b, rng)? })
}

/// The derived prover P̃: runs the honest prover and the split, and outputs
/// B's registers as the new proof together with the prover key.
pub fn derived_prove<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, w: &HbWitness, rng: &mut R) -> Result<(StrawmanProof, StrawmanKey)> {
    let (proof, key) = strawman_prove(params, x, w, rng)?;
    Ok((split(proof).b, key))
}

/// The derived verifier Ṽ is the strawman verifier run on B's registers.
pub fn derived_verify<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, proof: &mut StrawmanProof, rng: &mut R) -> Result<bool> {
    strawman_verify(params, x, proof, rng)
}

/// Everything B's registers reveal after honest measurement, one entry per
/// round: the challenge, the response and the decoded opened bits.
pub fn derived_view<R: Rng + ?Sized>(params: StrawmanParams, x: &HbInstance, proof: &mut StrawmanProof, rng: &mut R) -> Result<Vec<(RoundOpening, Vec<bool>)>> {
    let n = x.n();
    let mut theta_of = std::collections::HashMap::new();
    for o in &proof.classical.openings {
        theta_of.insert(o.block, o.theta.clone());
    }
    let mut out = Vec::with_capacity(params.rounds);
    for t in 0..params.rounds {
        let op = proof.classical.rounds[t].clone();
        let mut bits = Vec::new();
        for b in opened_blocks(n, t, &op).unwrap_or_default() {
            let (Some(theta), Some(st)) = (theta_of.get(&b), proof.blocks[b].as_mut()) else {
                continue;
            };
            let idx: Vec<usize> = (0..params.block_len).collect();
            bits.push(st.measure(&idx, &Basis::all(theta), rng)?.and(&theta.not()).parity());
        }
        out.push((op, bits));
    }
    Ok(out)
}

/// The same split applied to the CRS-model construction. Its proof state is
/// one entangled register, so the best split is a CNOT copy: B gets the copy
/// and verifies, A keeps the original and certifies.
pub fn crs_split_attack<N: InnerNizk, R: Rng>(
    scheme: &CrsScheme<N>,
    crs: &CrsNizkCrs<N::Crs>,
    x: &N::Statement,
    w: &N::Witness,
    rng: &mut R,
) -> Result<SplitVerdicts> {
    let (sigma, key) = scheme.prove(crs, x, w, rng)?;
    let (joint, copy) = clone_attack(sigma)?;
    let original = joint.layout;
    let (verify, back) = scheme.verify(crs, x, CrsProofState { layout: copy, ..joint }, rng)?;
    let cert = scheme.cert(&key, CrsProofState { layout: original, ..back }, rng)?;
    Ok(SplitVerdicts { cert, verify })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nizk::{toy_encode, ToyNizk};
    use crate::rng::stream;
    use crate::stats::Histogram;

    fn k3() -> (HbInstance, HbWitness) {
        let x = HbInstance::complete(3);
        let w = x.find_hamiltonian_cycle().unwrap();
        (x, w)
    }

    #[test]
    fn honest_strawman_is_complete_and_deletable() {
        let (x, w) = k3();
        let p = StrawmanParams::new(16, 4).unwrap();
        let mut rng = stream(1, "straw");
        for _ in 0..20 {
            let (mut proof, key) = strawman_prove(p, &x, &w, &mut rng).unwrap();
            assert!(strawman_verify(p, &x, &mut proof, &mut rng).unwrap());
            let cert = strawman_delete(&mut proof, &mut rng).unwrap();
            assert!(strawman_cert(&key, &cert));
        }
    }

    #[test]
    fn split_attack_wins_on_the_strawman() {
        let (x, w) = k3();
        let p = StrawmanParams::new(16, 4).unwrap();
        let mut rng = stream(2, "split");
        for _ in 0..20 {
            assert!(split_attack(p, &x, &w, &mut rng).unwrap().both());
        }
    }

    #[test]
    fn withholding_opened_blocks_makes_verification_fail() {
        let (x, w) = k3();
        let p = StrawmanParams::new(8, 4).unwrap();
        let mut rng = stream(3, "withhold");
        let (proof, _) = strawman_prove(p, &x, &w, &mut rng).unwrap();
        let mut b = split(proof).a;
        assert!(!strawman_verify(p, &x, &mut b, &mut rng).unwrap());
    }

    #[test]
    fn cheating_prover_needs_every_guess_right() {
        let x = HbInstance::non_hamiltonian_3();
        let p = StrawmanParams::new(2, 2).unwrap();
        let mut rng = stream(4, "cheat");
        let n = 2000;
        let mut acc = 0;
        for _ in 0..n {
            let (proof, _) = strawman_cheat(p, &x, &mut rng);
            acc += derived_verify(p, &x, &mut split(proof).b, &mut rng).unwrap() as usize;
        }
        // Oracle: 2^{-rounds} = 1/4.
        let rate = acc as f64 / n as f64;
        assert!((rate - 0.25).abs() < 3.0 * (0.25f64 * 0.75 / n as f64).sqrt(), "{rate}");
    }

    #[test]
    fn derived_view_does_not_depend_on_the_witness() {
        let x = HbInstance::complete(3);
        let w1 = HbWitness::new(vec![0, 1, 2]);
        let w2 = HbWitness::new(vec![0, 2, 1]);
        let p = StrawmanParams::new(16, 2).unwrap();
        let mut rng = stream(5, "wi");
        let (mut h1, mut h2) = (Histogram::new(), Histogram::new());
        for _ in 0..300 {
            for (w, h) in [(&w1, &mut h1), (&w2, &mut h2)] {
                let (mut b, _) = derived_prove(p, &x, w, &mut rng).unwrap();
                for r in derived_view(p, &x, &mut b, &mut rng).unwrap() {
                    h.add(r);
                }
            }
        }
        assert!(h1.tv_distance(&h2) <= 0.06, "{}", h1.tv_distance(&h2));
    }

    #[test]
    fn split_on_the_crs_construction_usually_breaks_certification() {
        let scheme = CrsScheme::new(ToyNizk, 2);
        let crs = CrsNizkCrs { crs_in: (), crs_out: () };
        let w = BitString::from_u64(0b0110, 4);
        let x = toy_encode(&w).unwrap();
        let mut rng = stream(6, "crs-split");
        let mut wins = 0;
        for _ in 0..20 {
            let v = crs_split_attack(&scheme, &crs, &x, &w, &mut rng).unwrap();
            assert!(v.verify);
            wins += v.both() as usize;
        }
        assert!(wins <= 3);
    }
}
