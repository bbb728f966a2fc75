//! Certified-everlasting NIZK in the shared-EPR model.
//!
//! The HBG hidden bits are used as basis choices: block `i` of the prover's
//! EPR halves is measured in basis θ^i, and the hidden bit handed to the
//! hidden-bits proof is the parity of the Z-basis outcomes of that block,
//! masked by `s_i` from the crs. Opening a block reveals θ^i to the verifier,
//! who measures its own halves the same way. Unopened blocks are deleted by
//! X-measurement and checked against the prover's recorded outcomes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{check_len, usage, Result};
use crate::hbg::{hbg_genbits, hbg_setup, hbg_verify_set, HbgCommitment, HbgCrs, HbgMode, HbgOpenings};
use crate::hidden_bits::{hb_prove, hb_simulate, hb_verify, HbInstance, HbParams, HbProof, HbWitness, RepProof, RevealedBits};
use crate::quantum::{Basis, EprNetwork, Role};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EprParams {
    /// Hidden-bits parameters; ℓ is their total bit count.
    pub hb: HbParams,
    /// Block width k (EPR pairs per hidden bit).
    pub k: usize,
    pub hbg: HbgMode,
}

impl EprParams {
    pub fn new(hb: HbParams, k: usize, hbg: HbgMode) -> Result<Self> {
        if k == 0 || k > 64 {
            return Err(usage(format!("block width must be in 1..=64, got {k}")));
        }
        Ok(Self { hb, k, hbg })
    }

    /// Number of blocks ℓ.
    pub fn ell(&self) -> usize {
        self.hb.total_bits()
    }

    /// Number of committed basis bits, kℓ.
    pub fn hidden_len(&self) -> usize {
        self.k * self.ell()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EprCrs {
    pub params: EprParams,
    pub crs_bg: HbgCrs,
    pub s: BitString,
}

/// The classical proof π = (I, π_hb, com, θ_I, op_I).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprProof {
    /// Opened blocks I, as a mask over ℓ.
    pub opened: BitString,
    pub hb: HbProof,
    pub com: HbgCommitment,
    /// θ^i for i ∈ I, concatenated in increasing i. Unopened bases are absent.
    pub theta_opened: BitString,
    /// Openings of the kℓ-bit commitment at the positions of opened blocks.
    pub openings: HbgOpenings,
}

/// Prover key ρ_P; the P halves stay in the shared network.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EprProverState {
    pub y: BitString,
    pub theta: BitString,
    pub opened: BitString,
    pub k: usize,
}

/// What the honest verifier keeps after verification; the V halves stay in the network.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct VerifierResidual {
    pub opened: BitString,
    pub k: usize,
}

/// Deletion certificate {cert^i} for i ∉ I.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EprDeletionCert {
    pub blocks: Vec<(usize, u64)>,
}

fn low_mask(k: usize) -> u64 {
    if k == 64 {
        u64::MAX
    } else {
        (1u64 << k) - 1
    }
}

/// Parity of outcome bits at Z-basis positions of a block.
#[inline]
pub fn block_parity(y: u64, theta: u64, k: usize) -> bool {
    (y & !theta & low_mask(k)).count_ones() & 1 == 1
}

/// Expands a mask over ℓ blocks into a mask over the kℓ basis bits.
pub fn expand_block_mask(opened: &BitString, k: usize) -> BitString {
    let mut out = BitString::zeros(opened.len() * k);
    let all = low_mask(k);
    for i in opened.ones_positions() {
        out.set_bits(i * k, k, all);
    }
    out
}

fn gather_blocks(src: &BitString, opened: &BitString, k: usize) -> BitString {
    let mut out = BitString::with_capacity(opened.count_ones() * k);
    for i in opened.ones_positions() {
        out.push_bits(k, src.get_bits(i * k, k));
    }
    out
}

fn scatter_blocks(compact: &BitString, opened: &BitString, k: usize) -> BitString {
    let mut out = BitString::zeros(opened.len() * k);
    for (n, i) in opened.ones_positions().enumerate() {
        out.set_bits(i * k, k, compact.get_bits(n * k, k));
    }
    out
}

pub fn epr_setup<R: Rng + ?Sized>(params: EprParams, rng: &mut R) -> Result<(EprCrs, EprNetwork)> {
    let crs_bg = hbg_setup(params.hidden_len(), params.hbg, rng)?;
    let s = BitString::random(params.ell(), rng);
    let net = EprNetwork::new(params.ell(), params.k)?;
    Ok((EprCrs { params, crs_bg, s }, net))
}

/// Measures every P block in its θ basis; returns (y, t).
fn measure_prover<R: Rng + ?Sized>(net: &mut EprNetwork, theta: &BitString, k: usize, rng: &mut R) -> Result<(BitString, BitString)> {
    let ell = net.blocks();
    let mut y = BitString::zeros(ell * k);
    let mut t = BitString::zeros(ell);
    for i in 0..ell {
        let th = theta.get_bits(i * k, k);
        let yi = net.measure_block(Role::Prover, i, th, rng)?;
        y.set_bits(i * k, k, yi);
        t.set(i, block_parity(yi, th, k));
    }
    Ok((y, t))
}

fn check_network(crs: &EprCrs, net: &EprNetwork) -> Result<()> {
    check_len("network blocks", crs.params.ell(), net.blocks())?;
    check_len("network block width", crs.params.k, net.width())
}

fn assemble(com: HbgCommitment, theta: &BitString, ops: &HbgOpenings, opened: BitString, hb: HbProof, k: usize) -> EprProof {
    let bit_mask = expand_block_mask(&opened, k);
    EprProof { theta_opened: gather_blocks(theta, &opened, k), openings: ops.restrict(&bit_mask), opened, hb, com }
}

pub fn epr_prove<R: Rng + ?Sized>(
    crs: &EprCrs,
    net: &mut EprNetwork,
    x: &HbInstance,
    w: &HbWitness,
    rng: &mut R,
) -> Result<(EprProof, EprProverState)> {
    check_network(crs, net)?;
    w.validate(x)?;
    let k = crs.params.k;
    let (com, theta, ops) = hbg_genbits(&crs.crs_bg, rng);
    let (y, t) = measure_prover(net, &theta, k, rng)?;
    let r = t.xor(&crs.s);
    let (opened, hb) = hb_prove(&r, x, w, &crs.params.hb)?;
    let proof = assemble(com, &theta, &ops, opened.clone(), hb, k);
    Ok((proof, EprProverState { y, theta, opened, k }))
}

/// Shape checks that need no quantum access; returns θ_I scattered over kℓ bits.
fn check_proof(crs: &EprCrs, proof: &EprProof) -> Option<BitString> {
    let k = crs.params.k;
    if proof.opened.len() != crs.params.ell() || proof.theta_opened.len() != proof.opened.count_ones() * k {
        return None;
    }
    if proof.hb.reps.len() != crs.params.hb.reps {
        return None;
    }
    let theta = scatter_blocks(&proof.theta_opened, &proof.opened, k);
    let bit_mask = expand_block_mask(&proof.opened, k);
    hbg_verify_set(&crs.crs_bg, &proof.com, &bit_mask, &theta, &proof.openings).then_some(theta)
}

fn hb_check(crs: &EprCrs, x: &HbInstance, proof: &EprProof, t: &BitString) -> bool {
    let r = t.xor(&crs.s).and(&proof.opened);
    match RevealedBits::from_parts(proof.opened.clone(), r) {
        Ok(rev) => hb_verify(&rev, x, &proof.hb, &crs.params.hb),
        Err(_) => false,
    }
}

/// Honest verifier. On a malformed proof it rejects without touching the network.
pub fn epr_verify<R: Rng + ?Sized>(
    crs: &EprCrs,
    net: &mut EprNetwork,
    x: &HbInstance,
    proof: &EprProof,
    rng: &mut R,
) -> Result<(bool, VerifierResidual)> {
    check_network(crs, net)?;
    let k = crs.params.k;
    let residual = VerifierResidual { opened: proof.opened.clone(), k };
    let Some(theta) = check_proof(crs, proof) else {
        return Ok((false, residual));
    };
    let mut t = BitString::zeros(crs.params.ell());
    for i in proof.opened.ones_positions() {
        let th = theta.get_bits(i * k, k);
        let v = net.measure_block(Role::Verifier, i, th, rng)?;
        t.set(i, block_parity(v, th, k));
    }
    Ok((hb_check(crs, x, proof, &t), residual))
}

/// Honest deletion: X-measures every V block outside I.
pub fn epr_del<R: Rng + ?Sized>(net: &mut EprNetwork, residual: &VerifierResidual, rng: &mut R) -> Result<EprDeletionCert> {
    check_len("residual mask", net.blocks(), residual.opened.len())?;
    let all = low_mask(residual.k);
    let mut blocks = Vec::new();
    for i in 0..net.blocks() {
        if !residual.opened.get(i) {
            blocks.push((i, net.measure_block(Role::Verifier, i, all, rng)?));
        }
    }
    Ok(EprDeletionCert { blocks })
}

/// ⊤ iff every unopened block is certified exactly once and matches the
/// recorded y at its Hadamard positions. Bits at Z positions are ignored.
pub fn epr_cert(cert: &EprDeletionCert, state: &EprProverState) -> bool {
    let ell = state.opened.len();
    let k = state.k;
    let mut seen = BitString::zeros(ell);
    for &(i, c) in &cert.blocks {
        if i >= ell || state.opened.get(i) || seen.get(i) {
            return false;
        }
        seen.set(i, true);
        let th = state.theta.get_bits(i * k, k);
        if (c ^ state.y.get_bits(i * k, k)) & th != 0 {
            return false;
        }
    }
    seen.xor(&state.opened).count_ones() == ell
}

/// Measures every V half in the computational basis, before π is seen.
pub fn tilde_measure<R: Rng + ?Sized>(net: &mut EprNetwork, rng: &mut R) -> Result<BitString> {
    let k = net.width();
    let mut v = BitString::zeros(net.blocks() * k);
    for i in 0..net.blocks() {
        v.set_bits(i * k, k, net.measure_block(Role::Verifier, i, 0, rng)?);
    }
    Ok(v)
}

/// The hypothetical verifier Ṽ: uses Z outcomes `v` of all V halves and
/// only the θ^i_j = 0 positions. Meant for soundness experiments only.
pub fn tilde_verify(crs: &EprCrs, v: &BitString, x: &HbInstance, proof: &EprProof) -> bool {
    let k = crs.params.k;
    if v.len() != crs.params.hidden_len() {
        return false;
    }
    let Some(theta) = check_proof(crs, proof) else {
        return false;
    };
    let mut t = BitString::zeros(crs.params.ell());
    for i in proof.opened.ones_positions() {
        t.set(i, block_parity(v.get_bits(i * k, k), theta.get_bits(i * k, k), k));
    }
    hb_check(crs, x, proof, &t)
}

/// Verifier-side access to the shared network: only V halves can be touched.
pub struct VerifierHalves<'a> {
    net: &'a mut EprNetwork,
}

impl<'a> VerifierHalves<'a> {
    pub fn new(net: &'a mut EprNetwork) -> Self {
        Self { net }
    }

    pub fn blocks(&self) -> usize {
        self.net.blocks()
    }

    pub fn width(&self) -> usize {
        self.net.width()
    }

    pub fn measure_block<R: Rng + ?Sized>(&mut self, block: usize, bases: u64, rng: &mut R) -> Result<u64> {
        self.net.measure_block(Role::Verifier, block, bases, rng)
    }

    pub fn density_matrix(&self, qubits: &[(usize, usize)]) -> Result<crate::quantum::DensityMatrix> {
        let q: Vec<_> = qubits.iter().map(|&(i, j)| (Role::Verifier, i, j)).collect();
        self.net.density_matrix(&q)
    }

    /// Runs the honest verifier on these halves.
    pub fn verify<R: Rng + ?Sized>(&mut self, crs: &EprCrs, x: &HbInstance, proof: &EprProof, rng: &mut R) -> Result<(bool, VerifierResidual)> {
        epr_verify(crs, self.net, x, proof, rng)
    }

    pub fn delete<R: Rng + ?Sized>(&mut self, residual: &VerifierResidual, rng: &mut R) -> Result<EprDeletionCert> {
        epr_del(self.net, residual, rng)
    }
}

/// A possibly malicious verifier V* in the CE-ZK experiment. It sees the crs,
/// the statement, the proof and the V halves, and returns a certificate plus
/// its final output.
pub trait VerifierStrategy {
    type Output;

    fn run(&mut self, crs: &EprCrs, x: &HbInstance, proof: &EprProof, v: &mut VerifierHalves<'_>, rng: &mut dyn rand::RngCore) -> Result<(EprDeletionCert, Self::Output)>;
}

/// Real CE-ZK experiment: honest setup and prover, then V*, then the Cert
/// gate. Returns `None` for ⊥.
pub fn epr_real<V: VerifierStrategy, R: Rng>(
    params: EprParams,
    x: &HbInstance,
    w: &HbWitness,
    vstar: &mut V,
    rng: &mut R,
) -> Result<Option<V::Output>> {
    let (crs, mut net) = epr_setup(params, rng)?;
    let (proof, state) = epr_prove(&crs, &mut net, x, w, rng)?;
    let (cert, out) = vstar.run(&crs, x, &proof, &mut VerifierHalves::new(&mut net), rng)?;
    Ok(epr_cert(&cert, &state).then_some(out))
}

/// Witness-free simulator of the real experiment: simulated hidden-bits proof,
/// honest HBG and EPR measurements, and `s_I := t_I ⊕ r_I` with the remaining
/// bits of `s` uniform.
pub fn epr_sim<V: VerifierStrategy, R: Rng>(params: EprParams, x: &HbInstance, vstar: &mut V, rng: &mut R) -> Result<Option<V::Output>> {
    let k = params.k;
    let ell = params.ell();
    let crs_bg = hbg_setup(params.hidden_len(), params.hbg, rng)?;
    let mut net = EprNetwork::new(ell, k)?;
    let (opened, revealed, hb) = hb_simulate(x, &params.hb, rng)?;
    let (com, theta, ops) = hbg_genbits(&crs_bg, rng);
    let (y, t) = measure_prover(&mut net, &theta, k, rng)?;
    let fill = BitString::random(ell, rng).and(&opened.not());
    let s = t.xor(revealed.values()).and(&opened).xor(&fill);
    let crs = EprCrs { params, crs_bg, s };
    let proof = assemble(com, &theta, &ops, opened.clone(), hb, k);
    let state = EprProverState { y, theta, opened, k };
    let (cert, out) = vstar.run(&crs, x, &proof, &mut VerifierHalves::new(&mut net), rng)?;
    Ok(epr_cert(&cert, &state).then_some(out))
}

/// Coarse classical view of an honest verifier: (verdict, |I|, wt(r_I)).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HonestView {
    pub accepted: bool,
    pub opened: usize,
    pub weight: usize,
}

/// V* that verifies and deletes honestly and outputs [`HonestView`].
#[derive(Debug, Default, Clone, Copy)]
pub struct HonestDeleteVerifier;

fn honest_view(crs: &EprCrs, x: &HbInstance, proof: &EprProof, v: &mut VerifierHalves<'_>, rng: &mut dyn rand::RngCore) -> Result<(bool, BitString, VerifierResidual)> {
    let k = crs.params.k;
    let residual = VerifierResidual { opened: proof.opened.clone(), k };
    let Some(theta) = check_proof(crs, proof) else {
        return Ok((false, BitString::zeros(crs.params.ell()), residual));
    };
    let mut t = BitString::zeros(crs.params.ell());
    for i in proof.opened.ones_positions() {
        let th = theta.get_bits(i * k, k);
        t.set(i, block_parity(v.measure_block(i, th, rng)?, th, k));
    }
    let r = t.xor(&crs.s).and(&proof.opened);
    Ok((hb_check(crs, x, proof, &t), r, residual))
}

impl VerifierStrategy for HonestDeleteVerifier {
    type Output = HonestView;

    fn run(&mut self, crs: &EprCrs, x: &HbInstance, proof: &EprProof, v: &mut VerifierHalves<'_>, rng: &mut dyn rand::RngCore) -> Result<(EprDeletionCert, HonestView)> {
        let (accepted, r, residual) = honest_view(crs, x, proof, v, rng)?;
        let cert = v.delete(&residual, rng)?;
        Ok((cert, HonestView { accepted, opened: residual.opened.count_ones(), weight: r.count_ones() }))
    }
}

/// V* that deletes honestly and then re-measures the deleted halves in Z,
/// adding the weight of those outcomes to its output.
#[derive(Debug, Default, Clone, Copy)]
pub struct DeleteThenRemeasureVerifier;

impl VerifierStrategy for DeleteThenRemeasureVerifier {
    type Output = (HonestView, usize);

    fn run(
        &mut self,
        crs: &EprCrs,
        x: &HbInstance,
        proof: &EprProof,
        v: &mut VerifierHalves<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<(EprDeletionCert, (HonestView, usize))> {
        let (accepted, r, residual) = honest_view(crs, x, proof, v, rng)?;
        let cert = v.delete(&residual, rng)?;
        let mut weight = 0;
        for &(i, _) in &cert.blocks {
            weight += v.measure_block(i, 0, rng)?.count_ones() as usize;
        }
        let view = HonestView { accepted, opened: residual.opened.count_ones(), weight: r.count_ones() };
        Ok((cert, (view, weight)))
    }
}

/// V* whose output is the quantum state of its halves of two blocks after
/// honest verification and deletion.
#[derive(Debug, Clone, Copy)]
pub struct TwoBlockStateVerifier {
    pub blocks: [usize; 2],
}

impl VerifierStrategy for TwoBlockStateVerifier {
    type Output = crate::quantum::DensityMatrix;

    fn run(
        &mut self,
        crs: &EprCrs,
        x: &HbInstance,
        proof: &EprProof,
        v: &mut VerifierHalves<'_>,
        rng: &mut dyn rand::RngCore,
    ) -> Result<(EprDeletionCert, Self::Output)> {
        let (_, _, residual) = honest_view(crs, x, proof, v, rng)?;
        let cert = v.delete(&residual, rng)?;
        let k = v.width();
        let qubits: Vec<_> = self.blocks.iter().flat_map(|&i| (0..k).map(move |j| (i, j))).collect();
        Ok((cert, v.density_matrix(&qubits)?))
    }
}

/// Malicious provers for soundness experiments against Ṽ.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheatingProver {
    /// Honest commitment, but uniformly random claims for θ_I.
    RandomClaims,
    /// Measures its halves in Z to learn Ṽ's outcomes exactly, then draws up
    /// to `attempts` commitments and keeps the first whose hidden bits make
    /// every repetition non-useful (so reveal-all passes); otherwise the last.
    Greedy { attempts: usize },
}

/// Produces a cheating proof for `x` using the P halves of `net`.
pub fn cheating_prove<R: Rng + ?Sized>(crs: &EprCrs, net: &mut EprNetwork, x: &HbInstance, strategy: CheatingProver, rng: &mut R) -> Result<EprProof> {
    check_network(crs, net)?;
    let p = crs.params;
    let k = p.k;
    let all_reveal = HbProof { reps: vec![RepProof::RevealAll; p.hb.reps] };
    let everything = BitString::ones(p.ell());
    match strategy {
        CheatingProver::RandomClaims => {
            let (com, _, ops) = hbg_genbits(&crs.crs_bg, rng);
            let theta = BitString::random(p.hidden_len(), rng);
            Ok(assemble(com, &theta, &ops, everything, all_reveal, k))
        }
        CheatingProver::Greedy { attempts } => {
            let mut z = BitString::zeros(p.hidden_len());
            for i in 0..p.ell() {
                z.set_bits(i * k, k, net.measure_block(Role::Prover, i, 0, rng)?);
            }
            let mut last = None;
            for _ in 0..attempts.max(1) {
                let (com, theta, ops) = hbg_genbits(&crs.crs_bg, rng);
                let mut t = BitString::zeros(p.ell());
                for i in 0..p.ell() {
                    t.set(i, block_parity(z.get_bits(i * k, k), theta.get_bits(i * k, k), k));
                }
                let proof = assemble(com, &theta, &ops, everything.clone(), all_reveal.clone(), k);
                if hb_check(crs, x, &proof, &t) {
                    return Ok(proof);
                }
                last = Some(proof);
            }
            Ok(last.expect("at least one attempt"))
        }
    }
}

/// Basis of each qubit of block `i` implied by a θ word.
pub fn block_bases(theta: u64, k: usize) -> Vec<Basis> {
    (0..k).map(|j| Basis::from_theta((theta >> j) & 1 == 1)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::trace_distance;
    use crate::rng::stream;
    use crate::stats::{binomial_sigma, chi_square_uniform_pvalue, Histogram};

    fn small() -> EprParams {
        EprParams::new(HbParams::new(3, 1, 1, 3).unwrap(), 4, HbgMode::Dealer).unwrap()
    }

    fn k3() -> (HbInstance, HbWitness) {
        let x = HbInstance::complete(3);
        let w = x.find_hamiltonian_cycle().unwrap();
        (x, w)
    }

    fn honest_run(p: EprParams, x: &HbInstance, w: &HbWitness, rng: &mut crate::rng::StreamRng) -> (bool, bool) {
        let (crs, mut net) = epr_setup(p, rng).unwrap();
        let (proof, st) = epr_prove(&crs, &mut net, x, w, rng).unwrap();
        let (ok, res) = epr_verify(&crs, &mut net, x, &proof, rng).unwrap();
        let cert = epr_del(&mut net, &res, rng).unwrap();
        (ok, epr_cert(&cert, &st))
    }

    #[test]
    fn setup_dimensions_and_epr_invariant() {
        let p = small();
        let (crs, net) = epr_setup(p, &mut stream(1, "setup")).unwrap();
        assert_eq!(crs.s.len(), 9);
        assert_eq!(crs.crs_bg.k(), 36);
        assert_eq!((net.blocks(), net.width()), (9, 4));
        for i in 0..9 {
            for j in 0..4 {
                assert_eq!(net.pair_state(i, j).unwrap(), crate::quantum::PairState::Bell);
            }
        }
    }

    #[test]
    fn s_is_uniform() {
        let p = small();
        let mut rng = stream(2, "s");
        let mut counts = vec![0u64; 2];
        for _ in 0..2000 {
            let (crs, _) = epr_setup(p, &mut rng).unwrap();
            for b in crs.s.iter() {
                counts[b as usize] += 1;
            }
        }
        assert!(chi_square_uniform_pvalue(&counts) > 0.01);
    }

    #[test]
    fn honest_runs_accept_and_certify() {
        let (x, w) = k3();
        let mut rng = stream(3, "honest");
        for ph in [small(), EprParams::new(HbParams::new(3, 2, 2, 4).unwrap(), 6, HbgMode::naor(10)).unwrap()] {
            for _ in 0..30 {
                assert_eq!(honest_run(ph, &x, &w, &mut rng), (true, true));
            }
        }
    }

    #[test]
    fn verifier_parities_match_prover_on_opened_blocks() {
        let (x, w) = k3();
        let mut rng = stream(4, "t");
        let p = small();
        for _ in 0..50 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, st) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            for i in proof.opened.ones_positions() {
                let th = st.theta.get_bits(i * 4, 4);
                let v = net.measure_block(Role::Verifier, i, th, &mut rng).unwrap();
                assert_eq!(v, st.y.get_bits(i * 4, 4));
            }
        }
    }

    #[test]
    fn hidden_bits_are_uniform_over_runs() {
        let (x, w) = k3();
        let mut rng = stream(5, "r");
        let p = small();
        let mut counts = vec![0u64; 2];
        for _ in 0..2000 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (_, st) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            for i in 0..9 {
                let r = block_parity(st.y.get_bits(i * 4, 4), st.theta.get_bits(i * 4, 4), 4) ^ crs.s.get(i);
                counts[r as usize] += 1;
            }
        }
        assert!(chi_square_uniform_pvalue(&counts) > 0.01);
    }

    #[test]
    fn forged_opening_is_rejected() {
        let (x, w) = k3();
        let mut rng = stream(6, "forge");
        let p = small();
        for pos in 0..36usize {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (mut proof, _) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            if pos >= proof.theta_opened.len() {
                continue;
            }
            proof.theta_opened.flip(pos);
            assert!(!epr_verify(&crs, &mut net, &x, &proof, &mut rng).unwrap().0);
        }
    }

    #[test]
    fn unopened_bases_never_appear_in_the_proof() {
        let (x, w) = k3();
        let mut rng = stream(7, "privacy");
        let p = EprParams::new(HbParams::new(3, 3, 1, 3).unwrap(), 4, HbgMode::naor(10)).unwrap();
        let mut saw_unopened = false;
        for _ in 0..400 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, _) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            assert_eq!(proof.theta_opened.len(), proof.opened.count_ones() * 4);
            let HbgOpenings::Naor(seeds) = &proof.openings else { unreachable!() };
            assert_eq!(seeds.len(), proof.theta_opened.len());
            saw_unopened |= proof.opened.count_ones() < p.ell();
        }
        assert!(saw_unopened);
    }

    #[test]
    fn cert_checks_only_hadamard_positions() {
        let (x, w) = k3();
        let mut rng = stream(8, "cert");
        let p = small();
        let mut checked = 0;
        while checked < 20 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, st) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            let (_, res) = epr_verify(&crs, &mut net, &x, &proof, &mut rng).unwrap();
            let cert = epr_del(&mut net, &res, &mut rng).unwrap();
            if cert.blocks.is_empty() {
                continue;
            }
            checked += 1;
            assert!(epr_cert(&cert, &st));
            let (i, c) = cert.blocks[0];
            let th = st.theta.get_bits(i * 4, 4);
            for j in 0..4 {
                let mut bad = cert.clone();
                bad.blocks[0].1 = c ^ (1 << j);
                assert_eq!(epr_cert(&bad, &st), (th >> j) & 1 == 0);
            }
            let mut missing = cert.clone();
            missing.blocks.pop();
            assert!(!epr_cert(&missing, &st));
        }
    }

    #[test]
    fn z_basis_deletion_passes_at_the_analytic_rate() {
        // Oracle: each Hadamard position of a deleted block matches independently w.p. 1/2.
        let (x, w) = k3();
        let mut rng = stream(9, "zdel");
        let p = small();
        let (mut pass, mut blocks, mut expect) = (0u64, 0u64, 0.0);
        while blocks < 20_000 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, st) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            for i in proof.opened.not().ones_positions() {
                let c = net.measure_block(Role::Verifier, i, 0, &mut rng).unwrap();
                let th = st.theta.get_bits(i * 4, 4);
                let one = EprDeletionCert { blocks: vec![(i, c)] };
                let mut solo = st.clone();
                solo.opened = BitString::ones(9);
                solo.opened.set(i, false);
                pass += epr_cert(&one, &solo) as u64;
                expect += 0.5f64.powi(th.count_ones() as i32);
                blocks += 1;
            }
        }
        let rate = pass as f64 / blocks as f64;
        let analytic = expect / blocks as f64;
        assert!((rate - analytic).abs() <= 3.0 * binomial_sigma(analytic, blocks), "{rate} vs {analytic}");
    }

    #[test]
    fn tilde_agrees_with_honest_verifier_and_commutes_with_timing() {
        let (x, w) = k3();
        let p = small();
        let mut rng = stream(10, "tilde");
        for _ in 0..1000 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let (proof, _) = epr_prove(&crs, &mut net, &x, &w, &mut rng).unwrap();
            let honest = epr_verify(&crs, &mut net.clone(), &x, &proof, &mut rng).unwrap().0;
            let v = tilde_measure(&mut net, &mut rng).unwrap();
            assert_eq!(tilde_verify(&crs, &v, &x, &proof), honest);
        }
        // Measure-first versus measure-after against the greedy cheater.
        let xn = HbInstance::non_hamiltonian_3();
        let (mut first, mut after) = (0u64, 0u64);
        let n = 3000;
        for _ in 0..n {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let v = tilde_measure(&mut net, &mut rng).unwrap();
            let proof = cheating_prove(&crs, &mut net, &xn, CheatingProver::Greedy { attempts: 1 }, &mut rng).unwrap();
            first += tilde_verify(&crs, &v, &xn, &proof) as u64;
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let proof = cheating_prove(&crs, &mut net, &xn, CheatingProver::Greedy { attempts: 1 }, &mut rng).unwrap();
            let v = tilde_measure(&mut net, &mut rng).unwrap();
            after += tilde_verify(&crs, &v, &xn, &proof) as u64;
        }
        let pf = first as f64 / n as f64;
        let pa = after as f64 / n as f64;
        assert!((pf - pa).abs() <= 3.0 * binomial_sigma((pf + pa) / 2.0, n) * 2f64.sqrt());
    }

    #[test]
    fn random_claims_never_pass_the_binding_check() {
        let xn = HbInstance::non_hamiltonian_3();
        let p = small();
        let mut rng = stream(11, "rand");
        for _ in 0..200 {
            let (crs, mut net) = epr_setup(p, &mut rng).unwrap();
            let v = tilde_measure(&mut net, &mut rng).unwrap();
            let proof = cheating_prove(&crs, &mut net, &xn, CheatingProver::RandomClaims, &mut rng).unwrap();
            assert!(!tilde_verify(&crs, &v, &xn, &proof));
        }
    }

    #[test]
    fn sim_matches_real_for_classical_verifiers() {
        let (x, w) = k3();
        let p = small();
        let mut rng = stream(12, "cezk");
        let (mut real, mut sim) = (Histogram::new(), Histogram::new());
        let (mut real2, mut sim2) = (Histogram::new(), Histogram::new());
        for _ in 0..4000 {
            real.add(epr_real(p, &x, &w, &mut HonestDeleteVerifier, &mut rng).unwrap());
            sim.add(epr_sim(p, &x, &mut HonestDeleteVerifier, &mut rng).unwrap());
            real2.add(epr_real(p, &x, &w, &mut DeleteThenRemeasureVerifier, &mut rng).unwrap());
            sim2.add(epr_sim(p, &x, &mut DeleteThenRemeasureVerifier, &mut rng).unwrap());
        }
        assert_eq!(real.count(&None), 0);
        assert!(real.tv_distance(&sim) <= 0.05);
        assert!(real2.tv_distance(&sim2) <= 0.05);
    }

    #[test]
    fn two_block_states_are_close() {
        let (x, w) = k3();
        let p = EprParams::new(HbParams::new(3, 1, 1, 3).unwrap(), 2, HbgMode::Dealer).unwrap();
        let mut rng = stream(13, "qout");
        let mut v = TwoBlockStateVerifier { blocks: [0, 1] };
        let n = 2000;
        let mut real = crate::quantum::DensityMatrix::zeros(16, 16);
        let mut sim = real.clone();
        for _ in 0..n {
            real += epr_real(p, &x, &w, &mut v, &mut rng).unwrap().unwrap();
            sim += epr_sim(p, &x, &mut v, &mut rng).unwrap().unwrap();
        }
        real /= num_complex::Complex64::new(n as f64, 0.0);
        sim /= num_complex::Complex64::new(n as f64, 0.0);
        assert!((real.trace().re - 1.0).abs() < 1e-9);
        assert!(trace_distance(&real, &sim) <= 0.1);
    }
}
