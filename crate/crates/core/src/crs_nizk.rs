//! Certified-everlasting NIZK in the CRS model.
//!
//! The inner proof π_in (ℓ bits) is one-time padded twice: by a key k^0 and by
//! the computational-basis parities of ℓ BB84 blocks of λ qubits each. A
//! second slot ct^1 encrypts 0^ℓ the same way under the next ℓ blocks. The
//! quantum proof is the BB84 register R in superposition, with an outer proof
//! and a Lamport signature of each basis string z computed into registers P
//! and S. Deletion uncomputes P and S and returns X-basis outcomes of R.
//!
//! Two execution modes share this code: [`CrsScheme::prove`] builds the full
//! superposition (toy inner NIZK only, since the support has 2^{wt(θ)} terms),
//! and [`CrsScheme::dry_run`] samples a single z and checks every classical
//! identity with any inner NIZK.
//!
//! The outer NIZK here carries its witness: π_out^z = (θ, k^0, k^1) ∥ nonce^z,
//! and its verifier is [`or_check`]. It is statistically sound and offers no
//! zero-knowledge.

use rand::{Rng, RngCore};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{check_len, usage, Result};
use crate::nizk::InnerNizk;
use crate::quantum::{Basis, Bb84Descriptor, Register, SparseState};

/// Largest R register the quantum mode accepts.
pub const MAX_QUANTUM_R: usize = 20;

/// PRF and one-way function instantiations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Primitives {
    /// SHA-256 with domain separation, truncated.
    Sha256,
    /// Truncation of the input; a deliberately insecure fixture.
    Identity,
}

impl Primitives {
    pub fn prf(self, key: &BitString, input: &BitString, out_len: usize) -> BitString {
        match self {
            Primitives::Sha256 => {
                let mut h = Sha256::new();
                h.update(b"cenizk/prf/v1");
                h.update((key.len() as u64).to_le_bytes());
                h.update(key.to_bytes());
                h.update((input.len() as u64).to_le_bytes());
                h.update(input.to_bytes());
                truncate_digest(&h.finalize(), out_len)
            }
            Primitives::Identity => fit(input, out_len),
        }
    }

    pub fn owf(self, input: &BitString, out_len: usize) -> BitString {
        match self {
            Primitives::Sha256 => {
                let mut h = Sha256::new();
                h.update(b"cenizk/owf/v1");
                h.update((input.len() as u64).to_le_bytes());
                h.update(input.to_bytes());
                truncate_digest(&h.finalize(), out_len)
            }
            Primitives::Identity => fit(input, out_len),
        }
    }
}

fn truncate_digest(d: &[u8], out_len: usize) -> BitString {
    assert!(out_len <= 256, "digest truncation above 256 bits");
    BitString::from_bytes(d, 256).expect("digest has 256 bits").slice(0, out_len)
}

fn fit(input: &BitString, out_len: usize) -> BitString {
    if input.len() >= out_len {
        input.slice(0, out_len)
    } else {
        let mut out = input.clone();
        out.extend_from(&BitString::zeros(out_len - input.len()));
        out
    }
}

/// Parities of `z` over the Z-basis positions of each λ-bit block.
pub fn block_pad(theta: &BitString, z: &BitString, lambda: usize) -> Result<BitString> {
    check_len("pad basis string", z.len(), theta.len())?;
    if lambda == 0 || theta.len() % lambda != 0 {
        return Err(usage(format!("pad input of length {} is not a multiple of λ = {lambda}", theta.len())));
    }
    let mut out = BitString::zeros(theta.len() / lambda);
    for i in 0..out.len() {
        let mut p = false;
        for j in i * lambda..(i + 1) * lambda {
            p ^= !theta.get(j) & z.get(j);
        }
        out.set(i, p);
    }
    Ok(out)
}

/// pad^which over 2ℓ blocks: blocks 0..ℓ give pad^0, blocks ℓ..2ℓ give pad^1.
pub fn pad(theta: &BitString, z: &BitString, lambda: usize, which: bool) -> Result<BitString> {
    let half = theta.len() / 2;
    if theta.len() % 2 != 0 {
        return Err(usage("pad needs an even number of blocks"));
    }
    let (a, b) = if which { (half, theta.len()) } else { (0, half) };
    if z.len() != theta.len() {
        return Err(crate::Error::Length { what: "pad outcome string", expected: theta.len(), got: z.len() });
    }
    block_pad(&theta.slice(a, b), &z.slice(a, b), lambda)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsNizkCrs<C> {
    pub crs_in: C,
    pub crs_out: C,
}

/// Register placement of a quantum proof inside a (possibly larger) state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsLayout {
    pub r: Register,
    pub p: Register,
    pub s: Register,
}

/// The quantum proof σ = (|ψ⟩_{R⊗P⊗S}, ct^0, ct^1).
#[derive(Debug, Clone)]
pub struct CrsProofState {
    pub state: SparseState,
    pub layout: CrsLayout,
    pub ct0: BitString,
    pub ct1: BitString,
}

impl CrsProofState {
    /// Text form: ct^0, ct^1 and the state dump.
    pub fn dump(&self) -> String {
        format!("ct0 {}\nct1 {}\n{}", self.ct0, self.ct1, self.state.dump())
    }
}

/// Prover key ρ_P; entirely classical.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CrsProverKey {
    pub theta: BitString,
    pub y: BitString,
    pub k0: BitString,
    pub k1: BitString,
    pub prfk: BitString,
    /// Lamport preimages (s^{i,0}, s^{i,1}) for each position of R.
    pub lamport: Vec<(BitString, BitString)>,
}

impl CrsProverKey {
    /// ω_out = θ ∥ k^0 ∥ k^1.
    pub fn omega(&self) -> BitString {
        self.theta.concat(&self.k0).concat(&self.k1)
    }
}

/// The outer statement x^z.
#[derive(Debug, Clone, PartialEq)]
pub struct OrStatement<'a, N: InnerNizk> {
    pub x: &'a N::Statement,
    pub crs_in: &'a N::Crs,
    pub ct0: &'a BitString,
    pub ct1: &'a BitString,
    pub z: BitString,
}

pub fn build_or_statement<'a, N: InnerNizk>(
    x: &'a N::Statement,
    crs_in: &'a N::Crs,
    ct0: &'a BitString,
    ct1: &'a BitString,
    z: BitString,
) -> OrStatement<'a, N> {
    OrStatement { x, crs_in, ct0, ct1, z }
}

/// Evaluates both OR clauses for witness ω_out = θ ∥ k^0 ∥ k^1.
pub fn or_clauses<N: InnerNizk>(inner: &N, lambda: usize, stmt: &OrStatement<'_, N>, omega: &BitString) -> (bool, bool) {
    let ell = stmt.ct0.len();
    let rl = 2 * ell * lambda;
    if stmt.ct1.len() != ell || omega.len() != rl + 2 * ell || stmt.z.len() != rl || lambda == 0 {
        return (false, false);
    }
    let theta = omega.slice(0, rl);
    let k0 = omega.slice(rl, rl + ell);
    let k1 = omega.slice(rl + ell, rl + 2 * ell);
    let (Ok(p0), Ok(p1)) = (pad(&theta, &stmt.z, lambda, false), pad(&theta, &stmt.z, lambda, true)) else {
        return (false, false);
    };
    let c0 = inner.verify(stmt.crs_in, stmt.x, &stmt.ct0.xor(&k0).xor(&p0));
    let c1 = inner.verify(stmt.crs_in, stmt.x, &stmt.ct1.xor(&k1).xor(&p1));
    (c0, c1)
}

pub fn or_check<N: InnerNizk>(inner: &N, lambda: usize, stmt: &OrStatement<'_, N>, omega: &BitString) -> bool {
    let (a, b) = or_clauses(inner, lambda, stmt, omega);
    a || b
}

/// Classical bookkeeping of one dry run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct DryRunReport {
    /// ct^0 ⊕ k^0 ⊕ pad^0(z) = π_in.
    pub decrypts: bool,
    pub or_statement: bool,
    pub outer_verifies: bool,
    pub signature_chain: bool,
}

impl DryRunReport {
    pub fn all(&self) -> bool {
        self.decrypts && self.or_statement && self.outer_verifies && self.signature_chain
    }
}

/// The construction over an inner NIZK `N` whose proofs have ℓ bits.
#[derive(Debug, Clone, Copy)]
pub struct CrsScheme<N> {
    pub inner: N,
    pub lambda: usize,
    /// Bits per Lamport preimage and per OWF image.
    pub lamport_len: usize,
    /// Bits of PRF output carried in each outer proof.
    pub nonce_len: usize,
    pub prf_key_len: usize,
    pub prims: Primitives,
}

impl<N: InnerNizk> CrsScheme<N> {
    pub fn new(inner: N, lambda: usize) -> Self {
        Self { inner, lambda, lamport_len: 16, nonce_len: 8, prf_key_len: 128, prims: Primitives::Sha256 }
    }

    pub fn ell(&self) -> usize {
        self.inner.proof_len()
    }

    /// Width of R, 2ℓλ.
    pub fn r_len(&self) -> usize {
        2 * self.ell() * self.lambda
    }

    pub fn p_len(&self) -> usize {
        self.r_len() + 2 * self.ell() + self.nonce_len
    }

    pub fn s_len(&self) -> usize {
        self.r_len() * self.lamport_len
    }

    pub fn layout(&self) -> CrsLayout {
        let (r, p) = (self.r_len(), self.p_len());
        CrsLayout { r: Register::new(0, r), p: Register::new(r, p), s: Register::new(r + p, self.s_len()) }
    }

    pub fn setup(&self, rng: &mut dyn RngCore) -> Result<CrsNizkCrs<N::Crs>> {
        Ok(CrsNizkCrs { crs_in: self.inner.setup(rng)?, crs_out: self.inner.setup(rng)? })
    }

    /// π_out^z = ω_out ∥ F_prfk(z).
    pub fn outer_proof(&self, key: &CrsProverKey, z: &BitString) -> BitString {
        let mut p = key.omega();
        p.extend_from(&self.prims.prf(&key.prfk, z, self.nonce_len));
        p
    }

    /// sig^z = f(s^{1,z_1}) ∥ … ∥ f(s^{2ℓλ, z_{2ℓλ}}).
    pub fn signature(&self, key: &CrsProverKey, z: &BitString) -> BitString {
        let mut out = BitString::with_capacity(self.s_len());
        for (j, (s0, s1)) in key.lamport.iter().enumerate() {
            out.extend_from(&self.prims.owf(if z.get(j) { s1 } else { s0 }, self.lamport_len));
        }
        out
    }

    /// The outer verifier on (z, π_out^z).
    pub fn outer_verify(&self, crs: &CrsNizkCrs<N::Crs>, x: &N::Statement, ct0: &BitString, ct1: &BitString, z: &BitString, proof: &BitString) -> bool {
        let wl = self.r_len() + 2 * self.ell();
        if proof.len() != wl + self.nonce_len {
            return false;
        }
        let stmt = build_or_statement::<N>(x, &crs.crs_in, ct0, ct1, z.clone());
        or_check(&self.inner, self.lambda, &stmt, &proof.slice(0, wl))
    }

    fn sample_key<R: Rng + ?Sized>(&self, rng: &mut R) -> CrsProverKey {
        let rl = self.r_len();
        let ell = self.ell();
        CrsProverKey {
            theta: BitString::random(rl, rng),
            y: BitString::random(rl, rng),
            k0: BitString::random(ell, rng),
            k1: BitString::random(ell, rng),
            prfk: BitString::random(self.prf_key_len, rng),
            lamport: (0..rl).map(|_| (BitString::random(self.lamport_len, rng), BitString::random(self.lamport_len, rng))).collect(),
        }
    }

    fn ciphertexts(&self, key: &CrsProverKey, m0: &BitString, m1: &BitString) -> Result<(BitString, BitString)> {
        let ell = self.ell();
        check_len("slot-0 plaintext", ell, m0.len())?;
        check_len("slot-1 plaintext", ell, m1.len())?;
        let ct0 = m0.xor(&pad(&key.theta, &key.y, self.lambda, false)?).xor(&key.k0);
        let ct1 = m1.xor(&pad(&key.theta, &key.y, self.lambda, true)?).xor(&key.k1);
        Ok((ct0, ct1))
    }

    fn check_quantum(&self) -> Result<()> {
        if self.r_len() > MAX_QUANTUM_R {
            return Err(usage(format!("quantum mode needs 2ℓλ ≤ {MAX_QUANTUM_R}, got {}", self.r_len())));
        }
        Ok(())
    }

    /// Honest prover: slot 0 carries π_in, slot 1 carries 0^ℓ.
    pub fn prove<R: Rng>(&self, crs: &CrsNizkCrs<N::Crs>, x: &N::Statement, w: &N::Witness, rng: &mut R) -> Result<(CrsProofState, CrsProverKey)> {
        self.check_quantum()?;
        let pi = self.inner.prove(&crs.crs_in, x, w, rng)?;
        self.prove_with_plaintexts(&pi, &BitString::zeros(self.ell()), rng)
    }

    /// Builds σ with arbitrary slot plaintexts. Used by the honest prover and
    /// by soundness and slot-swap fixtures.
    pub fn prove_with_plaintexts<R: Rng>(&self, m0: &BitString, m1: &BitString, rng: &mut R) -> Result<(CrsProofState, CrsProverKey)> {
        self.check_quantum()?;
        let key = self.sample_key(rng);
        let (ct0, ct1) = self.ciphertexts(&key, m0, m1)?;
        let mut state = SparseState::prep_bb84(&Bb84Descriptor::new(key.y.clone(), key.theta.clone())?);
        let p = state.append_register(self.p_len());
        let s = state.append_register(self.s_len());
        let r = Register::new(0, self.r_len());
        state.apply_oracle(&[r], p, |z| self.outer_proof(&key, z))?;
        state.apply_oracle(&[r], s, |z| self.signature(&key, z))?;
        Ok((CrsProofState { state, layout: CrsLayout { r, p, s }, ct0, ct1 }, key))
    }

    /// Coherently evaluates the outer verifier into a fresh OUT qubit and
    /// measures it. Returns the outcome and the post-measurement proof state,
    /// for either outcome.
    pub fn verify<R: Rng + ?Sized>(&self, crs: &CrsNizkCrs<N::Crs>, x: &N::Statement, sigma: CrsProofState, rng: &mut R) -> Result<(bool, CrsProofState)> {
        let CrsProofState { mut state, layout, ct0, ct1 } = sigma;
        check_len("proof register R", self.r_len(), layout.r.len)?;
        check_len("proof register P", self.p_len(), layout.p.len)?;
        if ct0.len() != self.ell() || ct1.len() != self.ell() {
            return Ok((false, CrsProofState { state, layout, ct0, ct1 }));
        }
        let out = state.append_register(1);
        let rl = self.r_len();
        state.apply_oracle(&[layout.r, layout.p], out, |zp| {
            let z = zp.slice(0, rl);
            let ok = self.outer_verify(crs, x, &ct0, &ct1, &z, &zp.slice(rl, zp.len()));
            BitString::from_bools([ok])
        })?;
        let bit = state.measure_qubit(out.start, Basis::Z, rng)?;
        state.discard(out)?;
        Ok((bit, CrsProofState { state, layout, ct0, ct1 }))
    }

    /// Exact probability that [`CrsScheme::verify`] outputs 1.
    pub fn verify_probability(&self, crs: &CrsNizkCrs<N::Crs>, x: &N::Statement, sigma: &CrsProofState) -> Result<f64> {
        let mut state = sigma.state.clone();
        let out = state.append_register(1);
        let rl = self.r_len();
        state.apply_oracle(&[sigma.layout.r, sigma.layout.p], out, |zp| {
            let ok = self.outer_verify(crs, x, &sigma.ct0, &sigma.ct1, &zp.slice(0, rl), &zp.slice(rl, zp.len()));
            BitString::from_bools([ok])
        })?;
        Ok(state.outcome_probabilities(out.start, Basis::Z)?.1)
    }

    /// Cert steps up to the X measurement: Test projection, then uncompute of
    /// P and S. `None` means the Test projection has probability below the
    /// prune threshold.
    pub fn cert_prepare(&self, key: &CrsProverKey, sigma: CrsProofState) -> Result<Option<CrsProofState>> {
        let CrsProofState { mut state, layout, ct0, ct1 } = sigma;
        check_len("proof register S", self.s_len(), layout.s.len)?;
        let t = state.append_register(1);
        let rl = self.r_len();
        state.apply_oracle(&[layout.r, layout.s], t, |zs| {
            BitString::from_bools([self.signature(key, &zs.slice(0, rl)) == zs.slice(rl, zs.len())])
        })?;
        let (_, post) = state.project(t.start, Basis::Z, true)?;
        let Some(mut state) = post else {
            return Ok(None);
        };
        state.discard(t)?;
        state.apply_oracle(&[layout.r], layout.p, |z| self.outer_proof(key, z))?;
        state.apply_oracle(&[layout.r], layout.s, |z| self.signature(key, z))?;
        Ok(Some(CrsProofState { state, layout, ct0, ct1 }))
    }

    /// X-measures R and checks the outcomes at Hadamard positions against y.
    pub fn cert_finish<R: Rng + ?Sized>(&self, key: &CrsProverKey, mut sigma: CrsProofState, rng: &mut R) -> Result<bool> {
        let cert = sigma.state.measure_register(sigma.layout.r, Basis::X, rng)?;
        Ok(cert.xor(&key.y).and(&key.theta).is_zero())
    }

    pub fn cert<R: Rng + ?Sized>(&self, key: &CrsProverKey, sigma: CrsProofState, rng: &mut R) -> Result<bool> {
        match self.cert_prepare(key, sigma)? {
            None => Ok(false),
            Some(s) => self.cert_finish(key, s, rng),
        }
    }

    /// Exact probability that [`CrsScheme::cert`] outputs ⊤.
    pub fn cert_probability(&self, key: &CrsProverKey, sigma: &CrsProofState) -> Result<f64> {
        let t_prob = {
            let mut st = sigma.state.clone();
            let t = st.append_register(1);
            let rl = self.r_len();
            st.apply_oracle(&[sigma.layout.r, sigma.layout.s], t, |zs| {
                BitString::from_bools([self.signature(key, &zs.slice(0, rl)) == zs.slice(rl, zs.len())])
            })?;
            st.outcome_probabilities(t.start, Basis::Z)?.1
        };
        let Some(prepared) = self.cert_prepare(key, sigma.clone())? else {
            return Ok(0.0);
        };
        let mut p = t_prob;
        let mut st = prepared.state;
        for j in key.theta.ones_positions() {
            let (pj, post) = st.project(prepared.layout.r.at(j), Basis::X, key.y.get(j))?;
            p *= pj;
            match post {
                Some(s) => st = s,
                None => return Ok(0.0),
            }
        }
        Ok(p)
    }

    /// Classical mode: samples one z from the support of |y⟩^θ and checks the
    /// bookkeeping identities that the quantum mode relies on.
    pub fn dry_run<R: Rng>(&self, crs: &CrsNizkCrs<N::Crs>, x: &N::Statement, w: &N::Witness, rng: &mut R) -> Result<DryRunReport> {
        let pi = self.inner.prove(&crs.crs_in, x, w, rng)?;
        let key = self.sample_key(rng);
        let (ct0, ct1) = self.ciphertexts(&key, &pi, &BitString::zeros(self.ell()))?;
        let noise = BitString::random(self.r_len(), rng).and(&key.theta);
        let z = key.y.and(&key.theta.not()).xor(&noise);
        let decrypts = ct0.xor(&key.k0).xor(&pad(&key.theta, &z, self.lambda, false)?) == pi;
        let stmt = build_or_statement::<N>(x, &crs.crs_in, &ct0, &ct1, z.clone());
        let or_statement = or_check(&self.inner, self.lambda, &stmt, &key.omega());
        let outer_verifies = self.outer_verify(crs, x, &ct0, &ct1, &z, &self.outer_proof(&key, &z));
        let sig = self.signature(&key, &z);
        let signature_chain = (0..self.r_len()).all(|j| {
            let (s0, s1) = &key.lamport[j];
            let pre = if z.get(j) { s1 } else { s0 };
            sig.slice(j * self.lamport_len, (j + 1) * self.lamport_len) == self.prims.owf(pre, self.lamport_len)
        });
        Ok(DryRunReport { decrypts, or_statement, outer_verifies, signature_chain })
    }
}

/// CNOT-copies R, P and S into fresh registers. The returned state holds
/// the original layout; the second value is the layout of the copy.
pub fn clone_attack(sigma: CrsProofState) -> Result<(CrsProofState, CrsLayout)> {
    let CrsProofState { mut state, layout, ct0, ct1 } = sigma;
    let r = state.append_register(layout.r.len);
    let p = state.append_register(layout.p.len);
    let s = state.append_register(layout.s.len);
    let copy = Register::new(r.start, r.len + p.len + s.len);
    state.apply_oracle(&[layout.r, layout.p, layout.s], copy, |v| v.clone())?;
    Ok((CrsProofState { state, layout, ct0, ct1 }, CrsLayout { r, p, s }))
}
