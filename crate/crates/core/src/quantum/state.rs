use std::collections::{BTreeMap, HashMap, HashSet};
use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt::Write as _;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{check_len, usage, Error, Result};

/// Amplitudes below this magnitude are dropped.
pub const PRUNE_THRESHOLD: f64 = 1e-12;
/// Allowed deviation of Σ|α|² from 1.
pub const NORM_TOLERANCE: f64 = 1e-9;
/// Largest subsystem for which a dense density matrix is built.
pub const DENSE_QUBIT_LIMIT: usize = 12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Basis {
    Z,
    X,
}

impl Basis {
    /// θ-bit convention: 0 is computational, 1 is Hadamard.
    #[inline]
    pub fn from_theta(bit: bool) -> Self {
        if bit {
            Basis::X
        } else {
            Basis::Z
        }
    }

    #[inline]
    pub fn is_hadamard(self) -> bool {
        self == Basis::X
    }

    pub fn all(theta: &BitString) -> Vec<Basis> {
        theta.iter().map(Basis::from_theta).collect()
    }
}

/// A contiguous run of qubits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Register {
    pub start: usize,
    pub len: usize,
}

impl Register {
    pub fn new(start: usize, len: usize) -> Self {
        Self { start, len }
    }

    #[inline]
    pub fn end(&self) -> usize {
        self.start + self.len
    }

    #[inline]
    pub fn at(&self, i: usize) -> usize {
        assert!(i < self.len);
        self.start + i
    }

    pub fn indices(&self) -> std::ops::Range<usize> {
        self.start..self.end()
    }

    pub fn sub(&self, offset: usize, len: usize) -> Register {
        assert!(offset + len <= self.len);
        Register::new(self.start + offset, len)
    }

    pub fn overlaps(&self, other: &Register) -> bool {
        self.start < other.end() && other.start < self.end()
    }
}

/// BB84 encoding of `y` under basis string `theta`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Bb84Descriptor {
    pub y: BitString,
    pub theta: BitString,
}

impl Bb84Descriptor {
    pub fn new(y: BitString, theta: BitString) -> Result<Self> {
        check_len("BB84 basis string", y.len(), theta.len())?;
        Ok(Self { y, theta })
    }

    pub fn random<R: Rng + ?Sized>(len: usize, rng: &mut R) -> Self {
        let y = BitString::random(len, rng);
        let theta = BitString::random(len, rng);
        Self { y, theta }
    }

    pub fn len(&self) -> usize {
        self.y.len()
    }

    pub fn is_empty(&self) -> bool {
        self.y.is_empty()
    }
}

/// Sparse pure state over `num_qubits` qubits.
///
/// Each qubit carries a storage frame: keys record qubit `j` in the
/// computational basis when its frame is `Z` and in the Hadamard basis when it
/// is `X`. Measuring in the other frame combines the two partner terms
/// `(α₀ ± α₁)/√2` and switches the frame, so measurement never increases the
/// term count. Public views ([`SparseState::z_amplitudes`], [`SparseState::dump`])
/// always speak the computational basis.
#[derive(Debug, Clone)]
pub struct SparseState {
    num_qubits: usize,
    terms: HashMap<BitString, Complex64>,
    hadamard_frame: BitString,
    dead: BitString,
}

struct PairedTerm {
    /// Key with bit `i` cleared.
    base: BitString,
    a0: Complex64,
    a1: Complex64,
}

impl SparseState {
    /// |0…0⟩.
    pub fn new(num_qubits: usize) -> Self {
        Self::basis_state(&BitString::zeros(num_qubits))
    }

    pub fn basis_state(bits: &BitString) -> Self {
        let mut terms = HashMap::with_capacity(1);
        terms.insert(bits.clone(), Complex64::new(1.0, 0.0));
        Self {
            num_qubits: bits.len(),
            terms,
            hadamard_frame: BitString::zeros(bits.len()),
            dead: BitString::zeros(bits.len()),
        }
    }

    /// Builds a state from computational-basis amplitudes; duplicates are summed.
    pub fn from_amplitudes<I>(num_qubits: usize, amps: I) -> Result<Self>
    where
        I: IntoIterator<Item = (BitString, Complex64)>,
    {
        let mut terms: HashMap<BitString, Complex64> = HashMap::new();
        for (k, a) in amps {
            check_len("basis key", num_qubits, k.len())?;
            *terms.entry(k).or_default() += a;
        }
        let mut s = Self {
            num_qubits,
            terms,
            hadamard_frame: BitString::zeros(num_qubits),
            dead: BitString::zeros(num_qubits),
        };
        s.prune();
        let n = s.norm_sqr();
        if (n - 1.0).abs() > NORM_TOLERANCE {
            return Err(usage(format!("amplitudes are not normalised (Σ|α|² = {n})")));
        }
        Ok(s)
    }

    /// H^{θ_1}|y_1⟩ ⊗ … ⊗ H^{θ_n}|y_n⟩ expanded in the computational basis.
    pub fn prep_bb84(desc: &Bb84Descriptor) -> Self {
        let len = desc.len();
        let hpos: Vec<usize> = desc.theta.ones_positions().collect();
        let w = hpos.len();
        assert!(w <= 26, "BB84 state with {w} Hadamard qubits is too large to expand");
        let amp = 2f64.powf(-(w as f64) / 2.0);
        let mut terms = HashMap::with_capacity(1 << w);
        let mut key = desc.y.clone();
        for mask in 0u64..(1u64 << w) {
            let mut sign = false;
            for (b, &p) in hpos.iter().enumerate() {
                let zb = (mask >> b) & 1 == 1;
                key.set(p, zb);
                sign ^= zb & desc.y.get(p);
            }
            let a = if sign { -amp } else { amp };
            terms.insert(key.clone(), Complex64::new(a, 0.0));
        }
        Self {
            num_qubits: len,
            terms,
            hadamard_frame: BitString::zeros(len),
            dead: BitString::zeros(len),
        }
    }

    #[inline]
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    #[inline]
    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn norm_sqr(&self) -> f64 {
        self.terms.values().map(|a| a.norm_sqr()).sum()
    }

    pub fn frame(&self, qubit: usize) -> Basis {
        Basis::from_theta(self.hadamard_frame.get(qubit))
    }

    pub fn is_discarded(&self, qubit: usize) -> bool {
        self.dead.get(qubit)
    }

    /// Stored terms in the storage frame (see the type docs).
    pub fn stored_terms(&self) -> impl Iterator<Item = (&BitString, &Complex64)> {
        self.terms.iter()
    }

    fn check_qubit(&self, q: usize) -> Result<()> {
        if q >= self.num_qubits {
            return Err(usage(format!("qubit {q} out of range for {} qubits", self.num_qubits)));
        }
        if self.dead.get(q) {
            return Err(usage(format!("qubit {q} has already been traced out")));
        }
        Ok(())
    }

    fn check_register(&self, r: &Register) -> Result<()> {
        if r.end() > self.num_qubits {
            return Err(usage(format!("register {}..{} out of range for {} qubits", r.start, r.end(), self.num_qubits)));
        }
        for q in r.indices() {
            self.check_qubit(q)?;
        }
        Ok(())
    }

    fn prune(&mut self) {
        self.terms.retain(|_, a| a.norm() >= PRUNE_THRESHOLD);
    }

    fn debug_check_norm(&self) {
        debug_assert!(
            (self.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE,
            "state norm drifted to {}",
            self.norm_sqr()
        );
    }

    fn renormalize(&mut self, prob: f64) {
        let scale = 1.0 / prob.sqrt();
        for a in self.terms.values_mut() {
            *a *= scale;
        }
        self.prune();
        self.debug_check_norm();
    }

    /// Groups terms into partner pairs differing only in bit `q`.
    fn paired(&self, q: usize) -> Vec<PairedTerm> {
        let mut out = Vec::with_capacity(self.terms.len());
        for (k, &a) in &self.terms {
            let bit = k.get(q);
            let mut partner = k.clone();
            partner.flip(q);
            match (bit, self.terms.get(&partner)) {
                (false, p) => {
                    let a1 = p.copied().unwrap_or_default();
                    let mut base = k.clone();
                    base.set(q, false);
                    out.push(PairedTerm { base, a0: a, a1 });
                }
                (true, None) => {
                    partner.set(q, false);
                    out.push(PairedTerm { base: partner, a0: Complex64::default(), a1: a });
                }
                (true, Some(_)) => {}
            }
        }
        out
    }

    #[inline]
    fn combine(a0: Complex64, a1: Complex64, outcome: bool) -> Complex64 {
        if outcome {
            (a0 - a1) * FRAC_1_SQRT_2
        } else {
            (a0 + a1) * FRAC_1_SQRT_2
        }
    }

    /// Born probabilities (p0, p1) for measuring `q` in `basis`.
    pub fn outcome_probabilities(&self, q: usize, basis: Basis) -> Result<(f64, f64)> {
        self.check_qubit(q)?;
        let (mut p0, mut p1) = (0.0, 0.0);
        if self.frame(q) == basis {
            for (k, a) in &self.terms {
                if k.get(q) {
                    p1 += a.norm_sqr();
                } else {
                    p0 += a.norm_sqr();
                }
            }
        } else {
            for t in self.paired(q) {
                p0 += Self::combine(t.a0, t.a1, false).norm_sqr();
                p1 += Self::combine(t.a0, t.a1, true).norm_sqr();
            }
        }
        Ok((p0, p1))
    }

    /// Replaces the state by the unnormalised branch where `q` reads `value` in `basis`.
    fn restrict(&mut self, q: usize, basis: Basis, value: bool) {
        if self.frame(q) == basis {
            self.terms.retain(|k, _| k.get(q) == value);
        } else {
            let pairs = self.paired(q);
            let mut terms = HashMap::with_capacity(pairs.len());
            for t in pairs {
                let b = Self::combine(t.a0, t.a1, value);
                if b.norm() >= PRUNE_THRESHOLD {
                    let mut k = t.base;
                    k.set(q, value);
                    terms.insert(k, b);
                }
            }
            self.terms = terms;
            self.hadamard_frame.set(q, basis.is_hadamard());
        }
    }

    pub fn measure_qubit<R: Rng + ?Sized>(&mut self, q: usize, basis: Basis, rng: &mut R) -> Result<bool> {
        let (p0, p1) = self.outcome_probabilities(q, basis)?;
        let outcome = rng.gen::<f64>() * (p0 + p1) >= p0;
        let p = if outcome { p1 } else { p0 };
        self.restrict(q, basis, outcome);
        self.renormalize(p);
        Ok(outcome)
    }

    /// Measures each `indices[j]` in `bases[j]`, in order.
    pub fn measure<R: Rng + ?Sized>(&mut self, indices: &[usize], bases: &[Basis], rng: &mut R) -> Result<BitString> {
        check_len("measurement bases", indices.len(), bases.len())?;
        let mut seen = HashSet::with_capacity(indices.len());
        for &q in indices {
            self.check_qubit(q)?;
            if !seen.insert(q) {
                return Err(usage(format!("qubit {q} listed twice in one measurement")));
            }
        }
        let mut out = BitString::with_capacity(indices.len());
        for (&q, &b) in indices.iter().zip(bases) {
            out.push(self.measure_qubit(q, b, rng)?);
        }
        Ok(out)
    }

    pub fn measure_register<R: Rng + ?Sized>(&mut self, reg: Register, basis: Basis, rng: &mut R) -> Result<BitString> {
        let idx: Vec<usize> = reg.indices().collect();
        self.measure(&idx, &vec![basis; idx.len()], rng)
    }

    /// Post-selects qubit `q` on `value` in `basis`.
    ///
    /// Returns the Born probability and the renormalised post-measurement
    /// state, or `None` when the probability is below the prune threshold.
    pub fn project(mut self, q: usize, basis: Basis, value: bool) -> Result<(f64, Option<SparseState>)> {
        let (p0, p1) = self.outcome_probabilities(q, basis)?;
        let p = if value { p1 } else { p0 };
        if p < PRUNE_THRESHOLD {
            return Ok((p, None));
        }
        self.restrict(q, basis, value);
        self.renormalize(p);
        Ok((p, Some(self)))
    }

    /// All branches of measuring `indices` in `bases`: (outcomes, probability, post-state).
    pub fn outcome_distribution(&self, indices: &[usize], bases: &[Basis]) -> Result<Vec<(BitString, f64, SparseState)>> {
        check_len("measurement bases", indices.len(), bases.len())?;
        let mut branches = vec![(BitString::new(), 1.0, self.clone())];
        for (&q, &b) in indices.iter().zip(bases) {
            let mut next = Vec::with_capacity(branches.len() * 2);
            for (out, p, st) in branches {
                for v in [false, true] {
                    let (pv, post) = st.clone().project(q, b, v)?;
                    if let Some(post) = post {
                        let mut o = out.clone();
                        o.push(v);
                        next.push((o, p * pv, post));
                    }
                }
            }
            branches = next;
        }
        Ok(branches)
    }

    /// Rewrites qubit `q` into the computational frame (may double the term count).
    fn materialize_z(&mut self, q: usize) {
        if self.frame(q) == Basis::Z {
            return;
        }
        let pairs = self.paired(q);
        let mut terms = HashMap::with_capacity(pairs.len() * 2);
        for t in pairs {
            for v in [false, true] {
                let b = Self::combine(t.a0, t.a1, v);
                if b.norm() >= PRUNE_THRESHOLD {
                    let mut k = t.base.clone();
                    k.set(q, v);
                    terms.insert(k, b);
                }
            }
        }
        self.terms = terms;
        self.hadamard_frame.set(q, false);
    }

    fn materialize_register_z(&mut self, r: &Register) {
        for q in r.indices() {
            self.materialize_z(q);
        }
    }

    /// |z⟩_in |t⟩_out ↦ |z⟩_in |t ⊕ f(z)⟩_out, where `z` is the concatenation of `inputs`.
    pub fn apply_oracle<F>(&mut self, inputs: &[Register], out: Register, mut f: F) -> Result<()>
    where
        F: FnMut(&BitString) -> BitString,
    {
        self.check_register(&out)?;
        for (i, r) in inputs.iter().enumerate() {
            self.check_register(r)?;
            if r.overlaps(&out) {
                return Err(usage("oracle input and output registers overlap"));
            }
            if inputs[..i].iter().any(|o| o.overlaps(r)) {
                return Err(usage("oracle input registers overlap"));
            }
        }
        for r in inputs {
            self.materialize_register_z(r);
        }
        self.materialize_register_z(&out);
        let in_width: usize = inputs.iter().map(|r| r.len).sum();
        let mut terms = HashMap::with_capacity(self.terms.len());
        for (k, a) in self.terms.drain() {
            let mut z = BitString::with_capacity(in_width);
            for r in inputs {
                append_slice(&mut z, &k, r);
            }
            let fz = f(&z);
            if fz.len() != out.len {
                return Err(Error::Length { what: "oracle output", expected: out.len, got: fz.len() });
            }
            let mut nk = k;
            xor_into(&mut nk, out.start, &fz);
            terms.insert(nk, a);
        }
        self.terms = terms;
        Ok(())
    }

    /// Appends a zero-initialised register and returns it.
    pub fn append_register(&mut self, width: usize) -> Register {
        assert!(width >= 1, "register width must be positive");
        let start = self.num_qubits;
        let terms = self
            .terms
            .drain()
            .map(|(mut k, a)| {
                let mut rem = width;
                while rem > 0 {
                    let w = rem.min(64);
                    k.push_bits(w, 0);
                    rem -= w;
                }
                (k, a)
            })
            .collect();
        self.terms = terms;
        self.num_qubits += width;
        for _ in 0..width {
            self.hadamard_frame.push(false);
            self.dead.push(false);
        }
        Register::new(start, width)
    }

    /// Traces out a register that holds a definite value in its storage frame.
    ///
    /// The qubits keep their indices but any later use is a usage error.
    pub fn discard(&mut self, reg: Register) -> Result<BitString> {
        self.check_register(&reg)?;
        let mut it = self.terms.keys();
        let first = it.next().expect("state has at least one term").slice(reg.start, reg.end());
        for k in it {
            if k.slice(reg.start, reg.end()) != first {
                return Err(usage("cannot discard a register that is entangled with the rest of the state"));
            }
        }
        for q in reg.indices() {
            self.dead.set(q, true);
        }
        Ok(first)
    }

    /// Computational-basis amplitudes of the whole state (discarded qubits included).
    pub fn z_amplitudes(&self) -> BTreeMap<BitString, Complex64> {
        let mut s = self.clone();
        for q in 0..self.num_qubits {
            s.materialize_z(q);
        }
        s.terms.into_iter().collect()
    }

    /// Computational-basis amplitudes restricted to `reg`, assuming every other
    /// live qubit is in a definite state. Fails if `reg` is entangled with them.
    pub fn register_amplitudes(&self, reg: Register) -> Result<BTreeMap<BitString, Complex64>> {
        self.check_register(&reg)?;
        let mut out: BTreeMap<BitString, Complex64> = BTreeMap::new();
        let mut rest: Option<BitString> = None;
        for (k, a) in self.z_amplitudes() {
            let mut other = k.clone();
            for q in reg.indices() {
                other.set(q, false);
            }
            match &rest {
                None => rest = Some(other),
                Some(r) if *r != other => return Err(usage("register is not in a product state with the rest")),
                _ => {}
            }
            out.insert(k.slice(reg.start, reg.end()), a);
        }
        Ok(out)
    }

    /// Reduced density matrix on `subset`; row index bit order follows the
    /// subset order, with `subset[0]` as the most significant bit.
    pub fn density_matrix(&self, subset: &[usize]) -> Result<DMatrix<Complex64>> {
        if subset.len() > DENSE_QUBIT_LIMIT {
            return Err(Error::DenseGuard { requested: subset.len(), limit: DENSE_QUBIT_LIMIT });
        }
        for &q in subset {
            self.check_qubit(q)?;
        }
        let mut s = self.clone();
        for &q in subset {
            s.materialize_z(q);
        }
        let d = 1usize << subset.len();
        let mut groups: HashMap<BitString, Vec<(usize, Complex64)>> = HashMap::new();
        for (k, a) in &s.terms {
            let mut rest = k.clone();
            let mut idx = 0usize;
            for &q in subset {
                idx = (idx << 1) | k.get(q) as usize;
                rest.set(q, false);
            }
            groups.entry(rest).or_default().push((idx, *a));
        }
        let mut rho = DMatrix::<Complex64>::zeros(d, d);
        for v in groups.values() {
            for &(i, ai) in v {
                for &(j, aj) in v {
                    rho[(i, j)] += ai * aj.conj();
                }
            }
        }
        Ok(rho)
    }

    /// One line per computational-basis term, "bitstring real imag", sorted.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        for (k, a) in self.z_amplitudes() {
            let _ = writeln!(s, "{k} {:.12} {:.12}", a.re, a.im);
        }
        s
    }

    /// Amplitude-map equality up to `tol` per amplitude.
    pub fn approx_eq(&self, other: &SparseState, tol: f64) -> bool {
        if self.num_qubits != other.num_qubits {
            return false;
        }
        amplitude_maps_close(&self.z_amplitudes(), &other.z_amplitudes(), tol)
    }
}

pub fn amplitude_maps_close(a: &BTreeMap<BitString, Complex64>, b: &BTreeMap<BitString, Complex64>, tol: f64) -> bool {
    let zero = Complex64::default();
    a.iter().all(|(k, x)| (x - b.get(k).unwrap_or(&zero)).norm() <= tol)
        && b.iter().all(|(k, y)| (y - a.get(k).unwrap_or(&zero)).norm() <= tol)
}

fn append_slice(dst: &mut BitString, src: &BitString, r: &Register) {
    let mut off = r.start;
    let end = r.end();
    while off < end {
        let w = (end - off).min(64);
        dst.push_bits(w, src.get_bits(off, w));
        off += w;
    }
}

fn xor_into(dst: &mut BitString, start: usize, v: &BitString) {
    let mut off = 0;
    while off < v.len() {
        let w = (v.len() - off).min(64);
        let cur = dst.get_bits(start + off, w);
        dst.set_bits(start + off, w, cur ^ v.get_bits(off, w));
        off += w;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::bits;
    use crate::rng::stream;
    use crate::stats::chi_square_uniform_pvalue;
    use proptest::prelude::*;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn bb84(y: &str, t: &str) -> SparseState {
        SparseState::prep_bb84(&Bb84Descriptor::new(bits(y), bits(t)).unwrap())
    }

    #[test]
    fn bb84_hadamard_examples() {
        let plus = bb84("0", "1").z_amplitudes();
        assert!((plus[&bits("0")] - c(FRAC_1_SQRT_2)).norm() < 1e-12);
        assert!((plus[&bits("1")] - c(FRAC_1_SQRT_2)).norm() < 1e-12);
        let minus = bb84("1", "1").z_amplitudes();
        assert!((minus[&bits("1")] - c(-FRAC_1_SQRT_2)).norm() < 1e-12);
        let comp = bb84("10", "00");
        assert_eq!(comp.num_terms(), 1);
        assert!((comp.z_amplitudes()[&bits("10")] - c(1.0)).norm() < 1e-12);
    }

    #[test]
    fn bb84_sign_rule() {
        let s = bb84("1101", "1011");
        assert_eq!(s.num_terms(), 8);
        for (z, a) in s.z_amplitudes() {
            let sign = [0, 2, 3].iter().filter(|&&j| bits("1101").get(j) && z.get(j)).count() % 2;
            let expect = if sign == 1 { -1.0 } else { 1.0 } * 2f64.powf(-1.5);
            assert!((a.re - expect).abs() < 1e-12 && a.im == 0.0);
        }
    }

    #[test]
    fn plus_state_z_measurement_is_fair() {
        let mut rng = stream(1, "plus");
        let mut counts = [0u64; 2];
        for _ in 0..10_000 {
            let mut s = bb84("0", "1");
            counts[s.measure_qubit(0, Basis::Z, &mut rng).unwrap() as usize] += 1;
        }
        assert!(chi_square_uniform_pvalue(&counts) > 0.01, "{counts:?}");
    }

    #[test]
    fn all_x_measurement_recovers_y_exhaustively() {
        let mut rng = stream(2, "allx");
        for y in 0..16u64 {
            let yb = BitString::from_u64(y, 4);
            let mut s = SparseState::prep_bb84(&Bb84Descriptor::new(yb.clone(), BitString::ones(4)).unwrap());
            let out = s.measure(&[0, 1, 2, 3], &[Basis::X; 4], &mut rng).unwrap();
            assert_eq!(out, yb);
            assert_eq!(s.num_terms(), 1);
        }
    }

    #[test]
    fn x_measurement_does_not_grow_terms_but_z_after_x_is_physical() {
        let mut rng = stream(3, "frame");
        let mut s = SparseState::new(1);
        let o = s.measure_qubit(0, Basis::X, &mut rng).unwrap();
        assert_eq!(s.num_terms(), 1);
        let (p0, p1) = s.outcome_probabilities(0, Basis::Z).unwrap();
        assert!((p0 - 0.5).abs() < 1e-12 && (p1 - 0.5).abs() < 1e-12);
        let amps = s.z_amplitudes();
        let sign = if o { -1.0 } else { 1.0 };
        assert!((amps[&bits("1")] - c(sign * FRAC_1_SQRT_2)).norm() < 1e-12);
    }

    #[test]
    fn project_examples() {
        let (p, s) = SparseState::new(1).project(0, Basis::Z, false).unwrap();
        assert_eq!(p, 1.0);
        assert!(s.unwrap().approx_eq(&SparseState::new(1), 1e-12));
        let (p, s) = SparseState::new(1).project(0, Basis::Z, true).unwrap();
        assert_eq!(p, 0.0);
        assert!(s.is_none());
        let (p, s) = bb84("0", "1").project(0, Basis::Z, false).unwrap();
        assert!((p - 0.5).abs() < 1e-12);
        assert!(s.unwrap().approx_eq(&SparseState::new(1), 1e-12));
    }

    #[test]
    fn oracle_examples() {
        // identity copy
        let mut s = bb84("00", "11");
        let out = s.append_register(2);
        s.apply_oracle(&[Register::new(0, 2)], out, |z| z.clone()).unwrap();
        for k in s.z_amplitudes().keys() {
            assert_eq!(k.slice(0, 2), k.slice(2, 4));
        }
        assert_eq!(s.num_terms(), 4);
        // parity on a Bell-like state
        let mut s = SparseState::from_amplitudes(2, [(bits("00"), c(FRAC_1_SQRT_2)), (bits("11"), c(FRAC_1_SQRT_2))]).unwrap();
        let out = s.append_register(1);
        s.apply_oracle(&[Register::new(0, 2)], out, |z| BitString::from_bools([z.parity()])).unwrap();
        let expect = SparseState::from_amplitudes(3, [(bits("000"), c(FRAC_1_SQRT_2)), (bits("110"), c(FRAC_1_SQRT_2))]).unwrap();
        assert!(s.approx_eq(&expect, 0.0));
        // width mismatch
        assert!(matches!(
            s.apply_oracle(&[Register::new(0, 2)], out, |z| z.clone()),
            Err(Error::Length { .. })
        ));
    }

    #[test]
    fn append_register_extends_keys() {
        let mut s = SparseState::basis_state(&bits("1"));
        let r = s.append_register(2);
        assert_eq!(r, Register::new(1, 2));
        assert_eq!(s.num_terms(), 1);
        assert!((s.norm_sqr() - 1.0).abs() < 1e-12);
        assert!(s.z_amplitudes().contains_key(&bits("100")));
        let r = s.append_register(130);
        assert_eq!(s.z_amplitudes().keys().next().unwrap().len(), 133);
        assert_eq!(r.end(), 133);
    }

    #[test]
    fn discarded_qubits_cannot_be_used() {
        let mut rng = stream(4, "dead");
        let mut s = bb84("01", "10");
        s.measure_qubit(0, Basis::Z, &mut rng).unwrap();
        s.discard(Register::new(0, 1)).unwrap();
        assert!(matches!(s.measure_qubit(0, Basis::Z, &mut rng), Err(Error::Usage(_))));
        let mut e = SparseState::from_amplitudes(2, [(bits("00"), c(FRAC_1_SQRT_2)), (bits("11"), c(FRAC_1_SQRT_2))]).unwrap();
        assert!(e.discard(Register::new(1, 1)).is_err());
    }

    #[test]
    fn density_matrix_guard() {
        let s = SparseState::new(13);
        let all: Vec<usize> = (0..13).collect();
        assert!(matches!(s.density_matrix(&all), Err(Error::DenseGuard { .. })));
        assert!(s.density_matrix(&all[..12]).is_ok());
    }

    #[test]
    fn dump_is_sorted_and_computational() {
        let s = bb84("00", "01");
        assert_eq!(s.dump(), "00 0.707106781187 0.000000000000\n01 0.707106781187 0.000000000000\n");
    }

    proptest! {
        #[test]
        fn oracle_is_an_involution(y in any::<u8>(), t in any::<u8>(), key in any::<u64>()) {
            let d = Bb84Descriptor::new(BitString::from_u64(y as u64, 6), BitString::from_u64(t as u64, 6)).unwrap();
            let mut s = SparseState::prep_bb84(&d);
            let out = s.append_register(5);
            let before = s.z_amplitudes();
            let f = |z: &BitString| {
                let h = (z.to_u64() ^ key).wrapping_mul(0x9e37_79b9_7f4a_7c15) >> 59;
                BitString::from_u64(h, 5)
            };
            s.apply_oracle(&[Register::new(0, 6)], out, f).unwrap();
            let terms = s.num_terms();
            s.apply_oracle(&[Register::new(0, 6)], out, f).unwrap();
            prop_assert_eq!(terms, 1usize << (t & 63).count_ones());
            prop_assert_eq!(s.z_amplitudes(), before);
        }

        #[test]
        fn measurement_never_grows_terms(y in any::<u8>(), t in any::<u8>(), bases in any::<u8>(), seed: u64) {
            let d = Bb84Descriptor::new(BitString::from_u64(y as u64, 8), BitString::from_u64(t as u64, 8)).unwrap();
            let mut s = SparseState::prep_bb84(&d);
            let mut rng = stream(seed, "sparsity");
            for q in 0..8 {
                let before = s.num_terms();
                s.measure_qubit(q, Basis::from_theta((bases >> q) & 1 == 1), &mut rng).unwrap();
                prop_assert!(s.num_terms() <= before);
                prop_assert!((s.norm_sqr() - 1.0).abs() <= NORM_TOLERANCE);
            }
        }
    }
}
