use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::density::{maximally_mixed, qubit_eigenstate, DensityMatrix};
use super::state::{Basis, SparseState, DENSE_QUBIT_LIMIT};
use crate::bits::BitString;
use crate::error::{check_len, usage, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Role {
    Prover,
    Verifier,
}

impl Role {
    pub fn partner(self) -> Role {
        match self {
            Role::Prover => Role::Verifier,
            Role::Verifier => Role::Prover,
        }
    }

    fn offset(self) -> usize {
        match self {
            Role::Prover => 0,
            Role::Verifier => 1,
        }
    }
}

/// Exact state of one (P, V) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PairState {
    /// (|00⟩ + |11⟩)/√2.
    Bell,
    /// Independent single-qubit eigenstates, each given as (basis, eigenvalue bit).
    Product { p: (Basis, bool), v: (Basis, bool) },
}

// Packed pair encoding; zero is the Bell state.
const PRODUCT: u8 = 0x80;
const P_X: u8 = 0x01;
const P_ONE: u8 = 0x02;
const V_X: u8 = 0x04;
const V_ONE: u8 = 0x08;

#[inline]
fn half_bits(role: Role) -> (u8, u8) {
    match role {
        Role::Prover => (P_X, P_ONE),
        Role::Verifier => (V_X, V_ONE),
    }
}

/// ℓ blocks of k EPR pairs shared between prover (P^i_j) and verifier (V^i_j).
///
/// Protocol operations never entangle distinct pairs, so each pair is kept as
/// an exact two-qubit state: either untouched Bell or, after any measurement,
/// a product of eigenstates. Qubit P^i_j has global index `2(ik + j)` and
/// V^i_j has `2(ik + j) + 1`, matching [`EprNetwork::to_sparse_state`].
#[derive(Debug, Clone)]
pub struct EprNetwork {
    blocks: usize,
    width: usize,
    pairs: Vec<u8>,
}

pub fn prep_epr(blocks: usize, width: usize) -> Result<EprNetwork> {
    EprNetwork::new(blocks, width)
}

impl EprNetwork {
    pub fn new(blocks: usize, width: usize) -> Result<Self> {
        if blocks * width == 0 {
            return Err(usage("an EPR network needs at least one pair"));
        }
        if width > 64 {
            return Err(usage("block width above 64 is not supported"));
        }
        Ok(Self { blocks, width, pairs: vec![0; blocks * width] })
    }

    pub fn blocks(&self) -> usize {
        self.blocks
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn num_pairs(&self) -> usize {
        self.pairs.len()
    }

    pub fn qubit_index(&self, role: Role, block: usize, j: usize) -> usize {
        2 * (block * self.width + j) + role.offset()
    }

    /// Inverse of [`EprNetwork::qubit_index`].
    pub fn locate(&self, qubit: usize) -> Result<(Role, usize, usize)> {
        if qubit >= 2 * self.pairs.len() {
            return Err(usage(format!("qubit {qubit} out of range")));
        }
        let role = if qubit & 1 == 0 { Role::Prover } else { Role::Verifier };
        let pair = qubit / 2;
        Ok((role, pair / self.width, pair % self.width))
    }

    fn pair_index(&self, block: usize, j: usize) -> Result<usize> {
        if block >= self.blocks || j >= self.width {
            return Err(usage(format!("pair ({block}, {j}) out of range for {}x{} network", self.blocks, self.width)));
        }
        Ok(block * self.width + j)
    }

    pub fn pair_state(&self, block: usize, j: usize) -> Result<PairState> {
        let s = self.pairs[self.pair_index(block, j)?];
        if s & PRODUCT == 0 {
            return Ok(PairState::Bell);
        }
        let half = |x: u8, one: u8| (Basis::from_theta(s & x != 0), s & one != 0);
        Ok(PairState::Product { p: half(P_X, P_ONE), v: half(V_X, V_ONE) })
    }

    /// Born probabilities of measuring one half.
    pub fn outcome_probabilities(&self, role: Role, block: usize, j: usize, basis: Basis) -> Result<(f64, f64)> {
        let s = self.pairs[self.pair_index(block, j)?];
        if s & PRODUCT == 0 {
            return Ok((0.5, 0.5));
        }
        let (xb, ob) = half_bits(role);
        if (s & xb != 0) == basis.is_hadamard() {
            Ok(if s & ob != 0 { (0.0, 1.0) } else { (1.0, 0.0) })
        } else {
            Ok((0.5, 0.5))
        }
    }

    #[inline]
    fn step(state: &mut u8, role: Role, hadamard: bool, coin: bool) -> bool {
        let (xb, ob) = half_bits(role);
        let s = *state;
        if s & PRODUCT == 0 {
            let mut n = PRODUCT;
            if hadamard {
                n |= P_X | V_X;
            }
            if coin {
                n |= P_ONE | V_ONE;
            }
            *state = n;
            return coin;
        }
        if (s & xb != 0) == hadamard {
            return s & ob != 0;
        }
        let mut n = s & !(xb | ob);
        if hadamard {
            n |= xb;
        }
        if coin {
            n |= ob;
        }
        *state = n;
        coin
    }

    /// Forces a measurement outcome; the caller is responsible for it having
    /// non-zero probability. Used by exact-enumeration tests.
    pub fn collapse(&mut self, role: Role, block: usize, j: usize, basis: Basis, outcome: bool) -> Result<()> {
        let (p0, p1) = self.outcome_probabilities(role, block, j, basis)?;
        if (if outcome { p1 } else { p0 }) == 0.0 {
            return Err(usage("forced an outcome of probability zero"));
        }
        let idx = self.pair_index(block, j)?;
        Self::step(&mut self.pairs[idx], role, basis.is_hadamard(), outcome);
        Ok(())
    }

    pub fn measure<R: Rng + ?Sized>(&mut self, role: Role, block: usize, j: usize, basis: Basis, rng: &mut R) -> Result<bool> {
        let idx = self.pair_index(block, j)?;
        Ok(Self::step(&mut self.pairs[idx], role, basis.is_hadamard(), rng.gen()))
    }

    /// Measures all k qubits of one block half; bit `j` of `bases` (1 = X)
    /// selects the basis of qubit j, bit `j` of the result is its outcome.
    #[inline]
    pub fn measure_block<R: Rng + ?Sized>(&mut self, role: Role, block: usize, bases: u64, rng: &mut R) -> Result<u64> {
        if block >= self.blocks {
            return Err(usage(format!("block {block} out of range for {} blocks", self.blocks)));
        }
        let coins: u64 = rng.gen();
        let base = block * self.width;
        let mut out = 0u64;
        for (j, st) in self.pairs[base..base + self.width].iter_mut().enumerate() {
            let o = Self::step(st, role, (bases >> j) & 1 == 1, (coins >> j) & 1 == 1);
            out |= (o as u64) << j;
        }
        Ok(out)
    }

    /// Measures arbitrary qubits by global index.
    pub fn measure_qubits<R: Rng + ?Sized>(&mut self, qubits: &[usize], bases: &[Basis], rng: &mut R) -> Result<BitString> {
        check_len("measurement bases", qubits.len(), bases.len())?;
        let mut out = BitString::with_capacity(qubits.len());
        for (&q, &b) in qubits.iter().zip(bases) {
            let (role, i, j) = self.locate(q)?;
            out.push(self.measure(role, i, j, b, rng)?);
        }
        Ok(out)
    }

    /// Reduced density matrix of one half of a pair.
    pub fn qubit_density(&self, role: Role, block: usize, j: usize) -> Result<DensityMatrix> {
        Ok(match self.pair_state(block, j)? {
            PairState::Bell => maximally_mixed(1),
            PairState::Product { p, v } => {
                let (b, bit) = if role == Role::Prover { p } else { v };
                qubit_eigenstate(b.is_hadamard(), bit)
            }
        })
    }

    /// Reduced density matrix of a set of single halves from distinct pairs,
    /// first listed qubit most significant.
    pub fn density_matrix(&self, qubits: &[(Role, usize, usize)]) -> Result<DensityMatrix> {
        if qubits.len() > DENSE_QUBIT_LIMIT {
            return Err(Error::DenseGuard { requested: qubits.len(), limit: DENSE_QUBIT_LIMIT });
        }
        let mut seen = std::collections::HashSet::new();
        let mut rho = DensityMatrix::from_element(1, 1, Complex64::new(1.0, 0.0));
        for &(role, i, j) in qubits {
            if !seen.insert(self.pair_index(i, j)?) {
                return Err(usage("both halves of one pair requested; use to_sparse_state"));
            }
            rho = rho.kronecker(&self.qubit_density(role, i, j)?);
        }
        Ok(rho)
    }

    /// Materialises the network as a [`SparseState`] over 2ℓk qubits (≤ 12 pairs).
    pub fn to_sparse_state(&self) -> Result<SparseState> {
        if self.pairs.len() > 12 {
            return Err(usage("to_sparse_state is limited to 12 pairs"));
        }
        let n = 2 * self.pairs.len();
        let mut terms: Vec<(BitString, Complex64)> = vec![(BitString::new(), Complex64::new(1.0, 0.0))];
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let eig = |(b, bit): (Basis, bool)| -> Vec<(bool, f64)> {
            match b {
                Basis::Z => vec![(bit, 1.0)],
                Basis::X => vec![(false, h), (true, if bit { -h } else { h })],
            }
        };
        for block in 0..self.blocks {
            for j in 0..self.width {
                let local: Vec<(bool, bool, f64)> = match self.pair_state(block, j)? {
                    PairState::Bell => vec![(false, false, h), (true, true, h)],
                    PairState::Product { p, v } => {
                        let mut l = Vec::new();
                        for (pb, pa) in eig(p) {
                            for &(vb, va) in &eig(v) {
                                l.push((pb, vb, pa * va));
                            }
                        }
                        l
                    }
                };
                let mut next = Vec::with_capacity(terms.len() * local.len());
                for (k, a) in &terms {
                    for &(pb, vb, la) in &local {
                        let mut nk = k.clone();
                        nk.push(pb);
                        nk.push(vb);
                        next.push((nk, a * la));
                    }
                }
                terms = next;
            }
        }
        SparseState::from_amplitudes(n, terms)
    }
}

/// Provenance-carrying record of one batch of measurements.
///
/// Measured qubits are listed as index spans, so that a record over millions
/// of EPR halves stays compact.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MeasurementRecord {
    /// Free-form label of the RNG stream the outcomes were drawn from.
    pub stream: String,
    pub seed: u64,
    /// Half-open `(start, len)` spans of global qubit indices, in measurement order.
    pub spans: Vec<(usize, usize)>,
    /// One bit per measured qubit; 1 is the Hadamard basis.
    pub bases: BitString,
    pub outcomes: BitString,
}

impl MeasurementRecord {
    pub fn new(stream: impl Into<String>, seed: u64) -> Self {
        Self { stream: stream.into(), seed, spans: Vec::new(), bases: BitString::new(), outcomes: BitString::new() }
    }

    pub fn push(&mut self, qubit: usize, basis: Basis, outcome: bool) {
        match self.spans.last_mut() {
            Some((s, l)) if *s + *l == qubit => *l += 1,
            _ => self.spans.push((qubit, 1)),
        }
        self.bases.push(basis.is_hadamard());
        self.outcomes.push(outcome);
    }

    /// Appends `width` qubits with stride `stride` starting at `first`.
    pub fn push_strided(&mut self, first: usize, stride: usize, width: usize, bases: u64, outcomes: u64) {
        for j in 0..width {
            self.push(first + j * stride, Basis::from_theta((bases >> j) & 1 == 1), (outcomes >> j) & 1 == 1);
        }
    }

    pub fn len(&self) -> usize {
        self.outcomes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.outcomes.is_empty()
    }

    pub fn indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.spans.iter().flat_map(|&(s, l)| s..s + l)
    }

    pub fn is_consistent(&self) -> bool {
        let n: usize = self.spans.iter().map(|s| s.1).sum();
        n == self.outcomes.len() && n == self.bases.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantum::density::trace_distance;
    use crate::rng::stream;
    use crate::stats::chi_square_independence_pvalue;

    #[test]
    fn single_pair_is_bell() {
        let net = prep_epr(1, 1).unwrap();
        let s = net.to_sparse_state().unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let bell = SparseState::from_amplitudes(
            2,
            [(crate::bits::bits("00"), Complex64::new(h, 0.0)), (crate::bits::bits("11"), Complex64::new(h, 0.0))],
        )
        .unwrap();
        assert!(s.approx_eq(&bell, 1e-12));
        assert!(prep_epr(0, 3).is_err());
    }

    #[test]
    fn same_basis_agrees_and_cross_basis_is_independent() {
        let mut rng = stream(5, "epr");
        let mut table = vec![vec![0u64; 2]; 2];
        let mut zeros = 0;
        for t in 0..10_000 {
            let mut net = prep_epr(1, 1).unwrap();
            let basis = if t % 2 == 0 { Basis::Z } else { Basis::X };
            let a = net.measure(Role::Prover, 0, 0, basis, &mut rng).unwrap();
            let b = net.measure(Role::Verifier, 0, 0, basis, &mut rng).unwrap();
            assert_eq!(a, b);
            zeros += (!a) as u32;
            let mut net = prep_epr(1, 1).unwrap();
            let a = net.measure(Role::Prover, 0, 0, Basis::Z, &mut rng).unwrap();
            let b = net.measure(Role::Verifier, 0, 0, Basis::X, &mut rng).unwrap();
            table[a as usize][b as usize] += 1;
        }
        assert!((4_700..5_300).contains(&zeros));
        assert!(chi_square_independence_pvalue(&table) > 0.01, "{table:?}");
    }

    /// Every probability the pair model reports must match the full simulator,
    /// along random measurement sequences with both outcomes explored.
    #[test]
    fn pair_model_matches_sparse_simulator() {
        use rand::Rng;
        let mut rng = stream(6, "crosscheck");
        for _ in 0..300 {
            let mut net = prep_epr(2, 2).unwrap();
            let mut sim = net.to_sparse_state().unwrap();
            for _ in 0..8 {
                let q = rng.gen_range(0..8);
                let basis = if rng.gen() { Basis::X } else { Basis::Z };
                let (role, i, j) = net.locate(q).unwrap();
                let (e0, e1) = net.outcome_probabilities(role, i, j, basis).unwrap();
                let (s0, s1) = sim.outcome_probabilities(q, basis).unwrap();
                assert!((e0 - s0).abs() < 1e-9 && (e1 - s1).abs() < 1e-9);
                let o = if e0 == 0.0 { true } else if e1 == 0.0 { false } else { rng.gen() };
                net.collapse(role, i, j, basis, o).unwrap();
                sim = sim.project(q, basis, o).unwrap().1.unwrap();
                let rebuilt = net.to_sparse_state().unwrap();
                for q2 in 0..8 {
                    let a = rebuilt.density_matrix(&[q2]).unwrap();
                    let b = sim.density_matrix(&[q2]).unwrap();
                    assert!(trace_distance(&a, &b) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn block_measurement_matches_per_qubit() {
        let mut net = prep_epr(3, 6).unwrap();
        let mut rng = stream(7, "block");
        let bases = 0b101100;
        let y = net.measure_block(Role::Prover, 1, bases, &mut rng).unwrap();
        let v = net.measure_block(Role::Verifier, 1, bases, &mut rng).unwrap();
        assert_eq!(y, v);
        assert!(matches!(net.pair_state(0, 0).unwrap(), PairState::Bell));
        assert!(net.measure_block(Role::Prover, 3, 0, &mut rng).is_err());
    }

    #[test]
    fn measurement_record_spans() {
        let mut r = MeasurementRecord::new("x", 1);
        r.push_strided(0, 2, 3, 0b010, 0b001);
        r.push(7, Basis::Z, true);
        r.push(8, Basis::Z, true);
        assert_eq!(r.len(), 5);
        assert!(r.is_consistent());
        assert_eq!(r.indices().collect::<Vec<_>>(), vec![0, 2, 4, 7, 8]);
    }
}
