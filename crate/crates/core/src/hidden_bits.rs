//! Hamiltonicity NIZK in the hidden-bits model (Feige–Lapidot–Shamir style).
//!
//! The hidden string is cut into `ρ` repetitions of `m²·b` bits. Each
//! repetition decodes to an `m×m` boolean matrix whose entries are one with
//! probability `2^{-b}`. A matrix is *useful* when its one-entries form a
//! single `n`-cycle permutation on `n` rows and `n` columns; the prover then
//! maps the witness cycle onto that hidden cycle and opens every entry that
//! does not correspond to an edge of the graph.

use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{check_len, usage, Error, Result};

/// Directed graph without self-loops.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HbInstance {
    n: usize,
    adjacency: Vec<bool>,
}

impl HbInstance {
    pub fn new(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        if n < 2 {
            return Err(Error::Graph("need at least two vertices".into()));
        }
        let mut adjacency = vec![false; n * n];
        for &(u, v) in edges {
            if u >= n || v >= n {
                return Err(Error::Graph(format!("edge ({u}, {v}) out of range for {n} vertices")));
            }
            if u == v {
                return Err(Error::Graph(format!("self-loop at vertex {u}")));
            }
            adjacency[u * n + v] = true;
        }
        Ok(Self { n, adjacency })
    }

    pub fn complete(n: usize) -> Self {
        let edges: Vec<_> = (0..n).flat_map(|u| (0..n).filter(move |&v| v != u).map(move |v| (u, v))).collect();
        Self::new(n, &edges).expect("complete digraph is valid")
    }

    /// Directed cycle 0 → 1 → … → n−1 → 0 and nothing else.
    pub fn cycle(n: usize) -> Self {
        let edges: Vec<_> = (0..n).map(|u| (u, (u + 1) % n)).collect();
        Self::new(n, &edges).expect("cycle is valid")
    }

    /// The fixed false statement used by soundness experiments: edges 0→1, 1→0, 2→1.
    pub fn non_hamiltonian_3() -> Self {
        Self::new(3, &[(0, 1), (1, 0), (2, 1)]).expect("valid")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.adjacency[u * self.n + v]
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |u| (0..self.n).filter(move |&v| self.has_edge(u, v)).map(move |v| (u, v)))
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().filter(|&&e| e).count()
    }

    /// Canonical byte encoding (vertex count then row-major adjacency bits).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = (self.n as u32).to_le_bytes().to_vec();
        out.extend(BitString::from_bools(self.adjacency.iter().copied()).to_bytes());
        out
    }

    pub fn to_adjacency_list(&self) -> String {
        let mut s = format!("{}\n", self.n);
        for (u, v) in self.edges() {
            s.push_str(&format!("{u} {v}\n"));
        }
        s
    }

    /// Exhaustive search; intended for small instances only.
    pub fn find_hamiltonian_cycle(&self) -> Option<HbWitness> {
        let mut rest: Vec<usize> = (1..self.n).collect();
        fn go(x: &HbInstance, path: &mut Vec<usize>, rest: &mut Vec<usize>) -> bool {
            if rest.is_empty() {
                return x.has_edge(*path.last().unwrap(), path[0]);
            }
            for i in 0..rest.len() {
                let v = rest[i];
                if x.has_edge(*path.last().unwrap(), v) {
                    path.push(v);
                    rest.remove(i);
                    if go(x, path, rest) {
                        return true;
                    }
                    rest.insert(i, v);
                    path.pop();
                }
            }
            false
        }
        let mut path = vec![0];
        go(self, &mut path, &mut rest).then(|| HbWitness { cycle: path })
    }

    pub fn is_hamiltonian(&self) -> bool {
        self.find_hamiltonian_cycle().is_some()
    }
}

impl FromStr for HbInstance {
    type Err = Error;

    /// Adjacency-list format: first line `n`, then one `u v` line per directed edge.
    /// Blank lines and `#` comments are ignored.
    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s.lines().map(|l| l.split('#').next().unwrap().trim()).filter(|l| !l.is_empty());
        let n: usize = lines
            .next()
            .ok_or_else(|| Error::Graph("empty graph file".into()))?
            .parse()
            .map_err(|e| Error::Graph(format!("bad vertex count: {e}")))?;
        let mut edges = Vec::new();
        for (lineno, line) in lines.enumerate() {
            let mut it = line.split_whitespace();
            let mut num = || -> Result<usize> {
                it.next()
                    .ok_or_else(|| Error::Graph(format!("edge line {} is incomplete", lineno + 2)))?
                    .parse()
                    .map_err(|e| Error::Graph(format!("edge line {}: {e}", lineno + 2)))
            };
            let u = num()?;
            let v = num()?;
            if it.next().is_some() {
                return Err(Error::Graph(format!("edge line {} has trailing fields", lineno + 2)));
            }
            edges.push((u, v));
        }
        HbInstance::new(n, &edges)
    }
}

/// A Hamiltonian cycle given as a vertex sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HbWitness {
    pub cycle: Vec<usize>,
}

impl HbWitness {
    pub fn new(cycle: Vec<usize>) -> Self {
        Self { cycle }
    }

    pub fn validate(&self, x: &HbInstance) -> Result<()> {
        let n = x.n();
        if self.cycle.len() != n {
            return Err(Error::InvalidWitness(format!("cycle has {} vertices, graph has {n}", self.cycle.len())));
        }
        let mut seen = vec![false; n];
        for &v in &self.cycle {
            if v >= n || std::mem::replace(&mut seen[v], true) {
                return Err(Error::InvalidWitness("cycle is not a permutation of the vertices".into()));
            }
        }
        for j in 0..n {
            let (u, v) = (self.cycle[j], self.cycle[(j + 1) % n]);
            if !x.has_edge(u, v) {
                return Err(Error::InvalidWitness(format!("missing edge {u} -> {v}")));
            }
        }
        Ok(())
    }

    /// The same cycle rotated so that it starts at vertex 0.
    pub fn normalized(&self) -> Vec<usize> {
        let pos = self.cycle.iter().position(|&v| v == 0).unwrap_or(0);
        self.cycle[pos..].iter().chain(&self.cycle[..pos]).copied().collect()
    }
}

/// Parameters of the hidden-bits proof.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HbParams {
    pub n: usize,
    pub reps: usize,
    pub block_len: usize,
    pub side: usize,
}

impl HbParams {
    /// m = n³ and b = ⌈5·log₂ n⌉.
    pub fn fls_defaults(n: usize, reps: usize) -> Self {
        let b = (5.0 * (n as f64).log2()).ceil() as usize;
        Self { n, reps, block_len: b.max(1), side: n * n * n }
    }

    pub fn new(n: usize, reps: usize, block_len: usize, side: usize) -> Result<Self> {
        if n < 2 || reps == 0 || block_len == 0 || block_len > 64 || side < n {
            return Err(usage(format!("invalid hidden-bits parameters n={n} reps={reps} b={block_len} m={side}")));
        }
        Ok(Self { n, reps, block_len, side })
    }

    /// Hidden bits consumed per repetition, k' = m²·b.
    pub fn bits_per_rep(&self) -> usize {
        self.side * self.side * self.block_len
    }

    /// Total hidden bits, k = ρ·k'.
    pub fn total_bits(&self) -> usize {
        self.reps * self.bits_per_rep()
    }

    /// ρ-fold parallel repetition of these parameters.
    pub fn amplify(&self, reps: usize) -> Self {
        assert!(reps >= 1);
        Self { reps, ..*self }
    }

    /// Probability that a uniformly random block decodes to a useful matrix:
    /// C(m,n)²·(n−1)!·p^n·(1−p)^{m²−n}, p = 2^{−b}.
    pub fn useful_probability(&self) -> f64 {
        let (m, n) = (self.side as f64, self.n);
        let p = 2f64.powi(-(self.block_len as i32));
        let ln_binom = ln_choose(self.side, n);
        let ln_fact: f64 = (1..n).map(|i| (i as f64).ln()).sum();
        (2.0 * ln_binom + ln_fact + n as f64 * p.ln() + (m * m - n as f64) * (-p).ln_1p()).exp()
    }
}

fn ln_choose(m: usize, n: usize) -> f64 {
    (0..n).map(|i| ((m - i) as f64).ln() - ((i + 1) as f64).ln()).sum()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMatrix {
    side: usize,
    data: Vec<bool>,
}

impl BoolMatrix {
    pub fn zeros(side: usize) -> Self {
        Self { side, data: vec![false; side * side] }
    }

    pub fn side(&self) -> usize {
        self.side
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> bool {
        self.data[u * self.side + v]
    }

    pub fn set(&mut self, u: usize, v: usize, val: bool) {
        self.data[u * self.side + v] = val;
    }

    pub fn ones(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.data.iter().enumerate().filter(|(_, &b)| b).map(move |(i, _)| (i / self.side, i % self.side))
    }
}

/// Entry (u,v) is one iff its b-bit slice (at offset (u·m+v)·b) is all ones.
pub fn bits_to_matrix(block: &BitString, side: usize, block_len: usize) -> Result<BoolMatrix> {
    check_len("hidden-bits block", side * side * block_len, block.len())?;
    let all = if block_len == 64 { u64::MAX } else { (1u64 << block_len) - 1 };
    let data = (0..side * side).map(|e| block.get_bits(e * block_len, block_len) == all).collect();
    Ok(BoolMatrix { side, data })
}

/// The hidden cycle of a useful matrix.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UsefulPattern {
    /// Sorted rows containing a one.
    pub rows: Vec<usize>,
    /// Sorted columns containing a one.
    pub cols: Vec<usize>,
    /// sigma[a] = c iff entry (rows[a], cols[c]) is one; a single n-cycle.
    pub sigma: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Usefulness {
    Useful(UsefulPattern),
    NotUseful,
}

impl Usefulness {
    pub fn is_useful(&self) -> bool {
        matches!(self, Usefulness::Useful(_))
    }
}

pub fn is_single_cycle(perm: &[usize]) -> bool {
    let n = perm.len();
    if n == 0 {
        return false;
    }
    let mut v = 0;
    for step in 1..=n {
        v = perm[v];
        if v == 0 {
            return step == n;
        }
    }
    false
}

pub fn usefulness(matrix: &BoolMatrix, n: usize) -> Usefulness {
    let mut ones = Vec::with_capacity(n + 1);
    for e in matrix.ones() {
        ones.push(e);
        if ones.len() > n {
            return Usefulness::NotUseful;
        }
    }
    if ones.len() != n {
        return Usefulness::NotUseful;
    }
    let mut rows: Vec<usize> = ones.iter().map(|e| e.0).collect();
    let mut cols: Vec<usize> = ones.iter().map(|e| e.1).collect();
    rows.sort_unstable();
    cols.sort_unstable();
    if rows.windows(2).any(|w| w[0] == w[1]) || cols.windows(2).any(|w| w[0] == w[1]) {
        return Usefulness::NotUseful;
    }
    let mut sigma = vec![0; n];
    for &(u, v) in &ones {
        let a = rows.binary_search(&u).unwrap();
        sigma[a] = cols.binary_search(&v).unwrap();
    }
    if is_single_cycle(&sigma) {
        Usefulness::Useful(UsefulPattern { rows, cols, sigma })
    } else {
        Usefulness::NotUseful
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum RepProof {
    /// The whole block is opened; valid only for non-useful matrices.
    RevealAll,
    /// Vertex u is placed at matrix row `rows[u]` and column `cols[u]`.
    Useful { rows: Vec<usize>, cols: Vec<usize> },
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct HbProof {
    pub reps: Vec<RepProof>,
}

/// Hidden bits as seen by the verifier: only positions in `mask` carry values.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RevealedBits {
    mask: BitString,
    values: BitString,
}

impl RevealedBits {
    pub fn reveal(r: &BitString, mask: &BitString) -> Self {
        assert_eq!(r.len(), mask.len());
        Self { mask: mask.clone(), values: r.and(mask) }
    }

    /// Builds from explicit parts; bits of `values` outside `mask` are cleared.
    pub fn from_parts(mask: BitString, values: BitString) -> Result<Self> {
        check_len("revealed values", mask.len(), values.len())?;
        let values = values.and(&mask);
        Ok(Self { mask, values })
    }

    pub fn len(&self) -> usize {
        self.mask.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mask.is_empty()
    }

    pub fn mask(&self) -> &BitString {
        &self.mask
    }

    /// Revealed values, zero at unopened positions.
    pub fn values(&self) -> &BitString {
        &self.values
    }

    pub fn get(&self, i: usize) -> Option<bool> {
        self.mask.get(i).then(|| self.values.get(i))
    }
}

/// The index set I as a mask over the k hidden bits implied by a proof.
///
/// Returns `None` for a structurally malformed proof.
pub fn opened_mask(params: &HbParams, x: &HbInstance, proof: &HbProof) -> Option<BitString> {
    if proof.reps.len() != params.reps || x.n() != params.n {
        return None;
    }
    let kp = params.bits_per_rep();
    let mut mask = BitString::ones(params.total_bits());
    for (rep, rp) in proof.reps.iter().enumerate() {
        if let RepProof::Useful { rows, cols } = rp {
            if !valid_embedding(params, rows, cols) {
                return None;
            }
            let base = rep * kp;
            for (u, v) in x.edges() {
                let e = rows[u] * params.side + cols[v];
                mask.set_bits(base + e * params.block_len, params.block_len, 0);
            }
        }
    }
    Some(mask)
}

/// Rows and columns are injective, in range, and rank-consistent: the rank
/// of `rows[u]` among the rows equals the rank of `cols[u]` among the columns.
fn valid_embedding(params: &HbParams, rows: &[usize], cols: &[usize]) -> bool {
    let n = params.n;
    if rows.len() != n || cols.len() != n {
        return false;
    }
    if rows.iter().chain(cols).any(|&r| r >= params.side) {
        return false;
    }
    let rank = |v: &[usize], x: usize| v.iter().filter(|&&y| y < x).count();
    let distinct = |v: &[usize]| {
        let mut s = v.to_vec();
        s.sort_unstable();
        s.windows(2).all(|w| w[0] != w[1])
    };
    distinct(rows) && distinct(cols) && (0..n).all(|u| rank(rows, rows[u]) == rank(cols, cols[u]))
}

fn rep_block(r: &BitString, params: &HbParams, rep: usize) -> BitString {
    let kp = params.bits_per_rep();
    r.slice(rep * kp, (rep + 1) * kp)
}

/// Honest prover: returns the opened index mask I and the proof.
pub fn hb_prove(r: &BitString, x: &HbInstance, w: &HbWitness, params: &HbParams) -> Result<(BitString, HbProof)> {
    check_len("hidden-bits string", params.total_bits(), r.len())?;
    if x.n() != params.n {
        return Err(usage(format!("instance has {} vertices, parameters expect {}", x.n(), params.n)));
    }
    w.validate(x)?;
    let cyc = w.normalized();
    let n = params.n;
    let mut reps = Vec::with_capacity(params.reps);
    for rep in 0..params.reps {
        let m = bits_to_matrix(&rep_block(r, params, rep), params.side, params.block_len)?;
        reps.push(match usefulness(&m, n) {
            Usefulness::NotUseful => RepProof::RevealAll,
            Usefulness::Useful(pat) => {
                // φ(w_j) = σ^j(0), anchoring w_0 = 0 at the smallest useful row.
                let mut phi = vec![0; n];
                let mut a = 0;
                for &v in &cyc {
                    phi[v] = a;
                    a = pat.sigma[a];
                }
                RepProof::Useful {
                    rows: (0..n).map(|u| pat.rows[phi[u]]).collect(),
                    cols: (0..n).map(|u| pat.cols[phi[u]]).collect(),
                }
            }
        });
    }
    let proof = HbProof { reps };
    let mask = opened_mask(params, x, &proof).expect("honest proof is well formed");
    Ok((mask, proof))
}

/// Verifier; never sees hidden bits outside `revealed`.
pub fn hb_verify(revealed: &RevealedBits, x: &HbInstance, proof: &HbProof, params: &HbParams) -> bool {
    if revealed.len() != params.total_bits() {
        return false;
    }
    let Some(expected) = opened_mask(params, x, proof) else {
        return false;
    };
    if &expected != revealed.mask() {
        return false;
    }
    let kp = params.bits_per_rep();
    let b = params.block_len;
    let all = if b == 64 { u64::MAX } else { (1u64 << b) - 1 };
    let vals = revealed.values();
    for (rep, rp) in proof.reps.iter().enumerate() {
        let base = rep * kp;
        match rp {
            RepProof::RevealAll => {
                let m = match bits_to_matrix(&vals.slice(base, base + kp), params.side, b) {
                    Ok(m) => m,
                    Err(_) => return false,
                };
                if usefulness(&m, params.n).is_useful() {
                    return false;
                }
            }
            RepProof::Useful { .. } => {
                for e in 0..params.side * params.side {
                    let off = base + e * b;
                    if expected.get(off) && vals.get_bits(off, b) == all {
                        return false;
                    }
                }
            }
        }
    }
    true
}

/// Witness-free simulator: returns (I, r_I, π).
pub fn hb_simulate<R: Rng + ?Sized>(x: &HbInstance, params: &HbParams, rng: &mut R) -> Result<(BitString, RevealedBits, HbProof)> {
    if x.n() != params.n {
        return Err(usage("instance size does not match parameters"));
    }
    let n = params.n;
    let kp = params.bits_per_rep();
    let b = params.block_len;
    let mut r = BitString::random(params.total_bits(), rng);
    let mut reps = Vec::with_capacity(params.reps);
    for rep in 0..params.reps {
        let m = bits_to_matrix(&rep_block(&r, params, rep), params.side, b)?;
        reps.push(match usefulness(&m, n) {
            Usefulness::NotUseful => RepProof::RevealAll,
            Usefulness::Useful(pat) => {
                let mut rest: Vec<usize> = (1..n).collect();
                rest.shuffle(rng);
                let phi: Vec<usize> = std::iter::once(0).chain(rest).collect();
                let rows: Vec<usize> = (0..n).map(|u| pat.rows[phi[u]]).collect();
                let cols: Vec<usize> = (0..n).map(|u| pat.cols[phi[u]]).collect();
                // Every entry of the useful submatrix that will be opened must
                // read as zero; resample those slices uniformly over non-ones.
                for &ru in &rows {
                    for &cv in &cols {
                        let off = rep * kp + (ru * params.side + cv) * b;
                        r.set_bits(off, b, random_non_ones(b, rng));
                    }
                }
                RepProof::Useful { rows, cols }
            }
        });
    }
    let proof = HbProof { reps };
    let mask = opened_mask(params, x, &proof).expect("simulated proof is well formed");
    let revealed = RevealedBits::reveal(&r, &mask);
    Ok((mask, revealed, proof))
}

fn random_non_ones<R: Rng + ?Sized>(b: usize, rng: &mut R) -> u64 {
    let all = if b == 64 { u64::MAX } else { (1u64 << b) - 1 };
    loop {
        let v = rng.gen::<u64>() & all;
        if v != all {
            return v;
        }
    }
}

impl fmt::Display for RepProof {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RepProof::RevealAll => write!(f, "reveal-all"),
            RepProof::Useful { rows, cols } => write!(f, "useful rows={rows:?} cols={cols:?}"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;

    fn small(n: usize) -> HbParams {
        HbParams::new(n, 1, 1, n).unwrap()
    }

    fn matrix(side: usize, ones: &[(usize, usize)]) -> BoolMatrix {
        let mut m = BoolMatrix::zeros(side);
        for &(u, v) in ones {
            m.set(u, v, true);
        }
        m
    }

    #[test]
    fn decoding_examples() {
        let b = crate::bits::bits("11100001");
        let m = bits_to_matrix(&b, 2, 2).unwrap();
        assert!(m.get(0, 0) && !m.get(0, 1) && !m.get(1, 0) && !m.get(1, 1));
        assert_eq!(bits_to_matrix(&BitString::zeros(8), 2, 2).unwrap(), BoolMatrix::zeros(2));
        assert!(bits_to_matrix(&BitString::zeros(7), 2, 2).is_err());
    }

    #[test]
    fn usefulness_examples() {
        assert!(usefulness(&matrix(3, &[(0, 1), (1, 2), (2, 0)]), 3).is_useful());
        assert!(!usefulness(&matrix(3, &[(0, 0), (1, 1), (2, 2)]), 3).is_useful());
        assert!(!usefulness(&matrix(3, &[(0, 1), (1, 2), (2, 0), (0, 0)]), 3).is_useful());
        // Two-plus-one cycle structure.
        assert!(!usefulness(&matrix(3, &[(0, 1), (1, 0), (2, 2)]), 3).is_useful());
        // Useful inside a larger matrix.
        assert!(usefulness(&matrix(5, &[(1, 4), (3, 0)]), 2).is_useful());
    }

    #[test]
    fn fls_defaults() {
        let p = HbParams::fls_defaults(3, 1);
        assert_eq!((p.side, p.block_len, p.bits_per_rep()), (27, 8, 5832));
        let p = HbParams::fls_defaults(4, 20);
        assert_eq!((p.side, p.block_len, p.bits_per_rep(), p.total_bits()), (64, 10, 40960, 819_200));
    }

    #[test]
    fn completeness_is_exhaustive_at_tiny_params() {
        let x = HbInstance::complete(3);
        let w = x.find_hamiltonian_cycle().unwrap();
        let params = small(3);
        for v in 0..512u64 {
            let r = BitString::from_u64(v, 9);
            let (mask, proof) = hb_prove(&r, &x, &w, &params).unwrap();
            assert!(hb_verify(&RevealedBits::reveal(&r, &mask), &x, &proof, &params), "r={r}");
            if !usefulness(&bits_to_matrix(&r, 3, 1).unwrap(), 3).is_useful() {
                assert_eq!(mask, BitString::ones(9));
            }
        }
    }

    #[test]
    fn flipping_an_opened_bit_of_a_useful_block_rejects() {
        // With b = 1 every opened entry of a useful block is a single 0 bit.
        let x = HbInstance::complete(3);
        let w = x.find_hamiltonian_cycle().unwrap();
        let params = HbParams::new(3, 1, 1, 4).unwrap();
        let mut rng = stream(11, "flip");
        let mut checked = 0;
        while checked < 20 {
            let r = BitString::random(params.total_bits(), &mut rng);
            let (mask, proof) = hb_prove(&r, &x, &w, &params).unwrap();
            if proof.reps[0] == RepProof::RevealAll {
                continue;
            }
            for i in mask.ones_positions() {
                let mut bad = r.clone();
                bad.flip(i);
                assert!(!hb_verify(&RevealedBits::reveal(&bad, &mask), &x, &proof, &params));
            }
            checked += 1;
        }
    }

    fn all_injections(n: usize, m: usize) -> Vec<Vec<usize>> {
        let mut out: Vec<Vec<usize>> = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::new();
            for p in &out {
                for v in (0..m).filter(|v| !p.contains(v)) {
                    let mut q = p.clone();
                    q.push(v);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Exhaustive over all 2⁹ hidden strings and every claimed embedding at m=3, b=1.
    #[test]
    fn soundness_is_exhaustive_for_the_non_hamiltonian_instance() {
        let x = HbInstance::non_hamiltonian_3();
        let params = small(3);
        let maps = all_injections(3, 3);
        for v in 0..512u64 {
            let r = BitString::from_u64(v, 9);
            let m = bits_to_matrix(&r, 3, 1).unwrap();
            let useful = usefulness(&m, 3).is_useful();
            let reveal_all = HbProof { reps: vec![RepProof::RevealAll] };
            assert_eq!(hb_verify(&RevealedBits::reveal(&r, &BitString::ones(9)), &x, &reveal_all, &params), !useful);
            for rows in &maps {
                for cols in &maps {
                    let proof = HbProof { reps: vec![RepProof::Useful { rows: rows.clone(), cols: cols.clone() }] };
                    let Some(mask) = opened_mask(&params, &x, &proof) else { continue };
                    let accepted = hb_verify(&RevealedBits::reveal(&r, &mask), &x, &proof, &params);
                    if useful {
                        assert!(!accepted, "useful r={r} accepted with rows={rows:?} cols={cols:?}");
                    }
                    // Oracle for fabricated claims: accepted iff every one-entry hides in E'.
                    let hidden = m.ones().all(|(a, c)| {
                        x.edges().any(|(u, w)| rows[u] == a && cols[w] == c)
                    });
                    assert_eq!(accepted, hidden);
                }
            }
        }
    }

    /// Brute-force count of useful matrices, weighted by entry probabilities.
    fn brute_force_useful_probability(n: usize, side: usize, b: usize) -> f64 {
        let p = 2f64.powi(-(b as i32));
        let cells = side * side;
        let mut total = 0.0;
        for v in 0u64..(1 << cells) {
            let mut m = BoolMatrix::zeros(side);
            for e in 0..cells {
                m.set(e / side, e % side, (v >> e) & 1 == 1);
            }
            if usefulness(&m, n).is_useful() {
                let k = v.count_ones() as i32;
                total += p.powi(k) * (1.0 - p).powi(cells as i32 - k);
            }
        }
        total
    }

    #[test]
    fn closed_form_useful_rate_matches_brute_force() {
        for (n, side, b) in [(2, 3, 1), (3, 3, 1), (3, 4, 2), (2, 4, 3)] {
            let closed = HbParams::new(n, 1, b, side).unwrap().useful_probability();
            let brute = brute_force_useful_probability(n, side, b);
            assert!((closed - brute).abs() < 1e-12, "n={n} m={side} b={b}: {closed} vs {brute}");
        }
        assert!((small(3).useful_probability() - 2.0 / 512.0).abs() < 1e-15);
    }

    #[test]
    fn empirical_useful_rate_matches_closed_form() {
        let params = HbParams::new(3, 1, 10, 27).unwrap();
        let p = params.useful_probability();
        let trials = 100_000u64;
        let mut rng = stream(13, "rate");
        let mut hits = 0u64;
        for _ in 0..trials {
            let blk = BitString::random(params.bits_per_rep(), &mut rng);
            hits += usefulness(&bits_to_matrix(&blk, 27, 10).unwrap(), 3).is_useful() as u64;
        }
        let sigma = crate::stats::binomial_sigma(p, trials);
        let rate = hits as f64 / trials as f64;
        assert!((rate - p).abs() <= 3.0 * sigma, "rate {rate} vs {p} ± {sigma}");
    }

    #[test]
    fn witness_validation() {
        let x = HbInstance::cycle(4);
        assert!(HbWitness::new(vec![2, 3, 0, 1]).validate(&x).is_ok());
        assert!(HbWitness::new(vec![0, 2, 1, 3]).validate(&x).is_err());
        let r = BitString::zeros(HbParams::new(4, 1, 1, 4).unwrap().total_bits());
        assert!(matches!(
            hb_prove(&r, &x, &HbWitness::new(vec![0, 1, 3, 2]), &HbParams::new(4, 1, 1, 4).unwrap()),
            Err(Error::InvalidWitness(_))
        ));
        assert!(HbInstance::non_hamiltonian_3().find_hamiltonian_cycle().is_none());
    }

    #[test]
    fn adjacency_file_round_trip() {
        let x = HbInstance::complete(4);
        let parsed: HbInstance = x.to_adjacency_list().parse().unwrap();
        assert_eq!(parsed, x);
        assert!("3\n0 0\n".parse::<HbInstance>().is_err());
        assert!("3\n0 5\n".parse::<HbInstance>().is_err());
        assert!("3\n0\n".parse::<HbInstance>().is_err());
        let c: HbInstance = "# graph\n3\n0 1 # edge\n\n1 2\n2 0\n".parse().unwrap();
        assert_eq!(c, HbInstance::cycle(3));
    }

    #[test]
    fn simulated_proofs_verify() {
        let x = HbInstance::complete(3);
        let params = HbParams::new(3, 6, 2, 4).unwrap();
        let mut rng = stream(12, "sim");
        for _ in 0..200 {
            let (mask, rev, proof) = hb_simulate(&x, &params, &mut rng).unwrap();
            assert_eq!(rev.mask(), &mask);
            assert!(hb_verify(&rev, &x, &proof, &params));
        }
    }
}
