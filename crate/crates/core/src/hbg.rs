//! Hidden-bits generators.
//!
//! [`HbgMode::Naor`] is a statistically binding, non-succinct construction:
//! position `i` commits to `r_i` as `c_i = G(seed_i) ⊕ r_i·u_i` for a PRG
//! `G: {0,1}^s → {0,1}^{3s}` and public shifts `u_i`. [`HbgMode::Dealer`] is a
//! trusted-dealer test double that simply remembers the hidden bits; it exists
//! for protocol-logic tests and performance runs.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand::Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::bits::BitString;
use crate::error::{usage, Error, Result};

/// Largest seed length for which the brute-force opener is allowed.
pub const OPEN_SEED_LIMIT: u32 = 22;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Prg {
    /// SHA-256 in counter mode with a domain tag.
    Sha256,
    /// G(seed) = seed ∥ 0^{2s}. Deliberately insecure negative control.
    Identity,
}

impl Prg {
    /// Expands an `s`-bit seed to 3s bits.
    pub fn expand(self, s: u32, seed: u128) -> BitString {
        let out_len = 3 * s as usize;
        match self {
            Prg::Identity => {
                let mut b = BitString::from_u128(seed, s as usize);
                b.extend_from(&BitString::zeros(2 * s as usize));
                b
            }
            Prg::Sha256 => {
                let mut out = BitString::with_capacity(out_len);
                let mut ctr = 0u32;
                while out.len() < out_len {
                    let mut h = Sha256::new();
                    h.update(b"cenizk/naor-prg/v1");
                    h.update(s.to_le_bytes());
                    h.update(seed.to_le_bytes());
                    h.update(ctr.to_le_bytes());
                    let d = h.finalize();
                    for chunk in d.chunks(8) {
                        let w = u64::from_le_bytes(chunk.try_into().unwrap());
                        let take = (out_len - out.len()).min(64);
                        if take == 0 {
                            break;
                        }
                        out.push_bits(take, w);
                    }
                    ctr += 1;
                }
                out
            }
        }
    }

    /// Expansion packed into a u128; requires 3s ≤ 128.
    fn expand_u128(self, s: u32, seed: u128) -> u128 {
        self.expand(s, seed).to_u128()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HbgMode {
    Naor { seed_len: u32, prg: Prg },
    /// Trusted-dealer test double.
    Dealer,
}

impl HbgMode {
    pub fn naor(seed_len: u32) -> Self {
        HbgMode::Naor { seed_len, prg: Prg::Sha256 }
    }
}

/// Parameters of an HBG instance.
///
/// `succinctness` is the exponent δ of the commitment-size bound
/// |COM| ≤ 2^{k^δ·poly(λ)}; it is recorded for documentation only, since
/// neither instantiation here is succinct.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HbgParams {
    pub k: usize,
    pub mode: HbgMode,
    pub succinctness: f64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NaorCrs {
    pub k: usize,
    pub seed_len: u32,
    pub prg: Prg,
    /// One 3s-bit shift per position.
    pub shifts: Vec<BitString>,
}

#[derive(Debug, Default)]
struct DealerRegistry {
    next: u64,
    entries: HashMap<u64, Arc<BitString>>,
}

/// Dealer crs: a handle to an in-process registry of committed strings.
#[derive(Debug, Clone)]
pub struct DealerCrs {
    pub k: usize,
    registry: Arc<Mutex<DealerRegistry>>,
}

impl PartialEq for DealerCrs {
    fn eq(&self, other: &Self) -> bool {
        self.k == other.k && Arc::ptr_eq(&self.registry, &other.registry)
    }
}

impl DealerCrs {
    fn lookup(&self, handle: u64) -> Option<Arc<BitString>> {
        self.registry.lock().expect("dealer registry poisoned").entries.get(&handle).cloned()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum HbgCrs {
    Naor(NaorCrs),
    Dealer(DealerCrs),
}

impl HbgCrs {
    pub fn k(&self) -> usize {
        match self {
            HbgCrs::Naor(c) => c.k,
            HbgCrs::Dealer(c) => c.k,
        }
    }

    pub fn mode(&self) -> HbgMode {
        match self {
            HbgCrs::Naor(c) => HbgMode::Naor { seed_len: c.seed_len, prg: c.prg },
            HbgCrs::Dealer(_) => HbgMode::Dealer,
        }
    }

    /// Bytes binding the public crs content (dealer mode: only its size).
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            HbgCrs::Naor(c) => {
                out.push(0);
                out.extend((c.k as u64).to_le_bytes());
                out.extend(c.seed_len.to_le_bytes());
                out.push(matches!(c.prg, Prg::Identity) as u8);
                for u in &c.shifts {
                    out.extend(u.to_bytes());
                }
            }
            HbgCrs::Dealer(c) => {
                out.push(1);
                out.extend((c.k as u64).to_le_bytes());
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HbgCommitment {
    Naor(Vec<BitString>),
    Dealer { handle: u64 },
}

impl HbgCommitment {
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        match self {
            HbgCommitment::Naor(cs) => {
                out.push(0);
                out.extend((cs.len() as u64).to_le_bytes());
                for c in cs {
                    out.extend((c.len() as u32).to_le_bytes());
                    out.extend(c.to_bytes());
                }
            }
            HbgCommitment::Dealer { handle } => {
                out.push(1);
                out.extend(handle.to_le_bytes());
            }
        }
        out
    }
}

/// Opening of one position.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HbgOpening {
    Seed(u128),
    DealerReceipt,
}

/// Openings for a set of positions, in increasing position order.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HbgOpenings {
    Naor(Vec<u128>),
    /// Dealer receipts carry no data; only their count is kept.
    Dealer { count: usize },
}

impl HbgOpenings {
    pub fn len(&self) -> usize {
        match self {
            HbgOpenings::Naor(v) => v.len(),
            HbgOpenings::Dealer { count } => *count,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, idx: usize) -> Option<HbgOpening> {
        match self {
            HbgOpenings::Naor(v) => v.get(idx).map(|&s| HbgOpening::Seed(s)),
            HbgOpenings::Dealer { count } => (idx < *count).then_some(HbgOpening::DealerReceipt),
        }
    }

    /// Openings of the positions set in `mask`, given openings of all positions.
    pub fn restrict(&self, mask: &BitString) -> HbgOpenings {
        match self {
            HbgOpenings::Naor(v) => HbgOpenings::Naor(mask.ones_positions().map(|i| v[i]).collect()),
            HbgOpenings::Dealer { .. } => HbgOpenings::Dealer { count: mask.count_ones() },
        }
    }
}

pub fn hbg_setup<R: Rng + ?Sized>(k: usize, mode: HbgMode, rng: &mut R) -> Result<HbgCrs> {
    if k == 0 {
        return Err(usage("HBG needs k ≥ 1"));
    }
    Ok(match mode {
        HbgMode::Naor { seed_len, prg } => {
            if seed_len == 0 || seed_len > 128 {
                return Err(usage(format!("Naor seed length must be in 1..=128, got {seed_len}")));
            }
            let shifts = (0..k).map(|_| BitString::random(3 * seed_len as usize, rng)).collect();
            HbgCrs::Naor(NaorCrs { k, seed_len, prg, shifts })
        }
        HbgMode::Dealer => HbgCrs::Dealer(DealerCrs { k, registry: Arc::default() }),
    })
}

fn random_seed<R: Rng + ?Sized>(s: u32, rng: &mut R) -> u128 {
    let v: u128 = rng.gen();
    if s == 128 {
        v
    } else {
        v & ((1u128 << s) - 1)
    }
}

/// Commits to fresh uniform hidden bits. Returns (com, r, openings of all k positions).
pub fn hbg_genbits<R: Rng + ?Sized>(crs: &HbgCrs, rng: &mut R) -> (HbgCommitment, BitString, HbgOpenings) {
    match crs {
        HbgCrs::Naor(c) => {
            let mut com = Vec::with_capacity(c.k);
            let mut seeds = Vec::with_capacity(c.k);
            let mut r = BitString::zeros(c.k);
            for i in 0..c.k {
                let seed = random_seed(c.seed_len, rng);
                let bit: bool = rng.gen();
                let mut ci = c.prg.expand(c.seed_len, seed);
                if bit {
                    ci.xor_assign(&c.shifts[i]);
                }
                r.set(i, bit);
                com.push(ci);
                seeds.push(seed);
            }
            (HbgCommitment::Naor(com), r, HbgOpenings::Naor(seeds))
        }
        HbgCrs::Dealer(c) => {
            let r = BitString::random(c.k, rng);
            let handle = {
                let mut reg = c.registry.lock().expect("dealer registry poisoned");
                let h = reg.next;
                reg.next += 1;
                reg.entries.insert(h, Arc::new(r.clone()));
                h
            };
            (HbgCommitment::Dealer { handle }, r, HbgOpenings::Dealer { count: c.k })
        }
    }
}

/// Dealer-only trapdoor: commits to a caller-chosen string.
pub fn dealer_program(crs: &HbgCrs, r: BitString) -> Result<(HbgCommitment, HbgOpenings)> {
    let HbgCrs::Dealer(c) = crs else {
        return Err(usage("only the dealer HBG can be programmed"));
    };
    if r.len() != c.k {
        return Err(Error::Length { what: "programmed hidden bits", expected: c.k, got: r.len() });
    }
    let mut reg = c.registry.lock().expect("dealer registry poisoned");
    let handle = reg.next;
    reg.next += 1;
    reg.entries.insert(handle, Arc::new(r));
    Ok((HbgCommitment::Dealer { handle }, HbgOpenings::Dealer { count: c.k }))
}

/// Verifies the claim that position `i` of `com` holds `bit`.
pub fn hbg_verify(crs: &HbgCrs, com: &HbgCommitment, i: usize, bit: bool, opening: HbgOpening) -> bool {
    if i >= crs.k() {
        return false;
    }
    match (crs, com, opening) {
        (HbgCrs::Naor(c), HbgCommitment::Naor(cs), HbgOpening::Seed(seed)) => {
            if cs.len() != c.k || cs[i].len() != 3 * c.seed_len as usize {
                return false;
            }
            if c.seed_len < 128 && seed >> c.seed_len != 0 {
                return false;
            }
            let mut expect = cs[i].clone();
            if bit {
                expect.xor_assign(&c.shifts[i]);
            }
            expect == c.prg.expand(c.seed_len, seed)
        }
        (HbgCrs::Dealer(c), HbgCommitment::Dealer { handle }, HbgOpening::DealerReceipt) => {
            c.lookup(*handle).is_some_and(|r| r.get(i) == bit)
        }
        _ => false,
    }
}

/// Verifies openings for every position in `mask` against `values` (read only at `mask`).
pub fn hbg_verify_set(crs: &HbgCrs, com: &HbgCommitment, mask: &BitString, values: &BitString, openings: &HbgOpenings) -> bool {
    if mask.len() != crs.k() || values.len() != crs.k() || openings.len() != mask.count_ones() {
        return false;
    }
    match (crs, com) {
        (HbgCrs::Dealer(c), HbgCommitment::Dealer { handle }) => {
            let Some(r) = c.lookup(*handle) else { return false };
            // Word-wise comparison of the masked bits.
            r.and(mask) == values.and(mask)
        }
        _ => mask
            .ones_positions()
            .enumerate()
            .all(|(j, i)| openings.get(j).is_some_and(|op| hbg_verify(crs, com, i, values.get(i), op))),
    }
}

/// Sorted table of (G(seed), seed) for all 2^s seeds.
struct SeedTable {
    entries: Vec<(u128, u32)>,
}

impl SeedTable {
    fn build(prg: Prg, s: u32) -> Self {
        let mut entries: Vec<(u128, u32)> = (0..1u32 << s).map(|seed| (prg.expand_u128(s, seed as u128), seed)).collect();
        entries.sort_unstable();
        Self { entries }
    }

    fn find(&self, target: u128) -> Option<u32> {
        self.entries.binary_search_by(|e| e.0.cmp(&target)).ok().map(|i| self.entries[i].1)
    }

    fn outputs(&self) -> impl Iterator<Item = u128> + '_ {
        self.entries.iter().map(|e| e.0)
    }
}

fn seed_table(prg: Prg, s: u32) -> Arc<SeedTable> {
    static CACHE: OnceLock<Mutex<HashMap<(Prg, u32), Arc<SeedTable>>>> = OnceLock::new();
    let cache = CACHE.get_or_init(Default::default);
    let mut guard = cache.lock().expect("seed table cache poisoned");
    guard.entry((prg, s)).or_insert_with(|| Arc::new(SeedTable::build(prg, s))).clone()
}

/// Result of the brute-force opener.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OpenResult {
    pub bits: BitString,
    /// Positions where both cosets contain a PRG output.
    pub equivocal: Vec<usize>,
    /// Positions in neither coset; these read as the default bit 0.
    pub garbage: Vec<usize>,
}

/// Inefficient deterministic Open: for each position scan every seed.
pub fn hbg_open(crs: &HbgCrs, com: &HbgCommitment) -> Result<OpenResult> {
    let (HbgCrs::Naor(c), HbgCommitment::Naor(cs)) = (crs, com) else {
        return Err(usage("hbg_open needs a Naor crs and commitment"));
    };
    if c.seed_len > OPEN_SEED_LIMIT {
        return Err(Error::OpenGuard { limit: OPEN_SEED_LIMIT, got: c.seed_len });
    }
    if cs.len() != c.k {
        return Err(usage("commitment length does not match crs"));
    }
    let table = seed_table(c.prg, c.seed_len);
    let mut out = OpenResult { bits: BitString::zeros(c.k), equivocal: vec![], garbage: vec![] };
    for (i, ci) in cs.iter().enumerate() {
        if ci.len() != 3 * c.seed_len as usize {
            out.garbage.push(i);
            continue;
        }
        let zero = table.find(ci.to_u128()).is_some();
        let one = table.find(ci.xor(&c.shifts[i]).to_u128()).is_some();
        match (zero, one) {
            (true, true) => out.equivocal.push(i),
            (false, true) => out.bits.set(i, true),
            (true, false) => {}
            (false, false) => out.garbage.push(i),
        }
    }
    Ok(out)
}

/// Whether some commitment value can be opened both ways at a position with
/// shift `u`, i.e. whether `u ∈ G(·) ⊕ G(·)`. Exhaustive over seeds.
pub fn shift_admits_equivocation(prg: Prg, s: u32, u: &BitString) -> Result<bool> {
    if s > OPEN_SEED_LIMIT {
        return Err(Error::OpenGuard { limit: OPEN_SEED_LIMIT, got: s });
    }
    let table = seed_table(prg, s);
    let uu = u.to_u128();
    let found = table.outputs().any(|g| table.find(g ^ uu).is_some());
    Ok(found)
}

/// Exhaustive search for a seed opening position `i` of `com` to `bit`.
pub fn find_opening(crs: &HbgCrs, com: &HbgCommitment, i: usize, bit: bool) -> Result<Option<u128>> {
    let (HbgCrs::Naor(c), HbgCommitment::Naor(cs)) = (crs, com) else {
        return Err(usage("find_opening needs a Naor crs and commitment"));
    };
    if c.seed_len > OPEN_SEED_LIMIT {
        return Err(Error::OpenGuard { limit: OPEN_SEED_LIMIT, got: c.seed_len });
    }
    let mut target = cs[i].clone();
    if bit {
        target.xor_assign(&c.shifts[i]);
    }
    Ok(seed_table(c.prg, c.seed_len).find(target.to_u128()).map(|s| s as u128))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::chi_square_uniform_pvalue;

    #[test]
    fn naor_commitment_shapes() {
        let mut rng = stream(1, "hbg");
        let crs = hbg_setup(1, HbgMode::naor(12), &mut rng).unwrap();
        let HbgCrs::Naor(c) = &crs else { panic!() };
        assert_eq!(c.shifts.len(), 1);
        assert_eq!(c.shifts[0].len(), 36);
        for _ in 0..20 {
            let (com, r, ops) = hbg_genbits(&crs, &mut rng);
            let HbgCommitment::Naor(cs) = &com else { panic!() };
            let Some(HbgOpening::Seed(seed)) = ops.get(0) else { panic!() };
            let g = Prg::Sha256.expand(12, seed);
            if r.get(0) {
                assert_eq!(cs[0].xor(&c.shifts[0]), g);
            } else {
                assert_eq!(cs[0], g);
            }
        }
    }

    #[test]
    fn setup_is_deterministic_and_dealer_is_fresh() {
        let a = hbg_setup(8, HbgMode::naor(10), &mut stream(2, "s")).unwrap();
        let b = hbg_setup(8, HbgMode::naor(10), &mut stream(2, "s")).unwrap();
        assert_eq!(a, b);
        let d1 = hbg_setup(8, HbgMode::Dealer, &mut stream(2, "s")).unwrap();
        let d2 = hbg_setup(8, HbgMode::Dealer, &mut stream(2, "s")).unwrap();
        assert_ne!(d1, d2);
        assert!(hbg_setup(0, HbgMode::Dealer, &mut stream(2, "s")).is_err());
    }

    #[test]
    fn round_trip_and_rejections() {
        let mut rng = stream(3, "rt");
        for mode in [HbgMode::naor(12), HbgMode::Dealer, HbgMode::naor(128)] {
            let crs = hbg_setup(16, mode, &mut rng).unwrap();
            let (com, r, ops) = hbg_genbits(&crs, &mut rng);
            for i in 0..16 {
                let op = ops.get(i).unwrap();
                assert!(hbg_verify(&crs, &com, i, r.get(i), op));
                assert!(!hbg_verify(&crs, &com, i, !r.get(i), op));
            }
            assert!(!hbg_verify(&crs, &com, 16, false, ops.get(0).unwrap()));
            let mask = BitString::ones(16);
            assert!(hbg_verify_set(&crs, &com, &mask, &r, &ops));
            let mut bad = r.clone();
            bad.flip(5);
            assert!(!hbg_verify_set(&crs, &com, &mask, &bad, &ops));
            let half: BitString = (0..16).map(|i| i % 2 == 0).collect();
            assert!(hbg_verify_set(&crs, &com, &half, &r.and(&half), &ops.restrict(&half)));
        }
    }

    #[test]
    fn r_marginal_is_uniform() {
        let mut rng = stream(4, "marg");
        let crs = hbg_setup(4, HbgMode::naor(12), &mut rng).unwrap();
        let mut counts = [0u64; 2];
        for _ in 0..2_500 {
            let (_, r, _) = hbg_genbits(&crs, &mut rng);
            for b in r.iter() {
                counts[b as usize] += 1;
            }
        }
        assert!(chi_square_uniform_pvalue(&counts) > 0.01);
    }

    #[test]
    fn open_recovers_honest_commitments() {
        let mut rng = stream(5, "open");
        for _ in 0..100 {
            let crs = hbg_setup(10, HbgMode::naor(12), &mut rng).unwrap();
            let (com, r, _) = hbg_genbits(&crs, &mut rng);
            let o = hbg_open(&crs, &com).unwrap();
            assert_eq!(o.bits, r);
            assert!(o.garbage.is_empty());
        }
        let crs = hbg_setup(1, HbgMode::naor(23), &mut rng).unwrap();
        let (com, _, _) = hbg_genbits(&crs, &mut rng);
        assert!(matches!(hbg_open(&crs, &com), Err(Error::OpenGuard { .. })));
    }

    #[test]
    fn flipped_bit_with_same_seed_never_verifies_without_equivocation() {
        let mut rng = stream(6, "flip");
        for _ in 0..200 {
            let crs = hbg_setup(4, HbgMode::naor(10), &mut rng).unwrap();
            let (com, r, ops) = hbg_genbits(&crs, &mut rng);
            let o = hbg_open(&crs, &com).unwrap();
            for i in 0..4 {
                if o.equivocal.contains(&i) {
                    continue;
                }
                assert!(!hbg_verify(&crs, &com, i, !r.get(i), ops.get(i).unwrap()));
                assert_eq!(find_opening(&crs, &com, i, !r.get(i)).unwrap(), None);
            }
        }
    }

    /// Union-bound oracle: P[u ∈ G ⊕ G] ≤ 2^s·2^s / 2^{3s} = 2^{-s} per position.
    #[test]
    fn adversarial_equivocation_rate_respects_union_bound() {
        let s = 8;
        let trials = 20_000u64;
        let mut rng = stream(7, "equiv");
        let mut hits = 0;
        for _ in 0..trials {
            let u = BitString::random(3 * s as usize, &mut rng);
            hits += shift_admits_equivocation(Prg::Sha256, s, &u).unwrap() as u64;
        }
        let bound = 2f64.powi(-(s as i32));
        let rate = hits as f64 / trials as f64;
        let sigma = crate::stats::binomial_sigma(bound, trials);
        assert!(rate <= bound + 3.0 * sigma, "rate {rate} bound {bound}");
        assert!(hits > 0, "rate should be measurable at s = 8");
    }

    #[test]
    fn identity_prg_breaks_hiding_but_sha_does_not() {
        // Distinguisher: guess r_i = 0 iff the top 2s bits of c_i are zero.
        let advantage = |prg: Prg| {
            let mut rng = stream(8, "hide");
            let crs = hbg_setup(64, HbgMode::Naor { seed_len: 12, prg }, &mut rng).unwrap();
            let mut right = 0u64;
            let mut total = 0u64;
            for _ in 0..100 {
                let (com, r, _) = hbg_genbits(&crs, &mut rng);
                let HbgCommitment::Naor(cs) = com else { unreachable!() };
                for (i, c) in cs.iter().enumerate() {
                    let guess = !c.slice(12, 36).is_zero();
                    right += (guess == r.get(i)) as u64;
                    total += 1;
                }
            }
            right as f64 / total as f64 - 0.5
        };
        assert!(advantage(Prg::Identity) > 0.45);
        assert!(advantage(Prg::Sha256).abs() < 0.05);
    }
}
