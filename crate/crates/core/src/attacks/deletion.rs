//! Certified deletion of BB84 states as an executable experiment.
//!
//! Exp(b) samples y, θ ∈ {0,1}^λ, hands the adversary Z(θ, b ⊕ ⊕_{θ_i=0} y_i, |y⟩^θ),
//! and outputs the adversary's residual state if its certificate matches y on
//! every Hadamard position, ⊥ otherwise.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::error::{usage, Result};
use crate::quantum::{trace_distance_with_bottom, Basis, Bb84Descriptor, DensityMatrix, SparseState};
use crate::stats::{hoeffding_half_width, Estimate, Histogram};

/// Largest λ for exact (density-matrix) evaluation.
pub const EXACT_LAMBDA_LIMIT: usize = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ZKind {
    /// Only the masked bit and the register; θ stays hidden.
    Standard,
    /// Also hands over θ. Violates the experiment's precondition.
    LeakTheta,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum DeletionAdversary {
    /// X-measures everything, returns the outcomes and outputs nothing.
    HonestDeleter,
    /// Keeps (b', register) and returns a uniformly random certificate.
    KeepState,
    /// Needs θ: measures in basis θ, certifies with y and outputs b.
    ThetaExploiter,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeletionExperiment {
    pub lambda: usize,
    pub z: ZKind,
    pub adversary: DeletionAdversary,
}

/// What Z hands to the adversary.
#[derive(Debug, Clone)]
pub struct ZOutput {
    pub masked_bit: bool,
    pub register: SparseState,
    pub theta: Option<BitString>,
}

pub fn z_output(kind: ZKind, theta: &BitString, masked_bit: bool, register: SparseState) -> ZOutput {
    ZOutput { masked_bit, register, theta: (kind == ZKind::LeakTheta).then(|| theta.clone()) }
}

fn masked(b: bool, y: &BitString, theta: &BitString) -> bool {
    b ^ y.and(&theta.not()).parity()
}

/// Certificate check: cert_i = y_i wherever θ_i = 1.
pub fn deletion_accepts(cert: &BitString, y: &BitString, theta: &BitString) -> bool {
    cert.xor(y).and(theta).is_zero()
}

fn classical(bit: bool) -> DensityMatrix {
    let mut m = DMatrix::zeros(2, 2);
    m[(bit as usize, bit as usize)] = Complex64::new(1.0, 0.0);
    m
}

/// The trivial one-dimensional output.
fn empty() -> DensityMatrix {
    DMatrix::from_element(1, 1, Complex64::new(1.0, 0.0))
}

/// One exact branch of the adversary: probability, certificate, output state.
type Branch = (f64, BitString, DensityMatrix);

impl DeletionExperiment {
    pub fn new(lambda: usize, z: ZKind, adversary: DeletionAdversary) -> Result<Self> {
        if lambda == 0 || lambda > 11 {
            return Err(usage(format!("deletion experiment needs 1 ≤ λ ≤ 11, got {lambda}")));
        }
        if adversary == DeletionAdversary::ThetaExploiter && z != ZKind::LeakTheta {
            return Err(usage("the θ-exploiting adversary needs the θ-leaking Z"));
        }
        Ok(Self { lambda, z, adversary })
    }

    /// Qubits of the output state (⊥ is carried as missing trace).
    pub fn output_qubits(&self) -> usize {
        match self.adversary {
            DeletionAdversary::HonestDeleter => 0,
            DeletionAdversary::ThetaExploiter => 1,
            DeletionAdversary::KeepState => 1 + self.lambda,
        }
    }

    fn branches(&self, input: &ZOutput) -> Result<Vec<Branch>> {
        let l = self.lambda;
        let all: Vec<usize> = (0..l).collect();
        Ok(match self.adversary {
            DeletionAdversary::HonestDeleter => input
                .register
                .outcome_distribution(&all, &vec![Basis::X; l])?
                .into_iter()
                .map(|(c, p, _)| (p, c, empty()))
                .collect(),
            DeletionAdversary::KeepState => {
                let out = classical(input.masked_bit).kronecker(&input.register.density_matrix(&all)?);
                let p = 0.5f64.powi(l as i32);
                (0..1u64 << l).map(|c| (p, BitString::from_u64(c, l), out.clone())).collect()
            }
            DeletionAdversary::ThetaExploiter => {
                let theta = input.theta.as_ref().ok_or_else(|| usage("θ-exploiter received no θ"))?;
                input
                    .register
                    .outcome_distribution(&all, &Basis::all(theta))?
                    .into_iter()
                    .map(|(y, p, _)| (p, y.clone(), classical(input.masked_bit ^ y.and(&theta.not()).parity())))
                    .collect()
            }
        })
    }

    fn sample_adversary<R: Rng + ?Sized>(&self, mut input: ZOutput, rng: &mut R) -> Result<(BitString, DensityMatrix)> {
        let l = self.lambda;
        let all: Vec<usize> = (0..l).collect();
        Ok(match self.adversary {
            DeletionAdversary::HonestDeleter => {
                let c = input.register.measure(&all, &vec![Basis::X; l], rng)?;
                (c, empty())
            }
            DeletionAdversary::KeepState => {
                let out = classical(input.masked_bit).kronecker(&input.register.density_matrix(&all)?);
                (BitString::random(l, rng), out)
            }
            DeletionAdversary::ThetaExploiter => {
                let theta = input.theta.clone().ok_or_else(|| usage("θ-exploiter received no θ"))?;
                let y = input.register.measure(&all, &Basis::all(&theta), rng)?;
                let b = input.masked_bit ^ y.and(&theta.not()).parity();
                (y, classical(b))
            }
        })
    }

    /// One run of Exp(b): the output state, or `None` for ⊥.
    pub fn run<R: Rng + ?Sized>(&self, b: bool, rng: &mut R) -> Result<Option<DensityMatrix>> {
        Ok(self.run_detailed(b, rng)?.1)
    }

    /// Like [`DeletionExperiment::run`], also returning θ for post-hoc statistics.
    pub fn run_detailed<R: Rng + ?Sized>(&self, b: bool, rng: &mut R) -> Result<(BitString, Option<DensityMatrix>)> {
        let desc = Bb84Descriptor::random(self.lambda, rng);
        let input = z_output(self.z, &desc.theta, masked(b, &desc.y, &desc.theta), SparseState::prep_bb84(&desc));
        let (cert, out) = self.sample_adversary(input, rng)?;
        Ok((desc.theta.clone(), deletion_accepts(&cert, &desc.y, &desc.theta).then_some(out)))
    }

    /// Exact sub-normalised output of Exp(b); the missing trace is the ⊥ weight.
    pub fn exact_output(&self, b: bool) -> Result<DensityMatrix> {
        let l = self.lambda;
        if l > EXACT_LAMBDA_LIMIT {
            return Err(usage(format!("exact mode needs λ ≤ {EXACT_LAMBDA_LIMIT}, got {l}")));
        }
        let d = 1usize << self.output_qubits();
        let mut acc = DMatrix::zeros(d, d);
        let w = 0.25f64.powi(l as i32);
        for th in 0..1u64 << l {
            for yv in 0..1u64 << l {
                let (y, theta) = (BitString::from_u64(yv, l), BitString::from_u64(th, l));
                let reg = SparseState::prep_bb84(&Bb84Descriptor::new(y.clone(), theta.clone())?);
                let input = z_output(self.z, &theta, masked(b, &y, &theta), reg);
                for (p, cert, out) in self.branches(&input)? {
                    if deletion_accepts(&cert, &y, &theta) {
                        acc += out * Complex64::new(w * p, 0.0);
                    }
                }
            }
        }
        Ok(acc)
    }

    /// TD(Exp(0), Exp(1)): exact for λ ≤ 4, otherwise a Monte Carlo estimate
    /// over computational-basis readouts of the outputs (a lower bound on the
    /// trace distance) with a Hoeffding interval at confidence 1 − `delta`.
    pub fn td_estimate<R: Rng + ?Sized>(&self, trials: u64, delta: f64, rng: &mut R) -> Result<Estimate> {
        if self.lambda <= EXACT_LAMBDA_LIMIT {
            return Ok(Estimate::exact(trace_distance_with_bottom(&self.exact_output(false)?, &self.exact_output(true)?)));
        }
        let mut h = [Histogram::new(), Histogram::new()];
        for (b, hist) in h.iter_mut().enumerate() {
            for _ in 0..trials {
                let label = match self.run(b == 1, rng)? {
                    None => None,
                    Some(rho) => Some(sample_diagonal(&rho, rng)),
                };
                hist.add(label);
            }
        }
        let point = h[0].tv_distance(&h[1]);
        let outcomes = (1usize << self.output_qubits()) + 1;
        let hw = if trials == 0 { 1.0 } else { outcomes as f64 * hoeffding_half_width(trials, delta / (2 * outcomes) as f64, 1.0) };
        Ok(Estimate { point, lo: (point - hw).max(0.0), hi: (point + hw).min(1.0) })
    }
}

fn sample_diagonal<R: Rng + ?Sized>(rho: &DensityMatrix, rng: &mut R) -> usize {
    let u: f64 = rng.gen::<f64>() * rho.trace().re;
    let mut acc = 0.0;
    for i in 0..rho.nrows() {
        acc += rho[(i, i)].re;
        if u < acc {
            return i;
        }
    }
    rho.nrows() - 1
}

pub fn run_deletion_experiment<R: Rng + ?Sized>(exp: &DeletionExperiment, b: bool, rng: &mut R) -> Result<Option<DensityMatrix>> {
    exp.run(b, rng)
}

pub fn td_estimate<R: Rng + ?Sized>(exp: &DeletionExperiment, trials: u64, rng: &mut R) -> Result<Estimate> {
    exp.td_estimate(trials, 0.05, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream;
    use crate::stats::binomial_sigma;

    #[test]
    fn honest_deleter_is_perfectly_hiding() {
        for l in 1..=3 {
            let exp = DeletionExperiment::new(l, ZKind::Standard, DeletionAdversary::HonestDeleter).unwrap();
            let td = exp.td_estimate(0, 0.05, &mut stream(1, "x")).unwrap();
            assert!(td.point.abs() < 1e-9, "λ={l}: {}", td.point);
            assert!((exp.exact_output(false).unwrap().trace().re - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn leaking_theta_breaks_hiding() {
        let exp = DeletionExperiment::new(2, ZKind::LeakTheta, DeletionAdversary::ThetaExploiter).unwrap();
        let td = exp.td_estimate(0, 0.05, &mut stream(2, "x")).unwrap();
        assert!((td.point - 1.0).abs() < 1e-9);
        assert!(DeletionExperiment::new(2, ZKind::Standard, DeletionAdversary::ThetaExploiter).is_err());
    }

    #[test]
    fn keep_state_acceptance_matches_analytic_average() {
        // Oracle: E_θ[2^{-wt(θ)}] = (3/4)^λ.
        let exp = DeletionExperiment::new(3, ZKind::Standard, DeletionAdversary::KeepState).unwrap();
        let exact = exp.exact_output(false).unwrap().trace().re;
        assert!((exact - 0.75f64.powi(3)).abs() < 1e-9);
        let mut rng = stream(3, "keep");
        let n = 4000;
        let hits = (0..n).filter(|_| exp.run(false, &mut rng).unwrap().is_some()).count() as f64;
        assert!((hits / n as f64 - exact).abs() <= 3.0 * binomial_sigma(exact, n));
    }

    #[test]
    fn standard_z_never_emits_theta() {
        let mut rng = stream(4, "z");
        for _ in 0..50 {
            let d = Bb84Descriptor::random(3, &mut rng);
            assert!(z_output(ZKind::Standard, &d.theta, false, SparseState::prep_bb84(&d)).theta.is_none());
        }
    }

    #[test]
    fn monte_carlo_mode_interval_contains_zero_for_honest_deleter() {
        let exp = DeletionExperiment::new(6, ZKind::Standard, DeletionAdversary::HonestDeleter).unwrap();
        let est = exp.td_estimate(3000, 0.05, &mut stream(5, "mc")).unwrap();
        assert!(est.lo <= 0.0 + 1e-12 && est.point < 0.1, "{est:?}");
        assert!(DeletionExperiment::new(6, ZKind::Standard, DeletionAdversary::KeepState).unwrap().exact_output(false).is_err());
    }
}
