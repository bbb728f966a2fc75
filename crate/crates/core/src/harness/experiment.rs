//! Named Monte Carlo experiments and their reports.

use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::session::{run_session, SessionParams};
use crate::attacks::deletion::{DeletionAdversary, DeletionExperiment, ZKind};
use crate::attacks::strawman::{crs_split_attack, split_attack};
use crate::bits::BitString;
use crate::crs_nizk::{clone_attack, CrsNizkCrs, CrsProofState, CrsScheme};
use crate::epr_nizk::{cheating_prove, epr_setup, tilde_measure, tilde_verify, CheatingProver};
use crate::error::{usage, Result};
use crate::hidden_bits::HbInstance;
use crate::nizk::{toy_encode, ToyNizk};
use crate::rng::{derive_seed, trial_stream};
use crate::stats::{hoeffding_interval, Estimate};

const DELTA: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExperimentName {
    /// Honest sessions of the configured protocol.
    Completeness,
    /// Random-claims and greedy cheating provers on a non-Hamiltonian graph.
    EprSoundness,
    DeletionHonest,
    DeletionKeepState,
    DeletionLeakTheta,
    StrawmanSplit,
    CrsSplit,
    CrsClone,
}

impl ExperimentName {
    pub const ALL: [ExperimentName; 8] = [
        ExperimentName::Completeness,
        ExperimentName::EprSoundness,
        ExperimentName::DeletionHonest,
        ExperimentName::DeletionKeepState,
        ExperimentName::DeletionLeakTheta,
        ExperimentName::StrawmanSplit,
        ExperimentName::CrsSplit,
        ExperimentName::CrsClone,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ExperimentName::Completeness => "completeness",
            ExperimentName::EprSoundness => "epr-soundness",
            ExperimentName::DeletionHonest => "deletion-honest",
            ExperimentName::DeletionKeepState => "deletion-keep-state",
            ExperimentName::DeletionLeakTheta => "deletion-leak-theta",
            ExperimentName::StrawmanSplit => "strawman-split",
            ExperimentName::CrsSplit => "crs-split",
            ExperimentName::CrsClone => "crs-clone",
        }
    }

    /// Whether `run-attack` accepts this name.
    pub fn is_attack(self) -> bool {
        matches!(self, ExperimentName::StrawmanSplit | ExperimentName::CrsSplit | ExperimentName::CrsClone | ExperimentName::EprSoundness)
    }
}

impl std::str::FromStr for ExperimentName {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|e| e.name() == s).ok_or_else(|| {
            let names: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
            usage(format!("unknown experiment {s:?}; expected one of {}", names.join(", ")))
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub trials: u64,
    pub seed: u64,
    /// Per-event acceptance counts; each is at most `trials`.
    pub accepted: BTreeMap<String, u64>,
    pub estimates: BTreeMap<String, Estimate>,
    pub wall_clock_secs: f64,
}

impl ExperimentReport {
    pub fn empty(name: &str, seed: u64) -> Self {
        Self { name: name.to_owned(), trials: 0, seed, accepted: BTreeMap::new(), estimates: BTreeMap::new(), wall_clock_secs: 0.0 }
    }

    /// Equality ignoring wall-clock time.
    pub fn same_results(&self, other: &Self) -> bool {
        self.name == other.name && self.trials == other.trials && self.seed == other.seed && self.accepted == other.accepted && self.estimates == other.estimates
    }

    /// Merges the counts of a report over disjoint trials. Estimates are
    /// recomputed from the merged counts.
    pub fn merge(&mut self, other: &ExperimentReport) {
        self.trials += other.trials;
        for (k, v) in &other.accepted {
            *self.accepted.entry(k.clone()).or_default() += v;
        }
        self.wall_clock_secs += other.wall_clock_secs;
        self.refresh_estimates();
    }

    fn refresh_estimates(&mut self) {
        for (k, &c) in &self.accepted {
            self.estimates.insert(format!("{k}-rate"), hoeffding_interval(c, self.trials, DELTA));
        }
    }

    pub fn count(&self, event: &str) -> u64 {
        self.accepted.get(event).copied().unwrap_or(0)
    }
}

/// Runs `trials` independent trials of `name`; trial `i` uses its own stream
/// derived from `seed`, so reports are reproducible.
pub fn run_experiment(name: ExperimentName, trials: u64, params: &SessionParams, seed: u64) -> Result<ExperimentReport> {
    let mut report = ExperimentReport::empty(name.name(), seed);
    if trials == 0 {
        return Ok(report);
    }
    let start = Instant::now();
    let label = format!("experiment/{}", name.name());
    let mut events: BTreeMap<String, u64> = BTreeMap::new();
    let mut bump = |k: &str, hit: bool| *events.entry(k.to_owned()).or_default() += hit as u64;
    match name {
        ExperimentName::Completeness => {
            for i in 0..trials {
                let t = run_session(params, derive_seed(derive_seed(seed, &label), &format!("trial/{i}")))?;
                bump("verify", t.verdict_for("verify") == Some(true));
                bump("cert", t.verdict_for("cert") == Some(true));
            }
        }
        ExperimentName::EprSoundness => {
            let x = HbInstance::non_hamiltonian_3();
            let ep = crate::epr_nizk::EprParams::new(crate::hidden_bits::HbParams::fls_defaults(3, params.reps), params.k, params.hbg)?;
            for i in 0..trials {
                let mut rng = trial_stream(seed, &label, i);
                let strategy = if i % 2 == 0 { CheatingProver::RandomClaims } else { CheatingProver::Greedy { attempts: 1 } };
                let (crs, mut net) = epr_setup(ep, &mut rng)?;
                let proof = cheating_prove(&crs, &mut net, &x, strategy, &mut rng)?;
                let v = tilde_measure(&mut net, &mut rng)?;
                bump("accept", tilde_verify(&crs, &v, &x, &proof));
            }
        }
        ExperimentName::DeletionHonest | ExperimentName::DeletionKeepState | ExperimentName::DeletionLeakTheta => {
            let (z, adv) = match name {
                ExperimentName::DeletionHonest => (ZKind::Standard, DeletionAdversary::HonestDeleter),
                ExperimentName::DeletionKeepState => (ZKind::Standard, DeletionAdversary::KeepState),
                _ => (ZKind::LeakTheta, DeletionAdversary::ThetaExploiter),
            };
            let exp = DeletionExperiment::new(params.lambda.max(1), z, adv)?;
            for i in 0..trials {
                let mut rng = trial_stream(seed, &label, i);
                bump("cert", exp.run(i % 2 == 1, &mut rng)?.is_some());
            }
            let td = exp.td_estimate(trials, DELTA, &mut trial_stream(seed, &label, u64::MAX))?;
            report.estimates.insert("trace-distance".into(), td);
        }
        ExperimentName::StrawmanSplit => {
            let sp = params.strawman_params()?;
            let (x, w) = params.statement()?;
            for i in 0..trials {
                let v = split_attack(sp, &x, &w, &mut trial_stream(seed, &label, i))?;
                bump("verify", v.verify);
                bump("cert", v.cert);
                bump("both", v.both());
            }
        }
        ExperimentName::CrsSplit | ExperimentName::CrsClone => {
            let scheme = CrsScheme::new(ToyNizk, params.lambda);
            let crs = CrsNizkCrs { crs_in: (), crs_out: () };
            for i in 0..trials {
                let mut rng = trial_stream(seed, &label, i);
                let w = BitString::random(4, &mut rng);
                let x = toy_encode(&w)?;
                if name == ExperimentName::CrsSplit {
                    let v = crs_split_attack(&scheme, &crs, &x, &w, &mut rng)?;
                    bump("verify", v.verify);
                    bump("cert", v.cert);
                    bump("both", v.both());
                } else {
                    let (sigma, _) = scheme.prove(&crs, &x, &w, &mut rng)?;
                    let (joint, copy) = clone_attack(sigma)?;
                    let original = joint.layout;
                    let (a, back) = scheme.verify(&crs, &x, CrsProofState { layout: original, ..joint }, &mut rng)?;
                    let (b, _) = scheme.verify(&crs, &x, CrsProofState { layout: copy, ..back }, &mut rng)?;
                    bump("both", a && b);
                }
            }
        }
    }
    report.trials = trials;
    report.accepted = events;
    report.refresh_estimates();
    report.wall_clock_secs = start.elapsed().as_secs_f64();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::ProtocolId;

    #[test]
    fn zero_trials_gives_an_empty_report() {
        let r = run_experiment(ExperimentName::StrawmanSplit, 0, &SessionParams::defaults(ProtocolId::Strawman), 3).unwrap();
        assert_eq!(r.trials, 0);
        assert!(r.accepted.is_empty() && r.estimates.is_empty());
    }

    #[test]
    fn reports_are_reproducible_and_counts_bounded() {
        let mut p = SessionParams::defaults(ProtocolId::Strawman);
        p.reps = 4;
        let a = run_experiment(ExperimentName::StrawmanSplit, 10, &p, 5).unwrap();
        let b = run_experiment(ExperimentName::StrawmanSplit, 10, &p, 5).unwrap();
        assert!(a.same_results(&b));
        assert!(a.accepted.values().all(|&c| c <= a.trials));
        assert_eq!(a.count("both"), 10);
    }

    #[test]
    fn hoeffding_width_scales_as_inverse_root_trials() {
        let mut p = SessionParams::defaults(ProtocolId::Crs);
        p.lambda = 3;
        let small = run_experiment(ExperimentName::DeletionKeepState, 400, &p, 1).unwrap();
        let large = run_experiment(ExperimentName::DeletionKeepState, 1600, &p, 1).unwrap();
        let (ws, wl) = (small.estimates["cert-rate"].width(), large.estimates["cert-rate"].width());
        // Oracle: width ∝ 1/√n, so quadrupling n halves it (up to clipping at [0,1]).
        assert!((ws / wl - 2.0).abs() < 0.05, "{ws} {wl}");
    }

    #[test]
    fn merge_adds_counts() {
        let p = SessionParams::defaults(ProtocolId::Crs);
        let mut a = run_experiment(ExperimentName::DeletionHonest, 6, &p, 1).unwrap();
        let b = run_experiment(ExperimentName::DeletionHonest, 4, &p, 2).unwrap();
        a.merge(&b);
        assert_eq!(a.trials, 10);
        assert_eq!(a.count("cert"), 10);
    }
}
