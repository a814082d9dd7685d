//! Branch-and-prune recovery of the full error-rate distribution.
//!
//! Level `k` holds the surviving length-`k` prefixes. Each survivor is extended
//! by every Pauli symbol; the marginal mass of a child prefix `B` is estimated
//! from the weights of the B-altered readouts restricted to the first `k`
//! coordinates, which are ZFlip(2/3, r) observations of the indicator
//! "the error differs from `B` at coordinate j". Children with estimate below
//! `ε/2` are dropped; at most `⌈4/ε⌉` survive per level. Every estimate is
//! planned to be `ε/4`-accurate, so prefixes of mass `≥ ε` always survive and
//! prefixes of mass `< ε/4` never do.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{amatrix, ChannelSpec};
use crate::error::{Error, Result};
use crate::individual::{
    build_estimator, estimate_from_frequencies, plan_samples, EstimatorKind, EstimatorVector,
};
use crate::pauli::{ErrorRateDistribution, PauliString};
use crate::precision::Precision;
use crate::spam::{ProbeBatch, SpamParams};

/// Largest prefix length solved by the exact inverse in double precision
/// under [`KindPolicy::Auto`].
pub const AUTO_DOUBLE_MAX_K: usize = 30;
/// Largest prefix length solved by the exact inverse in extended precision
/// under [`KindPolicy::Auto`]; beyond this the LP estimator is used.
pub const AUTO_EXTENDED_MAX_K: usize = 48;

/// How the estimator for each prefix length is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum KindPolicy {
    #[default]
    Auto,
    Exact,
    ExactExtended,
    Lp,
}

impl KindPolicy {
    /// Estimator kind and precision used at prefix length `k`.
    pub fn choose(self, k: usize, eps: f64) -> (EstimatorKind, Precision) {
        let lp = EstimatorKind::LpRegularized {
            eps_bias: eps / 8.0,
        };
        match self {
            KindPolicy::Exact => (EstimatorKind::ExactInverse, Precision::Auto),
            KindPolicy::ExactExtended => (EstimatorKind::ExactInverse, Precision::Extended),
            KindPolicy::Lp => (lp, Precision::Double),
            KindPolicy::Auto if k <= AUTO_DOUBLE_MAX_K => {
                (EstimatorKind::ExactInverse, Precision::Auto)
            }
            KindPolicy::Auto if k <= AUTO_EXTENDED_MAX_K => {
                (EstimatorKind::ExactInverse, Precision::Extended)
            }
            KindPolicy::Auto => (lp, Precision::Double),
        }
    }
}

impl std::str::FromStr for KindPolicy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(KindPolicy::Auto),
            "exact" => Ok(KindPolicy::Exact),
            "exact-extended" => Ok(KindPolicy::ExactExtended),
            "lp" => Ok(KindPolicy::Lp),
            other => Err(Error::param(format!("unknown estimator policy {other:?}"))),
        }
    }
}

/// Knobs for [`recover_with`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct RecoverOptions {
    pub policy: KindPolicy,
    /// SPAM parameters assumed by the estimator. Defaults to the batch's own
    /// parameters; set it to study miscalibration.
    pub assumed_spam: Option<SpamParams>,
}

/// Source of weight frequencies for altered prefixes.
pub trait PrefixObserver: Sync {
    fn n(&self) -> usize;
    /// Number of samples behind each frequency vector.
    fn samples(&self) -> u64;
    /// Frequencies of weights `0..=k` of the readouts altered by `prefix`.
    fn weight_frequencies(&self, prefix: &PauliString) -> Result<Vec<f64>>;
}

impl PrefixObserver for ProbeBatch {
    fn n(&self) -> usize {
        self.n
    }

    fn samples(&self) -> u64 {
        self.len() as u64
    }

    fn weight_frequencies(&self, prefix: &PauliString) -> Result<Vec<f64>> {
        Ok(self.altered_histogram(prefix)?.frequencies())
    }
}

/// The infinite-sample limit: exact weight laws computed from a known `π`.
pub struct ExactObserver {
    pi: ErrorRateDistribution,
    spam: SpamParams,
    samples: u64,
}

impl ExactObserver {
    /// `samples` is the nominal `m` used for half-widths.
    pub fn new(pi: ErrorRateDistribution, spam: SpamParams, samples: u64) -> Self {
        ExactObserver { pi, spam, samples }
    }
}

impl PrefixObserver for ExactObserver {
    fn n(&self) -> usize {
        self.pi.n()
    }

    fn samples(&self) -> u64 {
        self.samples
    }

    fn weight_frequencies(&self, prefix: &PauliString) -> Result<Vec<f64>> {
        let k = prefix.len();
        let mut p = vec![0.0; k + 1];
        for (c, mass) in self.pi.iter() {
            p[c.prefix(k)?.xor(prefix)?.weight()] += mass;
        }
        if k == 0 {
            return Ok(p);
        }
        amatrix(&ChannelSpec::probe_channel(self.spam.retention()), k)?.push_forward(&p)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CandidatePrefix {
    pub prefix: PauliString,
    pub mass_estimate: f64,
    pub half_width: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LevelSummary {
    pub k: usize,
    pub evaluated: usize,
    pub kept: usize,
    pub estimator: String,
    pub sup_norm: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Timing {
    pub estimator_ms: f64,
    pub level_ms: Vec<f64>,
    pub total_ms: f64,
}

/// Output of [`recover`]. Strings not listed are estimated as 0.
///
/// Wall-clock timings are kept out of the serialized form so that report
/// files are reproducible byte-for-byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecoveryReport {
    pub n: usize,
    pub epsilon: f64,
    pub fail_prob: f64,
    pub m: u64,
    pub spam: SpamParams,
    pub channel: ChannelSpec,
    pub per_estimate_fail_prob: f64,
    pub prune_threshold: f64,
    pub max_candidates: usize,
    pub levels: Vec<LevelSummary>,
    pub estimates: Vec<CandidatePrefix>,
    pub unlisted_estimate: f64,
    #[serde(skip)]
    pub timing: Timing,
}

impl RecoveryReport {
    pub fn estimate_of(&self, pauli: &PauliString) -> f64 {
        self.estimates
            .iter()
            .find(|c| &c.prefix == pauli)
            .map_or(self.unlisted_estimate, |c| c.mass_estimate)
    }

    /// `‖π̃ − π‖∞` against a known distribution.
    pub fn linf_error(&self, truth: &ErrorRateDistribution) -> f64 {
        let listed = self
            .estimates
            .iter()
            .map(|c| (c.mass_estimate - truth.prob(&c.prefix)).abs());
        let missed = truth.iter().map(|(s, p)| (self.estimate_of(s) - p).abs());
        listed.chain(missed).fold(0.0, f64::max)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("pauli,estimate,half_width\n");
        for c in &self.estimates {
            out.push_str(&format!(
                "{},{},{}\n",
                c.prefix, c.mass_estimate, c.half_width
            ));
        }
        out
    }
}

fn check_inputs(n: usize, eps: f64, fail_prob: f64, spam: &SpamParams) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::param(format!("epsilon = {eps} outside (0, 1/2]")));
    }
    if !(fail_prob > 0.0 && fail_prob < 1.0) {
        return Err(Error::param(format!(
            "fail_prob = {fail_prob} outside (0, 1)"
        )));
    }
    if n == 0 || n > 64 {
        return Err(Error::param(format!("qubit count {n} outside 1..=64")));
    }
    spam.check_recoverable()
}

/// `⌈4/ε⌉`, the per-level survivor cap.
pub fn max_candidates(eps: f64) -> usize {
    (4.0 / eps - 1e-12).ceil() as usize
}

/// Failure probability allotted to each individual estimate: the union bound
/// over at most `4n⌈4/ε⌉` estimates.
pub fn per_estimate_fail_prob(n: usize, eps: f64, fail_prob: f64) -> f64 {
    fail_prob / (4 * n * max_candidates(eps)) as f64
}

fn level_estimators(
    n: usize,
    eps: f64,
    spam: &SpamParams,
    policy: KindPolicy,
) -> Result<Vec<EstimatorVector>> {
    let channel = ChannelSpec::probe_channel(spam.retention());
    (1..=n)
        .into_par_iter()
        .map(|k| {
            let (kind, precision) = policy.choose(k, eps);
            if kind.bias_bound() >= eps / 4.0 {
                return Err(Error::Infeasible(format!(
                    "estimator bias {} is not below ε/4 = {}",
                    kind.bias_bound(),
                    eps / 4.0
                )));
            }
            build_estimator(&channel, k, kind, precision)
        })
        .collect()
}

/// Probe count making every estimate `ε/4`-accurate with probability
/// `1 − fail_prob / (4n⌈4/ε⌉)`.
pub fn plan_budget(
    n: usize,
    eps: f64,
    fail_prob: f64,
    spam: &SpamParams,
    policy: KindPolicy,
) -> Result<u64> {
    check_inputs(n, eps, fail_prob, spam)?;
    let per = per_estimate_fail_prob(n, eps, fail_prob);
    level_estimators(n, eps, spam, policy)?
        .iter()
        .map(|e| plan_samples(e, eps / 4.0, per))
        .try_fold(1u64, |acc, m| Ok(acc.max(m?)))
}

/// Recover `π` to ℓ∞ accuracy `ε` from a probe batch.
pub fn recover(batch: &ProbeBatch, eps: f64, fail_prob: f64) -> Result<RecoveryReport> {
    recover_with(
        batch,
        &batch.spam,
        eps,
        fail_prob,
        &RecoverOptions::default(),
    )
}

/// Branch-and-prune driver over any [`PrefixObserver`].
pub fn recover_with<O: PrefixObserver>(
    observer: &O,
    spam: &SpamParams,
    eps: f64,
    fail_prob: f64,
    options: &RecoverOptions,
) -> Result<RecoveryReport> {
    let start = Instant::now();
    let n = observer.n();
    let assumed = options.assumed_spam.unwrap_or(*spam);
    check_inputs(n, eps, fail_prob, &assumed)?;
    let m = observer.samples();
    if m == 0 {
        return Err(Error::param("no probe records"));
    }
    let per_fail = per_estimate_fail_prob(n, eps, fail_prob);
    let cap = max_candidates(eps);
    let threshold = eps / 2.0;

    let estimators = level_estimators(n, eps, &assumed, options.policy)?;
    let mut timing = Timing {
        estimator_ms: start.elapsed().as_secs_f64() * 1e3,
        ..Timing::default()
    };

    let mut survivors = vec![CandidatePrefix {
        prefix: PauliString::identity(0),
        mass_estimate: 1.0,
        half_width: 0.0,
    }];
    let mut levels = Vec::with_capacity(n);
    for est in &estimators {
        let level_start = Instant::now();
        let children: Vec<PauliString> = survivors
            .iter()
            .flat_map(|s| (0..4u8).map(move |sym| s.prefix.extended(sym)))
            .collect::<Result<_>>()?;
        let mut scored = children
            .into_par_iter()
            .map(|prefix| {
                let q = observer.weight_frequencies(&prefix)?;
                let e = estimate_from_frequencies(&q, m, est, per_fail)?;
                Ok(CandidatePrefix {
                    prefix,
                    mass_estimate: e.value,
                    half_width: e.half_width,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let evaluated = scored.len();
        scored.retain(|c| c.mass_estimate >= threshold);
        scored.sort_by(|a, b| {
            b.mass_estimate
                .total_cmp(&a.mass_estimate)
                .then_with(|| a.prefix.cmp(&b.prefix))
        });
        scored.truncate(cap);
        levels.push(LevelSummary {
            k: est.k,
            evaluated,
            kept: scored.len(),
            estimator: est.kind.name().to_string(),
            sup_norm: est.sup_norm,
        });
        timing
            .level_ms
            .push(level_start.elapsed().as_secs_f64() * 1e3);
        survivors = scored;
        if survivors.is_empty() {
            break;
        }
    }
    let mut estimates: Vec<CandidatePrefix> = survivors
        .into_iter()
        .filter(|c| c.prefix.len() == n)
        .collect();
    estimates.sort_by(|a, b| a.prefix.cmp(&b.prefix));
    timing.total_ms = start.elapsed().as_secs_f64() * 1e3;

    Ok(RecoveryReport {
        n,
        epsilon: eps,
        fail_prob,
        m,
        spam: *spam,
        channel: ChannelSpec::probe_channel(assumed.retention()),
        per_estimate_fail_prob: per_fail,
        prune_threshold: threshold,
        max_candidates: cap,
        levels,
        estimates,
        unlisted_estimate: 0.0,
        timing,
    })
}

/// Ground-truth marginal masses of every prefix of every support string.
pub fn prefix_masses(pi: &ErrorRateDistribution) -> Result<BTreeMap<PauliString, f64>> {
    let mut out = BTreeMap::new();
    for (c, p) in pi.iter() {
        for k in 1..=c.len() {
            *out.entry(c.prefix(k)?).or_insert(0.0) += p;
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spam::simulate_batch;

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    #[test]
    fn identity_channel_recovers_identity() {
        let pi = ErrorRateDistribution::from_strs([("IIII", 1.0)]).unwrap();
        let spam = SpamParams::noiseless();
        let m = plan_budget(4, 0.1, 0.05, &spam, KindPolicy::Auto).unwrap();
        let batch = simulate_batch(&pi, &spam, m as usize, 1).unwrap();
        let report = recover(&batch, 0.1, 0.05).unwrap();
        assert_eq!(report.estimates.len(), 1);
        assert_eq!(report.estimates[0].prefix, ps("IIII"));
        assert!((report.estimates[0].mass_estimate - 1.0).abs() < 1e-12);
        assert!(report.levels.iter().all(|l| l.kept == 1));
    }

    #[test]
    fn exact_observer_reports_true_masses() {
        let pi = ErrorRateDistribution::from_strs([
            ("IIIII", 0.5),
            ("XZIII", 0.3),
            ("IIYIZ", 0.15),
            ("ZZZZZ", 0.05),
        ])
        .unwrap();
        let spam = SpamParams::new(0.9, 0.9).unwrap();
        let obs = ExactObserver::new(pi.clone(), spam, 1_000_000);
        let report = recover_with(&obs, &spam, 0.1, 0.05, &RecoverOptions::default()).unwrap();
        let listed: Vec<String> = report
            .estimates
            .iter()
            .map(|c| c.prefix.to_string())
            .collect();
        assert_eq!(listed, ["IIIII", "IIYIZ", "XZIII"]);
        for c in &report.estimates {
            assert!((c.mass_estimate - pi.prob(&c.prefix)).abs() < 1e-8);
        }
        assert!(report.linf_error(&pi) <= 0.05 + 1e-8);
    }

    #[test]
    fn heavy_prefixes_survive_and_light_ones_do_not() {
        // With exact frequencies every estimate equals its true marginal, so
        // survival is decided by the true masses alone.
        let pi = ErrorRateDistribution::from_strs([
            ("IIII", 0.4),
            ("IXII", 0.2),
            ("IXIZ", 0.12),
            ("YYYY", 0.2),
            ("ZIII", 0.04),
            ("ZIIX", 0.04),
        ])
        .unwrap();
        let eps = 0.1;
        let spam = SpamParams::new(0.95, 0.95).unwrap();
        let obs = ExactObserver::new(pi.clone(), spam, 1 << 20);
        let report = recover_with(&obs, &spam, eps, 0.05, &RecoverOptions::default()).unwrap();
        let masses = prefix_masses(&pi).unwrap();
        for c in &report.estimates {
            assert!(c.mass_estimate >= eps / 2.0);
        }
        for (prefix, &mass) in &masses {
            if prefix.len() == 4 {
                let listed = report.estimates.iter().any(|c| &c.prefix == prefix);
                if mass >= eps {
                    assert!(listed, "{prefix} lost");
                }
                if mass < eps / 4.0 {
                    assert!(!listed, "{prefix} kept");
                }
            }
        }
        for l in &report.levels {
            assert!(l.kept <= max_candidates(eps));
        }
    }

    #[test]
    fn reported_values_match_direct_individual_estimates() {
        let pi = ErrorRateDistribution::from_strs([("IIIX", 0.6), ("ZIII", 0.4)]).unwrap();
        let spam = SpamParams::new(0.95, 0.95).unwrap();
        let batch = simulate_batch(&pi, &spam, 40_000, 5).unwrap();
        let report = recover(&batch, 0.2, 0.1).unwrap();
        assert!(!report.estimates.is_empty());
        let est = build_estimator(
            &ChannelSpec::probe_channel(spam.retention()),
            4,
            EstimatorKind::ExactInverse,
            Precision::Auto,
        )
        .unwrap();
        for c in &report.estimates {
            let h = batch.altered_histogram(&c.prefix).unwrap();
            let direct =
                crate::individual::estimate_p0(&h, &est, report.per_estimate_fail_prob).unwrap();
            assert_eq!(direct.value, c.mass_estimate);
            assert_eq!(direct.half_width, c.half_width);
        }
    }

    #[test]
    fn rejects_bad_inputs() {
        let pi = ErrorRateDistribution::from_strs([("II", 1.0)]).unwrap();
        let batch = simulate_batch(&pi, &SpamParams::noiseless(), 10, 0).unwrap();
        assert!(recover(&batch, 0.6, 0.05).is_err());
        assert!(recover(&batch, 0.0, 0.05).is_err());
        assert!(recover(&batch, 0.1, 1.0).is_err());
        let heavy = simulate_batch(&pi, &SpamParams::new(0.005, 1.0).unwrap(), 10, 0).unwrap();
        assert!(recover(&heavy, 0.1, 0.05).is_err());
    }

    #[test]
    fn budget_scaling() {
        let noiseless = SpamParams::noiseless();
        let m1 = plan_budget(6, 0.1, 0.05, &noiseless, KindPolicy::Auto).unwrap();
        let m2 = plan_budget(6, 0.05, 0.05, &noiseless, KindPolicy::Auto).unwrap();
        assert!(m2 >= 4 * m1);
        // No SPAM: the estimator is e₀, sup norm 1, so the plan is the bare
        // Hoeffding count at accuracy ε/4.
        let per = per_estimate_fail_prob(6, 0.1, 0.05);
        let bare = (2.0 * (2.0 / per).ln() / (0.025f64 * 0.025)).ceil() as u64;
        assert_eq!(m1, bare);
    }

    #[test]
    fn candidate_cap() {
        assert_eq!(max_candidates(0.1), 40);
        assert_eq!(max_candidates(0.05), 80);
        assert_eq!(max_candidates(0.3), 14);
    }
}
