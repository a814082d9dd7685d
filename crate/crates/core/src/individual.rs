//! Linear (mean-based) estimators of `p₀ = D(0^k)` from noisy Hamming weights.
//!
//! An estimator is a vector `y` indexed by observed weight; the estimate is the
//! sample mean of `y[weight]`. Its expectation under input weight law `p` is
//! `p · (A y)`, so `A y = e₀` gives an unbiased estimator (exact inverse) and
//! `‖A y − e₀‖∞ ≤ ε_bias` bounds the bias by `ε_bias` (LP kind, which also
//! minimizes `‖y‖∞` and with it the Hoeffding sample count).

use serde::{Deserialize, Serialize};

use crate::channels::{amatrix, amatrix_in, ChannelSpec};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;
use crate::precision::{Precision, Real, TwoFloat};

/// Residual bound `‖A y − e₀‖∞` required of an exact-inverse estimator.
pub const EXACT_RESIDUAL_TOL: f64 = 1e-8;

/// Constraint tolerance required of LP solutions.
pub const LP_CONSTRAINT_TOL: f64 = 1e-7;

/// The LP is solved against a bias bound tightened by this fraction, which
/// absorbs the solver's feasibility slack.
const LP_BIAS_MARGIN: f64 = 1e-3;

/// Counts of observed Hamming weights `0..=k`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WeightHistogram {
    counts: Vec<u64>,
    total: u64,
}

impl WeightHistogram {
    pub fn new(k: usize) -> Self {
        WeightHistogram {
            counts: vec![0; k + 1],
            total: 0,
        }
    }

    pub fn from_counts(counts: Vec<u64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::param("histogram needs at least one bin"));
        }
        let total = counts.iter().sum();
        Ok(WeightHistogram { counts, total })
    }

    pub fn from_weights(k: usize, weights: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut h = WeightHistogram::new(k);
        for w in weights {
            h.record(w)?;
        }
        Ok(h)
    }

    pub fn record(&mut self, weight: usize) -> Result<()> {
        let k = self.k();
        let slot = self
            .counts
            .get_mut(weight)
            .ok_or_else(|| Error::param(format!("weight {weight} exceeds k = {k}")))?;
        *slot += 1;
        self.total += 1;
        Ok(())
    }

    /// Add another histogram's counts (associative and commutative).
    pub fn merge(&mut self, other: &WeightHistogram) -> Result<()> {
        Error::check_len(self.counts.len(), other.counts.len())?;
        self.counts
            .iter_mut()
            .zip(&other.counts)
            .for_each(|(a, b)| *a += b);
        self.total += other.total;
        Ok(())
    }

    pub fn k(&self) -> usize {
        self.counts.len() - 1
    }

    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn frequencies(&self) -> Vec<f64> {
        let m = self.total.max(1) as f64;
        self.counts.iter().map(|&c| c as f64 / m).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum EstimatorKind {
    ExactInverse,
    LpRegularized { eps_bias: f64 },
}

impl EstimatorKind {
    pub fn bias_bound(&self) -> f64 {
        match *self {
            EstimatorKind::ExactInverse => 0.0,
            EstimatorKind::LpRegularized { eps_bias } => eps_bias,
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            EstimatorKind::ExactInverse => "exact-inverse",
            EstimatorKind::LpRegularized { .. } => "lp-regularized",
        }
    }
}

/// Weights `y` of a linear estimator for `k` coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimatorVector {
    pub k: usize,
    pub y: Vec<f64>,
    pub kind: EstimatorKind,
    pub sup_norm: f64,
    /// Precision the solve finished in.
    pub precision: Precision,
    /// Achieved `‖A y − e₀‖∞`.
    pub residual: f64,
}

impl EstimatorVector {
    /// The estimator's mean on observed weight frequencies `q`.
    pub fn mean(&self, q: &[f64]) -> Result<f64> {
        Error::check_len(self.y.len(), q.len())?;
        Ok(q.iter().zip(&self.y).map(|(a, b)| a * b).sum())
    }
}

/// An additive-error estimate of a probability.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RecoveryEstimate {
    /// Estimate clamped to `[0, 1]`.
    pub value: f64,
    /// Unclamped sample mean.
    pub raw: f64,
    pub half_width: f64,
    pub m_used: u64,
    pub fail_prob: f64,
}

fn solve_unit_system<T: Real>(a: &[T], d: usize) -> Option<Vec<T>> {
    // Gaussian elimination with partial pivoting on [A | e₀].
    let mut m: Vec<T> = a.to_vec();
    let mut rhs = vec![T::zero(); d];
    rhs[0] = T::one();
    for col in 0..d {
        let pivot = (col..d).max_by(|&r1, &r2| {
            m[r1 * d + col]
                .abs()
                .partial_cmp(&m[r2 * d + col].abs())
                .unwrap_or(std::cmp::Ordering::Equal)
        })?;
        if m[pivot * d + col].abs().to_f64() == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..d {
                m.swap(col * d + j, pivot * d + j);
            }
            rhs.swap(col, pivot);
        }
        let p = m[col * d + col];
        for r in col + 1..d {
            let f = m[r * d + col].quot(p);
            if f.to_f64() == 0.0 {
                continue;
            }
            for j in col..d {
                m[r * d + j] = m[r * d + j] - f * m[col * d + j];
            }
            rhs[r] = rhs[r] - f * rhs[col];
        }
    }
    let mut y = vec![T::zero(); d];
    for i in (0..d).rev() {
        let mut s = rhs[i];
        for j in i + 1..d {
            s = s - m[i * d + j] * y[j];
        }
        y[i] = s.quot(m[i * d + i]);
    }
    Some(y)
}

fn unit_residual<T: Real>(a: &[T], y: &[T], d: usize) -> f64 {
    (0..d)
        .map(|i| {
            let mut s = if i == 0 { -T::one() } else { T::zero() };
            for j in 0..d {
                s = s + a[i * d + j] * y[j];
            }
            s.abs().to_f64()
        })
        .fold(0.0, f64::max)
}

fn exact_in<T: Real>(spec: &ChannelSpec, k: usize) -> Result<(Vec<f64>, f64)> {
    let d = k + 1;
    let a = amatrix_in::<T>(spec, k)?;
    let y = solve_unit_system(&a, d).ok_or_else(|| Error::Numeric {
        message: format!("weight-transition matrix for k = {k} is singular"),
        hint: "use a channel with nonzero retentions".into(),
    })?;
    let residual = unit_residual(&a, &y, d);
    Ok((y.into_iter().map(Real::to_f64).collect(), residual))
}

fn exact_estimator(spec: &ChannelSpec, k: usize, precision: Precision) -> Result<EstimatorVector> {
    let finish = |y: Vec<f64>, residual: f64, used: Precision| {
        let sup_norm = y.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        EstimatorVector {
            k,
            y,
            kind: EstimatorKind::ExactInverse,
            sup_norm,
            precision: used,
            residual,
        }
    };
    let fail = |residual: f64, used: &str| Error::Numeric {
        message: format!("exact inverse for k = {k} has residual {residual:e} in {used} precision"),
        hint: "use extended precision or the lp-regularized estimator".into(),
    };
    if matches!(precision, Precision::Double | Precision::Auto) {
        let (y, residual) = exact_in::<f64>(spec, k)?;
        if residual.is_finite() && residual <= EXACT_RESIDUAL_TOL {
            return Ok(finish(y, residual, Precision::Double));
        }
        if precision == Precision::Double {
            return Err(fail(residual, "double"));
        }
    }
    let (y, residual) = exact_in::<TwoFloat>(spec, k)?;
    if residual.is_finite() && residual <= EXACT_RESIDUAL_TOL {
        Ok(finish(y, residual, Precision::Extended))
    } else {
        Err(fail(residual, "extended"))
    }
}

fn lp_estimator(spec: &ChannelSpec, k: usize, eps_bias: f64) -> Result<EstimatorVector> {
    let a = amatrix(spec, k)?;
    let d = k + 1;
    if eps_bias >= 1.0 {
        // y = 0 is feasible and optimal
        return Ok(EstimatorVector {
            k,
            y: vec![0.0; d],
            kind: EstimatorKind::LpRegularized { eps_bias },
            sup_norm: 0.0,
            precision: Precision::Double,
            residual: 1.0,
        });
    }
    // variables: y_0..y_k, then t = ‖y‖∞
    let t = d;
    let mut lp = LinearProgram::new(d + 1);
    lp.set_cost(t, 1.0);
    for j in 0..d {
        lp.le(vec![(j, 1.0), (t, -1.0)], 0.0);
        lp.ge(vec![(j, 1.0), (t, 1.0)], 0.0);
    }
    let bound = eps_bias * (1.0 - LP_BIAS_MARGIN);
    for (i, row) in a.rows().enumerate() {
        let target = if i == 0 { 1.0 } else { 0.0 };
        let expr: Vec<_> = row
            .iter()
            .copied()
            .enumerate()
            .filter(|&(_, v)| v != 0.0)
            .collect();
        lp.le(expr.clone(), target + bound);
        lp.ge(expr, target - bound);
    }
    let solution = lp.solve("estimator LP", "increase eps_bias")?;
    let yv: Vec<f64> = solution[..d].to_vec();
    let ay = a.apply(&yv)?;
    let violation = ay
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            let target = if i == 0 { 1.0 } else { 0.0 };
            ((v - target).abs() - eps_bias).max(0.0)
        })
        .fold(0.0, f64::max);
    if violation > LP_CONSTRAINT_TOL {
        return Err(Error::Numeric {
            message: format!("estimator LP violates the bias bound by {violation:e}"),
            hint: "use the exact-inverse estimator in extended precision".into(),
        });
    }
    let residual = ay
        .iter()
        .enumerate()
        .map(|(i, &v)| (v - if i == 0 { 1.0 } else { 0.0 }).abs())
        .fold(0.0, f64::max);
    let sup_norm = yv.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    Ok(EstimatorVector {
        k,
        y: yv,
        kind: EstimatorKind::LpRegularized { eps_bias },
        sup_norm,
        precision: Precision::Double,
        residual,
    })
}

/// Build the estimator of `p₀` for `k` coordinates observed through `spec`.
pub fn build_estimator(
    spec: &ChannelSpec,
    k: usize,
    kind: EstimatorKind,
    precision: Precision,
) -> Result<EstimatorVector> {
    spec.validate()?;
    if k == 0 {
        // no coordinates observed: the empty prefix has mass 1
        return Ok(EstimatorVector {
            k,
            y: vec![1.0],
            kind,
            sup_norm: 1.0,
            precision: Precision::Double,
            residual: 0.0,
        });
    }
    match kind {
        EstimatorKind::ExactInverse => exact_estimator(spec, k, precision),
        EstimatorKind::LpRegularized { eps_bias } => {
            if !(eps_bias > 0.0 && eps_bias <= 1.0) {
                return Err(Error::param(format!(
                    "eps_bias = {eps_bias} outside (0, 1]"
                )));
            }
            lp_estimator(spec, k, eps_bias)
        }
    }
}

fn check_fail_prob(fail_prob: f64) -> Result<()> {
    if fail_prob > 0.0 && fail_prob < 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "fail_prob = {fail_prob} outside (0, 1)"
        )))
    }
}

/// Hoeffding half-width for a mean of `m` draws in `[−s, s]`.
pub fn hoeffding_half_width(sup_norm: f64, m: u64, fail_prob: f64) -> f64 {
    sup_norm * (2.0 * (2.0 / fail_prob).ln() / m as f64).sqrt()
}

/// Estimate from exact or empirical weight frequencies, with `m` the number
/// of samples behind them.
pub fn estimate_from_frequencies(
    q: &[f64],
    m: u64,
    est: &EstimatorVector,
    fail_prob: f64,
) -> Result<RecoveryEstimate> {
    check_fail_prob(fail_prob)?;
    if m == 0 {
        return Err(Error::param("estimate needs at least one sample"));
    }
    let raw = est.mean(q)?;
    Ok(RecoveryEstimate {
        value: raw.clamp(0.0, 1.0),
        raw,
        half_width: est.kind.bias_bound() + hoeffding_half_width(est.sup_norm, m, fail_prob),
        m_used: m,
        fail_prob,
    })
}

/// Estimate `p₀` as the histogram mean of the estimator weights.
pub fn estimate_p0(
    hist: &WeightHistogram,
    est: &EstimatorVector,
    fail_prob: f64,
) -> Result<RecoveryEstimate> {
    Error::check_len(est.k, hist.k())?;
    estimate_from_frequencies(&hist.frequencies(), hist.total(), est, fail_prob)
}

/// Smallest `m` whose Hoeffding half-width plus bias is at most `eps`.
pub fn plan_samples(est: &EstimatorVector, eps: f64, fail_prob: f64) -> Result<u64> {
    check_fail_prob(fail_prob)?;
    let slack = eps - est.kind.bias_bound();
    if slack.is_nan() || slack <= 0.0 {
        return Err(Error::Infeasible(format!(
            "bias bound {} leaves no room for accuracy {eps}",
            est.kind.bias_bound()
        )));
    }
    let m = (2.0 * est.sup_norm * est.sup_norm * (2.0 / fail_prob).ln() / (slack * slack)).ceil();
    if !m.is_finite() || m > u64::MAX as f64 {
        return Err(Error::Infeasible(format!(
            "planned sample count {m} overflows"
        )));
    }
    Ok((m as u64).max(1))
}
