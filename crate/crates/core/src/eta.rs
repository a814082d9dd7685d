//! The distinguishability modulus `η(ε)` of a channel and its bounds.
//!
//! `η(ε)` is the smallest ℓ1 distance between the output weight laws `pA`,
//! `p′A` of two input weight laws whose weight-0 masses differ by at least
//! `ε`. With `c = p − p′` it is an LP over `c`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use num_complex::Complex64;

use crate::channels::{amatrix, unit, ChannelSpec};
use crate::error::{Error, Result};
use crate::lp::LinearProgram;

/// Largest `n` accepted by [`eta_exact`].
pub const ETA_MAX_N: usize = 24;
pub const MIN_GRID: usize = 64;
pub const DEFAULT_GRID: usize = 4096;

/// `c = p − p′`: sums to 0, ℓ1 norm at most 2, `c₀ = ε`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoefficientVector {
    pub c: Vec<f64>,
}

impl CoefficientVector {
    pub fn new(c: Vec<f64>) -> Result<Self> {
        if c.is_empty() {
            return Err(Error::param("empty coefficient vector"));
        }
        Ok(CoefficientVector { c })
    }

    /// `n`, the polynomial degree bound.
    pub fn n(&self) -> usize {
        self.c.len() - 1
    }

    pub fn sum(&self) -> f64 {
        self.c.iter().sum()
    }

    pub fn l1(&self) -> f64 {
        self.c.iter().map(|v| v.abs()).sum()
    }

    /// Checks membership in the feasible set for `ε`.
    pub fn check(&self, eps: f64) -> Result<()> {
        if self.sum().abs() > 1e-9 {
            return Err(Error::param(format!("coefficients sum to {}", self.sum())));
        }
        if self.l1() > 2.0 + 1e-9 {
            return Err(Error::param(format!(
                "coefficient ℓ1 norm {} exceeds 2",
                self.l1()
            )));
        }
        if self.c[0] < eps - 1e-9 {
            return Err(Error::param(format!(
                "c₀ = {} is below ε = {eps}",
                self.c[0]
            )));
        }
        Ok(())
    }

    /// `Q(u) = Σ_j c_j u^j`.
    pub fn polynomial(&self, u: Complex64) -> Complex64 {
        self.c
            .iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &cj| acc * u + cj)
    }
}

/// Optimal value and minimizer of the η program.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaSolution {
    /// `‖cA‖₁` recomputed from the returned minimizer.
    pub value: f64,
    pub minimizer: CoefficientVector,
}

/// Solve `min ‖cA‖₁` over `Σc = 0`, `‖c‖₁ ≤ 2`, `c₀ = ε`.
pub fn eta_exact(spec: &ChannelSpec, n: usize, eps: f64) -> Result<EtaSolution> {
    if n == 0 || n > ETA_MAX_N {
        return Err(Error::TooLarge {
            what: "η program size n",
            value: n,
            limit: ETA_MAX_N,
        });
    }
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("ε = {eps} outside (0, 1)")));
    }
    let a = amatrix(spec, n)?;
    let d = n + 1;
    // variables: c (0..d), u ≥ |c| (d..2d), v ≥ |cA| (2d..3d)
    let (c, u, v) = (0, d, 2 * d);
    let mut lp = LinearProgram::new(3 * d);
    for j in 0..d {
        lp.set_cost(v + j, 1.0);
        lp.le(vec![(c + j, 1.0), (u + j, -1.0)], 0.0);
        lp.ge(vec![(c + j, 1.0), (u + j, 1.0)], 0.0);
        // (cA)_j = Σ_i c_i A[i][j]
        let mut col: Vec<_> = (0..d)
            .map(|i| (c + i, a.get(i, j)))
            .filter(|&(_, x)| x != 0.0)
            .collect();
        col.push((v + j, -1.0));
        lp.le(col.clone(), 0.0);
        col.last_mut().unwrap().1 = 1.0;
        lp.ge(col, 0.0);
    }
    lp.eq(vec![(c, 1.0)], eps);
    lp.eq((0..d).map(|j| (c + j, 1.0)).collect(), 0.0);
    lp.le((0..d).map(|j| (u + j, 1.0)).collect(), 2.0);
    let solution = lp.solve("η program", "reduce n")?;
    let minimizer = CoefficientVector::new(project_feasible(&solution[..d], eps))?;
    minimizer.check(eps)?;
    let value = a.push_forward(&minimizer.c)?.iter().map(|x| x.abs()).sum();
    Ok(EtaSolution { value, minimizer })
}

/// Removes solver slack: `c₀ = ε` exactly, the negative part rescaled so the
/// sum vanishes, and the ℓ1 norm capped at 2.
fn project_feasible(raw: &[f64], eps: f64) -> Vec<f64> {
    let mut c = raw.to_vec();
    c[0] = eps;
    let pos: f64 = c[1..].iter().filter(|&&x| x > 0.0).sum();
    let keep_pos = if eps + pos > 1.0 {
        (1.0 - eps) / pos
    } else {
        1.0
    };
    let pos = pos * keep_pos;
    let neg: f64 = -c[1..].iter().filter(|&&x| x < 0.0).sum::<f64>();
    let scale_neg = if neg > 0.0 { (eps + pos) / neg } else { 1.0 };
    for x in c[1..].iter_mut() {
        *x *= if *x > 0.0 { keep_pos } else { scale_neg };
    }
    c
}

fn circle_term(c: &CoefficientVector, nu1: f64, nu2: f64, n: usize, theta: f64) -> f64 {
    let s = (theta / 2.0).sin();
    let ratio = (1.0 - nu2 * nu2) / (nu2 * nu2);
    let weight = (1.0 + ratio * s * s).powf(-(n as f64) / 2.0);
    let u = (1.0 - nu1) + nu1 * unit(theta);
    weight * c.polynomial(u).norm()
}

fn golden_max(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 < f2 {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        } else {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        }
    }
    f1.max(f2)
}

/// `max_θ (1 + ((1−ν₂²)/ν₂²) sin²(θ/2))^{−n/2} |Q((1−ν₁) + ν₁e^{iθ})|` over a
/// uniform grid on `(−π, π]`, refined by golden-section search around the
/// best grid point.
pub fn circle_minimax_value(
    c: &CoefficientVector,
    nu1: f64,
    nu2: f64,
    n: usize,
    grid: usize,
) -> Result<f64> {
    if grid < MIN_GRID {
        return Err(Error::param(format!(
            "θ grid of {grid} points is below {MIN_GRID}"
        )));
    }
    if c.n() != n {
        return Err(Error::LengthMismatch {
            expected: n + 1,
            got: c.c.len(),
        });
    }
    if !(nu1 > 0.0 && nu1 <= 1.0 && nu2 > 0.0 && nu2 <= 1.0) {
        return Err(Error::param(format!(
            "retentions ({nu1}, {nu2}) outside (0, 1]"
        )));
    }
    let step = 2.0 * std::f64::consts::PI / grid as f64;
    let theta = |k: usize| -std::f64::consts::PI + step * (k + 1) as f64;
    let (best_k, best) = (0..grid)
        .into_par_iter()
        .with_min_len(256)
        .map(|k| (k, circle_term(c, nu1, nu2, n, theta(k))))
        .reduce(
            || (0, f64::NEG_INFINITY),
            |a, b| if b.1 > a.1 { b } else { a },
        );
    let t = theta(best_k);
    let refined = golden_max(|x| circle_term(c, nu1, nu2, n, x), t - step, t + step);
    Ok(best.max(refined))
}

/// The free constants of the closed-form bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EtaConstants {
    pub c_theta: f64,
    pub c1: f64,
    pub c2: f64,
}

impl Default for EtaConstants {
    fn default() -> Self {
        EtaConstants {
            c_theta: 0.5,
            c1: 1.0,
            c2: 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    /// `θ₀ ≤ π/2`: SPAM dominates, the cube-root branch is the relevant one.
    ShortArc,
    /// `θ₀ > π/2`.
    LongArc,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FormulaBound {
    pub value: f64,
    /// `ε^{C1/ν₁}`
    pub power_branch: f64,
    /// `exp(−C2 ln^{2/3}(1/ε) (n(1−ν₂²))^{1/3} / (ν₁ν₂)^{2/3})`
    pub circle_branch: f64,
    /// Infinite when `ν₂ = 1`.
    pub theta0: f64,
    pub regime: Regime,
}

pub fn formula_bound(
    eps: f64,
    nu1: f64,
    nu2: f64,
    n: usize,
    constants: &EtaConstants,
) -> Result<FormulaBound> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::param(format!("ε = {eps} outside (0, 1)")));
    }
    if !(nu1 > 0.0 && nu1 <= 1.0 && nu2 > 0.0 && nu2 <= 1.0) {
        return Err(Error::param(format!(
            "retentions ({nu1}, {nu2}) outside (0, 1]"
        )));
    }
    if !(constants.c_theta > 0.0 && constants.c_theta < 1.0) {
        return Err(Error::param(format!(
            "c_theta = {} outside (0, 1)",
            constants.c_theta
        )));
    }
    let log_inv = (1.0 / eps).ln();
    let spread = n as f64 * (1.0 - nu2 * nu2);
    let power_branch = eps.powf(constants.c1 / nu1);
    let circle_branch = (-constants.c2 * log_inv.powf(2.0 / 3.0) * spread.cbrt()
        / (nu1 * nu2).powf(2.0 / 3.0))
    .exp();
    let theta0 = constants.c_theta * nu2.powf(2.0 / 3.0) * log_inv.cbrt() / (nu1 * spread).cbrt();
    let regime = if theta0 <= std::f64::consts::FRAC_PI_2 {
        Regime::ShortArc
    } else {
        Regime::LongArc
    };
    Ok(FormulaBound {
        value: power_branch.max(circle_branch),
        power_branch,
        circle_branch,
        theta0,
        regime,
    })
}

/// All three quantities for ZFlip(ν₁, ν₂).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EtaResult {
    pub n: usize,
    pub epsilon: f64,
    pub nu1: f64,
    pub nu2: f64,
    pub eta_exact: f64,
    pub minimizer: CoefficientVector,
    pub circle_value: f64,
    pub formula_bound: f64,
    pub formula: FormulaBound,
    pub regime: Regime,
    pub constants_used: EtaConstants,
}

pub fn eta_report(
    nu1: f64,
    nu2: f64,
    n: usize,
    eps: f64,
    constants: &EtaConstants,
    grid: usize,
) -> Result<EtaResult> {
    let spec = ChannelSpec::Zflip { nu1, nu2 };
    let sol = eta_exact(&spec, n, eps)?;
    let circle_value = circle_minimax_value(&sol.minimizer, nu1, nu2, n, grid)?;
    let formula = formula_bound(eps, nu1, nu2, n, constants)?;
    Ok(EtaResult {
        n,
        epsilon: eps,
        nu1,
        nu2,
        eta_exact: sol.value,
        minimizer: sol.minimizer,
        circle_value,
        formula_bound: formula.value,
        formula,
        regime: formula.regime,
        constants_used: *constants,
    })
}
