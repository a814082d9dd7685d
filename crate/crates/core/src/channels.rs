//! Binary noise channels and their Hamming-weight transition matrices.
//!
//! For a channel acting i.i.d. on `n` bits, `A[i][j]` is the probability that a
//! weight-`i` input becomes a weight-`j` output. Rows are encoded by generating
//! functions `G_i(z) = Σ_j A[i][j] z^j`:
//!
//! * BEC / Z with loss `λ`: `(λ + (1−λ)z)^i`
//! * BSC with crossover `b`: `(b + (1−b)z)^i ((1−b) + bz)^(n−i)`
//! * ZFlip(ν₁, ν₂) = BSC_{(1−ν₂)/2} ∘ Z_{1−ν₁}:
//!   `((1−b) + bz)^n ((1−ν₁) + ν₁w)^i` with `w = (b + (1−b)z) / ((1−b) + bz)`.

use std::f64::consts::PI;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::precision::{Real, TwoFloat};

/// Largest `n` for which channel matrices are built.
pub const MAX_MATRIX_N: usize = 64;

/// A binary channel acting independently on each bit.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ChannelSpec {
    /// Erasure with probability `lambda` (erasures count as non-1).
    Bec { lambda: f64 },
    /// Bit flip with probability `b < 1/2`.
    Bsc { b: f64 },
    /// `1 → 0` with probability `lambda`.
    Z { lambda: f64 },
    /// Z-channel with retention `nu1` followed by a BSC with retention `nu2`.
    Zflip { nu1: f64, nu2: f64 },
}

impl ChannelSpec {
    /// The combined probe channel for overall SPAM retention `r`.
    pub fn probe_channel(retention: f64) -> Self {
        ChannelSpec::Zflip {
            nu1: 2.0 / 3.0,
            nu2: retention,
        }
    }

    pub fn noiseless() -> Self {
        ChannelSpec::Zflip { nu1: 1.0, nu2: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ChannelSpec::Bec { lambda } | ChannelSpec::Z { lambda } => (0.0..1.0).contains(&lambda),
            ChannelSpec::Bsc { b } => (0.0..0.5).contains(&b),
            ChannelSpec::Zflip { nu1, nu2 } => nu1 > 0.0 && nu1 <= 1.0 && nu2 > 0.0 && nu2 <= 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::param(format!("invalid channel {self:?}")))
        }
    }
}

/// Crossover probability `b = (1 − ν₂)/2` of the flip stage.
pub fn flip_crossover(nu2: f64) -> f64 {
    (1.0 - nu2) / 2.0
}

/// Row-stochastic weight-transition matrix of dimension `(n+1) × (n+1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AMatrix {
    n: usize,
    entries: Vec<f64>,
}

impl AMatrix {
    pub fn identity(n: usize) -> Self {
        let d = n + 1;
        let mut entries = vec![0.0; d * d];
        for i in 0..d {
            entries[i * d + i] = 1.0;
        }
        AMatrix { n, entries }
    }

    /// Build from explicit rows; checks shape and row sums.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::param("matrix must have at least one row"));
        }
        for r in rows {
            Error::check_len(d, r.len())?;
        }
        let m = AMatrix {
            n: d - 1,
            entries: rows.concat(),
        };
        if !m.is_row_stochastic(1e-12) {
            return Err(Error::param("rows must be probability vectors"));
        }
        Ok(m)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dim(&self) -> usize {
        self.n + 1
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let d = self.dim();
        &self.entries[i * d..(i + 1) * d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.entries.chunks(self.dim())
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn is_row_stochastic(&self, tol: f64) -> bool {
        self.rows().all(|r| {
            r.iter().all(|&x| x >= -1e-15 && x <= 1.0 + tol)
                && (r.iter().sum::<f64>() - 1.0).abs() <= tol
        })
    }

    /// Row vector times matrix: the output weight law for input weight law `p`.
    pub fn push_forward(&self, p: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.dim(), p.len())?;
        let mut q = vec![0.0; self.dim()];
        for (pi, row) in p.iter().zip(self.rows()) {
            for (qj, a) in q.iter_mut().zip(row) {
                *qj += pi * a;
            }
        }
        Ok(q)
    }

    /// Matrix times column vector.
    pub fn apply(&self, y: &[f64]) -> Result<Vec<f64>> {
        Error::check_len(self.dim(), y.len())?;
        Ok(self
            .rows()
            .map(|r| r.iter().zip(y).map(|(a, b)| a * b).sum())
            .collect())
    }

    /// CSV with a header row of output weights, one row per input weight.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("weight");
        for j in 0..self.dim() {
            write!(s, ",{j}").unwrap();
        }
        s.push('\n');
        for (i, r) in self.rows().enumerate() {
            write!(s, "{i}").unwrap();
            for x in r {
                write!(s, ",{x}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

fn poly_mul<T: Real>(a: &[T], b: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = out[i + j] + x * y;
        }
    }
    out
}

/// Coefficients of `(c0 + c1 z)^k` for `k = 0..=n`, by repeated multiplication.
fn linear_powers<T: Real>(c0: T, c1: T, n: usize) -> Vec<Vec<T>> {
    let mut out = Vec::with_capacity(n + 1);
    out.push(vec![T::one()]);
    for k in 1..=n {
        let next = poly_mul(&out[k - 1], &[c0, c1]);
        out.push(next);
    }
    out
}

fn loss_matrix<T: Real>(lambda: T, n: usize) -> Vec<T> {
    let d = n + 1;
    let powers = linear_powers(lambda, T::one() - lambda, n);
    let mut a = vec![T::zero(); d * d];
    for (i, row) in powers.iter().enumerate() {
        a[i * d..i * d + row.len()].copy_from_slice(row);
    }
    a
}

fn flip_matrix<T: Real>(b: T, n: usize) -> Vec<T> {
    let d = n + 1;
    let up = linear_powers(b, T::one() - b, n);
    let stay = linear_powers(T::one() - b, b, n);
    let mut a = vec![T::zero(); d * d];
    for i in 0..d {
        let row = poly_mul(&up[i], &stay[n - i]);
        a[i * d..(i + 1) * d].copy_from_slice(&row);
    }
    a
}

fn mat_mul<T: Real>(a: &[T], b: &[T], d: usize) -> Vec<T> {
    let mut out = vec![T::zero(); d * d];
    for i in 0..d {
        for k in 0..d {
            let x = a[i * d + k];
            for j in 0..d {
                out[i * d + j] = out[i * d + j] + x * b[k * d + j];
            }
        }
    }
    out
}

/// Row-major matrix entries computed in scalar type `T` (use
/// [`TwoFloat`](crate::precision::TwoFloat) for the extended path).
pub fn amatrix_in<T: Real>(spec: &ChannelSpec, n: usize) -> Result<Vec<T>> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::param("n must be at least 1"));
    }
    if n > MAX_MATRIX_N {
        return Err(Error::TooLarge {
            what: "matrix n",
            value: n,
            limit: MAX_MATRIX_N,
        });
    }
    let t = T::from_f64;
    Ok(match *spec {
        ChannelSpec::Bec { lambda } | ChannelSpec::Z { lambda } => loss_matrix(t(lambda), n),
        ChannelSpec::Bsc { b } => flip_matrix(t(b), n),
        ChannelSpec::Zflip { nu1, nu2 } => {
            let loss = loss_matrix(T::one() - t(nu1), n);
            let b = (T::one() - t(nu2)) / t(2.0);
            let flip = flip_matrix(b, n);
            mat_mul(&loss, &flip, n + 1)
        }
    })
}

/// The weight-transition matrix of `spec` on `n` bits.
pub fn amatrix(spec: &ChannelSpec, n: usize) -> Result<AMatrix> {
    Ok(AMatrix {
        n,
        entries: amatrix_in::<f64>(spec, n)?,
    })
}

/// Matrix of the channel that applies `first` and then `second`.
pub fn concat(first: &AMatrix, second: &AMatrix) -> Result<AMatrix> {
    Error::check_len(first.dim(), second.dim())?;
    Ok(AMatrix {
        n: first.n,
        entries: mat_mul(&first.entries, &second.entries, first.dim()),
    })
}

/// Closed-form `G_i(z) = Σ_j A[i][j] z^j`.
pub fn generating_value(spec: &ChannelSpec, n: usize, i: usize, z: Complex64) -> Result<Complex64> {
    spec.validate()?;
    if i > n {
        return Err(Error::param(format!("row index {i} exceeds n = {n}")));
    }
    let (i, n) = (i as i32, n as i32);
    let one = Complex64::new(1.0, 0.0);
    Ok(match *spec {
        ChannelSpec::Bec { lambda } | ChannelSpec::Z { lambda } => {
            (lambda + (1.0 - lambda) * z).powi(i)
        }
        ChannelSpec::Bsc { b } => (b + (1.0 - b) * z).powi(i) * ((1.0 - b) + b * z).powi(n - i),
        ChannelSpec::Zflip { nu1, nu2 } => {
            let b = flip_crossover(nu2);
            let denom = (1.0 - b) * one + b * z;
            if denom.norm() <= 1e-12 * (1.0 + z.norm()) {
                return Err(Error::Pole(format!("{z}")));
            }
            let w = (b + (1.0 - b) * z) / denom;
            denom.powi(n) * ((1.0 - nu1) + nu1 * w).powi(i)
        }
    })
}

fn check_nu2(nu2: f64) -> Result<()> {
    if nu2 > 0.0 && nu2 <= 1.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "flip retention ν₂ = {nu2} must lie in (0, 1]"
        )))
    }
}

/// `|ν₂ / ((1−b) − b e^{iθ})|^n = (1 + ((1−ν₂²)/ν₂²) sin²(θ/2))^{−n/2}`.
pub fn circle_weight(nu2: f64, n: usize, theta: f64) -> Result<f64> {
    check_nu2(nu2)?;
    let s = (theta / 2.0).sin();
    let ratio = (1.0 - nu2 * nu2) / (nu2 * nu2);
    Ok((1.0 + ratio * s * s).powf(-(n as f64) / 2.0))
}

/// Forward Möbius map `w = (b + (1−b)z) / ((1−b) + bz)`.
pub fn mobius_w_of_z(nu2: f64, z: Complex64) -> Result<Complex64> {
    check_nu2(nu2)?;
    let b = flip_crossover(nu2);
    let denom = (1.0 - b) + b * z;
    if denom.norm() <= 1e-12 * (1.0 + z.norm()) {
        return Err(Error::Pole(format!("{z}")));
    }
    Ok((b + (1.0 - b) * z) / denom)
}

/// Inverse Möbius map, `z = ((1−b)w − b) / ((1−b) − bw)`, for `|w| = 1`.
pub fn mobius_z_of_w(nu2: f64, w: Complex64) -> Result<Complex64> {
    check_nu2(nu2)?;
    if (w.norm() - 1.0).abs() > 1e-9 {
        return Err(Error::param(format!("|w| = {} is not 1", w.norm())));
    }
    let b = flip_crossover(nu2);
    Ok(((1.0 - b) * w - b) / ((1.0 - b) - b * w))
}

/// `Σ_j A[i][j] z^j` from the explicit matrix row, with the matrix built and
/// the polynomial evaluated (Horner) in double-double arithmetic.
pub fn row_polynomial_value(
    spec: &ChannelSpec,
    n: usize,
    i: usize,
    z: Complex64,
) -> Result<Complex64> {
    if i > n {
        return Err(Error::param(format!("row index {i} exceeds n = {n}")));
    }
    Ok(row_polynomial_values(spec, n, &[z])?[0][i])
}

/// Every row polynomial at every point, `out[point][row]`, sharing one
/// extended-precision matrix.
pub fn row_polynomial_values(
    spec: &ChannelSpec,
    n: usize,
    zs: &[Complex64],
) -> Result<Vec<Vec<Complex64>>> {
    let a = amatrix_in::<TwoFloat>(spec, n)?;
    let d = n + 1;
    Ok(zs
        .iter()
        .map(|z| {
            let (zr, zi) = (TwoFloat::from(z.re), TwoFloat::from(z.im));
            a.chunks(d)
                .map(|row| {
                    let (mut re, mut im) = (TwoFloat::from(0.0), TwoFloat::from(0.0));
                    for &c in row.iter().rev() {
                        let next_re = re * zr - im * zi + c;
                        im = re * zi + im * zr;
                        re = next_re;
                    }
                    Complex64::new(re.to_f64(), im.to_f64())
                })
                .collect()
        })
        .collect())
}

/// `e^{iθ}` for `θ` wrapped into `(−π, π]`.
pub fn unit(theta: f64) -> Complex64 {
    let mut t = theta % (2.0 * PI);
    if t > PI {
        t -= 2.0 * PI;
    } else if t <= -PI {
        t += 2.0 * PI;
    }
    Complex64::from_polar(1.0, t)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn assert_close(a: &AMatrix, b: &AMatrix, tol: f64) {
        assert_eq!(a.dim(), b.dim());
        for i in 0..a.dim() {
            for j in 0..a.dim() {
                assert!(
                    (a.get(i, j) - b.get(i, j)).abs() <= tol,
                    "({i},{j}): {} vs {}",
                    a.get(i, j),
                    b.get(i, j)
                );
            }
        }
    }

    fn zflip(nu1: f64, nu2: f64) -> ChannelSpec {
        ChannelSpec::Zflip { nu1, nu2 }
    }

    #[test]
    fn noiseless_is_identity() {
        assert_eq!(
            amatrix(&ChannelSpec::Bec { lambda: 0.0 }, 2).unwrap(),
            AMatrix::identity(2)
        );
        assert_eq!(
            amatrix(&ChannelSpec::noiseless(), 5).unwrap(),
            AMatrix::identity(5)
        );
    }

    #[test]
    fn zflip_two_by_two() {
        // Z_{1/3}: [[1,0],[1/3,2/3]]; BSC_{0.05}: [[.95,.05],[.05,.95]].
        let a = amatrix(&zflip(2.0 / 3.0, 0.9), 1).unwrap();
        let want = AMatrix::from_rows(&[vec![0.95, 0.05], vec![0.35, 0.65]]).unwrap();
        assert_close(&a, &want, 1e-15);
    }

    #[test]
    fn bsc_single_bit() {
        let b = 0.2;
        let a = amatrix(&ChannelSpec::Bsc { b }, 1).unwrap();
        assert_eq!(a.to_rows(), vec![vec![1.0 - b, b], vec![b, 1.0 - b]]);
    }

    #[test]
    fn concat_examples() {
        let a = amatrix(&zflip(0.7, 0.8), 6).unwrap();
        assert_close(&concat(&AMatrix::identity(6), &a).unwrap(), &a, 0.0);

        let z = amatrix(&ChannelSpec::Z { lambda: 1.0 / 3.0 }, 8).unwrap();
        let f = amatrix(&ChannelSpec::Bsc { b: 0.05 }, 8).unwrap();
        assert_close(
            &concat(&z, &f).unwrap(),
            &amatrix(&zflip(2.0 / 3.0, 0.9), 8).unwrap(),
            1e-12,
        );

        // Two flips compose to a flip with crossover b1 + b2 − 2 b1 b2, the
        // fixed point of the 2-state Markov chain product.
        let (b1, b2) = (0.1, 0.23);
        let t1 = [[1.0 - b1, b1], [b1, 1.0 - b1]];
        let t2 = [[1.0 - b2, b2], [b2, 1.0 - b2]];
        let composed = t1[0][0] * t2[0][1] + t1[0][1] * t2[1][1];
        assert!((composed - (b1 + b2 - 2.0 * b1 * b2)).abs() < 1e-15);
        let lhs = concat(
            &amatrix(&ChannelSpec::Bsc { b: b1 }, 6).unwrap(),
            &amatrix(&ChannelSpec::Bsc { b: b2 }, 6).unwrap(),
        )
        .unwrap();
        assert_close(
            &lhs,
            &amatrix(&ChannelSpec::Bsc { b: composed }, 6).unwrap(),
            1e-12,
        );

        assert!(concat(&AMatrix::identity(2), &AMatrix::identity(3)).is_err());
    }

    #[test]
    fn bec_and_z_agree() {
        for &lambda in &[0.0, 0.1, 1.0 / 3.0, 0.9] {
            let a = amatrix(&ChannelSpec::Bec { lambda }, 12).unwrap();
            let b = amatrix(&ChannelSpec::Z { lambda }, 12).unwrap();
            assert_close(&a, &b, 1e-15);
        }
    }

    #[test]
    fn invalid_specs_rejected() {
        assert!(amatrix(&ChannelSpec::Bsc { b: 0.5 }, 3).is_err());
        assert!(amatrix(&ChannelSpec::Bec { lambda: 1.0 }, 3).is_err());
        assert!(amatrix(&zflip(0.0, 0.5), 3).is_err());
        assert!(amatrix(&zflip(0.5, 0.0), 3).is_err());
        assert!(amatrix(&zflip(0.5, 0.5), 0).is_err());
        assert!(amatrix(&zflip(0.5, 0.5), 65).is_err());
    }

    fn poly_value(row: &[f64], z: Complex64) -> Complex64 {
        row.iter()
            .rev()
            .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
    }

    #[test]
    fn extended_row_value_agrees_with_double_horner() {
        let spec = zflip(0.6, 0.8);
        let a = amatrix(&spec, 6).unwrap();
        let z = Complex64::new(0.6, -0.8);
        for i in 0..=6 {
            let d = poly_value(a.row(i), z);
            let e = row_polynomial_value(&spec, 6, i, z).unwrap();
            assert!((d - e).norm() < 1e-14);
        }
    }

    #[test]
    fn generating_value_examples() {
        let spec = zflip(2.0 / 3.0, 0.9);
        for i in 0..=4 {
            let g = generating_value(&spec, 4, i, Complex64::new(1.0, 0.0)).unwrap();
            assert!((g - 1.0).norm() < 1e-14);
        }
        let b: f64 = 0.05;
        let g0 = generating_value(&spec, 4, 0, Complex64::new(0.0, 0.0)).unwrap();
        assert!((g0.re - (1.0 - b).powi(4)).abs() < 1e-15);

        let z = Complex64::new(0.3, 0.4);
        let a = amatrix(&spec, 4).unwrap();
        let g = generating_value(&spec, 4, 2, z).unwrap();
        assert!((g - poly_value(a.row(2), z)).norm() < 1e-9);

        assert!(generating_value(&spec, 4, 5, z).is_err());
        // pole at z = −(1−b)/b
        let pole = Complex64::new(-(1.0 - b) / b, 0.0);
        assert!(matches!(
            generating_value(&spec, 4, 1, pole),
            Err(Error::Pole(_))
        ));
    }

    #[test]
    fn circle_weight_examples() {
        assert_eq!(circle_weight(0.6, 7, 0.0).unwrap(), 1.0);
        for k in 0..20 {
            let theta = -PI + k as f64 * 0.3;
            assert!((circle_weight(1.0, 9, theta).unwrap() - 1.0).abs() < 1e-15);
        }
        let got = circle_weight(0.9, 10, PI).unwrap();
        let want = (1.0f64 + 0.19 / 0.81).powi(-5);
        assert!((got - want).abs() < 1e-14);
        let b = flip_crossover(0.9);
        let direct = (0.9 / ((1.0 - b) * Complex64::new(1.0, 0.0) - b * unit(PI)).norm()).powi(10);
        assert!((got - direct).abs() < 1e-14);
        assert!(circle_weight(0.0, 3, 1.0).is_err());
    }

    #[test]
    fn mobius_examples() {
        let one = Complex64::new(1.0, 0.0);
        assert!((mobius_z_of_w(0.7, one).unwrap() - one).norm() < 1e-15);
        assert!((mobius_z_of_w(0.7, -one).unwrap() + one).norm() < 1e-15);
        assert!(mobius_z_of_w(0.0, one).is_err());
        assert!(mobius_z_of_w(0.7, Complex64::new(0.5, 0.0)).is_err());
    }

    proptest! {
        #[test]
        fn rows_are_stochastic(nu1 in 0.01f64..=1.0, nu2 in 0.01f64..=1.0, n in 1usize..=64) {
            let a = amatrix(&zflip(nu1, nu2), n).unwrap();
            prop_assert!(a.is_row_stochastic(1e-12));
        }

        #[test]
        fn mobius_round_trip(nu2 in 0.01f64..=1.0, theta in -PI..PI) {
            let w = unit(theta);
            let z = mobius_z_of_w(nu2, w).unwrap();
            prop_assert!((z.norm() - 1.0).abs() < 1e-9);
            prop_assert!((mobius_w_of_z(nu2, z).unwrap() - w).norm() < 1e-9);
        }

        #[test]
        fn closed_form_matches_polynomial(
            nu1 in 0.55f64..=1.0, nu2 in 0.5f64..=1.0, n in 1usize..=32, theta in -PI..PI,
        ) {
            let spec = zflip(nu1, nu2);
            let z = unit(theta);
            for i in 0..=n {
                let g = generating_value(&spec, n, i, z).unwrap();
                let p = row_polynomial_value(&spec, n, i, z).unwrap();
                prop_assert!((g - p).norm() <= 1e-9 * g.norm().max(1e-300) + 1e-15);
            }
        }
    }
}
