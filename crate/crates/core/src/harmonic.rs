//! Scalar functions on the unit circle held as truncated Fourier series.
//!
//! A [`CircleFunction`] stores the coefficients `c_j`, `|j| <= M`, of the
//! trigonometric polynomial `sum_j c_j zeta^j` together with the size `G` of
//! the uniform grid `zeta_k = exp(2 pi i k / G)` on which it is sampled.
//! `G` is a power of two with `G >= 4M + 1`, so pairwise products are
//! alias-free on the grid.

use std::ops::{Add, Mul, Neg, Sub};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::tolerances::{DEFAULT_GRID, EPS_DELTA, TOL_POS, TOL_STRICT};

pub(crate) const ZERO: Complex64 = Complex64::new(0.0, 0.0);
pub(crate) const ONE: Complex64 = Complex64::new(1.0, 0.0);

fn fft(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    let mut planner = FftPlanner::new();
    if inverse {
        planner.plan_fft_inverse(n)
    } else {
        planner.plan_fft_forward(n)
    }
}

/// Smallest admissible grid for coefficient order `m`.
pub fn min_grid(m: usize) -> usize {
    (4 * m + 1).next_power_of_two()
}

/// Full linear convolution of two coefficient sequences.
pub(crate) fn convolve(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let n = a.len() + b.len() - 1;
    if a.len().min(b.len()) <= 32 || a.len() * b.len() <= 200_000 {
        let mut out = vec![ZERO; n];
        for (i, &x) in a.iter().enumerate() {
            if x == ZERO {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                out[i + j] += x * y;
            }
        }
        return out;
    }
    let size = n.next_power_of_two();
    let mut fa = vec![ZERO; size];
    let mut fb = vec![ZERO; size];
    fa[..a.len()].copy_from_slice(a);
    fb[..b.len()].copy_from_slice(b);
    let fwd = fft(size, false);
    fwd.process(&mut fa);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    fft(size, true).process(&mut fa);
    let scale = 1.0 / size as f64;
    fa.truncate(n);
    fa.iter_mut().for_each(|x| *x *= scale);
    fa
}

/// Trigonometric polynomial on the unit circle.
#[derive(Clone, Debug, PartialEq)]
pub struct CircleFunction {
    coeffs: Vec<Complex64>,
    grid_size: usize,
}

impl CircleFunction {
    /// Builds from coefficients indexed `-M..=M` (odd length).
    pub fn new(coeffs: Vec<Complex64>, grid_size: usize) -> Result<Self> {
        if coeffs.len() % 2 == 0 {
            return Err(Error::Layout(format!(
                "expected an odd number of coefficients, got {}",
                coeffs.len()
            )));
        }
        let m = coeffs.len() / 2;
        if !grid_size.is_power_of_two() || grid_size < 4 * m + 1 {
            return Err(Error::Layout(format!(
                "grid size {grid_size} must be a power of two >= {}",
                4 * m + 1
            )));
        }
        Ok(Self { coeffs, grid_size })
    }

    /// Coefficients `-M..=M` with the smallest grid that is at least [`DEFAULT_GRID`].
    pub fn from_coeffs(coeffs: Vec<Complex64>) -> Result<Self> {
        let m = coeffs.len() / 2;
        Self::new(coeffs, min_grid(m).max(DEFAULT_GRID))
    }

    pub fn zero(grid_size: usize) -> Self {
        Self { coeffs: vec![ZERO], grid_size }
    }

    pub fn constant(c: Complex64, grid_size: usize) -> Self {
        Self { coeffs: vec![c], grid_size }
    }

    /// `c * chi^k`.
    pub fn monomial(k: i64, c: Complex64, grid_size: usize) -> Self {
        let m = k.unsigned_abs() as usize;
        let mut coeffs = vec![ZERO; 2 * m + 1];
        coeffs[(k + m as i64) as usize] = c;
        Self { coeffs, grid_size: grid_size.max(min_grid(m)) }
    }

    /// The identity function `chi(zeta) = zeta`.
    pub fn chi(grid_size: usize) -> Self {
        Self::monomial(1, ONE, grid_size)
    }

    /// Analytic polynomial from Taylor coefficients `c_0, c_1, ...`.
    pub fn from_taylor(taylor: &[Complex64], grid_size: usize) -> Self {
        let d = taylor.len().saturating_sub(1);
        let mut coeffs = vec![ZERO; 2 * d + 1];
        coeffs[d..d + taylor.len()].copy_from_slice(taylor);
        if taylor.is_empty() {
            coeffs[0] = ZERO;
        }
        Self { coeffs, grid_size: grid_size.max(min_grid(d)) }
    }

    /// From an offset sequence: `coeffs[i]` is the coefficient of `chi^(lo + i)`.
    pub(crate) fn from_offset(lo: i64, seq: &[Complex64], grid_size: usize) -> Self {
        let hi = lo + seq.len() as i64 - 1;
        let m = lo.unsigned_abs().max(hi.unsigned_abs()) as usize;
        let mut coeffs = vec![ZERO; 2 * m + 1];
        for (i, &c) in seq.iter().enumerate() {
            coeffs[(lo + i as i64 + m as i64) as usize] = c;
        }
        Self { coeffs, grid_size: grid_size.max(min_grid(m)) }
    }

    pub fn order(&self) -> usize {
        self.coeffs.len() / 2
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    /// Coefficients indexed `-M..=M`.
    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    /// Coefficient of `chi^j` (zero outside the window).
    pub fn coeff(&self, j: i64) -> Complex64 {
        let m = self.order() as i64;
        if j.abs() > m {
            ZERO
        } else {
            self.coeffs[(j + m) as usize]
        }
    }

    /// Re-windowed copy of order `m` (padding with zeros or dropping the tails).
    pub fn with_order(&self, m: usize) -> Self {
        let mut coeffs = vec![ZERO; 2 * m + 1];
        let mi = m as i64;
        for j in -mi..=mi {
            coeffs[(j + mi) as usize] = self.coeff(j);
        }
        Self { coeffs, grid_size: self.grid_size.max(min_grid(m)) }
    }

    /// Copy sampled on a different grid.
    pub fn with_grid(&self, grid_size: usize) -> Result<Self> {
        Self::new(self.coeffs.clone(), grid_size)
    }

    /// Drops outer coefficients whose modulus is below `tol`.
    pub fn trimmed(&self, tol: f64) -> Self {
        let m = self.order() as i64;
        let mut keep = 0;
        for j in (0..=m).rev() {
            if self.coeff(j).norm() > tol || self.coeff(-j).norm() > tol {
                keep = j as usize;
                break;
            }
        }
        let mut out = self.with_order(keep);
        out.grid_size = self.grid_size;
        out
    }

    /// Complex conjugate on the circle: `c_j -> conj(c_{-j})`.
    pub fn conj(&self) -> Self {
        Self {
            coeffs: self.coeffs.iter().rev().map(|c| c.conj()).collect(),
            grid_size: self.grid_size,
        }
    }

    /// Multiplication by `chi^k`.
    pub fn shift(&self, k: i64) -> Self {
        let m = self.order() as i64;
        Self::from_offset(-m + k, &self.coeffs, self.grid_size)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { coeffs: self.coeffs.iter().map(|c| c * s).collect(), grid_size: self.grid_size }
    }

    fn combine(&self, other: &Self, sign: f64) -> Self {
        let m = self.order().max(other.order());
        let mi = m as i64;
        let coeffs = (-mi..=mi).map(|j| self.coeff(j) + other.coeff(j) * sign).collect();
        Self { coeffs, grid_size: self.grid_size.max(other.grid_size).max(min_grid(m)) }
    }

    /// Pointwise product on the circle, i.e. the convolution of coefficients.
    ///
    /// Both factors must share a grid and the product order `M_f + M_g`
    /// must stay within the alias-free bound `(G - 1) / 4` of that grid.
    pub fn multiply(&self, other: &Self) -> Result<Self> {
        if self.grid_size != other.grid_size {
            return Err(Error::GridMismatch { left: self.grid_size, right: other.grid_size });
        }
        let order = self.order() + other.order();
        let bound = (self.grid_size - 1) / 4;
        if order > bound {
            return Err(Error::WindowOverflow { order, bound, grid: self.grid_size });
        }
        Ok(self.product(other))
    }

    /// Unchecked product; the grid grows as needed to keep the type invariant.
    pub fn product(&self, other: &Self) -> Self {
        let coeffs = convolve(&self.coeffs, &other.coeffs);
        let m = self.order() + other.order();
        Self { coeffs, grid_size: self.grid_size.max(other.grid_size).max(min_grid(m)) }
    }

    /// Orthogonal projection `P_+` onto `H^2`.
    pub fn project_plus(&self) -> AnalyticPoly {
        let m = self.order() as i64;
        let taylor: Vec<_> = (0..=m).map(|j| self.coeff(j)).collect();
        AnalyticPoly(Self::from_taylor(&taylor, self.grid_size))
    }

    /// The part with strictly negative frequencies, `(I - P_+) f`.
    pub fn project_minus(&self) -> Self {
        let m = self.order() as i64;
        let coeffs = (-m..=m).map(|j| if j < 0 { self.coeff(j) } else { ZERO }).collect();
        Self { coeffs, grid_size: self.grid_size }
    }

    /// Samples at `zeta_k = exp(2 pi i k / G)`, `k = 0..G`.
    pub fn grid_values(&self) -> Vec<Complex64> {
        self.values_on(self.grid_size)
    }

    /// Samples on a uniform grid of `g` points (aliasing if `g <= 2M`).
    pub fn values_on(&self, g: usize) -> Vec<Complex64> {
        let mut buf = vec![ZERO; g];
        let m = self.order() as i64;
        for j in -m..=m {
            buf[j.rem_euclid(g as i64) as usize] += self.coeff(j);
        }
        fft(g, true).process(&mut buf);
        buf
    }

    /// Fourier coefficients `|j| <= order` of grid samples.
    pub fn from_grid(values: &[Complex64], order: usize) -> Result<Self> {
        let g = values.len();
        let mut buf = values.to_vec();
        fft(g, false).process(&mut buf);
        let scale = 1.0 / g as f64;
        let mi = order as i64;
        let coeffs = (-mi..=mi).map(|j| buf[j.rem_euclid(g as i64) as usize] * scale).collect();
        Self::new(coeffs, g)
    }

    /// Value at a point of the circle (or anywhere in the plane minus the origin).
    pub fn eval(&self, z: Complex64) -> Complex64 {
        let m = self.order() as i64;
        (-m..=m).map(|j| self.coeff(j) * z.powi(j as i32)).sum()
    }

    /// `L^2(m)` norm, i.e. the Euclidean norm of the coefficients.
    pub fn l2_norm(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Maximum modulus over the grid.
    pub fn sup_on_grid(&self) -> f64 {
        self.grid_values().iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    /// `(1/G) sum_k f(zeta_k)`, the zeroth coefficient.
    pub fn mean(&self) -> Complex64 {
        self.coeff(0)
    }

    /// Coefficients as `[re, im]` pairs indexed `-M..=M`.
    pub fn to_pairs(&self) -> Vec<[f64; 2]> {
        self.coeffs.iter().map(|c| [c.re, c.im]).collect()
    }

    pub fn from_pairs(pairs: &[[f64; 2]], grid_size: Option<usize>) -> Result<Self> {
        let coeffs: Vec<_> = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        match grid_size {
            Some(g) => Self::new(coeffs, g),
            None => Self::from_coeffs(coeffs),
        }
    }
}

impl Add for &CircleFunction {
    type Output = CircleFunction;
    fn add(self, rhs: Self) -> CircleFunction {
        self.combine(rhs, 1.0)
    }
}

impl Sub for &CircleFunction {
    type Output = CircleFunction;
    fn sub(self, rhs: Self) -> CircleFunction {
        self.combine(rhs, -1.0)
    }
}

impl Mul for &CircleFunction {
    type Output = CircleFunction;
    fn mul(self, rhs: Self) -> CircleFunction {
        self.product(rhs)
    }
}

impl Neg for &CircleFunction {
    type Output = CircleFunction;
    fn neg(self) -> CircleFunction {
        self.scale(-ONE)
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CircleFunctionRepr {
    Bare(Vec<[f64; 2]>),
    Full { coeffs: Vec<[f64; 2]>, grid_size: Option<usize> },
}

impl Serialize for CircleFunction {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        CircleFunctionRepr::Full { coeffs: self.to_pairs(), grid_size: Some(self.grid_size) }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for CircleFunction {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let repr = CircleFunctionRepr::deserialize(d)?;
        let (coeffs, grid) = match repr {
            CircleFunctionRepr::Bare(c) => (c, None),
            CircleFunctionRepr::Full { coeffs, grid_size } => (coeffs, grid_size),
        };
        CircleFunction::from_pairs(&coeffs, grid).map_err(serde::de::Error::custom)
    }
}

/// A [`CircleFunction`] with no negative frequencies: an element of `H^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticPoly(CircleFunction);

impl AnalyticPoly {
    /// From Taylor coefficients, on the default grid (or larger if needed).
    pub fn new(taylor: &[Complex64]) -> Self {
        Self(CircleFunction::from_taylor(taylor, DEFAULT_GRID))
    }

    pub fn from_real(taylor: &[f64]) -> Self {
        let t: Vec<_> = taylor.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        Self::new(&t)
    }

    pub fn with_grid(taylor: &[Complex64], grid_size: usize) -> Self {
        Self(CircleFunction::from_taylor(taylor, grid_size))
    }

    /// Accepts a circle function whose negative coefficients vanish.
    pub fn try_from_fn(f: CircleFunction) -> Result<Self> {
        let m = f.order() as i64;
        if (1..=m).any(|j| f.coeff(-j) != ZERO) {
            return Err(Error::Layout("analytic polynomial has negative frequencies".into()));
        }
        Ok(Self(f))
    }

    /// Highest index with a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let m = self.0.order() as i64;
        (0..=m).rev().find(|&j| self.0.coeff(j) != ZERO).unwrap_or(0) as usize
    }

    pub fn taylor(&self) -> Vec<Complex64> {
        (0..=self.degree() as i64).map(|j| self.0.coeff(j)).collect()
    }

    pub fn at_zero(&self) -> Complex64 {
        self.0.coeff(0)
    }

    pub fn as_fn(&self) -> &CircleFunction {
        &self.0
    }

    pub fn into_fn(self) -> CircleFunction {
        self.0
    }
}

impl Serialize for AnalyticPoly {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.taylor().iter().map(|c| [c.re, c.im]).collect::<Vec<_>>().serialize(s)
    }
}

impl<'de> Deserialize<'de> for AnalyticPoly {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let pairs = Vec::<[f64; 2]>::deserialize(d)?;
        let t: Vec<_> = pairs.iter().map(|p| Complex64::new(p[0], p[1])).collect();
        Ok(AnalyticPoly::new(&t))
    }
}

/// The defect function `Delta = (1 - |u|^2)^{1/2}` and its square.
#[derive(Clone, Debug)]
pub struct DeltaData {
    /// `Delta` from pointwise square roots on the grid, at order `(G - 1) / 4`.
    pub delta: CircleFunction,
    /// `1 - |u|^2`, exact as a trigonometric polynomial.
    pub delta_sq: CircleFunction,
    /// `max_k |Delta^2(zeta_k) - Delta_M(zeta_k)^2|` for the truncated series `Delta_M`.
    pub truncation_residual: f64,
}

/// Computes `Delta` and `Delta^2` for a purely contractive analytic polynomial.
pub fn delta_from_u(u: &AnalyticPoly) -> Result<DeltaData> {
    let uf = u.as_fn();
    let one = CircleFunction::constant(ONE, uf.grid_size());
    let delta_sq = &one - &uf.product(&uf.conj());
    let delta_sq = delta_sq.with_order(u.degree());
    let g = uf.grid_size().max(min_grid(delta_sq.order()));
    let sq_vals = delta_sq.values_on(g);
    let min = sq_vals.iter().map(|v| v.re).fold(f64::INFINITY, f64::min);
    if min < -TOL_POS {
        return Err(Error::NegativeDefect { min });
    }
    let root: Vec<_> = sq_vals.iter().map(|v| Complex64::new(v.re.max(0.0).sqrt(), 0.0)).collect();
    let delta = CircleFunction::from_grid(&root, (g - 1) / 4)?;
    let back = delta.values_on(g);
    let truncation_residual = sq_vals
        .iter()
        .zip(&back)
        .map(|(s, d)| (s.re.max(0.0) - d.norm_sqr()).abs())
        .fold(0.0, f64::max);
    Ok(DeltaData { delta, delta_sq, truncation_residual })
}

/// Outcome of [`check_purely_contractive`].
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ContractivityReport {
    pub sup_norm: f64,
    pub modulus_at_zero: f64,
    /// `|u| = 1` on the whole grid.
    pub inner: bool,
    /// Fraction of grid nodes where `Delta <= EPS_DELTA`.
    pub zero_set_fraction: f64,
    /// `Delta` vanishes somewhere on the grid.
    pub delta_vanishes_somewhere: bool,
}

/// Verifies `||u||_inf <= 1` on the grid and `|u(0)| < 1`.
pub fn check_purely_contractive(u: &AnalyticPoly) -> Result<ContractivityReport> {
    let vals = u.as_fn().grid_values();
    let sup_norm = vals.iter().map(|c| c.norm()).fold(0.0, f64::max);
    if sup_norm > 1.0 + TOL_POS {
        return Err(Error::SupNormExceeded { sup: sup_norm });
    }
    let modulus_at_zero = u.at_zero().norm();
    if modulus_at_zero >= 1.0 - TOL_STRICT {
        return Err(Error::NotPurelyContractive { modulus: modulus_at_zero });
    }
    let defects: Vec<f64> = vals.iter().map(|c| (1.0 - c.norm_sqr()).max(0.0)).collect();
    let inner = defects.iter().all(|&d| d <= TOL_STRICT);
    let zeros = defects.iter().filter(|&&d| d.sqrt() <= EPS_DELTA).count();
    Ok(ContractivityReport {
        sup_norm,
        modulus_at_zero,
        inner,
        zero_set_fraction: zeros as f64 / vals.len() as f64,
        delta_vanishes_somewhere: zeros > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn close(a: &CircleFunction, b: &CircleFunction, tol: f64) -> bool {
        (a - b).l2_norm() <= tol
    }

    #[test]
    fn chi_times_conj_chi_is_one() {
        let chi = CircleFunction::chi(64);
        let p = chi.multiply(&chi.conj()).unwrap();
        assert!(close(&p, &CircleFunction::constant(ONE, 64), 1e-15));
    }

    #[test]
    fn monomial_products() {
        let half = CircleFunction::monomial(1, c(0.5, 0.0), 64);
        let p = half.multiply(&half).unwrap();
        assert!(close(&p, &CircleFunction::monomial(2, c(0.25, 0.0), 64), 1e-15));

        let one = CircleFunction::constant(ONE, 64);
        let chi = CircleFunction::chi(64);
        let p = (&one + &chi).multiply(&(&one - &chi)).unwrap();
        let expected = &one - &CircleFunction::monomial(2, ONE, 64);
        assert!(close(&p, &expected, 1e-15));
    }

    #[test]
    fn multiply_rejects_overflow_and_mismatch() {
        let f = CircleFunction::monomial(3, ONE, 16);
        assert!(matches!(f.multiply(&f), Err(Error::WindowOverflow { .. })));
        let g = CircleFunction::monomial(1, ONE, 32);
        assert!(matches!(f.multiply(&g), Err(Error::GridMismatch { .. })));
    }

    #[test]
    fn project_plus_examples() {
        let g = 64;
        let chibar = CircleFunction::monomial(-1, ONE, g);
        assert_eq!(chibar.project_plus().as_fn().l2_norm(), 0.0);
        let f = &CircleFunction::constant(c(2.0, 0.0), g) + &CircleFunction::monomial(1, c(3.0, 0.0), g);
        assert!(close(f.project_plus().as_fn(), &f, 0.0));
        let f = &(&chibar + &CircleFunction::constant(c(5.0, 0.0), g)) + &CircleFunction::chi(g);
        let expected = &CircleFunction::constant(c(5.0, 0.0), g) + &CircleFunction::chi(g);
        assert!(close(f.project_plus().as_fn(), &expected, 0.0));
    }

    #[test]
    fn delta_examples() {
        let d = delta_from_u(&AnalyticPoly::new(&[])).unwrap();
        assert!((d.delta.coeff(0) - ONE).norm() < 1e-14);
        assert!((d.delta_sq.coeff(0) - ONE).norm() < 1e-15);

        let d = delta_from_u(&AnalyticPoly::from_real(&[0.0, 0.5])).unwrap();
        assert!((d.delta.coeff(0).re - 3f64.sqrt() / 2.0).abs() < 1e-14);
        assert!(d.delta.with_order(d.delta.order()).coeffs().iter().enumerate().all(
            |(i, z)| i == d.delta.order() || z.norm() < 1e-14
        ));
        assert!((d.delta_sq.coeff(0).re - 0.75).abs() < 1e-15);

        let d = delta_from_u(&AnalyticPoly::from_real(&[0.0, 1.0])).unwrap();
        assert!(d.delta.l2_norm() < 1e-14);
        assert!(d.delta_sq.l2_norm() < 1e-15);
    }

    #[test]
    fn delta_rejects_large_u() {
        let err = delta_from_u(&AnalyticPoly::from_real(&[0.0, 1.5])).unwrap_err();
        assert!(matches!(err, Error::NegativeDefect { .. }));
    }

    #[test]
    fn contractivity_examples() {
        let r = check_purely_contractive(&AnalyticPoly::from_real(&[0.0, 0.5])).unwrap();
        assert!(!r.inner && !r.delta_vanishes_somewhere);

        let e = check_purely_contractive(&AnalyticPoly::from_real(&[1.0])).unwrap_err();
        assert!(matches!(e, Error::NotPurelyContractive { .. }));

        let r = check_purely_contractive(&AnalyticPoly::from_real(&[0.0, 0.5, 0.5])).unwrap();
        assert!((r.sup_norm - 1.0).abs() < 1e-12);
        assert!(r.delta_vanishes_somewhere && !r.inner);
        assert!(r.zero_set_fraction > 0.0 && r.zero_set_fraction < 0.01);

        let r = check_purely_contractive(&AnalyticPoly::from_real(&[0.0, 0.0, 1.0])).unwrap();
        assert!(r.inner);

        let e = check_purely_contractive(&AnalyticPoly::from_real(&[0.0, 2.0])).unwrap_err();
        assert!(matches!(e, Error::SupNormExceeded { .. }));
    }

    #[test]
    fn grid_round_trip() {
        let f = CircleFunction::new(vec![c(1.0, 2.0), c(0.5, -1.0), c(-3.0, 0.25)], 16).unwrap();
        let back = CircleFunction::from_grid(&f.grid_values(), 1).unwrap();
        assert!(close(&f, &back, 1e-14));
        let z = Complex64::from_polar(1.0, 0.3);
        assert!((f.eval(z) - (c(1.0, 2.0) / z + c(0.5, -1.0) + c(-3.0, 0.25) * z)).norm() < 1e-14);
    }

    #[test]
    fn delta_squared_matches_on_grid() {
        let u = AnalyticPoly::new(&[c(0.3, 0.0), c(0.0, 0.4)]);
        let d = delta_from_u(&u).unwrap();
        let uv = u.as_fn().values_on(256);
        let dv = d.delta.values_on(256);
        for (a, b) in uv.iter().zip(&dv) {
            assert!((a.norm_sqr() + b.norm_sqr() - 1.0).abs() < 1e-10);
        }
    }

    fn coeff_strategy(max_order: usize) -> impl Strategy<Value = Vec<Complex64>> {
        (0..=max_order).prop_flat_map(|m| {
            prop::collection::vec((-1.0f64..1.0, -1.0f64..1.0), 2 * m + 1)
                .prop_map(|v| v.into_iter().map(|(a, b)| Complex64::new(a, b)).collect())
        })
    }

    fn brute_force(a: &CircleFunction, b: &CircleFunction) -> Vec<Complex64> {
        let (ma, mb) = (a.order() as i64, b.order() as i64);
        let m = ma + mb;
        let mut out = vec![ZERO; (2 * m + 1) as usize];
        for j in -ma..=ma {
            for k in -mb..=mb {
                out[(j + k + m) as usize] += a.coeff(j) * b.coeff(k);
            }
        }
        out
    }

    proptest! {
        #[test]
        fn multiply_matches_brute_force(a in coeff_strategy(12), b in coeff_strategy(12)) {
            let fa = CircleFunction::new(a, 128).unwrap();
            let fb = CircleFunction::new(b, 128).unwrap();
            let p = fa.multiply(&fb).unwrap();
            let bf = brute_force(&fa, &fb);
            for (x, y) in p.coeffs().iter().zip(&bf) {
                prop_assert!((x - y).norm() <= 1e-12);
            }
            // grid samples of the product equal pointwise products
            let (va, vb, vp) = (fa.grid_values(), fb.grid_values(), p.grid_values());
            for k in 0..128 {
                prop_assert!((va[k] * vb[k] - vp[k]).norm() <= 1e-12 * (1.0 + vp[k].norm()));
            }
        }

        #[test]
        fn fft_convolution_matches_direct(a in coeff_strategy(300), b in coeff_strategy(300)) {
            let direct = {
                let mut out = vec![ZERO; a.len() + b.len() - 1];
                for (i, x) in a.iter().enumerate() {
                    for (j, y) in b.iter().enumerate() {
                        out[i + j] += x * y;
                    }
                }
                out
            };
            for (x, y) in convolve(&a, &b).iter().zip(&direct) {
                prop_assert!((x - y).norm() <= 1e-10);
            }
        }

        #[test]
        fn project_plus_idempotent_and_self_adjoint(a in coeff_strategy(10), b in coeff_strategy(10)) {
            let fa = CircleFunction::new(a, 64).unwrap();
            let fb = CircleFunction::new(b, 64).unwrap();
            let pa = fa.project_plus().into_fn();
            let ppa = pa.project_plus().into_fn();
            prop_assert!(close(&pa, &ppa, 0.0));
            prop_assert!(pa.l2_norm() <= fa.l2_norm() + 1e-15);
            let pb = fb.project_plus().into_fn();
            let inner = |x: &CircleFunction, y: &CircleFunction| -> Complex64 {
                let m = x.order().max(y.order()) as i64;
                (-m..=m).map(|j| x.coeff(j) * y.coeff(j).conj()).sum()
            };
            prop_assert!((inner(&pa, &fb) - inner(&fa, &pb)).norm() <= 1e-12);
        }
    }
}
