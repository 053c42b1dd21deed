//! Finite-order model spaces `H_u = K_+ ⊖ G`.
//!
//! A vector `f ⊕ g` of `K_+ = H^2 ⊕ (Delta L^2)^-` is stored in *raw* form:
//! Taylor coefficients `f_0..f_N` and Fourier coefficients `h_{-N}..h_N` of a
//! trigonometric polynomial `h` with `g = Delta h`. In these coordinates the
//! inner product is `<z, z'> = z'^H W z` with `W = I ⊕ gram_second` and
//! `gram_second[l][k] = (Delta^2)^(l - k)`, so only the exact coefficients of
//! `Delta^2 = 1 - |u|^2` enter.
//!
//! The generators `u chi^j ⊕ Delta chi^j`, `0 <= j <= N - deg u`, form an
//! orthonormal set spanning `G^(N)`, and `H_u^(N)` is the complement of their
//! span in the raw window. Elements of `H_u^(N)` are held as coordinates in an
//! orthonormal basis whose raw columns are `onb`.

use std::sync::OnceLock;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{
    check_purely_contractive, convolve, delta_from_u, AnalyticPoly, CircleFunction,
    ContractivityReport, ONE, ZERO,
};
use crate::linalg::{adjoint_mul, c, hermitian_eigen, matmul, orth_complement, orth_range, toeplitz, CMat, CVec};
use crate::tolerances::{EPS_RANK, MODEL_GRID, TOL_VEC};

/// Element `f ⊕ Delta h` of `K` in raw form. Negative frequencies of `f` are
/// allowed and are discarded by projections onto `K_+`.
#[derive(Clone, Debug, PartialEq)]
pub struct RawPair {
    pub f: CircleFunction,
    pub h: CircleFunction,
}

impl RawPair {
    pub fn new(f: CircleFunction, h: CircleFunction) -> Self {
        Self { f, h }
    }

    pub fn zero() -> Self {
        Self { f: CircleFunction::zero(MODEL_GRID), h: CircleFunction::zero(MODEL_GRID) }
    }

    /// `f ⊕ 0`.
    pub fn first(f: CircleFunction) -> Self {
        Self { f, h: CircleFunction::zero(MODEL_GRID) }
    }

    /// `0 ⊕ Delta h`.
    pub fn second(h: CircleFunction) -> Self {
        Self { f: CircleFunction::zero(MODEL_GRID), h }
    }

    /// Multiplication by `chi^k` in both components.
    pub fn shift(&self, k: i64) -> Self {
        Self { f: self.f.shift(k), h: self.h.shift(k) }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { f: self.f.scale(s), h: self.h.scale(s) }
    }

    pub fn add(&self, other: &Self) -> Self {
        Self { f: &self.f + &other.f, h: &self.h + &other.h }
    }

    pub fn sub(&self, other: &Self) -> Self {
        Self { f: &self.f - &other.f, h: &self.h - &other.h }
    }
}

/// Element of a [`ModelSpace`] in orthonormal coordinates.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelVector {
    pub coords: CVec,
}

impl ModelVector {
    pub fn new(coords: CVec) -> Self {
        Self { coords }
    }

    pub fn norm(&self) -> f64 {
        self.coords.norm()
    }

    /// `<self, other>`, linear in the first slot.
    pub fn inner(&self, other: &Self) -> Complex64 {
        other.coords.dotc(&self.coords)
    }
}

/// Structural checks of a built space.
#[derive(Clone, Debug, Serialize)]
pub struct SpaceDiagnostics {
    /// `||B^H W B - I||` for the raw basis `B`.
    pub orthonormality: f64,
    /// `max |<b_i, g_j>|` over basis vectors and generators.
    pub generator_orthogonality: f64,
    /// Largest finite-order membership residual of a basis vector.
    pub membership: f64,
    /// Truncation residual of the gridded `Delta`.
    pub delta_truncation: f64,
    pub k0_mismatch: f64,
    pub ktilde0_mismatch: f64,
}

/// Finite-order discretization of `H_u`.
#[derive(Debug)]
pub struct ModelSpace {
    u: AnalyticPoly,
    n: usize,
    deg: usize,
    delta: CircleFunction,
    delta_sq: CircleFunction,
    gram_second: CMat,
    onb: CMat,
    k0: ModelVector,
    ktilde0: ModelVector,
    contractivity: ContractivityReport,
    diagnostics: SpaceDiagnostics,
    interior: OnceLock<CMat>,
    su: OnceLock<CMat>,
}

impl ModelSpace {
    /// Builds `H_u^(N)`.
    pub fn build(u: &AnalyticPoly, n: usize) -> Result<Self> {
        let contractivity = check_purely_contractive(u)?;
        let deg = u.degree();
        if n < deg + 2 {
            return Err(Error::OrderTooSmall { n, deg });
        }
        let u = AnalyticPoly::with_grid(&u.taylor(), MODEL_GRID);
        let dd = delta_from_u(&u)?;
        let keep = (4 * n + 64).min(dd.delta.order());
        let delta = dd.delta.with_order(keep);
        let delta_sq = dd.delta_sq;

        let hn = 2 * n + 1;
        let d2 = |j: i64| delta_sq.coeff(j);
        let gram_second = toeplitz(d2, hn);

        // Euclidean factor R with W = R^H R (up to the discarded null space).
        let (lam, v) = hermitian_eigen(&gram_second);
        let lmax = lam.iter().copied().fold(0.0, f64::max);
        let kept: Vec<usize> =
            (0..hn).filter(|&i| lam[i] > EPS_RANK * lmax.max(1.0)).collect();
        let r = kept.len();
        let fl = n + 1;
        let raw_len = fl + hn;
        let ylen = fl + r;
        let mut rmat = CMat::zeros(ylen, raw_len);
        let mut rpinv = CMat::zeros(raw_len, ylen);
        for i in 0..fl {
            rmat[(i, i)] = ONE;
            rpinv[(i, i)] = ONE;
        }
        for (row, &i) in kept.iter().enumerate() {
            let s = lam[i].sqrt();
            for k in 0..hn {
                rmat[(fl + row, fl + k)] = v[(k, i)].conj() * s;
                rpinv[(fl + k, fl + row)] = v[(k, i)] / s;
            }
        }

        let gens = generator_matrix(&u, n);
        let y = matmul(&rmat, &gens);
        let ug = orth_range(&y, EPS_RANK);
        let q = orth_complement(&ug, ylen);
        if q.ncols() == 0 {
            return Err(Error::EmptySpace);
        }
        let onb = matmul(&rpinv, &q);

        let mut space = Self {
            u,
            n,
            deg,
            delta,
            delta_sq,
            gram_second,
            onb,
            k0: ModelVector::new(CVec::zeros(0)),
            ktilde0: ModelVector::new(CVec::zeros(0)),
            contractivity,
            diagnostics: SpaceDiagnostics {
                orthonormality: 0.0,
                generator_orthogonality: 0.0,
                membership: 0.0,
                delta_truncation: dd.truncation_residual,
                k0_mismatch: 0.0,
                ktilde0_mismatch: 0.0,
            },
            interior: OnceLock::new(),
            su: OnceLock::new(),
        };
        space.finish(&gens)?;
        Ok(space)
    }

    fn finish(&mut self, gens: &CMat) -> Result<()> {
        let w = self.weight_matrix();
        let wb = matmul(&w, &self.onb);
        let gram = adjoint_mul(&self.onb, &wb);
        self.diagnostics.orthonormality = (gram - CMat::identity(self.dim(), self.dim())).norm();
        let cross = adjoint_mul(&wb, gens);
        self.diagnostics.generator_orthogonality = cross.iter().map(|z| z.norm()).fold(0.0, f64::max);
        self.diagnostics.membership = (0..self.dim())
            .map(|i| self.membership_residual(&self.pair_of_raw(&self.onb.column(i).into_owned())))
            .fold(0.0, f64::max);

        let (k0_raw, kt0_raw) = self.special_raw();
        let k0 = self.coords_of(&k0_raw);
        let kt0 = self.coords_of(&kt0_raw);
        let target = 1.0 - self.u.at_zero().norm_sqr();
        // A closed form lying in the space keeps its norm under projection.
        self.diagnostics.k0_mismatch = (self.raw_norm_sqr(&k0_raw) - k0.norm_squared()).abs()
            + (k0.norm_squared() - target).abs();
        self.diagnostics.ktilde0_mismatch = (self.raw_norm_sqr(&kt0_raw) - kt0.norm_squared())
            .abs()
            + (kt0.norm_squared() - target).abs();
        let projected = self.coords_of(&RawPair::first(CircleFunction::constant(ONE, MODEL_GRID)));
        self.diagnostics.k0_mismatch += (&projected - &k0).norm();
        if self.diagnostics.k0_mismatch > TOL_VEC {
            return Err(Error::SpecialVectorMismatch {
                name: "k0",
                residual: self.diagnostics.k0_mismatch,
            });
        }
        if self.diagnostics.ktilde0_mismatch > TOL_VEC {
            return Err(Error::SpecialVectorMismatch {
                name: "ktilde0",
                residual: self.diagnostics.ktilde0_mismatch,
            });
        }
        self.k0 = ModelVector::new(k0);
        self.ktilde0 = ModelVector::new(kt0);
        Ok(())
    }

    /// Closed forms `k0 = (1 - conj(u(0)) u) ⊕ (-conj(u(0)) Delta)` and
    /// `ktilde0 = chibar (u - u(0)) ⊕ chibar Delta`.
    fn special_raw(&self) -> (RawPair, RawPair) {
        let u0 = self.u.at_zero();
        let uf = self.u.as_fn();
        let one = CircleFunction::constant(ONE, MODEL_GRID);
        let k0 = RawPair::new(&one - &uf.scale(u0.conj()), CircleFunction::constant(-u0.conj(), MODEL_GRID));
        let kt0 = RawPair::new(
            (uf - &CircleFunction::constant(u0, MODEL_GRID)).shift(-1),
            CircleFunction::monomial(-1, ONE, MODEL_GRID),
        );
        (k0, kt0)
    }

    pub fn u(&self) -> &AnalyticPoly {
        &self.u
    }

    /// Truncation order `N`.
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn deg_u(&self) -> usize {
        self.deg
    }

    pub fn dim(&self) -> usize {
        self.onb.ncols()
    }

    /// Length `3N + 2` of raw vectors.
    pub fn raw_len(&self) -> usize {
        3 * self.n + 2
    }

    /// Raw basis columns.
    pub fn onb(&self) -> &CMat {
        &self.onb
    }

    pub fn gram_second(&self) -> &CMat {
        &self.gram_second
    }

    /// Gridded `Delta`, truncated to the order used by the model.
    pub fn delta(&self) -> &CircleFunction {
        &self.delta
    }

    /// Exact `Delta^2 = 1 - |u|^2`.
    pub fn delta_sq(&self) -> &CircleFunction {
        &self.delta_sq
    }

    /// `Delta == 0`, i.e. `u` inner.
    pub fn is_inner(&self) -> bool {
        self.contractivity.inner
    }

    pub fn contractivity(&self) -> &ContractivityReport {
        &self.contractivity
    }

    pub fn diagnostics(&self) -> &SpaceDiagnostics {
        &self.diagnostics
    }

    pub fn k0(&self) -> &ModelVector {
        &self.k0
    }

    pub fn ktilde0(&self) -> &ModelVector {
        &self.ktilde0
    }

    /// `1 - |u(0)|^2`, the common squared norm of `k0` and `ktilde0`.
    pub fn k_norm_sqr(&self) -> f64 {
        1.0 - self.u.at_zero().norm_sqr()
    }

    fn f_index(&self, j: usize) -> usize {
        j
    }

    fn h_index(&self, k: i64) -> usize {
        (self.n as i64 + 1 + k + self.n as i64) as usize
    }

    /// `W = I ⊕ gram_second`.
    pub fn weight_matrix(&self) -> CMat {
        let fl = self.n + 1;
        let mut w = CMat::zeros(self.raw_len(), self.raw_len());
        for i in 0..fl {
            w[(i, i)] = ONE;
        }
        w.view_mut((fl, fl), (2 * self.n + 1, 2 * self.n + 1)).copy_from(&self.gram_second);
        w
    }

    /// Raw vector of a pair inside the window.
    pub fn raw_vector(&self, x: &RawPair) -> Result<CVec> {
        self.check_window(x)?;
        let n = self.n as i64;
        let mut z = CVec::zeros(self.raw_len());
        for j in 0..=n {
            z[self.f_index(j as usize)] = x.f.coeff(j);
        }
        for k in -n..=n {
            z[self.h_index(k)] = x.h.coeff(k);
        }
        Ok(z)
    }

    /// Pair of a raw vector.
    pub fn pair_of_raw(&self, z: &CVec) -> RawPair {
        let n = self.n;
        let f: Vec<_> = (0..=n).map(|j| z[self.f_index(j)]).collect();
        let h: Vec<_> = (0..2 * n + 1).map(|i| z[n + 1 + i]).collect();
        RawPair::new(
            CircleFunction::from_taylor(&f, MODEL_GRID),
            CircleFunction::from_offset(-(n as i64), &h, MODEL_GRID),
        )
    }

    fn check_window(&self, x: &RawPair) -> Result<()> {
        let n = self.n as i64;
        let f_hi = (0..=x.f.order() as i64).rev().find(|&j| x.f.coeff(j) != ZERO).unwrap_or(0);
        let h_m = x.h.order() as i64;
        let h_hi = (0..=h_m)
            .rev()
            .find(|&j| x.h.coeff(j) != ZERO || x.h.coeff(-j) != ZERO)
            .unwrap_or(0);
        if f_hi > n || h_hi > n {
            return Err(Error::OutsideWindow(format!(
                "first component reaches chi^{f_hi}, second reaches |j| = {h_hi}, window is {n}"
            )));
        }
        Ok(())
    }

    /// `(<x, e_r>)_r` over raw unit vectors `e_r` of the window, for any
    /// finite `x`. The second-component rows use exact `Delta^2` convolution.
    pub fn weighted(&self, x: &RawPair) -> CVec {
        let n = self.n as i64;
        let mut wz = CVec::zeros(self.raw_len());
        for j in 0..=n {
            wz[self.f_index(j as usize)] = x.f.coeff(j);
        }
        let hm = x.h.order() as i64;
        let dm = self.delta_sq.order() as i64;
        let conv = convolve(self.delta_sq.coeffs(), x.h.coeffs());
        // conv[i] is the coefficient of chi^(i - hm - dm)
        for l in -n..=n {
            let idx = l + hm + dm;
            if idx >= 0 && (idx as usize) < conv.len() {
                wz[self.h_index(l)] = conv[idx as usize];
            }
        }
        wz
    }

    /// Coordinates of `P_{H_u^(N)} x` for any finite raw pair.
    pub fn coords_of(&self, x: &RawPair) -> CVec {
        self.onb.adjoint() * self.weighted(x)
    }

    /// Orthogonal projection of a pair inside the window.
    pub fn project(&self, x: &RawPair) -> Result<ModelVector> {
        self.check_window(x)?;
        Ok(ModelVector::new(self.coords_of(x)))
    }

    /// Raw pair of a coordinate vector.
    pub fn raw_of(&self, coords: &CVec) -> RawPair {
        self.pair_of_raw(&(&self.onb * coords))
    }

    /// `||f ⊕ Delta h||^2` of the `K_+` part (negative frequencies of `f` dropped).
    pub fn raw_norm_sqr(&self, x: &RawPair) -> f64 {
        let f: f64 = (0..=x.f.order() as i64).map(|j| x.f.coeff(j).norm_sqr()).sum();
        let dh = x.h.product(&self.delta_sq);
        let m = x.h.order() as i64;
        let g: Complex64 = (-m..=m).map(|k| dh.coeff(k) * x.h.coeff(k).conj()).sum();
        f + g.re
    }

    /// Largest coefficient `j = 0..N - deg u - 1` of `conj(u) f + Delta g`.
    pub fn membership_residual(&self, x: &RawPair) -> f64 {
        let ubar = self.u.as_fn().conj();
        let s = &ubar.product(&x.f) + &self.delta_sq.product(&x.h);
        (0..(self.n - self.deg) as i64).map(|j| s.coeff(j).norm()).fold(0.0, f64::max)
    }

    /// Order of the interior window used for exact identities.
    pub fn interior_order(&self) -> usize {
        self.n / 2
    }

    /// Orthonormal coordinates (columns) of `H_u ∩ window(N / 2)`.
    ///
    /// These vectors lie in `H_u` exactly, and shifts, adjoint shifts and
    /// low-degree multiplication operators map them to vectors of `H_u`
    /// still inside the window, so operator identities restricted to them
    /// hold to rounding.
    pub fn interior(&self) -> &CMat {
        self.interior.get_or_init(|| self.compute_interior())
    }

    fn compute_interior(&self) -> CMat {
        let m = self.interior_order() as i64;
        let deg = self.deg as i64;
        let cols = (3 * m + 2) as usize;
        let rows = (m + deg + 1) as usize;
        let hcol = |k: i64| (m + 1 + k + m) as usize;
        let mut cons = CMat::zeros(rows, cols);
        let taylor = self.u.taylor();
        for j in 0..rows as i64 {
            for (i, ui) in taylor.iter().enumerate() {
                let col = j + i as i64;
                if col <= m {
                    cons[(j as usize, col as usize)] += ui.conj();
                }
            }
            for k in -m..=m {
                cons[(j as usize, hcol(k))] = self.delta_sq.coeff(j - k);
            }
        }
        let rowspace = orth_range(&cons.adjoint(), EPS_RANK);
        let null = orth_complement(&rowspace, cols);
        let mut coords = CMat::zeros(self.dim(), null.ncols());
        for (ci, col) in null.column_iter().enumerate() {
            let f: Vec<_> = (0..=m as usize).map(|j| col[j]).collect();
            let h: Vec<_> = (0..(2 * m + 1) as usize).map(|i| col[(m + 1) as usize + i]).collect();
            let x = RawPair::new(
                CircleFunction::from_taylor(&f, MODEL_GRID),
                CircleFunction::from_offset(-m, &h, MODEL_GRID),
            );
            coords.set_column(ci, &self.coords_of(&x));
        }
        orth_range(&coords, 1e-8)
    }

    /// Cached matrix of `S_u`.
    pub fn su(&self) -> &CMat {
        self.su.get_or_init(|| crate::symbols::build_su_uncached(self))
    }

    /// `P_G x` expressed as the coefficients `<x, u chi^j ⊕ Delta chi^j>`, `j >= 0`.
    pub fn g_coefficients(&self, x: &RawPair) -> Vec<Complex64> {
        let ubar = self.u.as_fn().conj();
        let s = &ubar.product(&x.f) + &self.delta_sq.product(&x.h);
        (0..=s.order() as i64).map(|j| s.coeff(j)).collect()
    }
}

/// Raw generators `u chi^j ⊕ Delta chi^j`, `0 <= j <= N - deg u`, as columns.
fn generator_matrix(u: &AnalyticPoly, n: usize) -> CMat {
    let deg = u.degree();
    let taylor = u.taylor();
    let count = n - deg + 1;
    let mut g = CMat::zeros(3 * n + 2, count);
    for j in 0..count {
        for (i, ui) in taylor.iter().enumerate() {
            g[(i + j, j)] = *ui;
        }
        g[(n + 1 + j + n, j)] = c(1.0);
    }
    g
}
